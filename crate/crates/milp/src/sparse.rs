use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome};

use crate::dense::LpOutcome;
use crate::model::{LinearModel, Sense};
use crate::result::Status;

pub(crate) fn solve(model: &LinearModel, lower: &[f64], upper: &[f64]) -> LpOutcome {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = model
        .variables
        .iter()
        .enumerate()
        .map(|(j, v)| p.add_var(v.cost, (lower[j], upper[j])))
        .collect();
    for c in &model.constraints {
        let terms: Vec<_> = c.terms.iter().map(|&(v, a)| (vars[v.0], a)).collect();
        let op = match c.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Ge => ComparisonOp::Ge,
            Sense::Eq => ComparisonOp::Eq,
        };
        p.add_constraint(terms.as_slice(), op, c.rhs);
    }
    let failed = |status| LpOutcome {
        status,
        x: Vec::new(),
        objective: f64::NAN,
        duals: None,
        iterations: 0,
    };
    match p.solve() {
        Ok(SolveOutcome::Solution(sol)) => {
            let x: Vec<f64> = vars.iter().map(|&v| sol.var_value_raw(v)).collect();
            LpOutcome {
                status: Status::Optimal,
                objective: model.objective_value(&x),
                x,
                duals: None,
                iterations: sol.stats().lp_iterations as usize,
            }
        }
        Ok(SolveOutcome::Interrupted(_)) => failed(Status::IterationLimit),
        Err(microlp::Error::Infeasible) => failed(Status::Infeasible),
        Err(microlp::Error::Unbounded) => failed(Status::Unbounded),
        Err(_) => failed(Status::IterationLimit),
    }
}
