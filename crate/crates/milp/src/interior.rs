use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus, SupportedConeT, ZeroConeT,
};

use crate::config::SolverConfig;
use crate::dense::LpOutcome;
use crate::model::{LinearModel, Sense};
use crate::result::Status;

/// Interior-point LP solve. Equalities and fixed columns go to the zero cone, every
/// inequality and finite bound is written as `a x <= b` in the nonnegative cone.
pub(crate) fn solve(model: &LinearModel, lower: &[f64], upper: &[f64], cfg: &SolverConfig) -> LpOutcome {
    let n = model.num_vars();
    let mut rows = Triplets::default();
    for c in model.constraints.iter().filter(|c| c.sense == Sense::Eq) {
        rows.push(c.terms.iter().map(|&(v, a)| (v.0, a)), c.rhs);
    }
    for j in 0..n {
        if lower[j] == upper[j] {
            rows.push([(j, 1.0)], lower[j]);
        }
    }
    let n_eq = rows.rhs.len();
    for c in model.constraints.iter().filter(|c| c.sense != Sense::Eq) {
        let s = if c.sense == Sense::Le { 1.0 } else { -1.0 };
        rows.push(c.terms.iter().map(|&(v, a)| (v.0, s * a)), s * c.rhs);
    }
    for j in 0..n {
        if lower[j] == upper[j] {
            continue;
        }
        if lower[j].is_finite() {
            rows.push([(j, -1.0)], -lower[j]);
        }
        if upper[j].is_finite() {
            rows.push([(j, 1.0)], upper[j]);
        }
    }
    let Triplets { ri, ci, vi, rhs } = rows;
    let m = rhs.len();
    let a = CscMatrix::new_from_triplets(m, n, ri, ci, vi);
    let p = CscMatrix::zeros((n, n));
    let q: Vec<f64> = model.variables.iter().map(|v| v.cost).collect();
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
    if n_eq > 0 {
        cones.push(ZeroConeT(n_eq));
    }
    if m > n_eq {
        cones.push(NonnegativeConeT(m - n_eq));
    }
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(cfg.iter_limit.min(u32::MAX as usize) as u32)
        .tol_gap_abs(1e-9)
        .tol_gap_rel(1e-10)
        .tol_feas(1e-10)
        .build()
        .expect("static interior-point settings are valid");
    let failed = |status, iterations| LpOutcome {
        status,
        x: Vec::new(),
        objective: f64::NAN,
        duals: None,
        iterations,
    };
    let mut solver = match DefaultSolver::new(&p, &q, &a, &rhs, &cones, settings) {
        Ok(s) => s,
        Err(_) => return failed(Status::Infeasible, 0),
    };
    solver.solve();
    let sol = &solver.solution;
    let iterations = sol.iterations as usize;
    match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {
            let mut x = sol.x.clone();
            for j in 0..n {
                x[j] = x[j].clamp(lower[j], upper[j]);
            }
            LpOutcome {
                status: Status::Optimal,
                objective: model.objective_value(&x),
                x,
                duals: None,
                iterations,
            }
        }
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => failed(Status::Infeasible, iterations),
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => failed(Status::Unbounded, iterations),
        _ => failed(Status::IterationLimit, iterations),
    }
}

#[derive(Default)]
struct Triplets {
    ri: Vec<usize>,
    ci: Vec<usize>,
    vi: Vec<f64>,
    rhs: Vec<f64>,
}

impl Triplets {
    fn push(&mut self, terms: impl IntoIterator<Item = (usize, f64)>, b: f64) {
        let row = self.rhs.len();
        for (j, a) in terms {
            self.ri.push(row);
            self.ci.push(j);
            self.vi.push(a);
        }
        self.rhs.push(b);
    }
}
