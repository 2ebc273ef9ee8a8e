use std::fmt;
use std::time::Duration;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NodeLimit,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::IterationLimit => "iteration-limit",
            Status::NodeLimit => "node-limit",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub iterations: usize,
    pub nodes: usize,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: Status,
    pub objective: f64,
    pub values: Vec<f64>,
    /// Row duals (`y` with `c - A^T y` the reduced costs); only the dense engine reports them.
    pub duals: Option<Vec<f64>>,
    pub stats: SolveStats,
    pub wall_time: Duration,
}

impl SolveResult {
    pub fn without_solution(status: Status, stats: SolveStats, wall_time: Duration) -> Self {
        SolveResult {
            status,
            objective: f64::NAN,
            values: Vec::new(),
            duals: None,
            stats,
            wall_time,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// Equality on everything except wall time.
    pub fn same_outcome(&self, other: &SolveResult) -> bool {
        let same_obj = (self.objective.is_nan() && other.objective.is_nan())
            || self.objective.to_bits() == other.objective.to_bits();
        self.status == other.status
            && same_obj
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self.stats == other.stats
    }
}
