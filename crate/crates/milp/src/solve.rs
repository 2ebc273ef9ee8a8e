use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::config::{Engine, SolverConfig, DENSE_AUTO_LIMIT};
use crate::dense::{self, LpOutcome};
use crate::model::{LinearModel, ModelError};
use crate::result::{SolveResult, SolveStats, Status};
use crate::{interior, sparse};

fn pick_engine(model: &LinearModel, engine: Engine) -> Engine {
    match engine {
        Engine::Auto => {
            let m = model.num_constraints();
            let n = model.num_vars();
            if m.saturating_mul(n + m) <= DENSE_AUTO_LIMIT {
                Engine::Dense
            } else {
                Engine::Sparse
            }
        }
        e => e,
    }
}

fn relaxation(model: &LinearModel, lower: &[f64], upper: &[f64], engine: Engine, cfg: &SolverConfig) -> LpOutcome {
    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return LpOutcome {
            status: Status::Infeasible,
            x: Vec::new(),
            objective: f64::NAN,
            duals: None,
            iterations: 0,
        };
    }
    match engine {
        Engine::Dense | Engine::Auto => dense::solve(model, lower, upper, cfg),
        Engine::Sparse => sparse::solve(model, lower, upper),
        Engine::Interior => interior::solve(model, lower, upper, cfg),
    }
}

/// Solves the LP relaxation of `model` (integrality ignored).
pub fn solve_lp(model: &LinearModel, cfg: &SolverConfig) -> Result<SolveResult, ModelError> {
    model.validate()?;
    let start = Instant::now();
    let lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    let engine = pick_engine(model, cfg.engine);
    let out = relaxation(model, &lower, &upper, engine, cfg);
    let stats = SolveStats {
        iterations: out.iterations,
        nodes: 0,
    };
    if out.status != Status::Optimal {
        return Ok(SolveResult::without_solution(out.status, stats, start.elapsed()));
    }
    Ok(SolveResult {
        status: Status::Optimal,
        objective: out.objective,
        values: out.x,
        duals: out.duals,
        stats,
        wall_time: start.elapsed(),
    })
}

struct Node {
    id: usize,
    bound: f64,
    /// Bound changes relative to the root: (column, lower, upper).
    changes: Vec<(usize, f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: the best node is the lowest bound, then the lowest id.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Best-first branch-and-bound over LP relaxations.
///
/// Branches on the most fractional integer column (lowest index on ties). With
/// `threads > 1`, up to `threads` open nodes are popped together and their
/// relaxations solved concurrently; results are then processed in pop order, so
/// the search is deterministic for a given thread count.
pub fn solve_milp(model: &LinearModel, cfg: &SolverConfig) -> Result<SolveResult, ModelError> {
    if !model.has_integers() {
        return solve_lp(model, cfg);
    }
    model.validate()?;
    let start = Instant::now();
    let engine = match pick_engine(model, cfg.engine) {
        Engine::Interior => Engine::Sparse,
        e => e,
    };
    let mut root_lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let mut root_upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    for (j, v) in model.variables.iter().enumerate() {
        if v.kind.is_integral() {
            root_lower[j] = root_lower[j].ceil();
            root_upper[j] = root_upper[j].floor();
        }
    }

    let mut stats = SolveStats::default();
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut heap = BinaryHeap::new();
    let mut next_id = 1usize;
    heap.push(Node {
        id: 0,
        bound: f64::NEG_INFINITY,
        changes: Vec::new(),
    });
    let threads = cfg.threads.max(1);
    let mut root_status: Option<Status> = None;
    let mut limit: Option<Status> = None;

    'search: while !heap.is_empty() {
        let mut batch = Vec::with_capacity(threads);
        while batch.len() < threads {
            let Some(node) = heap.pop() else { break };
            if let Some((best, _)) = &incumbent {
                if node.bound >= best - 1e-9 * best.abs().max(1.0) {
                    continue;
                }
            }
            batch.push(node);
        }
        if batch.is_empty() {
            break;
        }

        let bounds_of = |node: &Node| {
            let mut lo = root_lower.clone();
            let mut up = root_upper.clone();
            for &(j, l, u) in &node.changes {
                lo[j] = l;
                up[j] = u;
            }
            (lo, up)
        };
        let outcomes: Vec<LpOutcome> = if batch.len() == 1 {
            let (lo, up) = bounds_of(&batch[0]);
            vec![relaxation(model, &lo, &up, engine, cfg)]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = batch
                    .iter()
                    .map(|node| {
                        let (lo, up) = bounds_of(node);
                        s.spawn(move || relaxation(model, &lo, &up, engine, cfg))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("relaxation worker panicked"))
                    .collect()
            })
        };

        for (node, out) in batch.into_iter().zip(outcomes) {
            stats.nodes += 1;
            stats.iterations += out.iterations;
            if node.id == 0 {
                root_status = Some(out.status);
            }
            match out.status {
                Status::Optimal => {}
                Status::Infeasible => continue,
                Status::Unbounded if node.id == 0 => break 'search,
                Status::Unbounded => continue,
                _ => {
                    limit = Some(Status::IterationLimit);
                    break 'search;
                }
            }
            if let Some((best, _)) = &incumbent {
                if out.objective >= best - 1e-9 * best.abs().max(1.0) {
                    continue;
                }
            }
            let mut branch: Option<(usize, f64)> = None;
            let mut best_score = cfg.eps_int;
            for (j, v) in model.variables.iter().enumerate() {
                if !v.kind.is_integral() {
                    continue;
                }
                let f = out.x[j] - out.x[j].floor();
                let score = f.min(1.0 - f);
                if score > best_score {
                    best_score = score;
                    branch = Some((j, out.x[j]));
                }
            }
            match branch {
                None => {
                    let mut x = out.x;
                    for (j, v) in model.variables.iter().enumerate() {
                        if v.kind.is_integral() {
                            x[j] = x[j].round();
                        }
                    }
                    let obj = model.objective_value(&x);
                    if incumbent.as_ref().map_or(true, |(best, _)| obj < *best) {
                        incumbent = Some((obj, x));
                    }
                }
                Some((j, value)) => {
                    let (lo, up) = current_bounds(&node.changes, j, root_lower[j], root_upper[j]);
                    let mut down = node.changes.clone();
                    down.push((j, lo, value.floor()));
                    let mut upc = node.changes;
                    upc.push((j, value.ceil(), up));
                    heap.push(Node {
                        id: next_id,
                        bound: out.objective,
                        changes: down,
                    });
                    heap.push(Node {
                        id: next_id + 1,
                        bound: out.objective,
                        changes: upc,
                    });
                    next_id += 2;
                }
            }
            if stats.nodes >= cfg.node_limit {
                limit = Some(Status::NodeLimit);
                break 'search;
            }
            if stats.iterations >= cfg.iter_limit {
                limit = Some(Status::IterationLimit);
                break 'search;
            }
        }
        if limit.is_none() && stats.iterations >= cfg.iter_limit {
            limit = Some(Status::IterationLimit);
            break;
        }
    }
    let elapsed = start.elapsed();
    if root_status == Some(Status::Unbounded) {
        return Ok(SolveResult::without_solution(Status::Unbounded, stats, elapsed));
    }
    let status = match (limit, &incumbent) {
        (Some(l), _) => l,
        (None, Some(_)) => Status::Optimal,
        (None, None) => Status::Infeasible,
    };
    Ok(match incumbent {
        Some((objective, values)) => SolveResult {
            status,
            objective,
            values,
            duals: None,
            stats,
            wall_time: elapsed,
        },
        None => SolveResult::without_solution(status, stats, elapsed),
    })
}

fn current_bounds(changes: &[(usize, f64, f64)], j: usize, lo: f64, up: f64) -> (f64, f64) {
    changes
        .iter()
        .rev()
        .find(|c| c.0 == j)
        .map_or((lo, up), |&(_, l, u)| (l, u))
}
