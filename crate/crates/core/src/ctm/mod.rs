//! Cell transmission road network, fixed-time signals, the system-optimal
//! assignment LP and a fixed-route baseline.

mod baseline;
mod network;
mod sodta;

pub use baseline::{fixed_route, parse_routes, shortest_path_baseline, simulate_route, RouteError};
pub use network::{apply_signals, build_network, lane_constants, Cell, CellKind, CellNetwork, LaneConstants, NetworkError};
pub use sodta::{
    build_sodta, check_reachability, merged_model, nct_minutes, sodta_config, solve_class, solve_sodta, summarize,
    ClassSolution, SodtaError, SodtaModel, SodtaSolution,
};

use std::fmt::Write as _;

pub fn curves_csv(sol: &SodtaSolution) -> String {
    let mut out = String::from("class,t,cumulative\n");
    for c in &sol.classes {
        for (t, v) in c.curve.iter().enumerate() {
            let _ = writeln!(out, "{},{},{:.6}", c.class.id, t, v);
        }
    }
    out
}

pub fn nct_csv(sol: &SodtaSolution) -> String {
    let mut out = String::from("class,origin,destination,vehicles,nct_min\n");
    for c in &sol.classes {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.2}",
            c.class.id,
            c.class.origin,
            c.class.destination,
            c.fleet,
            nct_minutes(c.nct_steps, sol.dt_s)
        );
    }
    out
}

/// Nonzero occupancies only.
pub fn cells_csv(sol: &SodtaSolution) -> String {
    let mut rows = Vec::new();
    for c in &sol.classes {
        for (&i, ys) in &c.y {
            for (t, &v) in ys.iter().enumerate() {
                if v.abs() > 1e-6 {
                    rows.push((t, i, c.class.id, v));
                }
            }
        }
    }
    rows.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    let mut out = String::from("t,cell,class,y\n");
    for (t, i, m, v) in rows {
        let _ = writeln!(out, "{},{},{},{:.6}", t, i, m, v);
    }
    out
}

pub fn sodta_summary(sol: &SodtaSolution) -> String {
    let mut out = String::from("[sodta]\n");
    let _ = writeln!(out, "classes: {}", sol.classes.len());
    let _ = writeln!(out, "vehicles: {}", sol.classes.iter().map(|c| c.fleet).sum::<u32>());
    let _ = writeln!(out, "total travel time: {:.3} vehicle-steps", sol.ttt());
    let _ = writeln!(out, "max NCT: {:.2} min", sol.max_nct_minutes());
    let _ = writeln!(out, "max conservation residual: {:.3e}", sol.max_residual());
    out
}

pub fn baseline_summary(base: &SodtaSolution) -> String {
    let mut out = String::from("[baseline]\n");
    let _ = writeln!(out, "fixed-route total travel time: {:.3} vehicle-steps", base.ttt());
    let _ = writeln!(out, "fixed-route max NCT: {:.2} min", base.max_nct_minutes());
    let stuck: f64 = base
        .classes
        .iter()
        .map(|c| c.fleet as f64 - c.curve.last().copied().unwrap_or(0.0))
        .sum();
    if stuck > 1e-6 {
        let _ = writeln!(out, "vehicles not cleared within the horizon: {:.1}", stuck);
    }
    out
}
