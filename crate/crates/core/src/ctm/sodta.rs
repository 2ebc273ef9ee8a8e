use std::collections::BTreeMap;

use log::debug;
use milp::{solve_lp, Engine, LinearModel, ModelError, Sense, SolverConfig, Status, VarId, DENSE_AUTO_LIMIT};
use thiserror::Error;

use super::CellNetwork;
use crate::mapping::{DemandMatrix, VehicleClass};

#[derive(Debug, Error)]
pub enum SodtaError {
    #[error("class {class}: sink cell {sink} cannot be reached from source cell {from}")]
    Unreachable { class: usize, from: usize, sink: usize },
    #[error("class {class}: vehicles injected at step {step} need {hops} steps but the horizon ends at step {steps}")]
    HorizonTooShort { class: usize, step: usize, hops: usize, steps: usize },
    #[error("class {class}: demand at cell {cell}, which is not the class source")]
    ForeignSource { class: usize, cell: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("class {class}: LP stopped with status {status}")]
    NotOptimal { class: usize, status: Status },
}

/// LP of one vehicle class over the ordinary cells plus the class source and sink.
#[derive(Clone, Debug)]
pub struct SodtaModel {
    pub class: VehicleClass,
    pub model: LinearModel,
    /// y^t_i for t = 0..=T, keyed by cell id (ordinary cells and the source).
    pub y: BTreeMap<usize, Vec<VarId>>,
    /// z^t_{ij} for t = 0..T.
    pub z: BTreeMap<(usize, usize), Vec<VarId>>,
    /// d^t at the source for t = 0..T.
    pub demand: Vec<f64>,
}

/// Every class can reach its sink and every injection can clear before the horizon ends.
pub fn check_reachability(net: &CellNetwork, demand: &DemandMatrix) -> Result<(), SodtaError> {
    for c in &demand.classes {
        let inj = demand.injections(c.id);
        if inj.is_empty() {
            continue;
        }
        let route = net.min_hop_route(c.source_cell, c.sink_cell).ok_or(SodtaError::Unreachable {
            class: c.id,
            from: c.source_cell,
            sink: c.sink_cell,
        })?;
        let hops = route.len() - 1;
        let last = inj.iter().map(|&(s, _, _)| s).max().unwrap_or(0);
        if last + hops > net.steps {
            return Err(SodtaError::HorizonTooShort {
                class: c.id,
                step: last,
                hops,
                steps: net.steps,
            });
        }
    }
    Ok(())
}

pub fn build_sodta(net: &CellNetwork, demand: &DemandMatrix, class: &VehicleClass) -> Result<SodtaModel, SodtaError> {
    let steps = net.steps;
    let src = class.source_cell;
    let sink = class.sink_cell;
    let mut d = vec![0.0; steps + 1];
    for (step, cell, v) in demand.injections(class.id) {
        if cell != src {
            return Err(SodtaError::ForeignSource { class: class.id, cell });
        }
        if step <= steps {
            d[step] += v;
        }
    }
    let in_class = |i: usize| net.is_ordinary(i) || i == src || i == sink;
    let held: Vec<usize> = (1..=net.cells.len()).filter(|&i| net.is_ordinary(i) || i == src).collect();
    let arcs: Vec<(usize, usize)> = net
        .connectors
        .iter()
        .copied()
        .filter(|&(i, j)| in_class(i) && in_class(j))
        .collect();

    let m = class.id;
    let mut model = LinearModel::new();
    let mut y = BTreeMap::new();
    for &i in &held {
        let vars: Vec<VarId> = (0..=steps)
            .map(|t| {
                let a = net.alpha.get(t).copied().unwrap_or(1.0);
                model.continuous(format!("y[{},{},{}]", i, t, m), 0.0, f64::INFINITY, a)
            })
            .collect();
        y.insert(i, vars);
    }
    let mut z = BTreeMap::new();
    for &(i, j) in &arcs {
        let vars: Vec<VarId> = (0..steps)
            .map(|t| model.continuous(format!("z[{},{},{},{}]", i, j, t, m), 0.0, f64::INFINITY, 0.0))
            .collect();
        z.insert((i, j), vars);
    }
    let inflow = |j: usize| arcs.iter().filter(move |a| a.1 == j).copied();
    let outflow = |i: usize| arcs.iter().filter(move |a| a.0 == i).copied();

    for &i in &held {
        model.add_constraint(format!("initial[{},{}]", i, m), [(y[&i][0], 1.0)], Sense::Eq, 0.0);
    }
    for t in 1..=steps {
        for &i in &held {
            let mut terms = vec![(y[&i][t], 1.0), (y[&i][t - 1], -1.0)];
            terms.extend(inflow(i).map(|a| (z[&a][t - 1], -1.0)));
            terms.extend(outflow(i).map(|a| (z[&a][t - 1], 1.0)));
            if i == src {
                model.add_constraint(format!("conservation_source[{},{},{}]", i, t, m), terms, Sense::Eq, d[t - 1]);
            } else {
                model.add_constraint(format!("conservation[{},{},{}]", i, t, m), terms, Sense::Eq, 0.0);
            }
        }
    }
    let total: f64 = d[..steps].iter().sum();
    model.add_constraint(
        format!("sink_total[{},{}]", sink, m),
        inflow(sink).flat_map(|a| z[&a].iter().map(|&v| (v, 1.0)).collect::<Vec<_>>()),
        Sense::Eq,
        total,
    );
    for t in 0..steps {
        for i in (1..=net.ordinary_count).filter(|&i| net.is_ordinary(i)) {
            let out: Vec<(VarId, f64)> = outflow(i).map(|a| (z[&a][t], 1.0)).collect();
            if !out.is_empty() {
                let mut row = out.clone();
                row.push((y[&i][t], -1.0));
                model.add_constraint(format!("outflow_occupancy[{},{},{}]", i, t, m), row, Sense::Le, 0.0);
                model.add_constraint(format!("outflow_capacity[{},{},{}]", i, t, m), out, Sense::Le, net.capacity_at(i, t));
            }
            let inc: Vec<(VarId, f64)> = inflow(i).map(|a| (z[&a][t], 1.0)).collect();
            if !inc.is_empty() {
                let cell = net.cell(i);
                model.add_constraint(format!("inflow_capacity[{},{},{}]", i, t, m), inc.clone(), Sense::Le, cell.capacity);
                let w = net.lane.wave_ratio;
                let mut row = inc;
                row.push((y[&i][t], w));
                model.add_constraint(format!("inflow_jam[{},{},{}]", i, t, m), row, Sense::Le, w * cell.jam);
            }
        }
    }
    Ok(SodtaModel {
        class: *class,
        model,
        y,
        z,
        demand: d,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassSolution {
    pub class: VehicleClass,
    pub ttt: f64,
    /// Cumulative sink arrivals by step t = 0..=T.
    pub curve: Vec<f64>,
    /// Last arrival step; 0 when nothing is sent.
    pub nct_steps: usize,
    pub fleet: u32,
    pub max_residual: f64,
    pub y: BTreeMap<usize, Vec<f64>>,
    pub z: BTreeMap<(usize, usize), Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SodtaSolution {
    pub classes: Vec<ClassSolution>,
    pub dt_s: u32,
}

impl SodtaSolution {
    pub fn ttt(&self) -> f64 {
        self.classes.iter().map(|c| c.ttt).sum::<f64>() + 0.0
    }

    pub fn max_nct_minutes(&self) -> f64 {
        self.classes
            .iter()
            .map(|c| nct_minutes(c.nct_steps, self.dt_s))
            .fold(0.0, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.classes.iter().map(|c| c.max_residual).fold(0.0, f64::max)
    }
}

pub fn nct_minutes(steps: usize, dt_s: u32) -> f64 {
    steps as f64 * dt_s as f64 / 60.0
}

/// Engine for one class LP: the dense simplex when it fits, interior point otherwise.
pub fn sodta_config(model: &LinearModel, base: &SolverConfig) -> SolverConfig {
    let mut cfg = base.clone();
    if cfg.engine == Engine::Auto {
        let m = model.num_constraints();
        if m.saturating_mul(m + model.num_vars()) > DENSE_AUTO_LIMIT {
            cfg.engine = Engine::Interior;
        }
    }
    cfg
}

pub fn solve_class(sm: &SodtaModel, net: &CellNetwork, cfg: &SolverConfig) -> Result<ClassSolution, SodtaError> {
    let class = sm.class;
    let res = solve_lp(&sm.model, &sodta_config(&sm.model, cfg))?;
    debug!("class {}: {} after {} iterations", class.id, res.status, res.stats.iterations);
    if res.status != Status::Optimal {
        return Err(SodtaError::NotOptimal {
            class: class.id,
            status: res.status,
        });
    }
    let clean = |v: f64| if v.abs() < 1e-9 { 0.0 } else { v };
    let y: BTreeMap<usize, Vec<f64>> = sm
        .y
        .iter()
        .map(|(&i, vs)| (i, vs.iter().map(|v| clean(res.values[v.0])).collect()))
        .collect();
    let z: BTreeMap<(usize, usize), Vec<f64>> = sm
        .z
        .iter()
        .map(|(&a, vs)| (a, vs.iter().map(|v| clean(res.values[v.0])).collect()))
        .collect();
    Ok(summarize(class, net, &sm.demand, y, z))
}

/// Travel time, curves, NCT and conservation residuals of a class trajectory.
pub fn summarize(
    class: VehicleClass,
    net: &CellNetwork,
    demand: &[f64],
    y: BTreeMap<usize, Vec<f64>>,
    z: BTreeMap<(usize, usize), Vec<f64>>,
) -> ClassSolution {
    let steps = net.steps;
    let mut curve = vec![0.0; steps + 1];
    let mut nct_steps = 0;
    for t in 0..steps {
        let arr: f64 = z.iter().filter(|(a, _)| a.1 == class.sink_cell).map(|(_, v)| v[t]).sum();
        curve[t + 1] = curve[t] + arr;
        if arr > 1e-6 {
            nct_steps = t + 1;
        }
    }
    let mut max_residual: f64 = 0.0;
    for (&i, yi) in &y {
        for t in 1..=steps {
            let inflow: f64 = z.iter().filter(|(a, _)| a.1 == i).map(|(_, v)| v[t - 1]).sum();
            let outflow: f64 = z.iter().filter(|(a, _)| a.0 == i).map(|(_, v)| v[t - 1]).sum();
            let inj = if i == class.source_cell { demand[t - 1] } else { 0.0 };
            max_residual = max_residual.max((yi[t] - yi[t - 1] - inflow + outflow - inj).abs());
        }
    }
    let ttt = y
        .values()
        .map(|yi| yi.iter().enumerate().map(|(t, v)| net.alpha.get(t).copied().unwrap_or(1.0) * v).sum::<f64>())
        .sum();
    let total: f64 = demand[..steps].iter().sum();
    max_residual = max_residual.max((curve[steps] - total).abs());
    ClassSolution {
        class,
        ttt,
        curve,
        nct_steps,
        fleet: total.round() as u32,
        max_residual,
        y,
        z,
    }
}

pub fn solve_sodta(net: &CellNetwork, demand: &DemandMatrix, cfg: &SolverConfig) -> Result<SodtaSolution, SodtaError> {
    check_reachability(net, demand)?;
    let mut classes = Vec::with_capacity(demand.classes.len());
    for c in &demand.classes {
        let sm = build_sodta(net, demand, c)?;
        classes.push(solve_class(&sm, net, cfg)?);
    }
    Ok(SodtaSolution {
        classes,
        dt_s: net.dt_s,
    })
}

/// All class LPs stacked into one model (for export).
pub fn merged_model(net: &CellNetwork, demand: &DemandMatrix) -> Result<LinearModel, SodtaError> {
    let mut all = LinearModel::new();
    for c in &demand.classes {
        all.append(&build_sodta(net, demand, c)?.model);
    }
    Ok(all)
}
