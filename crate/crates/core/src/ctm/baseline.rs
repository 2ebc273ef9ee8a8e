use std::collections::BTreeMap;

use thiserror::Error;

use super::sodta::{summarize, ClassSolution, SodtaSolution};
use super::CellNetwork;
use crate::mapping::{DemandMatrix, VehicleClass};

#[derive(Debug, Error, PartialEq)]
pub enum RouteError {
    #[error("class {class}: no route from cell {from} to cell {sink}")]
    NoRoute { class: usize, from: usize, sink: usize },
    #[error("class {class}: route has no connector {from} -> {to}")]
    Disconnected { class: usize, from: usize, to: usize },
    #[error("bad route specification `{0}`; expected class=cell,cell,...")]
    Syntax(String),
}

/// Parses `class=c1,c2,...` (several separated by `;`).
pub fn parse_routes(spec: &str) -> Result<BTreeMap<usize, Vec<usize>>, RouteError> {
    let mut out = BTreeMap::new();
    for part in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (class, cells) = part.split_once('=').ok_or_else(|| RouteError::Syntax(part.into()))?;
        let class: usize = class.trim().parse().map_err(|_| RouteError::Syntax(part.into()))?;
        let cells: Vec<usize> = cells
            .split(',')
            .map(|c| c.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| RouteError::Syntax(part.into()))?;
        out.insert(class, cells);
    }
    Ok(out)
}

/// Completes a route with the class source and sink and checks every hop is a connector.
pub fn fixed_route(net: &CellNetwork, class: &VehicleClass, given: Option<&[usize]>) -> Result<Vec<usize>, RouteError> {
    let mut route = match given {
        Some(cells) => cells.to_vec(),
        None => net.min_hop_route(class.source_cell, class.sink_cell).ok_or(RouteError::NoRoute {
            class: class.id,
            from: class.source_cell,
            sink: class.sink_cell,
        })?,
    };
    if route.first() != Some(&class.source_cell) {
        route.insert(0, class.source_cell);
    }
    if route.last() != Some(&class.sink_cell) {
        route.push(class.sink_cell);
    }
    for w in route.windows(2) {
        if net.connectors.binary_search(&(w[0], w[1])).is_err() {
            return Err(RouteError::Disconnected {
                class: class.id,
                from: w[0],
                to: w[1],
            });
        }
    }
    Ok(route)
}

/// Forward CTM simulation with every vehicle of the class on `route`:
/// each hop carries min(sending, receiving).
pub fn simulate_route(net: &CellNetwork, class: &VehicleClass, route: &[usize], demand: &[f64]) -> ClassSolution {
    let steps = net.steps;
    let k = route.len() - 1;
    let mut y = vec![vec![0.0; steps + 1]; k];
    let mut z = vec![vec![0.0; steps]; k];
    let w = net.lane.wave_ratio;
    for t in 0..steps {
        let send: Vec<f64> = (0..k)
            .map(|p| {
                if p == 0 {
                    y[0][t] + demand[t]
                } else {
                    y[p][t].min(net.capacity_at(route[p], t))
                }
            })
            .collect();
        let recv: Vec<f64> = (1..=k)
            .map(|p| {
                if p == k {
                    f64::INFINITY
                } else {
                    let c = net.cell(route[p]);
                    c.capacity.min(w * (c.jam - y[p][t])).max(0.0)
                }
            })
            .collect();
        for p in 0..k {
            z[p][t] = send[p].min(recv[p]);
        }
        for p in 0..k {
            let inflow = if p == 0 { demand[t] } else { z[p - 1][t] };
            y[p][t + 1] = y[p][t] + inflow - z[p][t];
        }
    }
    let ys = route[..k].iter().copied().zip(y).collect();
    let zs = route.windows(2).map(|w| (w[0], w[1])).zip(z).collect();
    summarize(*class, net, demand, ys, zs)
}

pub fn shortest_path_baseline(
    net: &CellNetwork,
    demand: &DemandMatrix,
    routes: &BTreeMap<usize, Vec<usize>>,
) -> Result<SodtaSolution, RouteError> {
    let mut classes = Vec::new();
    for c in &demand.classes {
        let route = fixed_route(net, c, routes.get(&c.id).map(Vec::as_slice))?;
        let mut d = vec![0.0; net.steps + 1];
        for (step, _, v) in demand.injections(c.id) {
            if step <= net.steps {
                d[step] += v;
            }
        }
        classes.push(simulate_route(net, c, &route, &d));
    }
    Ok(SodtaSolution {
        classes,
        dt_s: net.dt_s,
    })
}
