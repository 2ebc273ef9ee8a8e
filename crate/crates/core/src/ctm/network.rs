use std::collections::{BTreeMap, VecDeque};

use log::warn;
use thiserror::Error;

use crate::model::{RoadNetworkSpec, SignalPlan, StationId, VehicleSpec};

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("segment {from} -> {to} references an unknown node")]
    UnknownNode { from: String, to: String },
    #[error("signal plan references unknown cell {0}")]
    UnknownCell(usize),
    #[error("signal plan at cell {0} has a zero cycle")]
    ZeroCycle(usize),
    #[error("no road node is anchored at station {0}")]
    NoStationNode(StationId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Ordinary,
    Source { station: StationId },
    Sink { station: StationId },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    /// 1-based; ordinary cells come first in segment order.
    pub id: usize,
    pub kind: CellKind,
    pub segment: Option<usize>,
    /// Q per step (all lanes).
    pub capacity: f64,
    /// N per cell (all lanes).
    pub jam: f64,
}

/// Per-lane constants of the triangular fundamental diagram at step `dt_s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaneConstants {
    pub cell_length_m: f64,
    pub flow_per_step: f64,
    pub jam_per_cell: f64,
    pub wave_ratio: f64,
}

pub fn lane_constants(v: &VehicleSpec, dt_s: u32) -> LaneConstants {
    let dt = dt_s as f64;
    let cell_length_m = v.free_flow_speed * dt;
    LaneConstants {
        cell_length_m,
        flow_per_step: (v.max_flow_vph * dt / 3600.0).floor(),
        jam_per_cell: (cell_length_m / v.vehicle_length).floor(),
        wave_ratio: v.wave_speed / v.free_flow_speed,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellNetwork {
    pub cells: Vec<Cell>,
    /// (from, to) cell ids, sorted.
    pub connectors: Vec<(usize, usize)>,
    /// Γ(i): predecessors, indexed by cell id − 1.
    pub pred: Vec<Vec<usize>>,
    /// Γ⁻(i): successors.
    pub succ: Vec<Vec<usize>>,
    pub dt_s: u32,
    pub steps: usize,
    pub lane: LaneConstants,
    pub alpha: Vec<f64>,
    /// Time-varying capacity of signalized cells, `[t]` for t = 0..steps.
    pub signal_capacity: BTreeMap<usize, Vec<f64>>,
    pub ordinary_count: usize,
    sources: BTreeMap<StationId, usize>,
    sinks: BTreeMap<StationId, usize>,
}

impl CellNetwork {
    pub fn cell(&self, id: usize) -> &Cell {
        &self.cells[id - 1]
    }

    pub fn pred(&self, id: usize) -> &[usize] {
        &self.pred[id - 1]
    }

    pub fn succ(&self, id: usize) -> &[usize] {
        &self.succ[id - 1]
    }

    pub fn source_of(&self, station: StationId) -> Result<usize, NetworkError> {
        self.sources.get(&station).copied().ok_or(NetworkError::NoStationNode(station))
    }

    pub fn sink_of(&self, station: StationId) -> Result<usize, NetworkError> {
        self.sinks.get(&station).copied().ok_or(NetworkError::NoStationNode(station))
    }

    pub fn is_ordinary(&self, id: usize) -> bool {
        self.cell(id).kind == CellKind::Ordinary
    }

    /// Q^t_i after signals.
    pub fn capacity_at(&self, id: usize, t: usize) -> f64 {
        match self.signal_capacity.get(&id) {
            Some(q) => q[t.min(q.len() - 1)],
            None => self.cell(id).capacity,
        }
    }

    /// A signalized cell that never turns green within the horizon cannot pass vehicles.
    pub fn is_blocked(&self, id: usize) -> bool {
        self.signal_capacity
            .get(&id)
            .is_some_and(|q| q.iter().take(self.steps).all(|&c| c <= 0.0))
    }

    /// Min-hop route from `from` to `to` over unblocked cells, lowest ids first on ties.
    pub fn min_hop_route(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut prev = vec![0usize; self.cells.len() + 1];
        let mut seen = vec![false; self.cells.len() + 1];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(i) = queue.pop_front() {
            if i == to {
                let mut path = vec![to];
                let mut c = to;
                while c != from {
                    c = prev[c];
                    path.push(c);
                }
                path.reverse();
                return Some(path);
            }
            if i != from && self.is_blocked(i) {
                continue;
            }
            for &j in self.succ(i) {
                let passable = j == to || self.is_ordinary(j);
                if passable && !seen[j] {
                    seen[j] = true;
                    prev[j] = i;
                    queue.push_back(j);
                }
            }
        }
        None
    }
}

pub fn build_network(spec: &RoadNetworkSpec, vehicle: &VehicleSpec) -> Result<CellNetwork, NetworkError> {
    let lane = lane_constants(vehicle, spec.time_step_s);
    let node_index: BTreeMap<&str, usize> = spec.nodes.iter().enumerate().map(|(k, n)| (n.id.as_str(), k)).collect();
    let mut cells = Vec::new();
    let mut connectors = Vec::new();
    let mut seg_cells: Vec<(usize, usize)> = Vec::new();
    for (s, seg) in spec.segments.iter().enumerate() {
        if !node_index.contains_key(seg.from.as_str()) || !node_index.contains_key(seg.to.as_str()) {
            return Err(NetworkError::UnknownNode {
                from: seg.from.clone(),
                to: seg.to.clone(),
            });
        }
        let exact = seg.length_m / lane.cell_length_m;
        let k = exact.ceil().max(1.0) as usize;
        if exact < 1.0 {
            warn!(
                "segment {} -> {} is {} m, shorter than one {} m cell; using one cell",
                seg.from, seg.to, seg.length_m, lane.cell_length_m
            );
        }
        let first = cells.len() + 1;
        for _ in 0..k {
            let id = cells.len() + 1;
            cells.push(Cell {
                id,
                kind: CellKind::Ordinary,
                segment: Some(s),
                capacity: lane.flow_per_step * seg.lanes as f64,
                jam: lane.jam_per_cell * seg.lanes as f64,
            });
            if id > first {
                connectors.push((id - 1, id));
            }
        }
        seg_cells.push((first, cells.len()));
    }
    let ordinary_count = cells.len();
    for (a, sa) in spec.segments.iter().enumerate() {
        for (b, sb) in spec.segments.iter().enumerate() {
            if sa.to == sb.from && sb.to != sa.from {
                connectors.push((seg_cells[a].1, seg_cells[b].0));
            }
        }
    }
    let mut sources = BTreeMap::new();
    let mut sinks = BTreeMap::new();
    for node in &spec.nodes {
        let Some(station) = node.station else { continue };
        let outgoing: Vec<usize> = spec
            .segments
            .iter()
            .enumerate()
            .filter(|(_, s)| s.from == node.id)
            .map(|(k, _)| seg_cells[k].0)
            .collect();
        let incoming: Vec<usize> = spec
            .segments
            .iter()
            .enumerate()
            .filter(|(_, s)| s.to == node.id)
            .map(|(k, _)| seg_cells[k].1)
            .collect();
        let big = outgoing
            .iter()
            .chain(&incoming)
            .map(|&c| cells[c - 1].capacity)
            .sum::<f64>();
        let src = cells.len() + 1;
        cells.push(Cell {
            id: src,
            kind: CellKind::Source { station },
            segment: None,
            capacity: big,
            jam: f64::INFINITY,
        });
        connectors.extend(outgoing.iter().map(|&c| (src, c)));
        let snk = cells.len() + 1;
        cells.push(Cell {
            id: snk,
            kind: CellKind::Sink { station },
            segment: None,
            capacity: big,
            jam: f64::INFINITY,
        });
        connectors.extend(incoming.iter().map(|&c| (c, snk)));
        sources.insert(station, src);
        sinks.insert(station, snk);
    }
    connectors.sort_unstable();
    connectors.dedup();
    let mut pred = vec![Vec::new(); cells.len()];
    let mut succ = vec![Vec::new(); cells.len()];
    for &(i, j) in &connectors {
        succ[i - 1].push(j);
        pred[j - 1].push(i);
    }
    let alpha = spec.alpha.clone().unwrap_or_else(|| vec![1.0; spec.horizon_steps + 1]);
    let mut net = CellNetwork {
        cells,
        connectors,
        pred,
        succ,
        dt_s: spec.time_step_s,
        steps: spec.horizon_steps,
        lane,
        alpha,
        signal_capacity: BTreeMap::new(),
        ordinary_count,
        sources,
        sinks,
    };
    apply_signals(&mut net, &spec.signals)?;
    Ok(net)
}

/// Q^t = Q at green steps and 0 at red steps of each plan.
pub fn apply_signals(net: &mut CellNetwork, plans: &[SignalPlan]) -> Result<(), NetworkError> {
    for plan in plans {
        if plan.cell == 0 || plan.cell > net.ordinary_count {
            return Err(NetworkError::UnknownCell(plan.cell));
        }
        if plan.cycle == 0 {
            return Err(NetworkError::ZeroCycle(plan.cell));
        }
        let q = net.cell(plan.cell).capacity;
        let series = (0..=net.steps)
            .map(|t| if plan.is_green(t) { q } else { 0.0 })
            .collect();
        net.signal_capacity.insert(plan.cell, series);
    }
    Ok(())
}
