//! Terminal accumulation to response-vehicle demand: task mapping of passenger
//! ODs onto the disruption boundary, then periodized vehicle counts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::ctm::{CellNetwork, NetworkError};
use crate::disruption::SpatioTemporalArea;
use crate::model::{format_hhmm, parse_hhmm, Direction, Minute, PassengerFlow, Scenario, StationId};
use crate::rescheduler::AccumulationSeries;

#[derive(Debug, Error)]
pub enum MappingError {
    #[error("class {class} ({origin} -> {destination}): {source}")]
    NoCell {
        class: usize,
        origin: StationId,
        destination: StationId,
        source: NetworkError,
    },
    #[error("{file} line {line}: {message}")]
    Csv { file: String, line: usize, message: String },
}

/// (õ_p, d̃_p)
pub fn task_map(p: &PassengerFlow, area: &SpatioTemporalArea) -> (StationId, StationId) {
    task_map_od(p.origin, p.destination, p.direction, area)
}

pub fn task_map_od(origin: StationId, destination: StationId, dir: Direction, area: &SpatioTemporalArea) -> (StationId, StationId) {
    let (r1, r2) = (area.s_begin, area.s_end);
    match dir {
        Direction::Positive => {
            let o = if origin < r1 && r1 < destination { r1 } else { origin };
            let d = if origin < r2 && r2 < destination { r2 } else { destination };
            (o, d)
        }
        Direction::Negative => {
            let o = if destination < r2 && r2 < origin { r2 } else { origin };
            let d = if destination < r1 && r1 < origin { r1 } else { destination };
            (o, d)
        }
    }
}

/// One nonzero 𝒢_p^{r,t} with the flow's mapped OD.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TerminalEntry {
    pub flow: String,
    pub station: StationId,
    pub t: Minute,
    pub mapped: (StationId, StationId),
    pub value: i64,
}

pub fn terminal_entries(acc: &AccumulationSeries, scenario: &Scenario, area: &SpatioTemporalArea) -> Vec<TerminalEntry> {
    let mut rows: Vec<_> = acc.per_flow.clone();
    rows.sort();
    rows.into_iter()
        .map(|(p, r, t, v)| TerminalEntry {
            flow: scenario.flows[p].id.clone(),
            station: r,
            t,
            mapped: task_map(&scenario.flows[p], area),
            value: v,
        })
        .collect()
}

pub fn terminal_csv(entries: &[TerminalEntry]) -> String {
    let mut out = String::from("flow,station,t,mapped_origin,mapped_destination,value\n");
    for e in entries {
        let _ = writeln!(out, "{},{},{},{},{},{}", e.flow, e.station, format_hhmm(e.t), e.mapped.0, e.mapped.1, e.value);
    }
    out
}

pub fn parse_terminal_csv(text: &str, file: &str) -> Result<Vec<TerminalEntry>, MappingError> {
    let err = |line: usize, message: String| MappingError::Csv {
        file: file.to_string(),
        line,
        message,
    };
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(err(k + 1, format!("expected 6 fields, found {}", f.len())));
        }
        let num = |s: &str| s.trim().parse::<i64>().map_err(|e| err(k + 1, format!("`{}`: {}", s, e)));
        out.push(TerminalEntry {
            flow: f[0].to_string(),
            station: num(f[1])? as StationId,
            t: parse_hhmm(f[2]).ok_or_else(|| err(k + 1, format!("bad time `{}`", f[2])))?,
            mapped: (num(f[3])? as StationId, num(f[4])? as StationId),
            value: num(f[5])?,
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VehicleClass {
    /// 1-based class id.
    pub id: usize,
    pub origin: StationId,
    pub destination: StationId,
    pub source_cell: usize,
    pub sink_cell: usize,
}

/// Number of demand periods covering the window.
pub fn periods(area: &SpatioTemporalArea, omega: Minute) -> usize {
    ((area.tau_end - area.tau_begin + omega - 1) / omega).max(0) as usize
}

fn period_of(t: Minute, area: &SpatioTemporalArea, omega: Minute) -> Option<usize> {
    (t >= area.tau_begin && t < area.tau_end).then(|| ((t - area.tau_begin) / omega) as usize)
}

/// Distinct mapped ODs with accumulation inside the window, in sorted order.
pub fn derive_classes(
    entries: &[TerminalEntry],
    area: &SpatioTemporalArea,
    net: &CellNetwork,
) -> Result<Vec<VehicleClass>, MappingError> {
    let ods: BTreeSet<(StationId, StationId)> = entries
        .iter()
        .filter(|e| e.value != 0 && e.mapped.0 != e.mapped.1 && e.t >= area.tau_begin && e.t < area.tau_end)
        .map(|e| e.mapped)
        .collect();
    ods.into_iter()
        .enumerate()
        .map(|(k, (o, d))| {
            let wrap = |source| MappingError::NoCell {
                class: k + 1,
                origin: o,
                destination: d,
                source,
            };
            Ok(VehicleClass {
                id: k + 1,
                origin: o,
                destination: d,
                source_cell: net.source_of(o).map_err(wrap)?,
                sink_cell: net.sink_of(d).map_err(wrap)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemandMatrix {
    pub classes: Vec<VehicleClass>,
    pub period_minutes: Minute,
    pub capacity: u32,
    pub periods: usize,
    /// Stage-2 steps per period.
    pub steps_per_period: usize,
    /// (period, source cell, class) → vehicles; zero entries omitted.
    pub entries: BTreeMap<(usize, usize, usize), u32>,
    /// Matched passengers per class.
    pub passengers: BTreeMap<usize, i64>,
}

impl DemandMatrix {
    pub fn vehicles(&self, period: usize, cell: usize, class: usize) -> u32 {
        self.entries.get(&(period, cell, class)).copied().unwrap_or(0)
    }

    pub fn fleet_size(&self, class: usize) -> u32 {
        self.entries
            .iter()
            .filter(|((_, _, m), _)| *m == class)
            .map(|(_, v)| v)
            .sum()
    }

    /// Step at which a period's vehicles are injected: the end of its collection period.
    pub fn injection_step(&self, period: usize) -> usize {
        (period + 1) * self.steps_per_period
    }

    /// (step, source cell, vehicles) for one class.
    pub fn injections(&self, class: usize) -> Vec<(usize, usize, f64)> {
        self.entries
            .iter()
            .filter(|((_, _, m), _)| *m == class)
            .map(|(&(k, i, _), &v)| (self.injection_step(k), i, v as f64))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("period,source_cell,class,vehicles\n");
        for (&(k, i, m), &v) in &self.entries {
            let _ = writeln!(out, "{},{},{},{}", k, i, m, v);
        }
        out
    }
}

pub fn demand_map(
    entries: &[TerminalEntry],
    classes: &[VehicleClass],
    capacity: u32,
    omega: Minute,
    area: &SpatioTemporalArea,
    dt_s: u32,
) -> DemandMatrix {
    let by_od: BTreeMap<(StationId, StationId), &VehicleClass> =
        classes.iter().map(|c| ((c.origin, c.destination), c)).collect();
    let mut sums: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    let mut passengers = BTreeMap::new();
    for e in entries {
        let (Some(k), Some(c)) = (period_of(e.t, area, omega), by_od.get(&e.mapped)) else {
            continue;
        };
        *sums.entry((k, c.id)).or_insert(0) += e.value;
        *passengers.entry(c.id).or_insert(0) += e.value;
    }
    let cap = capacity.max(1) as i64;
    let entries = sums
        .into_iter()
        .filter(|&(_, s)| s > 0)
        .map(|((k, m), s)| ((k, classes[m - 1].source_cell, m), ((s + cap - 1) / cap) as u32))
        .collect();
    DemandMatrix {
        classes: classes.to_vec(),
        period_minutes: omega,
        capacity,
        periods: periods(area, omega),
        steps_per_period: (omega as usize * 60) / dt_s.max(1) as usize,
        entries,
        passengers,
    }
}

pub fn parse_demand_csv(
    text: &str,
    file: &str,
    classes: &[VehicleClass],
    capacity: u32,
    omega: Minute,
    area: &SpatioTemporalArea,
    dt_s: u32,
) -> Result<DemandMatrix, MappingError> {
    let mut entries = BTreeMap::new();
    for (k, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<usize> = line
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| MappingError::Csv {
                file: file.to_string(),
                line: k + 1,
                message: e.to_string(),
            })?;
        if f.len() != 4 || f[2] == 0 || f[2] > classes.len() {
            return Err(MappingError::Csv {
                file: file.to_string(),
                line: k + 1,
                message: "expected period,source_cell,class,vehicles with a known class".into(),
            });
        }
        entries.insert((f[0], f[1], f[2]), f[3] as u32);
    }
    Ok(DemandMatrix {
        classes: classes.to_vec(),
        period_minutes: omega,
        capacity,
        periods: periods(area, omega),
        steps_per_period: (omega as usize * 60) / dt_s.max(1) as usize,
        entries,
        passengers: BTreeMap::new(),
    })
}

pub fn classes_csv(classes: &[VehicleClass]) -> String {
    let mut out = String::from("class,origin,destination,source_cell,sink_cell\n");
    for c in classes {
        let _ = writeln!(out, "{},{},{},{},{}", c.id, c.origin, c.destination, c.source_cell, c.sink_cell);
    }
    out
}

pub fn parse_classes_csv(text: &str, file: &str) -> Result<Vec<VehicleClass>, MappingError> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| MappingError::Csv {
            file: file.to_string(),
            line: k + 1,
            message,
        };
        let f: Vec<usize> = line
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(e.to_string()))?;
        if f.len() != 5 || f[0] != out.len() + 1 {
            return Err(bad("expected class,origin,destination,source_cell,sink_cell with consecutive class ids".into()));
        }
        out.push(VehicleClass {
            id: f[0],
            origin: f[1] as StationId,
            destination: f[2] as StationId,
            source_cell: f[3],
            sink_cell: f[4],
        });
    }
    Ok(out)
}
