//! Stage 1: the rescheduling MILP, its solution and the derived timetable,
//! assignment and accumulation series.

mod audit;
mod build;
mod report;

pub use audit::{audit_capacity, audit_disruption, audit_headways};
pub use build::{assignable_pairs, build_stage1, max_wait, AccumulationVars, AssignVar, BuildError, Stage1Model};
pub use report::{accumulation_csv, stage1_summary, station_summary_csv, terminal_accumulation_rows, timetable_csv};

use std::collections::BTreeMap;
use std::time::Duration;

use log::{debug, info};
use milp::{solve_milp, LinearModel, ModelError, SolveStats, SolverConfig, Status};
use thiserror::Error;

use crate::disruption::{
    build_area, build_indicators, candidate_timetable, AreaError, IndicatorSet, SpatioTemporalArea, TurnaroundError,
};
use crate::model::{Direction, Minute, Scenario, ServiceKind, StationId, TrainService, NO_VISIT};

/// Largest row count for which an infeasible model is diagnosed by deletion filtering.
pub const IIS_ROW_LIMIT: usize = 400;

#[derive(Debug, Error)]
pub enum Stage1Error {
    #[error(transparent)]
    Area(#[from] AreaError),
    #[error(transparent)]
    Turnaround(#[from] TurnaroundError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("stage-1 model is infeasible{}", fmt_iis(.irreducible))]
    Infeasible { irreducible: Option<Vec<String>> },
    #[error("stage-1 solve stopped with status {0}")]
    NotOptimal(Status),
}

fn fmt_iis(rows: &Option<Vec<String>>) -> String {
    match rows {
        Some(r) => format!("; irreducible subset: {}", r.join(", ")),
        None => String::new(),
    }
}

/// Area, candidate timetable and indicator parameters of a scenario.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub area: SpatioTemporalArea,
    pub indicators: IndicatorSet,
}

pub fn prepare(scenario: &Scenario) -> Result<Prepared, Stage1Error> {
    let area = build_area(&scenario.disruption, &scenario.line)?;
    let cand = candidate_timetable(&scenario.services, &area, &scenario.line, scenario.disruption.turnback_minutes)?;
    let indicators = build_indicators(scenario, &area, cand);
    Ok(Prepared { area, indicators })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ServiceOutcome {
    pub id: String,
    pub direction: Direction,
    pub kind: ServiceKind,
    pub activated: bool,
    pub conflicting: bool,
    /// Station where the service (or its parent) turned back, when a turnaround ran.
    pub turn_station: Option<StationId>,
    pub arrival: Vec<Minute>,
    pub departure: Vec<Minute>,
}

impl ServiceOutcome {
    pub fn is_normal(&self) -> bool {
        self.kind == ServiceKind::Normal
    }

    pub fn canceled(&self) -> bool {
        self.is_normal() && !self.activated
    }

    pub fn truncated(&self) -> bool {
        self.is_normal() && self.activated && self.conflicting
    }

    pub fn arr(&self, r: StationId) -> Minute {
        self.arrival[(r - 1) as usize]
    }

    pub fn dep(&self, r: StationId) -> Minute {
        self.departure[(r - 1) as usize]
    }

    pub fn as_service(&self, capacity: u32) -> TrainService {
        TrainService {
            id: self.id.clone(),
            direction: self.direction,
            arrival: self.arrival.clone(),
            departure: self.departure.clone(),
            capacity,
            kind: self.kind,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DirectionStats {
    pub normal: usize,
    pub canceled: usize,
    pub truncated: usize,
    pub turned: usize,
    /// Minutes after τ_end until the first activated service crosses the far boundary.
    pub recovery: Option<Minute>,
}

impl DirectionStats {
    /// Share of normal services that were canceled or cut short, in percent.
    pub fn rescheduled_pct(&self) -> f64 {
        if self.normal == 0 {
            0.0
        } else {
            100.0 * (self.canceled + self.truncated) as f64 / self.normal as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RescheduledTimetable {
    pub services: Vec<ServiceOutcome>,
    pub positive: DirectionStats,
    pub negative: DirectionStats,
}

impl RescheduledTimetable {
    pub fn stats(&self, dir: Direction) -> &DirectionStats {
        match dir {
            Direction::Positive => &self.positive,
            Direction::Negative => &self.negative,
        }
    }

    pub fn activated(&self) -> impl Iterator<Item = &ServiceOutcome> {
        self.services.iter().filter(|s| s.activated)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FlowAssignment {
    /// (train index, passengers) with positive counts, by train index.
    pub boarded: Vec<(usize, u32)>,
    pub stranded: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StationStats {
    /// Passengers that appeared at the station (own demand plus transfers).
    pub arrivals: i64,
    /// Mean wait of the passengers whose trip starts at the station.
    pub average_wait: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AccumulationSeries {
    pub times: Vec<Minute>,
    /// `[station − 1][minute index]`
    pub arrived: Vec<Vec<i64>>,
    pub departed: Vec<Vec<i64>>,
    pub stranded: Vec<Vec<i64>>,
    /// 𝒢 summed over flows at the boundary terminals, keyed by (station, minute).
    pub terminal: BTreeMap<(StationId, Minute), i64>,
    /// Nonzero 𝒢 entries per (flow, station, minute).
    pub per_flow: Vec<(usize, StationId, Minute, i64)>,
    pub stations: Vec<StationStats>,
}

impl AccumulationSeries {
    pub fn index_of(&self, t: Minute) -> Option<usize> {
        let first = *self.times.first()?;
        let k = (t - first) as usize;
        (t >= first && k < self.times.len()).then_some(k)
    }

    pub fn inst(&self, r: StationId, t: Minute) -> Option<i64> {
        self.terminal.get(&(r, t)).copied()
    }

    /// Passengers per minute accumulating at the terminals while the window is open.
    pub fn terminal_rate(&self, area: &SpatioTemporalArea) -> f64 {
        let total: i64 = self
            .terminal
            .iter()
            .filter(|((_, t), _)| *t >= area.tau_begin && *t < area.tau_end)
            .map(|(_, v)| v)
            .sum();
        total as f64 / (area.tau_end - area.tau_begin) as f64
    }
}

#[derive(Clone, Debug)]
pub struct Stage1Solution {
    pub timetable: RescheduledTimetable,
    pub assignment: Vec<FlowAssignment>,
    pub accumulation: AccumulationSeries,
    pub objective: f64,
    pub big_m: f64,
    pub time_m: f64,
    pub stats: SolveStats,
    pub wall_time: Duration,
    pub values: Vec<f64>,
}

impl Stage1Solution {
    /// Σ_p Σ_u x_p^u φ^{u,r}_p per (train, station), recomputed from the assignment.
    pub fn onboard_load(&self, ind: &IndicatorSet) -> BTreeMap<(usize, StationId), u32> {
        let mut load = BTreeMap::new();
        for (p, fa) in self.assignment.iter().enumerate() {
            for &(u, x) in &fa.boarded {
                for &r in ind.onboard_stations(p, u) {
                    *load.entry((u, r)).or_insert(0) += x;
                }
            }
        }
        load
    }
}

pub fn solve_stage1(
    m: &Stage1Model,
    scenario: &Scenario,
    prep: &Prepared,
    cfg: &SolverConfig,
) -> Result<Stage1Solution, Stage1Error> {
    info!(
        "stage 1: {} variables, {} rows, objective M {}, time M {}",
        m.model.num_vars(),
        m.model.num_constraints(),
        m.big_m,
        m.time_m
    );
    let res = solve_milp(&m.model, cfg)?;
    debug!("stage 1: {} ({} nodes, {} iterations)", res.status, res.stats.nodes, res.stats.iterations);
    match res.status {
        Status::Optimal => {}
        Status::Infeasible => {
            let irreducible = (m.model.num_constraints() <= IIS_ROW_LIMIT)
                .then(|| deletion_filter(&m.model, cfg))
                .map(|rows| rows.into_iter().map(|i| m.model.constraints[i].name.clone()).collect());
            return Err(Stage1Error::Infeasible { irreducible });
        }
        s => return Err(Stage1Error::NotOptimal(s)),
    }
    let x = &res.values;
    let val = |v: milp::VarId| x[v.0].round() as i64;
    let ind = &prep.indicators;
    let area = &prep.area;
    let cand = &ind.candidates;

    let mut services = Vec::with_capacity(cand.trains.len());
    for (u, tr) in cand.trains.iter().enumerate() {
        let activated = val(m.activation[u]) == 1;
        let turn_station = match tr.kind {
            ServiceKind::Turnaround { turn_station, .. } => activated.then_some(turn_station),
            ServiceKind::Normal => cand
                .child_of(u)
                .filter(|l| val(m.activation[l.child]) == 1)
                .map(|l| l.station),
        };
        services.push(ServiceOutcome {
            id: tr.id.clone(),
            direction: tr.direction,
            kind: tr.kind,
            activated,
            conflicting: cand.conflict[u],
            turn_station,
            arrival: m.arrival[u].iter().map(|&v| val(v) as Minute).collect(),
            departure: m.departure[u].iter().map(|&v| val(v) as Minute).collect(),
        });
    }
    let timetable = RescheduledTimetable {
        positive: direction_stats(&services, Direction::Positive, area),
        negative: direction_stats(&services, Direction::Negative, area),
        services,
    };

    let mut assignment: Vec<FlowAssignment> = m
        .unassigned
        .iter()
        .map(|&v| FlowAssignment {
            boarded: Vec::new(),
            stranded: val(v) as u32,
        })
        .collect();
    for av in &m.assign {
        let n = val(av.var);
        if n > 0 {
            assignment[av.flow].boarded.push((av.train, n as u32));
        }
    }

    let accumulation = extract_accumulation(m, scenario, prep, &assignment, x);
    Ok(Stage1Solution {
        timetable,
        assignment,
        accumulation,
        objective: res.objective,
        big_m: m.big_m,
        time_m: m.time_m,
        stats: res.stats,
        wall_time: res.wall_time,
        values: res.values.clone(),
    })
}

fn direction_stats(services: &[ServiceOutcome], dir: Direction, area: &SpatioTemporalArea) -> DirectionStats {
    let mut st = DirectionStats::default();
    let far = match dir {
        Direction::Positive => area.s_end,
        Direction::Negative => area.s_begin,
    };
    for s in services.iter().filter(|s| s.direction == dir) {
        if !s.is_normal() {
            continue;
        }
        st.normal += 1;
        st.canceled += s.canceled() as usize;
        st.truncated += s.truncated() as usize;
        if s.activated {
            let a = s.arr(far);
            if a != NO_VISIT && a >= area.tau_end {
                let r = a - area.tau_end;
                st.recovery = Some(st.recovery.map_or(r, |x| x.min(r)));
            }
        }
    }
    st.turned = services
        .iter()
        .filter(|s| s.is_normal() && s.direction == dir && s.turn_station.is_some())
        .count();
    st
}

fn extract_accumulation(
    m: &Stage1Model,
    scenario: &Scenario,
    prep: &Prepared,
    assignment: &[FlowAssignment],
    x: &[f64],
) -> AccumulationSeries {
    let val = |v: milp::VarId| x[v.0].round() as i64;
    let n = prep.area.stations as usize;
    let times: Vec<Minute> = scenario.horizon.minutes().collect();
    let mut arrived = vec![vec![0; times.len()]; n];
    let mut departed = vec![vec![0; times.len()]; n];
    let mut stranded = vec![vec![0; times.len()]; n];
    for (&(r, t), vars) in &m.accumulation {
        let k = (t - scenario.horizon.start) as usize;
        let i = (r - 1) as usize;
        arrived[i][k] = val(vars.arrived);
        departed[i][k] = val(vars.departed);
        stranded[i][k] = val(vars.stranded);
    }
    let mut terminal = BTreeMap::new();
    let mut per_flow = Vec::new();
    for (&(p, r, t), &v) in &m.instantaneous {
        let g = val(v);
        if g != 0 {
            *terminal.entry((r, t)).or_insert(0) += g;
            per_flow.push((p, r, t, g));
        }
    }

    let ind = &prep.indicators;
    let mut wait_sum = vec![0i64; n];
    let mut riders = vec![0i64; n];
    for (p, flow) in scenario.flows.iter().enumerate() {
        let i = (flow.origin - 1) as usize;
        riders[i] += flow.size as i64;
        for &(u, cnt) in &assignment[p].boarded {
            wait_sum[i] += ind.wait(p, u).unwrap_or(0) as i64 * cnt as i64;
        }
        let until = if prep.area.is_terminal(flow.origin) && flow.production_time < prep.area.tau_end {
            prep.area.tau_end
        } else {
            scenario.horizon.end
        };
        wait_sum[i] += (until - flow.production_time).max(0) as i64 * assignment[p].stranded as i64;
    }
    let stations = (0..n)
        .map(|i| StationStats {
            arrivals: arrived[i].last().copied().unwrap_or(0),
            average_wait: if riders[i] > 0 {
                wait_sum[i] as f64 / riders[i] as f64
            } else {
                0.0
            },
        })
        .collect();
    AccumulationSeries {
        times,
        arrived,
        departed,
        stranded,
        terminal,
        per_flow,
        stations,
    }
}

/// Deletion filter: drops each row in turn and keeps it out while the rest stays infeasible.
/// Returns the indices of an irreducible infeasible subset.
pub fn deletion_filter(model: &LinearModel, cfg: &SolverConfig) -> Vec<usize> {
    let mut keep: Vec<bool> = vec![true; model.num_constraints()];
    for i in 0..keep.len() {
        keep[i] = false;
        let mut trial = model.clone();
        trial.constraints = model
            .constraints
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(c, _)| c.clone())
            .collect();
        let infeasible = matches!(solve_milp(&trial, cfg), Ok(r) if r.status == Status::Infeasible);
        if !infeasible {
            keep[i] = true;
        }
    }
    (0..keep.len()).filter(|&i| keep[i]).collect()
}

/// Build, solve and extract in one call.
pub fn run_stage1(scenario: &Scenario) -> Result<(Prepared, Stage1Model, Stage1Solution), Stage1Error> {
    let prep = prepare(scenario)?;
    let model = build_stage1(scenario, &prep.area, &prep.indicators)?;
    let sol = solve_stage1(&model, scenario, &prep, &scenario.solver.milp)?;
    Ok((prep, model, sol))
}
