//! Domain types shared by both stages.

mod io;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use io::{format_hhmm, load_scenario, parse_hhmm, save_scenario, scenario_from_str, scenario_to_string, ScenarioError};
pub use validate::{validate_scenario, ValidationReport, Violation};

use milp::SolverConfig;

/// Minutes since midnight; [`NO_VISIT`] marks an unvisited station.
pub type Minute = i32;
pub type StationId = u32;

pub const NO_VISIT: Minute = -1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// Increasing station ids (f = 1).
    Positive,
    /// Decreasing station ids (f = 0).
    Negative,
}

impl Direction {
    pub fn between(from: StationId, to: StationId) -> Direction {
        if from < to {
            Direction::Positive
        } else {
            Direction::Negative
        }
    }

    pub fn flag(self) -> u8 {
        match self {
            Direction::Positive => 1,
            Direction::Negative => 0,
        }
    }

    pub fn reverse(self) -> Direction {
        match self {
            Direction::Positive => Direction::Negative,
            Direction::Negative => Direction::Positive,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Positive => "positive",
            Direction::Negative => "negative",
        }
    }

    /// Next station in travel direction.
    pub fn step(self, r: StationId) -> StationId {
        match self {
            Direction::Positive => r + 1,
            Direction::Negative => r - 1,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Station {
    pub id: StationId,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineTopology {
    pub stations: Vec<Station>,
    pub turnback_capable: BTreeSet<StationId>,
    pub section_runtimes: BTreeMap<(StationId, StationId), Minute>,
    pub dwell_times: BTreeMap<StationId, Minute>,
}

impl LineTopology {
    pub fn len(&self) -> u32 {
        self.stations.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn contains(&self, r: StationId) -> bool {
        r >= 1 && r <= self.len()
    }

    pub fn runtime(&self, from: StationId, to: StationId) -> Option<Minute> {
        self.section_runtimes.get(&(from, to)).copied()
    }

    pub fn dwell(&self, r: StationId) -> Minute {
        self.dwell_times.get(&r).copied().unwrap_or(0)
    }

    pub fn station_ids(&self) -> impl Iterator<Item = StationId> {
        1..=self.len()
    }

    pub fn name(&self, r: StationId) -> &str {
        self.stations
            .get((r as usize).wrapping_sub(1))
            .map_or("?", |s| s.name.as_str())
    }

    /// Last station reached travelling in `dir`.
    pub fn terminal(&self, dir: Direction) -> StationId {
        match dir {
            Direction::Positive => self.len(),
            Direction::Negative => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ServiceKind {
    Normal,
    /// Candidate generated by short-turning `parent` (index into the normal services).
    Turnaround { parent: usize, turn_station: StationId },
}

/// One directed train run. Times are indexed by station id − 1 and hold
/// [`NO_VISIT`] where the station is not served.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainService {
    pub id: String,
    pub direction: Direction,
    pub arrival: Vec<Minute>,
    pub departure: Vec<Minute>,
    pub capacity: u32,
    pub kind: ServiceKind,
}

impl TrainService {
    pub fn arr(&self, r: StationId) -> Minute {
        self.arrival[(r - 1) as usize]
    }

    pub fn dep(&self, r: StationId) -> Minute {
        self.departure[(r - 1) as usize]
    }

    pub fn visits(&self, r: StationId) -> bool {
        self.arr(r) != NO_VISIT || self.dep(r) != NO_VISIT
    }

    /// Visited stations in travel order.
    pub fn visited_stations(&self) -> Vec<StationId> {
        let n = self.arrival.len() as u32;
        let mut v: Vec<StationId> = (1..=n).filter(|&r| self.visits(r)).collect();
        if self.direction == Direction::Negative {
            v.reverse();
        }
        v
    }

    pub fn origin_station(&self) -> Option<StationId> {
        self.visited_stations().first().copied()
    }

    pub fn destination_station(&self) -> Option<StationId> {
        self.visited_stations().last().copied()
    }

    pub fn is_normal(&self) -> bool {
        self.kind == ServiceKind::Normal
    }

    pub fn event_times(&self) -> impl Iterator<Item = Minute> + '_ {
        self.arrival
            .iter()
            .chain(&self.departure)
            .copied()
            .filter(|&t| t != NO_VISIT)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PassengerFlow {
    pub id: String,
    pub origin: StationId,
    pub destination: StationId,
    pub production_time: Minute,
    pub size: u32,
    pub direction: Direction,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisruptionSpec {
    pub s_begin: StationId,
    pub s_end: StationId,
    pub tau_begin: Minute,
    pub tau_end: Minute,
    pub turnback_minutes: Minute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Horizon {
    pub start: Minute,
    pub end: Minute,
}

impl Horizon {
    pub fn contains(&self, t: Minute) -> bool {
        t >= self.start && t <= self.end
    }

    pub fn minutes(&self) -> impl Iterator<Item = Minute> {
        self.start..=self.end
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1).max(0) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Headways {
    pub aa: Minute,
    pub ad: Minute,
    pub da: Minute,
    pub dd: Minute,
}

impl Default for Headways {
    fn default() -> Self {
        Headways {
            aa: 1,
            ad: 1,
            da: 1,
            dd: 1,
        }
    }
}

/// Response-vehicle parameters (one vehicle type for every class).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VehicleSpec {
    /// Passengers per vehicle, C_R.
    pub capacity: u32,
    /// Dispatch period ω_F in minutes.
    pub dispatch_period: Minute,
    pub free_flow_speed: f64,
    pub wave_speed: f64,
    pub max_flow_vph: f64,
    pub vehicle_length: f64,
}

impl Default for VehicleSpec {
    fn default() -> Self {
        VehicleSpec {
            capacity: 40,
            dispatch_period: 5,
            free_flow_speed: 20.0,
            wave_speed: 10.0,
            max_flow_vph: 1992.0,
            vehicle_length: 12.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoadNode {
    pub id: String,
    pub station: Option<StationId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoadSegment {
    pub from: String,
    pub to: String,
    pub length_m: f64,
    pub lanes: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignalPlan {
    pub cell: usize,
    pub cycle: u32,
    pub green: u32,
    pub offset: u32,
}

impl SignalPlan {
    /// Green iff the first green has started and the cycle phase is inside the green part.
    pub fn is_green(&self, t: usize) -> bool {
        let t = t as u32;
        t >= self.offset && (t - self.offset) % self.cycle < self.green
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoadNetworkSpec {
    pub time_step_s: u32,
    pub horizon_steps: usize,
    pub nodes: Vec<RoadNode>,
    pub segments: Vec<RoadSegment>,
    pub signals: Vec<SignalPlan>,
    /// Holding weights α_t; uniform 1 when absent.
    pub alpha: Option<Vec<f64>>,
}

/// Stage-1 solver knobs on top of the generic MILP configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverSettings {
    pub milp: SolverConfig,
    /// Objective penalty M for stranded passengers; 1 + max w̆ when absent.
    pub big_m: Option<f64>,
    pub weight_wait_by_size: bool,
    /// Keep only the first k gate-feasible trains per flow (by waiting time).
    pub max_candidate_trains: Option<usize>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            milp: SolverConfig::default(),
            big_m: None,
            weight_wait_by_size: false,
            max_candidate_trains: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub line: LineTopology,
    pub services: Vec<TrainService>,
    pub flows: Vec<PassengerFlow>,
    pub disruption: DisruptionSpec,
    pub horizon: Horizon,
    pub headways: Headways,
    pub road: RoadNetworkSpec,
    pub vehicle: VehicleSpec,
    pub solver: SolverSettings,
}

impl Scenario {
    pub fn service_index(&self, id: &str) -> Option<usize> {
        self.services.iter().position(|s| s.id == id)
    }
}
