use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use milp::{Engine, SolverConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::*;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("dangling {kind} reference `{id}` in {context}")]
    Dangling {
        kind: &'static str,
        id: String,
        context: String,
    },
}

/// Parses "HH:MM" into minutes since midnight. Hours may exceed 23.
pub fn parse_hhmm(s: &str) -> Option<Minute> {
    let (h, m) = s.trim().split_once(':')?;
    if h.is_empty() || m.len() != 2 {
        return None;
    }
    let h: i32 = h.parse().ok()?;
    let m: i32 = m.parse().ok()?;
    (h >= 0 && (0..60).contains(&m)).then_some(h * 60 + m)
}

pub fn format_hhmm(t: Minute) -> String {
    format!("{:02}:{:02}", t.div_euclid(60), t.rem_euclid(60))
}

mod hhmm {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &i32, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_hhmm(*t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<i32, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_hhmm(&s).ok_or_else(|| D::Error::custom(format!("invalid time `{}`, expected HH:MM", s)))
    }
}

mod hhmm_opt {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &Option<i32>, s: S) -> Result<S::Ok, S::Error> {
        match t {
            Some(t) => s.serialize_str(&super::format_hhmm(*t)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<i32>, D::Error> {
        match Option::<String>::deserialize(d)? {
            None => Ok(None),
            Some(s) => super::parse_hhmm(&s)
                .map(Some)
                .ok_or_else(|| D::Error::custom(format!("invalid time `{}`, expected HH:MM", s))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    line: RawLine,
    services: Vec<RawService>,
    flows: Vec<RawFlow>,
    disruption: RawDisruption,
    horizon: RawHorizon,
    #[serde(default)]
    headways: RawHeadways,
    road: RawRoad,
    #[serde(default)]
    vehicle: RawVehicle,
    #[serde(default)]
    solver: RawSolver,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLine {
    stations: Vec<RawStation>,
    #[serde(default)]
    turnback_capable: Vec<StationId>,
    section_runtimes: Vec<RawRuntime>,
    #[serde(default)]
    dwell_times: Vec<RawDwell>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStation {
    id: StationId,
    name: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRuntime {
    from: StationId,
    to: StationId,
    minutes: Minute,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDwell {
    station: StationId,
    minutes: Minute,
}

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum RawDirection {
    Positive,
    Negative,
}

impl From<RawDirection> for Direction {
    fn from(d: RawDirection) -> Self {
        match d {
            RawDirection::Positive => Direction::Positive,
            RawDirection::Negative => Direction::Negative,
        }
    }
}

impl From<Direction> for RawDirection {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Positive => RawDirection::Positive,
            Direction::Negative => RawDirection::Negative,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawService {
    id: String,
    direction: RawDirection,
    capacity: u32,
    stops: Vec<RawStop>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStop {
    station: StationId,
    #[serde(with = "hhmm_opt", default)]
    arr: Option<Minute>,
    #[serde(with = "hhmm_opt", default)]
    dep: Option<Minute>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlow {
    id: String,
    origin: StationId,
    destination: StationId,
    #[serde(with = "hhmm")]
    production_time: Minute,
    size: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direction: Option<RawDirection>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDisruption {
    s_begin: StationId,
    s_end: StationId,
    #[serde(with = "hhmm")]
    tau_begin: Minute,
    #[serde(with = "hhmm")]
    tau_end: Minute,
    #[serde(default = "default_turnback")]
    turnback_minutes: Minute,
}

fn default_turnback() -> Minute {
    3
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHorizon {
    #[serde(with = "hhmm")]
    start: Minute,
    #[serde(with = "hhmm")]
    end: Minute,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawHeadways {
    aa: Minute,
    ad: Minute,
    da: Minute,
    dd: Minute,
}

impl Default for RawHeadways {
    fn default() -> Self {
        let h = Headways::default();
        RawHeadways {
            aa: h.aa,
            ad: h.ad,
            da: h.da,
            dd: h.dd,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawVehicle {
    capacity: u32,
    dispatch_period: Minute,
    free_flow_speed: f64,
    wave_speed: f64,
    max_flow_vph: f64,
    vehicle_length: f64,
}

impl Default for RawVehicle {
    fn default() -> Self {
        let v = VehicleSpec::default();
        RawVehicle {
            capacity: v.capacity,
            dispatch_period: v.dispatch_period,
            free_flow_speed: v.free_flow_speed,
            wave_speed: v.wave_speed,
            max_flow_vph: v.max_flow_vph,
            vehicle_length: v.vehicle_length,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRoad {
    #[serde(default = "default_step")]
    time_step: u32,
    horizon_steps: usize,
    nodes: Vec<RawNode>,
    segments: Vec<RawSegment>,
    #[serde(default)]
    signals: Vec<RawSignal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<Vec<f64>>,
}

fn default_step() -> u32 {
    20
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    station: Option<StationId>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    from: String,
    to: String,
    length: f64,
    #[serde(default = "default_lanes")]
    lanes: u32,
}

fn default_lanes() -> u32 {
    2
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSignal {
    cell: usize,
    cycle: u32,
    green: u32,
    offset: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSolver {
    eps: f64,
    eps_int: f64,
    node_limit: usize,
    iter_limit: usize,
    threads: usize,
    seed: u64,
    engine: Engine,
    #[serde(skip_serializing_if = "Option::is_none")]
    big_m: Option<f64>,
    weight_wait_by_size: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_candidate_trains: Option<usize>,
}

impl Default for RawSolver {
    fn default() -> Self {
        RawSolver::from(&SolverSettings::default())
    }
}

impl From<&SolverSettings> for RawSolver {
    fn from(s: &SolverSettings) -> Self {
        RawSolver {
            eps: s.milp.eps,
            eps_int: s.milp.eps_int,
            node_limit: s.milp.node_limit,
            iter_limit: s.milp.iter_limit,
            threads: s.milp.threads,
            seed: s.milp.seed,
            engine: s.milp.engine,
            big_m: s.big_m,
            weight_wait_by_size: s.weight_wait_by_size,
            max_candidate_trains: s.max_candidate_trains,
        }
    }
}

fn dangling(kind: &'static str, id: impl ToString, context: impl Into<String>) -> ScenarioError {
    ScenarioError::Dangling {
        kind,
        id: id.to_string(),
        context: context.into(),
    }
}

fn from_raw(raw: RawScenario) -> Result<Scenario, ScenarioError> {
    let n = raw.line.stations.len() as StationId;
    let known = |r: StationId| r >= 1 && r <= n;

    let mut stations: Vec<Station> = raw
        .line
        .stations
        .into_iter()
        .map(|s| Station { id: s.id, name: s.name })
        .collect();
    stations.sort_by_key(|s| s.id);

    for &r in &raw.line.turnback_capable {
        if !known(r) {
            return Err(dangling("station", r, "line.turnback_capable"));
        }
    }
    let mut section_runtimes = BTreeMap::new();
    for rt in &raw.line.section_runtimes {
        for r in [rt.from, rt.to] {
            if !known(r) {
                return Err(dangling("station", r, "line.section_runtimes"));
            }
        }
        section_runtimes.insert((rt.from, rt.to), rt.minutes);
    }
    let mut dwell_times = BTreeMap::new();
    for d in &raw.line.dwell_times {
        if !known(d.station) {
            return Err(dangling("station", d.station, "line.dwell_times"));
        }
        dwell_times.insert(d.station, d.minutes);
    }
    let line = LineTopology {
        stations,
        turnback_capable: raw.line.turnback_capable.iter().copied().collect::<BTreeSet<_>>(),
        section_runtimes,
        dwell_times,
    };

    let mut services = Vec::with_capacity(raw.services.len());
    for s in raw.services {
        let mut arrival = vec![NO_VISIT; n as usize];
        let mut departure = vec![NO_VISIT; n as usize];
        for stop in &s.stops {
            if !known(stop.station) {
                return Err(dangling("station", stop.station, format!("service {}", s.id)));
            }
            let k = (stop.station - 1) as usize;
            arrival[k] = stop.arr.unwrap_or(NO_VISIT);
            departure[k] = stop.dep.unwrap_or(NO_VISIT);
        }
        services.push(TrainService {
            id: s.id,
            direction: s.direction.into(),
            arrival,
            departure,
            capacity: s.capacity,
            kind: ServiceKind::Normal,
        });
    }

    let mut flows = Vec::with_capacity(raw.flows.len());
    for f in raw.flows {
        for r in [f.origin, f.destination] {
            if !known(r) {
                return Err(dangling("station", r, format!("flow {}", f.id)));
            }
        }
        let direction = f
            .direction
            .map(Direction::from)
            .unwrap_or_else(|| Direction::between(f.origin, f.destination));
        flows.push(PassengerFlow {
            id: f.id,
            origin: f.origin,
            destination: f.destination,
            production_time: f.production_time,
            size: f.size,
            direction,
        });
    }

    let d = raw.disruption;
    for r in [d.s_begin, d.s_end] {
        if !known(r) {
            return Err(dangling("station", r, "disruption"));
        }
    }

    let mut node_ids = HashSet::new();
    let mut nodes = Vec::with_capacity(raw.road.nodes.len());
    for node in raw.road.nodes {
        if let Some(r) = node.station {
            if !known(r) {
                return Err(dangling("station", r, format!("road node {}", node.id)));
            }
        }
        node_ids.insert(node.id.clone());
        nodes.push(RoadNode {
            id: node.id,
            station: node.station,
        });
    }
    let mut segments = Vec::with_capacity(raw.road.segments.len());
    for seg in raw.road.segments {
        for id in [&seg.from, &seg.to] {
            if !node_ids.contains(id) {
                return Err(dangling("node", id, "road.segments"));
            }
        }
        segments.push(RoadSegment {
            from: seg.from,
            to: seg.to,
            length_m: seg.length,
            lanes: seg.lanes,
        });
    }
    let road = RoadNetworkSpec {
        time_step_s: raw.road.time_step,
        horizon_steps: raw.road.horizon_steps,
        nodes,
        segments,
        signals: raw
            .road
            .signals
            .iter()
            .map(|s| SignalPlan {
                cell: s.cell,
                cycle: s.cycle,
                green: s.green,
                offset: s.offset,
            })
            .collect(),
        alpha: raw.road.alpha,
    };

    let v = raw.vehicle;
    let sv = raw.solver;
    Ok(Scenario {
        line,
        services,
        flows,
        disruption: DisruptionSpec {
            s_begin: d.s_begin,
            s_end: d.s_end,
            tau_begin: d.tau_begin,
            tau_end: d.tau_end,
            turnback_minutes: d.turnback_minutes,
        },
        horizon: Horizon {
            start: raw.horizon.start,
            end: raw.horizon.end,
        },
        headways: Headways {
            aa: raw.headways.aa,
            ad: raw.headways.ad,
            da: raw.headways.da,
            dd: raw.headways.dd,
        },
        road,
        vehicle: VehicleSpec {
            capacity: v.capacity,
            dispatch_period: v.dispatch_period,
            free_flow_speed: v.free_flow_speed,
            wave_speed: v.wave_speed,
            max_flow_vph: v.max_flow_vph,
            vehicle_length: v.vehicle_length,
        },
        solver: SolverSettings {
            milp: SolverConfig {
                eps: sv.eps,
                eps_int: sv.eps_int,
                node_limit: sv.node_limit,
                iter_limit: sv.iter_limit,
                threads: sv.threads,
                seed: sv.seed,
                engine: sv.engine,
                bland: false,
            },
            big_m: sv.big_m,
            weight_wait_by_size: sv.weight_wait_by_size,
            max_candidate_trains: sv.max_candidate_trains,
        },
    })
}

fn to_raw(s: &Scenario) -> RawScenario {
    let opt = |t: Minute| (t != NO_VISIT).then_some(t);
    RawScenario {
        line: RawLine {
            stations: s
                .line
                .stations
                .iter()
                .map(|st| RawStation {
                    id: st.id,
                    name: st.name.clone(),
                })
                .collect(),
            turnback_capable: s.line.turnback_capable.iter().copied().collect(),
            section_runtimes: s
                .line
                .section_runtimes
                .iter()
                .map(|(&(from, to), &minutes)| RawRuntime { from, to, minutes })
                .collect(),
            dwell_times: s
                .line
                .dwell_times
                .iter()
                .map(|(&station, &minutes)| RawDwell { station, minutes })
                .collect(),
        },
        services: s
            .services
            .iter()
            .map(|u| RawService {
                id: u.id.clone(),
                direction: u.direction.into(),
                capacity: u.capacity,
                stops: u
                    .visited_stations()
                    .into_iter()
                    .map(|r| RawStop {
                        station: r,
                        arr: opt(u.arr(r)),
                        dep: opt(u.dep(r)),
                    })
                    .collect(),
            })
            .collect(),
        flows: s
            .flows
            .iter()
            .map(|p| RawFlow {
                id: p.id.clone(),
                origin: p.origin,
                destination: p.destination,
                production_time: p.production_time,
                size: p.size,
                direction: Some(p.direction.into()),
            })
            .collect(),
        disruption: RawDisruption {
            s_begin: s.disruption.s_begin,
            s_end: s.disruption.s_end,
            tau_begin: s.disruption.tau_begin,
            tau_end: s.disruption.tau_end,
            turnback_minutes: s.disruption.turnback_minutes,
        },
        horizon: RawHorizon {
            start: s.horizon.start,
            end: s.horizon.end,
        },
        headways: RawHeadways {
            aa: s.headways.aa,
            ad: s.headways.ad,
            da: s.headways.da,
            dd: s.headways.dd,
        },
        road: RawRoad {
            time_step: s.road.time_step_s,
            horizon_steps: s.road.horizon_steps,
            nodes: s
                .road
                .nodes
                .iter()
                .map(|n| RawNode {
                    id: n.id.clone(),
                    station: n.station,
                })
                .collect(),
            segments: s
                .road
                .segments
                .iter()
                .map(|g| RawSegment {
                    from: g.from.clone(),
                    to: g.to.clone(),
                    length: g.length_m,
                    lanes: g.lanes,
                })
                .collect(),
            signals: s
                .road
                .signals
                .iter()
                .map(|g| RawSignal {
                    cell: g.cell,
                    cycle: g.cycle,
                    green: g.green,
                    offset: g.offset,
                })
                .collect(),
            alpha: s.road.alpha.clone(),
        },
        vehicle: RawVehicle {
            capacity: s.vehicle.capacity,
            dispatch_period: s.vehicle.dispatch_period,
            free_flow_speed: s.vehicle.free_flow_speed,
            wave_speed: s.vehicle.wave_speed,
            max_flow_vph: s.vehicle.max_flow_vph,
            vehicle_length: s.vehicle.vehicle_length,
        },
        solver: RawSolver::from(&s.solver),
    }
}

/// Parses scenario JSON; `origin` names the source in error messages.
pub fn scenario_from_str(text: &str, origin: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawScenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ScenarioError::Parse {
            path: origin.to_string(),
            line: inner.line(),
            column: inner.column(),
            message: if path == "." {
                inner.to_string()
            } else {
                format!("at `{}`: {}", path, inner)
            },
        }
    })?;
    from_raw(raw)
}

pub fn scenario_to_string(s: &Scenario) -> String {
    let mut text = serde_json::to_string_pretty(&to_raw(s)).expect("scenario serializes");
    text.push('\n');
    text
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    scenario_from_str(&text, &path.display().to_string())
}

pub fn save_scenario(s: &Scenario, path: &Path) -> Result<(), ScenarioError> {
    fs::write(path, scenario_to_string(s)).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}
