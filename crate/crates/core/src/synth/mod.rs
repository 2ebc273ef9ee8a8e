//! Synthetic scenarios: random toy instances and the reconstructed case-study line.

mod case;

pub use case::{case_road, case_scenario};

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::*;

/// Line with ids 1..=n, uniform run and dwell times and the given turnback stations.
pub fn uniform_line(n: u32, runtime: Minute, dwell: Minute, turnback: &[StationId]) -> LineTopology {
    let stations = (1..=n)
        .map(|r| Station {
            id: r,
            name: format!("S{}", r),
        })
        .collect();
    let mut section_runtimes = BTreeMap::new();
    for r in 1..n {
        section_runtimes.insert((r, r + 1), runtime);
        section_runtimes.insert((r + 1, r), runtime);
    }
    LineTopology {
        stations,
        turnback_capable: turnback.iter().copied().collect::<BTreeSet<_>>(),
        section_runtimes,
        dwell_times: (1..=n).map(|r| (r, dwell)).collect(),
    }
}

/// Service leaving the first station of `dir` at `start`, stopping everywhere, with
/// stops after `cut` dropped. The last stop keeps arrival = departure.
pub fn run_service(id: &str, dir: Direction, start: Minute, line: &LineTopology, capacity: u32, cut: Minute) -> TrainService {
    let n = line.len();
    let mut arrival = vec![NO_VISIT; n as usize];
    let mut departure = vec![NO_VISIT; n as usize];
    let first = line.terminal(dir.reverse());
    let last = line.terminal(dir);
    let mut r = first;
    let mut t = start;
    arrival[(r - 1) as usize] = t;
    departure[(r - 1) as usize] = t;
    while r != last {
        let next = dir.step(r);
        let a = t + line.runtime(r, next).unwrap_or(1);
        let d = if next == last { a } else { a + line.dwell(next) };
        if d > cut {
            if a <= cut {
                arrival[(next - 1) as usize] = a;
                departure[(next - 1) as usize] = a;
            }
            break;
        }
        arrival[(next - 1) as usize] = a;
        departure[(next - 1) as usize] = d;
        r = next;
        t = d;
    }
    TrainService {
        id: id.to_string(),
        direction: dir,
        arrival,
        departure,
        capacity,
        kind: ServiceKind::Normal,
    }
}

pub fn empty_road() -> RoadNetworkSpec {
    RoadNetworkSpec {
        time_step_s: 20,
        horizon_steps: 0,
        nodes: Vec::new(),
        segments: Vec::new(),
        signals: Vec::new(),
        alpha: None,
    }
}

/// Size limits of [`toy_scenario`].
#[derive(Clone, Copy, Debug)]
pub struct ToyLimits {
    pub max_stations: u32,
    pub max_services: usize,
    pub max_flows: usize,
    pub max_size: u32,
}

impl Default for ToyLimits {
    fn default() -> Self {
        ToyLimits {
            max_stations: 6,
            max_services: 4,
            max_flows: 6,
            max_size: 3,
        }
    }
}

/// Random small instance. Same-direction services start at least three minutes apart,
/// so with unit run time and dwell they never break the one-minute headways.
pub fn toy_scenario(seed: u64, lim: ToyLimits) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(4..=lim.max_stations.max(4));
    let s_begin = rng.gen_range(1..=n - 2);
    let s_end = rng.gen_range(s_begin + 1..=n);
    let line = uniform_line(n, 2, 1, &[s_begin, s_end]);
    let horizon = Horizon { start: 420, end: 420 + 90 };
    let tau_begin = horizon.start + rng.gen_range(5..30);
    let tau_end = tau_begin + rng.gen_range(5..30);

    let count = rng.gen_range(1..=lim.max_services.max(1));
    let mut next_start = [horizon.start + rng.gen_range(0..10), horizon.start + rng.gen_range(0..10)];
    let mut services = Vec::new();
    for k in 0..count {
        let dir = if rng.gen_bool(0.5) { Direction::Positive } else { Direction::Negative };
        let slot = dir.flag() as usize;
        let start = next_start[slot];
        next_start[slot] += rng.gen_range(3..15);
        let cap = rng.gen_range(2..=8);
        services.push(run_service(&format!("T{}", k + 1), dir, start, &line, cap, horizon.end));
    }

    let open: Vec<StationId> = (1..=n).filter(|&r| r <= s_begin || r >= s_end).collect();
    let nflows = rng.gen_range(0..=lim.max_flows);
    let mut flows = Vec::new();
    for k in 0..nflows {
        let origin = open[rng.gen_range(0..open.len())];
        let mut dest = rng.gen_range(1..=n);
        if dest == origin {
            dest = if origin == n { 1 } else { origin + 1 };
        }
        flows.push(PassengerFlow {
            id: format!("P{}", k + 1),
            origin,
            destination: dest,
            production_time: horizon.start + rng.gen_range(0..60),
            size: rng.gen_range(1..=lim.max_size.max(1)),
            direction: Direction::between(origin, dest),
        });
    }

    Scenario {
        line,
        services,
        flows,
        disruption: DisruptionSpec {
            s_begin,
            s_end,
            tau_begin,
            tau_end,
            turnback_minutes: rng.gen_range(1..=4),
        },
        horizon,
        headways: Headways::default(),
        road: empty_road(),
        vehicle: VehicleSpec::default(),
        solver: SolverSettings::default(),
    }
}
