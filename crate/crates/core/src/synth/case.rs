use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{run_service, uniform_line};
use crate::model::*;

const NAMES: [&str; 13] = [
    "GGZ", "FTSP", "KYR", "FTSR", "FTES", "QLZ", "LLQ", "LLQE", "BJW", "MM", "BDZ", "BSBS", "NL",
];

/// Road network around the closed section: a two-lane arterial through the station
/// nodes 4..10 in both directions plus a one-lane bypass 4 - X1 - 7 - X2 - 10.
pub fn case_road() -> RoadNetworkSpec {
    let mut nodes: Vec<RoadNode> = (4..=10)
        .map(|r| RoadNode {
            id: format!("N{}", r),
            station: Some(r),
        })
        .collect();
    for x in ["X1", "X2"] {
        nodes.push(RoadNode {
            id: x.into(),
            station: None,
        });
    }
    let seg = |from: &str, to: &str, length_m: f64, lanes: u32| RoadSegment {
        from: from.into(),
        to: to.into(),
        length_m,
        lanes,
    };
    let mut segments = Vec::new();
    for r in 4..10 {
        segments.push(seg(&format!("N{}", r), &format!("N{}", r + 1), 800.0, 2));
    }
    for r in (5..=10).rev() {
        segments.push(seg(&format!("N{}", r), &format!("N{}", r - 1), 800.0, 2));
    }
    for (a, b, len) in [("N4", "X1", 1600.0), ("X1", "N7", 1200.0), ("N7", "X2", 1600.0), ("X2", "N10", 1200.0)] {
        segments.push(seg(a, b, len, 1));
    }
    for (a, b, len) in [("N10", "X2", 1200.0), ("X2", "N7", 1600.0), ("N7", "X1", 1200.0), ("X1", "N4", 1600.0)] {
        segments.push(seg(a, b, len, 1));
    }
    let signal = |cell, offset| SignalPlan {
        cell,
        cycle: 5,
        green: 2,
        offset,
    };
    RoadNetworkSpec {
        time_step_s: 20,
        horizon_steps: 240,
        nodes,
        segments,
        signals: vec![signal(3, 0), signal(4, 0), signal(11, 4), signal(20, 4)],
        alpha: None,
    }
}

/// Thirteen-station line with the section 4..10 closed from 08:00 to 09:00 and
/// seeded passenger demand concentrated on trips across the closed section.
pub fn case_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut line = uniform_line(13, 2, 1, &[4, 10]);
    for (st, name) in line.stations.iter_mut().zip(NAMES) {
        st.name = name.into();
    }
    let horizon = Horizon {
        start: 7 * 60 + 20,
        end: 9 * 60 + 30,
    };
    let mut services = Vec::new();
    for k in 0..58 {
        let start = horizon.start + k * 128 / 58;
        services.push(run_service(&format!("U{:03}", k + 1), Direction::Positive, start, &line, 1000, horizon.end));
    }
    for k in 0..60 {
        let start = horizon.start + k * 127 / 60;
        services.push(run_service(&format!("D{:03}", k + 1), Direction::Negative, start, &line, 1000, horizon.end));
    }

    let (tau_begin, tau_end) = (8 * 60, 9 * 60);
    let mut flows = Vec::new();
    let mut push = |origin: StationId, destination: StationId, t: Minute, size: u32| {
        flows.push(PassengerFlow {
            id: format!("P{:03}", flows.len() + 1),
            origin,
            destination,
            production_time: t,
            size,
            direction: Direction::between(origin, destination),
        });
    };
    for _ in 0..60 {
        let o = rng.gen_range(1..=4);
        let d = rng.gen_range(5..=13);
        push(o, d, rng.gen_range(tau_begin..tau_end - 5), rng.gen_range(150..=250));
    }
    for _ in 0..60 {
        let o = rng.gen_range(10..=13);
        let d = rng.gen_range(1..=9);
        push(o, d, rng.gen_range(tau_begin..tau_end - 5), rng.gen_range(150..=250));
    }
    for _ in 0..40 {
        let (o, d) = if rng.gen_bool(0.5) {
            let o = rng.gen_range(1..=3);
            (o, rng.gen_range(o + 1..=4))
        } else {
            let o = rng.gen_range(11..=13);
            (o, rng.gen_range(10..o))
        };
        push(o, d, rng.gen_range(horizon.start..horizon.end - 20), rng.gen_range(20..=120));
    }
    for _ in 0..20 {
        let (o, d) = if rng.gen_bool(0.5) {
            (rng.gen_range(1..=4), rng.gen_range(5..=13))
        } else {
            (rng.gen_range(10..=13), rng.gen_range(1..=9))
        };
        let t = if rng.gen_bool(0.5) {
            rng.gen_range(horizon.start..tau_begin - 10)
        } else {
            rng.gen_range(tau_end..horizon.end - 20)
        };
        push(o, d, t, rng.gen_range(40..=160));
    }

    let mut solver = SolverSettings {
        max_candidate_trains: Some(3),
        ..SolverSettings::default()
    };
    solver.milp.seed = seed;
    Scenario {
        line,
        services,
        flows,
        disruption: DisruptionSpec {
            s_begin: 4,
            s_end: 10,
            tau_begin,
            tau_end,
            turnback_minutes: 3,
        },
        horizon,
        headways: Headways::default(),
        road: case_road(),
        vehicle: VehicleSpec::default(),
        solver,
    }
}
