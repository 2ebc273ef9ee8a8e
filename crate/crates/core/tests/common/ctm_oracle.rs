use std::collections::BTreeMap;

use metro_recovery::ctm::*;
use metro_recovery::mapping::{DemandMatrix, VehicleClass};
use metro_recovery::model::*;
use milp::SolverConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn node(id: &str, station: Option<StationId>) -> RoadNode {
    RoadNode {
        id: id.into(),
        station,
    }
}

pub fn seg(from: &str, to: &str, cells: u32, lanes: u32) -> RoadSegment {
    RoadSegment {
        from: from.into(),
        to: to.into(),
        length_m: 400.0 * cells as f64,
        lanes,
    }
}

/// One-way corridor A (station 1) -> ... -> B (station 2), one segment per entry of `cells`.
pub fn corridor(cells: &[u32], lanes: u32, steps: usize, signals: Vec<SignalPlan>) -> RoadNetworkSpec {
    let mut nodes = vec![node("A", Some(1))];
    let mut segments = Vec::new();
    for (k, &c) in cells.iter().enumerate() {
        let to = if k + 1 == cells.len() { "B".to_string() } else { format!("M{}", k) };
        let from = nodes.last().unwrap().id.clone();
        segments.push(seg(&from, &to, c, lanes));
        nodes.push(node(&to, (to == "B").then_some(2)));
    }
    RoadNetworkSpec {
        time_step_s: 20,
        horizon_steps: steps,
        nodes,
        segments,
        signals,
        alpha: None,
    }
}

pub fn class(net: &CellNetwork, id: usize, o: StationId, d: StationId) -> VehicleClass {
    VehicleClass {
        id,
        origin: o,
        destination: d,
        source_cell: net.source_of(o).unwrap(),
        sink_cell: net.sink_of(d).unwrap(),
    }
}

/// Demand with one-step periods: vehicles of period k enter at step k + 1.
pub fn demand(classes: Vec<VehicleClass>, inject: &[(usize, usize, u32)]) -> DemandMatrix {
    let mut entries = BTreeMap::new();
    for &(k, m, v) in inject {
        let c = classes.iter().find(|c| c.id == m).unwrap();
        *entries.entry((k, c.source_cell, m)).or_insert(0) += v;
    }
    DemandMatrix {
        periods: inject.iter().map(|e| e.0 + 1).max().unwrap_or(0),
        classes,
        period_minutes: 1,
        capacity: 40,
        steps_per_period: 1,
        entries,
        passengers: BTreeMap::new(),
    }
}

pub fn cfg() -> SolverConfig {
    SolverConfig::default()
}

/// Direct time-stepped simulation of a corridor with non-binding capacities.
pub fn free_flow(cells: usize, steps: usize, d: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    // y[0] is the source, y[1..=cells] the corridor.
    let mut y = vec![vec![0.0; steps + 1]; cells + 1];
    let mut sink = vec![0.0; steps + 1];
    for t in 0..steps {
        let mut out = vec![0.0; cells + 1];
        out[0] = y[0][t] + d[t];
        for i in 1..=cells {
            out[i] = y[i][t];
        }
        y[0][t + 1] = y[0][t] + d[t] - out[0];
        for i in 1..=cells {
            y[i][t + 1] = y[i][t] + out[i - 1] - out[i];
        }
        sink[t + 1] = sink[t] + out[cells];
    }
    (y, sink)
}

/// Two routes from A to B: a short one-lane street and a long two-lane detour.
pub fn two_routes(short: u32, long: u32, lanes: (u32, u32), steps: usize) -> RoadNetworkSpec {
    RoadNetworkSpec {
        time_step_s: 20,
        horizon_steps: steps,
        nodes: vec![node("A", Some(1)), node("B", Some(2)), node("X", None)],
        segments: vec![seg("A", "B", short, lanes.0), seg("A", "X", long, lanes.1), seg("X", "B", 1, lanes.1)],
        signals: Vec::new(),
        alpha: None,
    }
}

pub fn check_lane_constants() -> String {
    let c = lane_constants(&VehicleSpec::default(), 20);
    assert_eq!(c.cell_length_m, 400.0);
    assert_eq!(c.flow_per_step, 11.0);
    assert_eq!(c.jam_per_cell, 33.0);
    assert_eq!(c.wave_ratio, 0.5);
    format!("cell {} m, Q {} veh/step, N {} veh/cell", c.cell_length_m, c.flow_per_step, c.jam_per_cell)
}

/// LP trajectories against the direct simulator on `count` random corridors.
pub fn check_free_flow(count: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let fast = VehicleSpec {
        max_flow_vph: 1.0e7,
        vehicle_length: 1.0e-3,
        ..VehicleSpec::default()
    };
    let mut worst = 0.0f64;
    for k in 0..count {
        let segs: Vec<u32> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(1..=3)).collect();
        let steps = 30;
        let net = build_network(&corridor(&segs, 1, steps, Vec::new()), &fast).unwrap();
        let c = class(&net, 1, 1, 2);
        let inject: Vec<(usize, usize, u32)> = (0..rng.gen_range(1..=4))
            .map(|_| (rng.gen_range(0..8), 1, rng.gen_range(1..=30)))
            .collect();
        let dm = demand(vec![c], &inject);
        let so = solve_sodta(&net, &dm, &cfg()).unwrap();
        let sol = &so.classes[0];

        let mut d = vec![0.0; steps + 1];
        for &(p, _, v) in &inject {
            d[p + 1] += v as f64;
        }
        let n = net.ordinary_count;
        let (y, sink) = free_flow(n, steps, &d);
        for t in 0..=steps {
            let mut gap = (sol.y[&c.source_cell][t] - y[0][t]).abs();
            assert!(gap < 1e-6, "corridor {k}: source at {t}");
            for i in 1..=n {
                let g = (sol.y[&i][t] - y[i][t]).abs();
                assert!(g < 1e-6, "corridor {k}: cell {i} at {t}");
                gap = gap.max(g);
            }
            let g = (sol.curve[t] - sink[t]).abs();
            assert!(g < 1e-6, "corridor {k}: sink at {t}");
            worst = worst.max(gap.max(g));
        }
        assert!(sol.max_residual <= 1e-6);
        let base = shortest_path_baseline(&net, &dm, &BTreeMap::new()).unwrap();
        assert!((base.ttt() - so.ttt()).abs() < 1e-6);
    }
    format!("{} corridors, max deviation {:.1e}", count, worst)
}

/// Three signals with cycle 5, green 2 and offsets 0/4/0.
pub fn check_red_steps() -> String {
    let signals = vec![
        SignalPlan { cell: 2, cycle: 5, green: 2, offset: 0 },
        SignalPlan { cell: 4, cycle: 5, green: 2, offset: 4 },
        SignalPlan { cell: 6, cycle: 5, green: 2, offset: 0 },
    ];
    let steps = 80;
    let net = build_network(&corridor(&[2, 2, 3], 1, steps, signals.clone()), &VehicleSpec::default()).unwrap();
    let c = class(&net, 1, 1, 2);
    let dm = demand(vec![c], &[(0, 1, 20), (3, 1, 15), (10, 1, 25)]);
    let so = solve_sodta(&net, &dm, &cfg()).unwrap();
    let base = shortest_path_baseline(&net, &dm, &BTreeMap::new()).unwrap();
    let mut red = 0;
    let mut moved = 0.0;
    for sol in [&so.classes[0], &base.classes[0]] {
        assert!(sol.max_residual <= 1e-6);
        for plan in &signals {
            for t in 0..steps {
                let out: f64 = sol.z.iter().filter(|(a, _)| a.0 == plan.cell).map(|(_, v)| v[t]).sum();
                if !plan.is_green(t) {
                    red += 1;
                    assert!(out.abs() <= 1e-9, "cell {} passes {} at red step {}", plan.cell, out, t);
                } else {
                    moved += out;
                }
            }
        }
    }
    assert!(red > 100);
    assert!(moved > 0.0);
    assert!(!SignalPlan { cell: 1, cycle: 5, green: 2, offset: 4 }.is_green(0));
    assert!(SignalPlan { cell: 1, cycle: 5, green: 2, offset: 4 }.is_green(4));
    format!("{} red cell-steps, all zero outflow", red)
}

/// Congested two-route instance where the fixed route is strictly worse.
pub fn check_strict_improvement() -> String {
    let net = build_network(&two_routes(2, 2, (1, 2), 60), &VehicleSpec::default()).unwrap();
    let c = class(&net, 1, 1, 2);
    let dm = demand(vec![c], &[(0, 1, 60), (1, 1, 60)]);
    let so = solve_sodta(&net, &dm, &cfg()).unwrap();
    let base = shortest_path_baseline(&net, &dm, &BTreeMap::new()).unwrap();
    assert_eq!(base.classes[0].curve.last().copied(), Some(120.0));
    assert!(so.ttt() < base.ttt() - 1.0, "SO {} vs fixed {}", so.ttt(), base.ttt());
    let detour: f64 = so.classes[0]
        .z
        .iter()
        .filter(|(a, _)| a.0 == c.source_cell && a.1 == 3)
        .map(|(_, v)| v.iter().sum::<f64>())
        .sum();
    assert!(detour > 1.0);
    assert!(so.max_residual() <= 1e-6 && base.max_residual() <= 1e-6);
    format!("two routes: SO {:.1} < fixed {:.1}", so.ttt(), base.ttt())
}

/// SO never worse than the fixed routes on `count` random networks.
pub fn check_dominance(count: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut strict = 0;
    let mut worst = 0.0f64;
    for k in 0..count {
        let short = rng.gen_range(1..=3);
        let long = short + rng.gen_range(0..=2);
        let lanes = (rng.gen_range(1..=2), rng.gen_range(1..=2));
        let mut spec = two_routes(short, long, lanes, 90);
        if rng.gen_bool(0.5) {
            spec.signals.push(SignalPlan {
                cell: 1,
                cycle: 5,
                green: rng.gen_range(2..=4),
                offset: rng.gen_range(0..5),
            });
        }
        let net = build_network(&spec, &VehicleSpec::default()).unwrap();
        let c1 = class(&net, 1, 1, 2);
        let inject: Vec<(usize, usize, u32)> = (0..rng.gen_range(1..=3))
            .map(|_| (rng.gen_range(0..6), 1, rng.gen_range(5..=60)))
            .collect();
        let dm = demand(vec![c1], &inject);
        let so = solve_sodta(&net, &dm, &cfg()).unwrap();
        let base = shortest_path_baseline(&net, &dm, &BTreeMap::new()).unwrap();
        let fleet = so.classes[0].fleet as f64;
        assert!((base.classes[0].curve.last().unwrap() - fleet).abs() < 1e-6, "network {k}: fixed route did not clear");
        worst = worst.max(so.max_residual()).max(base.max_residual());
        assert!(so.max_residual() <= 1e-6 && base.max_residual() <= 1e-6, "network {k}: residual");
        assert!(so.ttt() <= base.ttt() + 1e-6, "network {k}: SO {} > fixed {}", so.ttt(), base.ttt());
        if so.ttt() < base.ttt() - 1e-6 {
            strict += 1;
        }
    }
    assert!(strict > 0);
    format!("{} networks, {} strict, max residual {:.1e}", count, strict, worst)
}
