use metro_recovery::disruption::*;
use metro_recovery::model::*;
use metro_recovery::rescheduler::prepare;
use metro_recovery::synth::{toy_scenario, uniform_line, ToyLimits};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn spec(s_begin: StationId, s_end: StationId, tau_begin: Minute, tau_end: Minute) -> DisruptionSpec {
    DisruptionSpec {
        s_begin,
        s_end,
        tau_begin,
        tau_end,
        turnback_minutes: 3,
    }
}

pub fn flow(o: StationId, d: StationId) -> PassengerFlow {
    PassengerFlow {
        id: "P".into(),
        origin: o,
        destination: d,
        production_time: 480,
        size: 1,
        direction: Direction::between(o, d),
    }
}

/// Random service on an `n`-station line: contiguous stop range, random run and dwell times.
pub fn random_service(rng: &mut ChaCha8Rng, n: u32, k: usize) -> TrainService {
    let dir = if rng.gen_bool(0.5) { Direction::Positive } else { Direction::Negative };
    let a = rng.gen_range(1..=n);
    let b = rng.gen_range(1..=n);
    let (lo, hi) = (a.min(b), a.max(b).max(a.min(b) + 1).min(n));
    let stops: Vec<StationId> = match dir {
        Direction::Positive => (lo..=hi).collect(),
        Direction::Negative => (lo..=hi).rev().collect(),
    };
    let mut arrival = vec![NO_VISIT; n as usize];
    let mut departure = vec![NO_VISIT; n as usize];
    let mut t = rng.gen_range(400..560);
    for (i, &r) in stops.iter().enumerate() {
        if i > 0 {
            t += rng.gen_range(1..5);
        }
        arrival[(r - 1) as usize] = t;
        t += rng.gen_range(0..3);
        departure[(r - 1) as usize] = t;
    }
    TrainService {
        id: format!("F{}", k),
        direction: dir,
        arrival,
        departure,
        capacity: 10,
        kind: ServiceKind::Normal,
    }
}

/// Station-by-station conflict check written independently of the library.
pub fn oracle_conflict(u: &TrainService, sb: StationId, se: StationId, tb: Minute, te: Minute) -> bool {
    let mut theta = false;
    let mut r = sb;
    while r <= se {
        let a = u.arrival[(r - 1) as usize];
        let d = u.departure[(r - 1) as usize];
        if (a > tb && a < te) || (d > tb && d < te) {
            theta = true;
        }
        r += 1;
    }
    theta
}

/// Exhaustive scan over every (station, minute) pair of the service.
pub fn scan_conflict(u: &TrainService, sb: StationId, se: StationId, tb: Minute, te: Minute) -> bool {
    let n = u.arrival.len() as u32;
    (1..=n).any(|r| {
        (tb - 5..te + 5).any(|t| {
            let hit = u.arrival[(r - 1) as usize] == t || u.departure[(r - 1) as usize] == t;
            hit && r >= sb && r <= se && t > tb && t < te
        })
    })
}

/// Independent classification; 0 = before, 1 = overlapping, 2 = after.
pub fn oracle_classify(u: &TrainService, sb: StationId, se: StationId, tb: Minute, te: Minute) -> u8 {
    if !oracle_conflict(u, sb, se, tb, te) {
        let n = u.arrival.len();
        let first = match u.direction {
            Direction::Positive => (0..n).find(|&i| u.arrival[i] != NO_VISIT || u.departure[i] != NO_VISIT),
            Direction::Negative => (0..n).rev().find(|&i| u.arrival[i] != NO_VISIT || u.departure[i] != NO_VISIT),
        };
        let (a, d) = first.map_or((NO_VISIT, NO_VISIT), |i| (u.arrival[i], u.departure[i]));
        if a > te || d > te {
            2
        } else if a < tb || d < tb {
            0
        } else {
            1
        }
    } else {
        1
    }
}

/// Independent onboard filling; the negative branch is walked in travel order.
pub fn oracle_fill(o: StationId, d: StationId, conflicting: bool, sb: StationId, se: StationId) -> Vec<StationId> {
    let mut row = Vec::new();
    if o < d {
        let last = if conflicting { (d - 1).min(sb) } else { d - 1 };
        let mut r = o;
        while r <= last {
            row.push(r);
            r += 1;
        }
    } else {
        let last = if conflicting { (d + 1).max(se) } else { d + 1 };
        let mut r = o;
        while r >= last {
            row.push(r);
            r -= 1;
        }
    }
    row
}

pub fn oracle_headway(u: &TrainService, v: &TrainService, r: StationId, h: &Headways) -> bool {
    let k = (r - 1) as usize;
    let mut bad = false;
    for (x, y, min) in [
        (u.arrival[k], v.arrival[k], h.aa),
        (u.arrival[k], v.departure[k], h.ad),
        (u.departure[k], v.arrival[k], h.da),
        (u.departure[k], v.departure[k], h.dd),
    ] {
        if x >= 0 && y >= 0 && (x - y).abs() < min {
            bad = true;
        }
    }
    bad
}

/// Conflict detection and classification against the independent checks on `count` fuzzed services.
pub fn check_fuzzed_conflicts(count: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut mismatches = 0;
    let mut checked = 0;
    let mut seen = [0usize; 3];
    while checked < count {
        let n = rng.gen_range(4..=13);
        let sb = rng.gen_range(1..n);
        let se = rng.gen_range(sb + 1..=n);
        let tb = rng.gen_range(420..520);
        let te = tb + rng.gen_range(1..60);
        let line = uniform_line(n, 2, 1, &[]);
        let area = build_area(&spec(sb, se, tb, te), &line).unwrap();
        let services: Vec<TrainService> = (0..10).map(|k| random_service(&mut rng, n, k)).collect();
        let class = classify_services(&services, &area);
        for (k, u) in services.iter().enumerate() {
            let want = oracle_conflict(u, sb, se, tb, te);
            if detect_conflict(u, &area) != want || scan_conflict(u, sb, se, tb, te) != want {
                mismatches += 1;
            }
            let c = oracle_classify(u, sb, se, tb, te);
            seen[c as usize] += 1;
            let got = match class.class_of(k) {
                Some(ServiceClass::Before) => 0,
                Some(ServiceClass::Overlapping) => 1,
                Some(ServiceClass::After) => 2,
                None => 9,
            };
            if got != c {
                mismatches += 1;
            }
            checked += 1;
        }
        let total = class.before.len() + class.overlapping.len() + class.after.len();
        assert_eq!(total, services.len());
    }
    assert_eq!(mismatches, 0);
    assert!(seen.iter().all(|&c| c > count / 20), "class coverage {:?}", seen);
    format!("{} services, {} mismatches, classes {:?}", checked, mismatches, seen)
}

/// Arrival equality, per-pair transfer bound and dominance over the indicators of `scenarios` toys.
pub fn check_indicator_properties(scenarios: u64) -> String {
    let mut violations = Vec::new();
    let mut transfers = 0;
    for seed in 0..scenarios {
        let s = toy_scenario(seed, ToyLimits::default());
        let prep = prepare(&s).unwrap();
        let ind = &prep.indicators;
        let open = prep.area.open_stations();
        let times: Vec<Minute> = s.horizon.minutes().collect();
        let trains = ind.candidates.trains.len();
        for p in 0..s.flows.len() {
            let arrivals: usize = open
                .iter()
                .map(|&r| times.iter().filter(|&&t| ind.theta_tilde(p, t, r)).count())
                .sum();
            if arrivals != 1 {
                violations.push(format!("seed {seed} flow {p}: sum theta~ = {arrivals}"));
            }
            for u in 0..trains {
                let tr: usize = open
                    .iter()
                    .map(|&r| times.iter().filter(|&&t| ind.theta_check(p, u, t, r)).count())
                    .sum();
                transfers += tr;
                if tr > 1 {
                    violations.push(format!("seed {seed} flow {p} train {u}: sum theta^ = {tr}"));
                }
                for r in 1..=prep.area.stations {
                    for &t in &times {
                        if ind.theta_tilde(p, t, r) && !ind.vartheta_tilde(p, t, r) {
                            violations.push(format!("seed {seed}: theta~ > vartheta~ at ({p},{r},{t})"));
                        }
                        if ind.theta_check(p, u, t, r) && !ind.vartheta_check(p, u, t, r) {
                            violations.push(format!("seed {seed}: theta^ > vartheta^ at ({p},{u},{r},{t})"));
                        }
                    }
                }
            }
        }
    }
    assert!(violations.is_empty(), "{:#?}", &violations[..violations.len().min(10)]);
    assert!(transfers > 0, "no transfer parameters exercised");
    format!("{} scenarios, {} transfer entries, 0 violations", scenarios, transfers)
}
