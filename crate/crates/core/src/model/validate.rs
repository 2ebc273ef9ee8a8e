use std::collections::HashSet;
use std::fmt;

use super::*;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub code: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E:{}: {}", self.code, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn codes(&self) -> Vec<&'static str> {
        self.violations.iter().map(|v| v.code).collect()
    }

    fn push(&mut self, code: &'static str, message: String) {
        self.violations.push(Violation { code, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{}", v)?;
        }
        Ok(())
    }
}

pub fn validate_scenario(s: &Scenario) -> ValidationReport {
    let mut rep = ValidationReport::default();
    check_line(s, &mut rep);
    check_horizon(s, &mut rep);
    check_services(s, &mut rep);
    check_flows(s, &mut rep);
    check_disruption(s, &mut rep);
    check_vehicle_and_road(s, &mut rep);
    rep
}

fn check_line(s: &Scenario, rep: &mut ValidationReport) {
    let line = &s.line;
    for (k, st) in line.stations.iter().enumerate() {
        if st.id != k as u32 + 1 {
            rep.push(
                "LINE_IDS",
                format!("station ids must be 1..{} in order; position {} holds id {}", line.len(), k + 1, st.id),
            );
            break;
        }
    }
    for r in 1..line.len() {
        for (a, b) in [(r, r + 1), (r + 1, r)] {
            match line.runtime(a, b) {
                None => rep.push("RUNTIME_MISSING", format!("no run time for section ({}, {})", a, b)),
                Some(m) if m <= 0 => rep.push(
                    "RUNTIME_NONPOSITIVE",
                    format!("run time of section ({}, {}) is {}", a, b, m),
                ),
                _ => {}
            }
        }
    }
    for (&(a, b), _) in &line.section_runtimes {
        if a.abs_diff(b) != 1 {
            rep.push("RUNTIME_MISSING", format!("section ({}, {}) is not between adjacent stations", a, b));
        }
    }
    for (&r, &m) in &line.dwell_times {
        if m < 0 {
            rep.push("DWELL_NEGATIVE", format!("dwell time at station {} is {}", r, m));
        }
    }
}

fn check_horizon(s: &Scenario, rep: &mut ValidationReport) {
    if s.horizon.start >= s.horizon.end {
        rep.push(
            "HORIZON",
            format!("horizon start {} is not before end {}", format_hhmm(s.horizon.start), format_hhmm(s.horizon.end)),
        );
    }
}

fn check_services(s: &Scenario, rep: &mut ValidationReport) {
    let n = s.line.len();
    let mut seen = HashSet::new();
    for u in &s.services {
        if !seen.insert(u.id.as_str()) {
            rep.push("SERVICE_DUPLICATE", format!("service id {} appears more than once", u.id));
        }
        if u.capacity == 0 {
            rep.push("SERVICE_CAPACITY", format!("service {} has zero capacity", u.id));
        }
        let mut visited = Vec::new();
        for r in 1..=n {
            let (a, d) = (u.arr(r), u.dep(r));
            if (a == NO_VISIT) != (d == NO_VISIT) {
                rep.push(
                    "SERVICE_SENTINEL",
                    format!("service {} station {}: arrival and departure must both be set or both absent", u.id, r),
                );
            }
            if a != NO_VISIT && d != NO_VISIT && a > d {
                rep.push(
                    "SERVICE_ORDER",
                    format!("service {} station {}: arrival {} after departure {}", u.id, r, format_hhmm(a), format_hhmm(d)),
                );
            }
            for t in [a, d] {
                if t != NO_VISIT && !s.horizon.contains(t) {
                    rep.push(
                        "SERVICE_HORIZON",
                        format!("service {} station {}: time {} outside the planning horizon", u.id, r, format_hhmm(t)),
                    );
                }
            }
            if u.visits(r) {
                visited.push(r);
            }
        }
        if visited.is_empty() {
            rep.push("SERVICE_EMPTY", format!("service {} visits no station", u.id));
            continue;
        }
        if visited.windows(2).any(|w| w[1] != w[0] + 1) {
            rep.push("SERVICE_CONTIGUOUS", format!("service {} skips stations inside its run", u.id));
            continue;
        }
        let order = u.visited_stations();
        for w in order.windows(2) {
            let (d, a) = (u.dep(w[0]), u.arr(w[1]));
            if d != NO_VISIT && a != NO_VISIT && a <= d {
                rep.push(
                    "SERVICE_TRAVEL_ORDER",
                    format!("service {} reaches station {} no later than it leaves station {}", u.id, w[1], w[0]),
                );
            }
        }
    }
}

fn check_flows(s: &Scenario, rep: &mut ValidationReport) {
    let d = &s.disruption;
    let mut seen = HashSet::new();
    for p in &s.flows {
        if !seen.insert(p.id.as_str()) {
            rep.push("FLOW_DUPLICATE", format!("flow id {} appears more than once", p.id));
        }
        if p.size == 0 {
            rep.push("FLOW_SIZE", format!("flow {} has size 0", p.id));
        }
        if p.origin == p.destination {
            rep.push("FLOW_OD", format!("flow {} has identical origin and destination {}", p.id, p.origin));
        } else if p.direction != Direction::between(p.origin, p.destination) {
            rep.push(
                "FLOW_DIRECTION",
                format!("flow {} is {} but travels from {} to {}", p.id, p.direction, p.origin, p.destination),
            );
        }
        if p.origin > d.s_begin && p.origin < d.s_end {
            rep.push(
                "FLOW_ORIGIN_CLOSED",
                format!("flow {} originates at station {} inside the closed section", p.id, p.origin),
            );
        }
        if !s.horizon.contains(p.production_time) {
            rep.push(
                "FLOW_HORIZON",
                format!("flow {} produced at {} outside the planning horizon", p.id, format_hhmm(p.production_time)),
            );
        }
    }
}

fn check_disruption(s: &Scenario, rep: &mut ValidationReport) {
    let d = &s.disruption;
    if !(d.s_begin >= 1 && d.s_begin < d.s_end && d.s_end <= s.line.len()) {
        rep.push(
            "DISRUPTION_STATIONS",
            format!("disrupted stations {}..{} must satisfy 1 <= s_begin < s_end <= {}", d.s_begin, d.s_end, s.line.len()),
        );
    }
    if d.tau_begin >= d.tau_end {
        rep.push(
            "DISRUPTION_WINDOW",
            format!("disruption window {}..{} is empty", format_hhmm(d.tau_begin), format_hhmm(d.tau_end)),
        );
    } else if !s.horizon.contains(d.tau_begin) || !s.horizon.contains(d.tau_end) {
        rep.push(
            "DISRUPTION_WINDOW",
            format!(
                "disruption window {}..{} leaves the planning horizon",
                format_hhmm(d.tau_begin),
                format_hhmm(d.tau_end)
            ),
        );
    }
    if d.turnback_minutes < 0 {
        rep.push("DISRUPTION_TURNBACK", format!("turnback time {} is negative", d.turnback_minutes));
    }
}

fn check_vehicle_and_road(s: &Scenario, rep: &mut ValidationReport) {
    let v = &s.vehicle;
    if v.capacity == 0 {
        rep.push("VEHICLE_CAPACITY", "vehicle capacity is 0".into());
    }
    if v.dispatch_period <= 0 {
        rep.push("VEHICLE_PERIOD", format!("dispatch period {} is not positive", v.dispatch_period));
    }
    let speeds_ok = v.free_flow_speed > 0.0 && v.wave_speed > 0.0 && v.max_flow_vph > 0.0 && v.vehicle_length > 0.0;
    if !speeds_ok {
        rep.push("VEHICLE_PARAMS", "speeds, maximum flow and vehicle length must be positive".into());
    } else if v.wave_speed > v.free_flow_speed {
        rep.push(
            "VEHICLE_WAVE",
            format!("wave speed {} exceeds free-flow speed {}", v.wave_speed, v.free_flow_speed),
        );
    }
    let road = &s.road;
    if road.time_step_s == 0 {
        rep.push("ROAD_STEP", "time step is 0 seconds".into());
    } else if speeds_ok {
        let q = (v.max_flow_vph * road.time_step_s as f64 / 3600.0).floor();
        let n = (v.free_flow_speed * road.time_step_s as f64 / v.vehicle_length).floor();
        if q < 1.0 || n < 1.0 {
            rep.push(
                "ROAD_CAPACITY",
                format!("per-lane capacity {} and jam occupancy {} must both be at least 1", q, n),
            );
        }
    }
    let mut ids = HashSet::new();
    for node in &road.nodes {
        if !ids.insert(node.id.as_str()) {
            rep.push("ROAD_NODE_DUPLICATE", format!("road node {} appears more than once", node.id));
        }
    }
    for g in &road.segments {
        if !(g.length_m > 0.0) || g.lanes == 0 {
            rep.push(
                "ROAD_SEGMENT",
                format!("segment {} -> {} needs positive length and lanes", g.from, g.to),
            );
        }
        if g.from == g.to {
            rep.push("ROAD_SEGMENT", format!("segment {} -> {} is a loop", g.from, g.to));
        }
    }
    for sig in &road.signals {
        if sig.cycle == 0 || sig.green > sig.cycle || sig.offset >= sig.cycle.max(1) {
            rep.push(
                "SIGNAL_PLAN",
                format!(
                    "signal at cell {}: need 0 <= green <= cycle and offset < cycle (cycle {}, green {}, offset {})",
                    sig.cell, sig.cycle, sig.green, sig.offset
                ),
            );
        }
    }
    if let Some(alpha) = &road.alpha {
        if alpha.len() != road.horizon_steps + 1 || alpha.iter().any(|a| !(*a >= 0.0)) {
            rep.push(
                "ROAD_ALPHA",
                format!("alpha needs {} nonnegative weights", road.horizon_steps + 1),
            );
        }
    }
}
