use std::collections::BTreeMap;

use milp::{LinearModel, Sense, VarId};
use thiserror::Error;

use crate::disruption::{IndicatorSet, SpatioTemporalArea};
use crate::model::{Direction, Minute, Scenario, StationId, NO_VISIT};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("indicator set is missing `{symbol}` for {what}")]
    MissingIndicator { symbol: &'static str, what: String },
}

/// x_p^u with the flow and train it connects.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AssignVar {
    pub flow: usize,
    pub train: usize,
    pub var: VarId,
}

/// Accumulation variables A, D, G at one (station, minute).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AccumulationVars {
    pub arrived: VarId,
    pub departed: VarId,
    pub stranded: VarId,
}

#[derive(Clone, Debug)]
pub struct Stage1Model {
    pub model: LinearModel,
    pub activation: Vec<VarId>,
    pub arrival: Vec<Vec<VarId>>,
    pub departure: Vec<Vec<VarId>>,
    pub visit: Vec<Vec<VarId>>,
    /// x_p
    pub unassigned: Vec<VarId>,
    /// Sorted by (flow, train).
    pub assign: Vec<AssignVar>,
    /// C^r_u for every (train, station) with at least one possible rider.
    pub load: BTreeMap<(usize, StationId), VarId>,
    /// 𝒢_p^{r,t} on its support at the two boundary terminals.
    pub instantaneous: BTreeMap<(usize, StationId, Minute), VarId>,
    pub accumulation: BTreeMap<(StationId, Minute), AccumulationVars>,
    /// Penalty on unassigned passengers.
    pub big_m: f64,
    /// Switch constant of the time-pinning rows.
    pub time_m: f64,
}

impl Stage1Model {
    pub fn assign_var(&self, p: usize, u: usize) -> Option<VarId> {
        self.assign
            .binary_search_by(|a| (a.flow, a.train).cmp(&(p, u)))
            .ok()
            .map(|k| self.assign[k].var)
    }
}

struct Builder<'a> {
    m: LinearModel,
    time_m: f64,
    t_max: f64,
    ids: &'a [String],
}

impl Builder<'_> {
    /// Emits t ≥ target − M·s and t ≤ target + M·s with switch s = ca·a + c0,
    /// skipping both when s ≥ 1 for every value of `a` (the rows are then implied by the bounds).
    fn pin(&mut self, family: &str, u: usize, r: StationId, ev: &str, t: VarId, target: Minute, a: VarId, ca: i32, c0: i32) {
        if c0.min(c0 + ca) >= 1 {
            return;
        }
        let target = target as f64;
        let mm = self.time_m;
        let ca = ca as f64;
        let c0 = c0 as f64;
        let name = format!("{}_{}[{},{}]", family, ev, self.ids[u], r);
        if target - mm * c0.min(c0 + ca) > -1.0 {
            self.m.add_constraint(format!("{}_ge", name), [(t, 1.0), (a, mm * ca)], Sense::Ge, target - mm * c0);
        }
        if target + mm * c0.min(c0 + ca) < self.t_max {
            self.m.add_constraint(format!("{}_le", name), [(t, 1.0), (a, -mm * ca)], Sense::Le, target + mm * c0);
        }
    }
}

/// Largest waiting time over the assignable (flow, train) pairs.
pub fn max_wait(ind: &IndicatorSet, keep: &[(usize, usize)]) -> Minute {
    keep.iter()
        .filter_map(|&(p, u)| ind.wait(p, u))
        .max()
        .unwrap_or(0)
}

/// Gate-feasible (flow, train) pairs that receive an assignment variable,
/// optionally limited to the `k` earliest trains per flow.
pub fn assignable_pairs(ind: &IndicatorSet, max_per_flow: Option<usize>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut current: Vec<(Minute, usize)> = Vec::new();
    let flush = |p: usize, cur: &mut Vec<(Minute, usize)>, out: &mut Vec<(usize, usize)>| {
        cur.sort();
        if let Some(k) = max_per_flow {
            cur.truncate(k);
        }
        let mut trains: Vec<usize> = cur.iter().map(|&(_, u)| u).collect();
        trains.sort_unstable();
        out.extend(trains.into_iter().map(|u| (p, u)));
        cur.clear();
    };
    let mut last = None;
    for q in ind.pairs.iter().filter(|q| q.gate_feasible()) {
        if last.is_some_and(|p| p != q.flow) {
            flush(last.unwrap(), &mut current, &mut out);
        }
        last = Some(q.flow);
        current.push((q.wait.unwrap_or(0), q.train));
    }
    if let Some(p) = last {
        flush(p, &mut current, &mut out);
    }
    out
}

pub fn build_stage1(
    scenario: &Scenario,
    area: &SpatioTemporalArea,
    ind: &IndicatorSet,
) -> Result<Stage1Model, BuildError> {
    let cand = &ind.candidates;
    let trains = &cand.trains;
    let flows = &scenario.flows;
    let n = area.stations;
    check_complete(scenario, ind)?;

    let latest = trains
        .iter()
        .flat_map(|u| u.event_times())
        .max()
        .unwrap_or(NO_VISIT)
        .max(scenario.horizon.end);
    let t_max = latest as f64;
    let ids: Vec<String> = trains.iter().map(|u| u.id.clone()).collect();
    let mut b = Builder {
        m: LinearModel::new(),
        time_m: t_max + 2.0,
        t_max,
        ids: &ids,
    };

    let keep = assignable_pairs(ind, scenario.solver.max_candidate_trains);
    let big_m = scenario
        .solver
        .big_m
        .unwrap_or_else(|| 1.0 + max_wait(ind, &keep) as f64);
    let by_size = scenario.solver.weight_wait_by_size;

    let activation: Vec<VarId> = ids.iter().map(|id| b.m.binary(format!("a[{}]", id), 0.0)).collect();
    let mut arrival = Vec::with_capacity(trains.len());
    let mut departure = Vec::with_capacity(trains.len());
    let mut visit = Vec::with_capacity(trains.len());
    for id in &ids {
        arrival.push(
            (1..=n)
                .map(|r| b.m.continuous(format!("ta[{},{}]", id, r), -1.0, t_max, 0.0))
                .collect::<Vec<_>>(),
        );
        departure.push(
            (1..=n)
                .map(|r| b.m.continuous(format!("td[{},{}]", id, r), -1.0, t_max, 0.0))
                .collect::<Vec<_>>(),
        );
    }
    for id in &ids {
        visit.push(
            (1..=n)
                .map(|r| b.m.binary(format!("s[{},{}]", id, r), 0.0))
                .collect::<Vec<_>>(),
        );
    }
    let unassigned: Vec<VarId> = flows
        .iter()
        .map(|p| {
            let w = if by_size { big_m * p.size as f64 } else { big_m };
            b.m.integer(format!("xp[{}]", p.id), 0.0, p.size as f64, w)
        })
        .collect();
    let assign: Vec<AssignVar> = keep
        .iter()
        .map(|&(p, u)| {
            let size = flows[p].size as f64;
            let w = ind.wait(p, u).unwrap_or(0) as f64;
            let cost = if by_size { w * size } else { w };
            AssignVar {
                flow: p,
                train: u,
                var: b.m.integer(format!("x[{},{}]", flows[p].id, ids[u]), 0.0, size, cost),
            }
        })
        .collect();

    // Activation and timing of normal services.
    for u in 0..cand.normal_count {
        let svc = &scenario.services[u];
        let theta = cand.conflict[u] as i32;
        let f = (svc.direction == Direction::Positive) as i32;
        let a = activation[u];
        for r in 1..=n {
            for (ev, var, planned) in [("a", arrival[u][(r - 1) as usize], svc.arr(r)), ("d", departure[u][(r - 1) as usize], svc.dep(r))] {
                b.pin("normal", u, r, ev, var, planned, a, -1, 1 + theta);
                let trunc_dep = if ev == "d" { NO_VISIT } else { planned };
                if r < area.s_begin {
                    b.pin("timetable2", u, r, ev, var, planned, a, -1, 3 - theta - f);
                } else if r == area.s_begin {
                    b.pin("timetable3", u, r, ev, var, trunc_dep, a, -1, 3 - theta - f);
                }
                if r > area.s_begin {
                    b.pin("timetable4", u, r, ev, var, NO_VISIT, a, -1, 3 - theta - f);
                }
                if r > area.s_end {
                    b.pin("timetable5", u, r, ev, var, planned, a, -1, 2 - theta + f);
                } else if r == area.s_end {
                    b.pin("timetable6", u, r, ev, var, trunc_dep, a, -1, 2 - theta + f);
                }
                if r < area.s_end {
                    b.pin("timetable7", u, r, ev, var, NO_VISIT, a, -1, 2 - theta + f);
                }
                b.pin("timetable8", u, r, ev, var, NO_VISIT, a, 1, 0);
            }
        }
        if theta == 0 {
            b.m.add_constraint(format!("timetable9[{}]", ids[u]), [(a, 1.0)], Sense::Ge, 1.0);
        }
    }

    // Turnaround candidates.
    for link in &cand.links {
        let (u, v) = (link.parent, link.child);
        let family = match trains[u].direction {
            Direction::Positive => "turnaround1",
            Direction::Negative => "turnaround2",
        };
        b.m.add_constraint(
            format!("{}[{},{},{}]", family, ids[u], ids[v], link.station),
            [(activation[v], 1.0), (activation[u], -1.0)],
            Sense::Ge,
            0.0,
        );
        b.m.add_constraint(
            format!("turnaround7[{},{}]", ids[u], ids[v]),
            [(activation[v], 1.0), (activation[u], -1.0)],
            Sense::Le,
            0.0,
        );
    }
    for v in cand.children() {
        let a = activation[v];
        for r in 1..=n {
            let k = (r - 1) as usize;
            for (ev, var, planned) in [("a", arrival[v][k], trains[v].arr(r)), ("d", departure[v][k], trains[v].dep(r))] {
                b.pin("turnaround34", v, r, ev, var, planned, a, -1, 1);
                b.pin("turnaround56", v, r, ev, var, NO_VISIT, a, 1, 0);
            }
        }
    }

    // Visited-station identification.
    for u in 0..trains.len() {
        let a = activation[u];
        for r in 1..=n {
            let s = visit[u][(r - 1) as usize];
            let tag = format!("[{},{}]", ids[u], r);
            b.m.add_constraint(format!("identification2{}", tag), [(s, 1.0), (a, -1.0)], Sense::Le, 0.0);
            if !cand.is_normal(u) {
                continue;
            }
            let theta = cand.conflict[u];
            let positive = trains[u].direction == Direction::Positive;
            if !theta {
                b.m.add_constraint(format!("identification1{}", tag), [(s, 1.0), (a, -1.0)], Sense::Ge, 0.0);
            } else if positive {
                if area.in_first_section(r) {
                    b.m.add_constraint(format!("identification3{}", tag), [(s, 1.0), (a, -1.0)], Sense::Ge, 0.0);
                } else {
                    b.m.add_constraint(format!("identification4{}", tag), [(s, 1.0), (a, 1.0)], Sense::Le, 1.0);
                }
            } else if area.in_second_section(r) {
                b.m.add_constraint(format!("identification5{}", tag), [(s, 1.0), (a, -1.0)], Sense::Ge, 0.0);
            } else {
                b.m.add_constraint(format!("identification6{}", tag), [(s, 1.0), (a, 1.0)], Sense::Le, 1.0);
            }
        }
    }
    for link in &cand.links {
        let v = link.child;
        let a = activation[v];
        let positive = trains[v].direction == Direction::Positive;
        for r in 1..=n {
            let s = visit[v][(r - 1) as usize];
            let on_route = if positive { r >= link.station } else { r <= link.station };
            let family = match (positive, on_route) {
                (true, true) => "identification7",
                (true, false) => "identification8",
                (false, true) => "identification9",
                (false, false) => "identification10",
            };
            let name = format!("{}[{},{}]", family, ids[v], r);
            if on_route {
                b.m.add_constraint(name, [(s, 1.0), (a, -1.0)], Sense::Ge, 0.0);
            } else {
                b.m.add_constraint(name, [(s, 1.0), (a, 1.0)], Sense::Le, 1.0);
            }
        }
    }

    // Headway between normal services and turnaround candidates.
    for h in &ind.headway {
        let k = (h.station - 1) as usize;
        b.m.add_constraint(
            format!("headway[{},{},{}]", ids[h.normal], ids[h.child], h.station),
            [(visit[h.normal][k], 1.0), (visit[h.child][k], 1.0)],
            Sense::Le,
            1.0,
        );
    }

    // Passenger assignment.
    let mut by_flow: Vec<Vec<AssignVar>> = vec![Vec::new(); flows.len()];
    for av in &assign {
        by_flow[av.flow].push(*av);
    }
    for (p, flow) in flows.iter().enumerate() {
        let size = flow.size as f64;
        b.m.add_constraint(
            format!("passenger_assignment_1[{}]", flow.id),
            by_flow[p].iter().map(|av| (av.var, 1.0)).chain([(unassigned[p], 1.0)]),
            Sense::Eq,
            size,
        );
        for av in &by_flow[p] {
            let u = av.train;
            let td = departure[u][(flow.origin - 1) as usize];
            b.m.add_constraint(
                format!("passenger_assignment_2d[{},{}]", flow.id, ids[u]),
                [(av.var, 1.0), (td, -size)],
                Sense::Le,
                size,
            );
            b.m.add_constraint(
                format!("passenger_assignment_2a[{},{}]", flow.id, ids[u]),
                [(av.var, 1.0), (activation[u], -size)],
                Sense::Le,
                0.0,
            );
        }
    }

    // Train capacity.
    let mut riders: BTreeMap<(usize, StationId), Vec<VarId>> = BTreeMap::new();
    for av in &assign {
        for &r in ind.onboard_stations(av.flow, av.train) {
            riders.entry((av.train, r)).or_default().push(av.var);
        }
    }
    let mut load = BTreeMap::new();
    for ((u, r), xs) in riders {
        let c = b.m.continuous(format!("C[{},{}]", ids[u], r), 0.0, trains[u].capacity as f64, 0.0);
        b.m.add_constraint(
            format!("capacity1_1[{},{}]", ids[u], r),
            [(c, 1.0)].into_iter().chain(xs.iter().map(|&x| (x, -1.0))),
            Sense::Eq,
            0.0,
        );
        load.insert((u, r), c);
    }

    // Instantaneous accumulation at the boundary terminals.
    let mut inst_terms: BTreeMap<(usize, StationId, Minute), (f64, Vec<VarId>)> = BTreeMap::new();
    for (p, flow) in flows.iter().enumerate() {
        let (t, r) = ind.arrival[p];
        let own = match flow.direction {
            Direction::Positive => r == area.s_begin,
            Direction::Negative => r == area.s_end,
        };
        if own {
            inst_terms.entry((p, r, t)).or_default().0 += flow.size as f64;
        }
    }
    for av in &assign {
        if !cand.is_normal(av.train) {
            continue;
        }
        if let Some((t, r)) = ind.pair(av.flow, av.train).and_then(|q| q.transfer) {
            inst_terms.entry((av.flow, r, t)).or_default().1.push(av.var);
        }
    }
    let mut instantaneous = BTreeMap::new();
    for ((p, r, t), (konst, xs)) in inst_terms {
        let family = if r == area.s_begin { "accumulation1_1" } else { "accumulation1_2" };
        let g = b.m.continuous(format!("Ginst[{},{},{}]", flows[p].id, r, t), 0.0, f64::INFINITY, 0.0);
        b.m.add_constraint(
            format!("{}[{},{},{}]", family, flows[p].id, r, t),
            [(g, 1.0)].into_iter().chain(xs.iter().map(|&x| (x, -1.0))),
            Sense::Eq,
            konst,
        );
        instantaneous.insert((p, r, t), g);
    }

    // Accumulated arrivals, departures and stranded passengers at open stations.
    let horizon: Vec<Minute> = scenario.horizon.minutes().collect();
    let mut arrivals_from: BTreeMap<StationId, Vec<(Minute, VarId)>> = BTreeMap::new();
    let mut departures_from: BTreeMap<StationId, Vec<(Minute, VarId)>> = BTreeMap::new();
    for av in &assign {
        let q = ind.pair(av.flow, av.train).expect("assignable pair has indicators");
        if let Some((t, r)) = q.transfer {
            arrivals_from.entry(r).or_default().push((t, av.var));
        }
        departures_from
            .entry(flows[av.flow].origin)
            .or_default()
            .push((q.boarding_departure, av.var));
    }
    let mut accumulation = BTreeMap::new();
    for r in area.open_stations() {
        let produced: Vec<(Minute, f64)> = flows
            .iter()
            .enumerate()
            .filter(|(p, _)| ind.arrival[*p].1 == r)
            .map(|(p, f)| (ind.arrival[p].0, f.size as f64))
            .collect();
        let arr_terms = arrivals_from.remove(&r).unwrap_or_default();
        let dep_terms = departures_from.remove(&r).unwrap_or_default();
        for &t in &horizon {
            let tag = format!("[{},{}]", r, t);
            let av = b.m.continuous(format!("A{}", tag), 0.0, f64::INFINITY, 0.0);
            let dv = b.m.continuous(format!("D{}", tag), 0.0, f64::INFINITY, 0.0);
            let gv = b.m.continuous(format!("G{}", tag), f64::NEG_INFINITY, f64::INFINITY, 0.0);
            let konst: f64 = produced.iter().filter(|(t0, _)| *t0 <= t).map(|(_, n)| n).sum();
            b.m.add_constraint(
                format!("accumulation1{}", tag),
                [(av, 1.0)]
                    .into_iter()
                    .chain(arr_terms.iter().filter(|(t0, _)| *t0 <= t).map(|&(_, x)| (x, -1.0))),
                Sense::Eq,
                konst,
            );
            b.m.add_constraint(
                format!("accumulation2{}", tag),
                [(dv, 1.0)]
                    .into_iter()
                    .chain(dep_terms.iter().filter(|(t0, _)| *t0 <= t).map(|&(_, x)| (x, -1.0))),
                Sense::Eq,
                0.0,
            );
            b.m.add_constraint(
                format!("accumulation3{}", tag),
                [(gv, 1.0), (av, -1.0), (dv, 1.0)],
                Sense::Eq,
                0.0,
            );
            accumulation.insert(
                (r, t),
                AccumulationVars {
                    arrived: av,
                    departed: dv,
                    stranded: gv,
                },
            );
        }
    }

    let time_m = b.time_m;
    Ok(Stage1Model {
        model: b.m,
        activation,
        arrival,
        departure,
        visit,
        unassigned,
        assign,
        load,
        instantaneous,
        accumulation,
        big_m,
        time_m,
    })
}

fn check_complete(scenario: &Scenario, ind: &IndicatorSet) -> Result<(), BuildError> {
    let cand = &ind.candidates;
    if cand.conflict.len() != cand.trains.len() {
        return Err(BuildError::MissingIndicator {
            symbol: "Θ",
            what: format!("{} of {} trains", cand.conflict.len(), cand.trains.len()),
        });
    }
    if cand.normal_count != scenario.services.len() {
        return Err(BuildError::MissingIndicator {
            symbol: "𝕌",
            what: format!("{} of {} normal services", cand.normal_count, scenario.services.len()),
        });
    }
    if ind.onboard.len() != scenario.flows.len() {
        return Err(BuildError::MissingIndicator {
            symbol: "φ",
            what: format!("{} of {} flows", ind.onboard.len(), scenario.flows.len()),
        });
    }
    if ind.arrival.len() != scenario.flows.len() {
        return Err(BuildError::MissingIndicator {
            symbol: "θ̃",
            what: format!("{} of {} flows", ind.arrival.len(), scenario.flows.len()),
        });
    }
    Ok(())
}
