use std::fmt::Write as _;

use super::{CandidateSet, SpatioTemporalArea};
use crate::model::{Direction, Headways, Minute, PassengerFlow, Scenario, StationId, TrainService, NO_VISIT};

/// θ^r_{u,v} = 1 entry: normal `normal` and candidate `child` break a minimum headway at `station`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeadwayConflict {
    pub normal: usize,
    pub child: usize,
    pub station: StationId,
}

/// Parameters of one (flow, train) pair whose directions agree (f̃ = 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairIndicators {
    pub flow: usize,
    pub train: usize,
    /// w̆: candidate arrival at the flow origin minus production time.
    pub wait: Option<Minute>,
    /// Candidate departure at the flow origin; ϑ̂ switches on from here.
    pub boarding_departure: Minute,
    /// θ̌: (time, station) where the flow has to leave a truncated train.
    pub transfer: Option<(Minute, StationId)>,
}

impl PairIndicators {
    /// w̃
    pub fn wait_ok(&self) -> bool {
        self.wait.map_or(false, |w| w >= 0)
    }

    /// Every static gate of the assignment bound is open: direction, waiting time and a departure at the origin.
    pub fn gate_feasible(&self) -> bool {
        self.wait_ok() && self.boarding_departure != NO_VISIT
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorSet {
    pub candidates: CandidateSet,
    pub headway: Vec<HeadwayConflict>,
    /// φ rows per flow: `[non-conflicting train, conflicting train]`, stations in travel order.
    pub onboard: Vec<[Vec<StationId>; 2]>,
    /// θ̃: the single (time, station) where each flow appears.
    pub arrival: Vec<(Minute, StationId)>,
    pub pairs: Vec<PairIndicators>,
    pub flow_direction: Vec<Direction>,
}

impl IndicatorSet {
    pub fn conflict(&self, u: usize) -> bool {
        self.candidates.conflict[u]
    }

    /// f̃_{u,p}
    pub fn direction_ok(&self, p: usize, u: usize) -> bool {
        self.flow_direction[p] == self.candidates.trains[u].direction
    }

    pub fn onboard_stations(&self, p: usize, u: usize) -> &[StationId] {
        &self.onboard[p][self.conflict(u) as usize]
    }

    /// φ^{u,r}_p
    pub fn phi(&self, p: usize, u: usize, r: StationId) -> bool {
        self.onboard_stations(p, u).contains(&r)
    }

    /// θ̃^{t,r}_p
    pub fn theta_tilde(&self, p: usize, t: Minute, r: StationId) -> bool {
        self.arrival[p] == (t, r)
    }

    /// ϑ̃^{t,r}_p
    pub fn vartheta_tilde(&self, p: usize, t: Minute, r: StationId) -> bool {
        let (t0, r0) = self.arrival[p];
        r == r0 && t >= t0
    }

    pub fn pair(&self, p: usize, u: usize) -> Option<&PairIndicators> {
        self.pairs
            .binary_search_by(|q| (q.flow, q.train).cmp(&(p, u)))
            .ok()
            .map(|k| &self.pairs[k])
    }

    /// θ̌^{t,r}_{p,u}
    pub fn theta_check(&self, p: usize, u: usize, t: Minute, r: StationId) -> bool {
        self.pair(p, u).and_then(|q| q.transfer) == Some((t, r))
    }

    /// ϑ̌^{t,r}_{p,u}
    pub fn vartheta_check(&self, p: usize, u: usize, t: Minute, r: StationId) -> bool {
        matches!(self.pair(p, u).and_then(|q| q.transfer), Some((t0, r0)) if r0 == r && t >= t0)
    }

    /// ϑ̂^{r,t}_{u,p}: set only at the boarding station.
    pub fn vartheta_hat(&self, p: usize, u: usize, r: StationId, t: Minute) -> bool {
        let (_, origin) = self.arrival[p];
        match self.pair(p, u) {
            Some(q) => r == origin && q.boarding_departure != NO_VISIT && t >= q.boarding_departure,
            None => false,
        }
    }

    pub fn wait(&self, p: usize, u: usize) -> Option<Minute> {
        self.pair(p, u).and_then(|q| q.wait)
    }

    pub fn headway_conflict(&self, u: usize, v: usize, r: StationId) -> bool {
        self.headway
            .iter()
            .any(|h| h.normal == u && h.child == v && h.station == r)
    }

    /// Sparse dump with columns `p,u,r,t,kind,value`; −1 marks an unused index.
    pub fn to_csv(&self, scenario: &Scenario) -> String {
        let mut out = String::from("p,u,r,t,kind,value\n");
        let tr = &self.candidates.trains;
        for (u, t) in tr.iter().enumerate() {
            if self.conflict(u) {
                let _ = writeln!(out, "-1,{},-1,-1,conflict,1", t.id);
            }
        }
        for l in &self.candidates.links {
            let _ = writeln!(out, "-1,{},{},-1,delta,{}", tr[l.parent].id, l.station, tr[l.child].id);
        }
        for h in &self.headway {
            let _ = writeln!(out, "-1,{},{},-1,headway,{}", tr[h.normal].id, h.station, tr[h.child].id);
        }
        for (p, &(t, r)) in self.arrival.iter().enumerate() {
            let _ = writeln!(out, "{},-1,{},{},theta_tilde,1", scenario.flows[p].id, r, t);
        }
        for q in self.pairs.iter().filter(|q| q.gate_feasible()) {
            let pid = &scenario.flows[q.flow].id;
            let uid = &tr[q.train].id;
            let _ = writeln!(out, "{},{},-1,-1,wait,{}", pid, uid, q.wait.unwrap_or(NO_VISIT));
            for r in self.onboard_stations(q.flow, q.train) {
                let _ = writeln!(out, "{},{},{},-1,phi,1", pid, uid, r);
            }
            let _ = writeln!(
                out,
                "{},{},{},{},vartheta_hat_from,1",
                pid, uid, self.arrival[q.flow].1, q.boarding_departure
            );
            if let Some((t, r)) = q.transfer {
                let _ = writeln!(out, "{},{},{},{},theta_check,1", pid, uid, r, t);
            }
        }
        out
    }
}

/// φ row of a flow riding a train with conflict flag `conflicting`, in travel order.
/// Empty when a conflicting train never reaches the origin.
pub fn fill_onboard(p: &PassengerFlow, conflicting: bool, area: &SpatioTemporalArea) -> Vec<StationId> {
    let mut rows = Vec::new();
    if conflicting && !area.in_operational_side(p.direction, p.origin) {
        return rows;
    }
    match p.direction {
        Direction::Positive => {
            for r in p.origin..p.destination {
                rows.push(r);
                if conflicting && r == area.s_begin {
                    break;
                }
            }
        }
        Direction::Negative => {
            for r in (p.destination + 1..=p.origin).rev() {
                rows.push(r);
                if conflicting && r == area.s_end {
                    break;
                }
            }
        }
    }
    rows
}

/// θ^r_{u,v}: true when any of the four gaps at `r` is below its minimum.
/// Events absent from either timetable are ignored.
pub fn headway_compat(u: &TrainService, v: &TrainService, r: StationId, h: &Headways) -> bool {
    let checks = [
        (u.arr(r), v.arr(r), h.aa),
        (u.arr(r), v.dep(r), h.ad),
        (u.dep(r), v.arr(r), h.da),
        (u.dep(r), v.dep(r), h.dd),
    ];
    checks
        .iter()
        .any(|&(a, b, min)| a != NO_VISIT && b != NO_VISIT && (a - b).abs() < min)
}

pub fn build_indicators(scenario: &Scenario, area: &SpatioTemporalArea, candidates: CandidateSet) -> IndicatorSet {
    let trains = &candidates.trains;
    let mut headway = Vec::new();
    for u in 0..candidates.normal_count {
        for v in candidates.children() {
            if trains[u].direction != trains[v].direction {
                continue;
            }
            for r in 1..=area.stations {
                if headway_compat(&trains[u], &trains[v], r, &scenario.headways) {
                    headway.push(HeadwayConflict {
                        normal: u,
                        child: v,
                        station: r,
                    });
                }
            }
        }
    }

    let onboard: Vec<[Vec<StationId>; 2]> = scenario
        .flows
        .iter()
        .map(|p| [fill_onboard(p, false, area), fill_onboard(p, true, area)])
        .collect();
    let arrival = scenario
        .flows
        .iter()
        .map(|p| (p.production_time, p.origin))
        .collect();

    let mut pairs = Vec::new();
    for (pi, p) in scenario.flows.iter().enumerate() {
        for (ui, u) in trains.iter().enumerate() {
            if u.direction != p.direction {
                continue;
            }
            let a = u.arr(p.origin);
            let wait = (a != NO_VISIT).then(|| a - p.production_time);
            let conflicting = candidates.conflict[ui];
            let transfer = if conflicting {
                let term = area.terminal(u.direction);
                let beyond = match p.direction {
                    Direction::Positive => p.destination > term,
                    Direction::Negative => p.destination < term,
                };
                let at = u.arr(term);
                (beyond && at != NO_VISIT && onboard[pi][1].contains(&term)).then_some((at, term))
            } else {
                None
            };
            pairs.push(PairIndicators {
                flow: pi,
                train: ui,
                wait,
                boarding_departure: u.dep(p.origin),
                transfer,
            });
        }
    }

    IndicatorSet {
        flow_direction: scenario.flows.iter().map(|p| p.direction).collect(),
        candidates,
        headway,
        onboard,
        arrival,
        pairs,
    }
}
