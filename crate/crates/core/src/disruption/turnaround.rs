use thiserror::Error;

use super::{detect_conflict, SpatioTemporalArea};
use crate::model::{LineTopology, Minute, ServiceKind, StationId, TrainService, NO_VISIT};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TurnaroundError {
    #[error("station {station} on the disruption boundary cannot turn trains back")]
    NotTurnbackCapable { station: StationId },
    #[error("no run time for section ({from}, {to})")]
    MissingRuntime { from: StationId, to: StationId },
}

/// δ^r_{u,v} = 1: normal service `parent` turns back at `station` as candidate `child`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TurnLink {
    pub parent: usize,
    pub child: usize,
    pub station: StationId,
}

/// Times each service would run with if activated: normal services keep their
/// plan unless they conflict, in which case they stop at the boundary; candidate
/// turnaround services follow the normal ones.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    pub trains: Vec<TrainService>,
    pub normal_count: usize,
    /// Θ per train; always false for turnaround candidates.
    pub conflict: Vec<bool>,
    pub links: Vec<TurnLink>,
}

impl CandidateSet {
    pub fn is_normal(&self, u: usize) -> bool {
        u < self.normal_count
    }

    pub fn children(&self) -> std::ops::Range<usize> {
        self.normal_count..self.trains.len()
    }

    pub fn parent_of(&self, child: usize) -> Option<&TurnLink> {
        self.links.iter().find(|l| l.child == child)
    }

    pub fn child_of(&self, parent: usize) -> Option<&TurnLink> {
        self.links.iter().find(|l| l.parent == parent)
    }
}

/// Timetable of a conflicting service cut at its boundary terminal: times on the
/// operational side are kept, the terminal keeps its arrival only, all else is −1.
pub fn truncate_service(u: &TrainService, area: &SpatioTemporalArea) -> TrainService {
    let term = area.terminal(u.direction);
    let mut out = u.clone();
    for r in 1..=area.stations {
        let k = (r - 1) as usize;
        if r == term {
            out.departure[k] = NO_VISIT;
        } else if !area.in_operational_side(u.direction, r) {
            out.arrival[k] = NO_VISIT;
            out.departure[k] = NO_VISIT;
        }
    }
    out
}

/// Synthesizes one reverse-direction candidate per conflicting normal service that
/// reaches its boundary terminal. The candidate leaves the terminal `turnback`
/// minutes after the parent arrives and runs to the end of the line.
pub fn generate_turnarounds(
    services: &[TrainService],
    area: &SpatioTemporalArea,
    line: &LineTopology,
    turnback: Minute,
) -> Result<(Vec<TrainService>, Vec<TurnLink>), TurnaroundError> {
    let mut children = Vec::new();
    let mut links = Vec::new();
    for (k, u) in services.iter().enumerate() {
        if !detect_conflict(u, area) {
            continue;
        }
        let term = area.terminal(u.direction);
        let arrive = u.arr(term);
        if arrive == NO_VISIT {
            continue;
        }
        if !line.turnback_capable.contains(&term) {
            return Err(TurnaroundError::NotTurnbackCapable { station: term });
        }
        let dir = u.direction.reverse();
        let n = line.len() as usize;
        let mut arrival = vec![NO_VISIT; n];
        let mut departure = vec![NO_VISIT; n];
        let end = line.terminal(dir);
        let start = arrive + turnback;
        arrival[(term - 1) as usize] = start;
        departure[(term - 1) as usize] = start;
        let mut r = term;
        let mut t = start;
        while r != end {
            let next = dir.step(r);
            let run = line
                .runtime(r, next)
                .ok_or(TurnaroundError::MissingRuntime { from: r, to: next })?;
            let a = t + run;
            let d = if next == end { a } else { a + line.dwell(next) };
            arrival[(next - 1) as usize] = a;
            departure[(next - 1) as usize] = d;
            r = next;
            t = d;
        }
        links.push(TurnLink {
            parent: k,
            child: services.len() + children.len(),
            station: term,
        });
        children.push(TrainService {
            id: format!("{}-TB", u.id),
            direction: dir,
            arrival,
            departure,
            capacity: u.capacity,
            kind: ServiceKind::Turnaround {
                parent: k,
                turn_station: term,
            },
        });
    }
    Ok((children, links))
}

/// Candidate timetable for the normal services plus generated turnarounds.
pub fn candidate_timetable(
    services: &[TrainService],
    area: &SpatioTemporalArea,
    line: &LineTopology,
    turnback: Minute,
) -> Result<CandidateSet, TurnaroundError> {
    let (children, links) = generate_turnarounds(services, area, line, turnback)?;
    let mut trains = Vec::with_capacity(services.len() + children.len());
    let mut conflict = Vec::with_capacity(trains.capacity());
    for u in services {
        let c = detect_conflict(u, area);
        trains.push(if c { truncate_service(u, area) } else { u.clone() });
        conflict.push(c);
    }
    conflict.extend(std::iter::repeat(false).take(children.len()));
    trains.extend(children);
    Ok(CandidateSet {
        trains,
        normal_count: services.len(),
        conflict,
        links,
    })
}

