//! Disruption geometry, service classification, turnaround candidates and the
//! indicator parameters consumed by the rescheduling model.

mod indicators;
mod turnaround;

pub use indicators::{build_indicators, fill_onboard, headway_compat, HeadwayConflict, IndicatorSet, PairIndicators};
pub use turnaround::{candidate_timetable, generate_turnarounds, truncate_service, CandidateSet, TurnLink, TurnaroundError};

use thiserror::Error;

use crate::model::{Direction, DisruptionSpec, LineTopology, Minute, StationId, TrainService, NO_VISIT};

/// One disrupted track section crossed with the disruption window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DisruptionUnit {
    pub from: StationId,
    pub to: StationId,
    pub tau_begin: Minute,
    pub tau_end: Minute,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpatioTemporalArea {
    pub s_begin: StationId,
    pub s_end: StationId,
    pub tau_begin: Minute,
    pub tau_end: Minute,
    pub units: Vec<DisruptionUnit>,
    /// Number of stations on the line.
    pub stations: StationId,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AreaError {
    #[error("disrupted stations {s_begin}..{s_end} do not fit a {stations}-station line")]
    Stations { s_begin: StationId, s_end: StationId, stations: StationId },
    #[error("disruption window must satisfy tau_begin < tau_end")]
    Window,
}

pub fn build_area(d: &DisruptionSpec, line: &LineTopology) -> Result<SpatioTemporalArea, AreaError> {
    if !(d.s_begin >= 1 && d.s_begin < d.s_end && d.s_end <= line.len()) {
        return Err(AreaError::Stations {
            s_begin: d.s_begin,
            s_end: d.s_end,
            stations: line.len(),
        });
    }
    if d.tau_begin >= d.tau_end {
        return Err(AreaError::Window);
    }
    let units = (d.s_begin..d.s_end)
        .map(|r| DisruptionUnit {
            from: r,
            to: r + 1,
            tau_begin: d.tau_begin,
            tau_end: d.tau_end,
        })
        .collect();
    Ok(SpatioTemporalArea {
        s_begin: d.s_begin,
        s_end: d.s_end,
        tau_begin: d.tau_begin,
        tau_end: d.tau_end,
        units,
        stations: line.len(),
    })
}

impl SpatioTemporalArea {
    pub fn inside_window(&self, t: Minute) -> bool {
        t > self.tau_begin && t < self.tau_end
    }

    /// Station where a train travelling in `dir` is truncated (ℝ_T^1 or ℝ_T^2).
    pub fn terminal(&self, dir: Direction) -> StationId {
        match dir {
            Direction::Positive => self.s_begin,
            Direction::Negative => self.s_end,
        }
    }

    pub fn terminals(&self) -> [StationId; 2] {
        [self.s_begin, self.s_end]
    }

    pub fn is_terminal(&self, r: StationId) -> bool {
        r == self.s_begin || r == self.s_end
    }

    /// ℝ_O^1 = {1..s_begin}.
    pub fn in_first_section(&self, r: StationId) -> bool {
        r >= 1 && r <= self.s_begin
    }

    /// ℝ_O^2 = {s_end..|ℝ|}.
    pub fn in_second_section(&self, r: StationId) -> bool {
        r >= self.s_end && r <= self.stations
    }

    /// Operational section reached by a train of direction `dir` before the disruption.
    pub fn in_operational_side(&self, dir: Direction, r: StationId) -> bool {
        match dir {
            Direction::Positive => self.in_first_section(r),
            Direction::Negative => self.in_second_section(r),
        }
    }

    pub fn is_open(&self, r: StationId) -> bool {
        self.in_first_section(r) || self.in_second_section(r)
    }

    pub fn open_stations(&self) -> Vec<StationId> {
        (1..=self.stations).filter(|&r| self.is_open(r)).collect()
    }

    /// ℝ_D = {s_begin..s_end}.
    pub fn disrupted_stations(&self) -> std::ops::RangeInclusive<StationId> {
        self.s_begin..=self.s_end
    }
}

/// Θ_u: some arrival or departure at a disrupted station lies strictly inside the window.
pub fn detect_conflict(u: &TrainService, area: &SpatioTemporalArea) -> bool {
    area.disrupted_stations()
        .any(|r| area.inside_window(u.arr(r)) || area.inside_window(u.dep(r)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ServiceClass {
    Before,
    Overlapping,
    After,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Classification {
    pub before: Vec<usize>,
    pub overlapping: Vec<usize>,
    pub after: Vec<usize>,
}

impl Classification {
    pub fn class_of(&self, u: usize) -> Option<ServiceClass> {
        if self.before.contains(&u) {
            Some(ServiceClass::Before)
        } else if self.overlapping.contains(&u) {
            Some(ServiceClass::Overlapping)
        } else if self.after.contains(&u) {
            Some(ServiceClass::After)
        } else {
            None
        }
    }
}

/// Splits services into 𝕌_B, 𝕌_O and 𝕌_A by the conflict test and the times at
/// each service's first visited station.
pub fn classify_services(services: &[TrainService], area: &SpatioTemporalArea) -> Classification {
    let mut out = Classification::default();
    for (k, u) in services.iter().enumerate() {
        if detect_conflict(u, area) {
            out.overlapping.push(k);
            continue;
        }
        let (a, d) = match u.origin_station() {
            Some(r) => (u.arr(r), u.dep(r)),
            None => (NO_VISIT, NO_VISIT),
        };
        if a > area.tau_end || d > area.tau_end {
            out.after.push(k);
        } else if a < area.tau_begin || d < area.tau_begin {
            out.before.push(k);
        } else {
            out.overlapping.push(k);
        }
    }
    out
}
