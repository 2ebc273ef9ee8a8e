use super::{RescheduledTimetable, ServiceOutcome, Stage1Solution};
use crate::disruption::{IndicatorSet, SpatioTemporalArea};
use crate::model::{Headways, NO_VISIT};

/// Every pair of activated same-direction services, every shared station, all four gaps.
pub fn audit_headways(tt: &RescheduledTimetable, h: &Headways) -> Vec<String> {
    let act: Vec<&ServiceOutcome> = tt.activated().collect();
    let mut out = Vec::new();
    for (i, u) in act.iter().enumerate() {
        for v in &act[i + 1..] {
            if u.direction != v.direction {
                continue;
            }
            for r in 1..=u.arrival.len() as u32 {
                let gaps = [
                    ("AA", u.arr(r), v.arr(r), h.aa),
                    ("AD", u.arr(r), v.dep(r), h.ad),
                    ("DA", u.dep(r), v.arr(r), h.da),
                    ("DD", u.dep(r), v.dep(r), h.dd),
                ];
                for (tag, a, b, min) in gaps {
                    if a != NO_VISIT && b != NO_VISIT && (a - b).abs() < min {
                        out.push(format!("{} headway {} and {} at station {}: gap {} < {}", tag, u.id, v.id, r, (a - b).abs(), min));
                    }
                }
            }
        }
    }
    out
}

/// Activated services must neither run a disrupted section nor stop at a closed
/// station while the window is open.
pub fn audit_disruption(tt: &RescheduledTimetable, area: &SpatioTemporalArea) -> Vec<String> {
    let mut out = Vec::new();
    for s in tt.activated() {
        let svc = s.as_service(0);
        let order = svc.visited_stations();
        for w in order.windows(2) {
            let (lo, hi) = (w[0].min(w[1]), w[0].max(w[1]));
            if lo < area.s_begin || hi > area.s_end {
                continue;
            }
            let (d, a) = (s.dep(w[0]), s.arr(w[1]));
            if d != NO_VISIT && a != NO_VISIT && d < area.tau_end && a > area.tau_begin {
                out.push(format!("{} runs section ({}, {}) during the disruption", s.id, w[0], w[1]));
            }
        }
        for r in area.s_begin + 1..area.s_end {
            if area.inside_window(s.arr(r)) || area.inside_window(s.dep(r)) {
                out.push(format!("{} serves closed station {} during the disruption", s.id, r));
            }
        }
    }
    out
}

pub fn audit_capacity(sol: &Stage1Solution, ind: &IndicatorSet) -> Vec<String> {
    let trains = &ind.candidates.trains;
    sol.onboard_load(ind)
        .into_iter()
        .filter(|&((u, _), load)| load > trains[u].capacity)
        .map(|((u, r), load)| format!("{} carries {} at station {} above capacity {}", trains[u].id, load, r, trains[u].capacity))
        .collect()
}
