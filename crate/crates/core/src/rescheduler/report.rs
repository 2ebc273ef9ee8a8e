use std::fmt::Write as _;

use super::{AccumulationSeries, Prepared, RescheduledTimetable, Stage1Solution};
use crate::model::{format_hhmm, Direction, LineTopology, Minute, Scenario, ServiceKind, NO_VISIT};

pub(crate) fn fmt_time(t: Minute) -> String {
    if t == NO_VISIT {
        "-1".into()
    } else {
        format_hhmm(t)
    }
}

pub fn timetable_csv(tt: &RescheduledTimetable) -> String {
    let mut out = String::from("service_id,direction,kind,activated,turn_station,station,arr,dep\n");
    for s in &tt.services {
        let kind = match s.kind {
            ServiceKind::Normal => "normal",
            ServiceKind::Turnaround { .. } => "turnaround",
        };
        let turn = s.turn_station.map_or("-1".to_string(), |r| r.to_string());
        for r in 1..=s.arrival.len() as u32 {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.id,
                s.direction,
                kind,
                s.activated as u8,
                turn,
                r,
                fmt_time(s.arr(r)),
                fmt_time(s.dep(r))
            );
        }
    }
    out
}

pub fn accumulation_csv(acc: &AccumulationSeries, terminals: [u32; 2]) -> String {
    let mut out = String::from("station,t,A,D,G,inst_G\n");
    for i in 0..acc.arrived.len() {
        let r = i as u32 + 1;
        for (k, &t) in acc.times.iter().enumerate() {
            let inst = if terminals.contains(&r) {
                acc.inst(r, t).unwrap_or(0).to_string()
            } else {
                String::new()
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r,
                format_hhmm(t),
                acc.arrived[i][k],
                acc.departed[i][k],
                acc.stranded[i][k],
                inst
            );
        }
    }
    out
}

pub fn station_summary_csv(acc: &AccumulationSeries, line: &LineTopology) -> String {
    let mut out = String::from("station,name,arrivals,arrivals_per_min,average_wait\n");
    let minutes = acc.times.len().max(1) as f64;
    for (i, st) in acc.stations.iter().enumerate() {
        let r = i as u32 + 1;
        let _ = writeln!(
            out,
            "{},{},{},{:.3},{:.3}",
            r,
            line.name(r),
            st.arrivals,
            st.arrivals as f64 / minutes,
            st.average_wait
        );
    }
    out
}

/// Flat (flow, station, minute, 𝒢) entries, sorted.
pub fn terminal_accumulation_rows(acc: &AccumulationSeries) -> Vec<(usize, u32, Minute, i64)> {
    let mut rows = acc.per_flow.clone();
    rows.sort();
    rows
}

pub fn stage1_summary(sol: &Stage1Solution, scenario: &Scenario, prep: &Prepared) -> String {
    let tt = &sol.timetable;
    let mut out = String::from("[stage1]\n");
    let _ = writeln!(out, "objective: {:.6}", sol.objective);
    let _ = writeln!(out, "objective big-M: {}", sol.big_m);
    let _ = writeln!(out, "time big-M: {}", sol.time_m);
    let _ = writeln!(out, "branch-and-bound nodes: {}", sol.stats.nodes);
    for dir in [Direction::Positive, Direction::Negative] {
        let st = tt.stats(dir);
        let _ = writeln!(
            out,
            "{} services: {} scheduled, {} canceled, {} truncated, {} turned back, {:.1}% rescheduled or canceled",
            dir,
            st.normal,
            st.canceled,
            st.truncated,
            st.turned,
            st.rescheduled_pct()
        );
        let _ = match st.recovery {
            Some(m) => writeln!(out, "{} recovery time: {} min", dir, m),
            None => writeln!(out, "{} recovery time: none", dir),
        };
    }
    let total: u64 = scenario.flows.iter().map(|f| f.size as u64).sum();
    let stranded: u64 = sol.assignment.iter().map(|a| a.stranded as u64).sum();
    let _ = writeln!(out, "passengers: {} total, {} assigned, {} stranded", total, total - stranded, stranded);
    let _ = writeln!(
        out,
        "terminal accumulation rate: {:.1} passengers/min",
        sol.accumulation.terminal_rate(&prep.area)
    );
    out
}
