//! Two-stage metro disruption recovery: timetable rescheduling with passenger
//! assignment, then response-vehicle routing over a cell transmission model.

pub mod ctm;
pub mod disruption;
pub mod mapping;
pub mod model;
pub mod pipeline;
pub mod rescheduler;
pub mod synth;
