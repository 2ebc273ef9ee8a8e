#![allow(dead_code)]

pub mod ctm_oracle;
pub mod disruption_oracle;
pub mod highs;
pub mod stage1_oracle;
