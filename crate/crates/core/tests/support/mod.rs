#![allow(dead_code)]

pub mod comparison_oracle;
pub mod fixtures;
