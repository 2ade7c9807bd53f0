#![allow(dead_code)]

pub mod pairs;
pub mod reml;
