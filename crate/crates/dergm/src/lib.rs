//! File formats, fixtures, parallel drivers and command implementations
//! for `dergm-core`.

pub mod commands;
pub mod edgelist;
pub mod fixtures;
pub mod manifest;
pub mod parallel;
