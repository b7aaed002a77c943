//! Degeneracy-restricted exponential random graph models.
//!
//! The support of a DERGM is the set of graphs on `n` labelled vertices whose
//! degeneracy is at most `k`. This crate holds the graph type, exact
//! enumeration for small `n`, samplers for the support, Metropolis chains for
//! the model, MCMC maximum likelihood, and the 2D geometry used in
//! diagnostics. It is `no_std` with `alloc`; parallel drivers live elsewhere.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod counting;
pub mod degeneracy;
pub mod enumeration;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod graph;
pub mod linalg;
pub mod mcmc;
pub mod samplers;

pub use counting::{count_well_ordered, log_sum_exp, LogCount};
pub use degeneracy::{degeneracy, is_within_degeneracy, DegeneracyResult};
pub use error::{Error, Result};
pub use graph::{change_stats, compute_stats, Graph, Statistic, StatisticSet, SuffStats};
