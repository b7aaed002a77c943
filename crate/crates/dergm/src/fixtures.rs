//! Datasets shipped with the crate.

use crate::edgelist::{parse, EdgeList, LabelMode, ParseOptions};

/// Padgett's Florentine marriage network: 16 families, 20 ties.
pub const FLORENTINE: &str = include_str!("../fixtures/florentine.edges");
/// Sampson's monastery liking ties at T4, symmetrised: 18 monks, 41 ties.
pub const SAMPSON: &str = include_str!("../fixtures/sampson.edges");
/// Sparse synthetic graph, 200 vertices, degeneracy 3.
pub const SYNTHETIC_200: &str = include_str!("../fixtures/synthetic200.edges");

pub fn florentine() -> EdgeList {
    parse(FLORENTINE, ParseOptions { one_indexed: false, labels: LabelMode::Names }).expect("valid fixture")
}

pub fn sampson() -> EdgeList {
    parse(SAMPSON, ParseOptions { one_indexed: true, labels: LabelMode::Numeric }).expect("valid fixture")
}

pub fn synthetic_200() -> EdgeList {
    parse(SYNTHETIC_200, ParseOptions::default()).expect("valid fixture")
}
