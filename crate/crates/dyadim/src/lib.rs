//! Random measures on the dyadic grid of [0,1]^d.
//!
//! The crate builds probability measures as weight trees on the 2^d-ary
//! dyadic subdivision of the unit cube: every node splits its mass among its
//! children by a weight vector, either drawn uniformly from the simplex from
//! a seeded generator ([`make_random_measure`]), fixed once for all nodes
//! ([`make_product_measure`]), or listed explicitly ([`ExplicitMeasure`]).
//!
//! On top of the trees sit the dyadic ratio statistics used to estimate
//! quasi-Assouad dimensions ([`upper_ratio_stat`], [`lower_ratio_stat`],
//! [`estimate_profile`]), closed-form tail bounds for those statistics on
//! uniformly random trees ([`analytics`]), and Monte Carlo experiment
//! drivers that compare the two ([`experiment`], [`verify`]).
//!
//! Everything downstream of a seed is deterministic: weight vectors are
//! derived per node from the seed and the node path, so results never depend
//! on traversal order, thread count, or evaluation history.

#![forbid(unsafe_code)]

pub mod analytics;
pub mod dimension;
pub mod error;
pub mod experiment;
pub mod logmass;
pub mod measure;
pub mod random;
pub mod tree;
pub mod verify;

pub use dimension::{
    brute_force_oracle, estimate_profile, level_from_delta, level_from_phi, lower_ratio_stat,
    multi_level_ratio_stat, quasi_inverse, ratio_stat, upper_ratio_stat, DeltaParam, PhiLevel,
    PhiSpec, PhiTable, ProfileOptions, ProfileRow, RatioStatistic, ScaleSpec, ScheduleEntry,
    StatKind, StatOptions,
};
pub use error::{Error, Result};
pub use logmass::LogMass;
pub use measure::{
    bernoulli, lebesgue, load_explicit_measure, make_product_measure, make_random_measure,
    snapshot_measure, Continuation, ExplicitMeasure, Measure, ProductMeasure, RandomMeasure,
};
pub use random::{
    beta_cdf, ks_critical_001, ks_distance, node_key, trial_seed, NodeRng,
};
pub use tree::{central_children, cube_to_path, path_to_cube, DyadicCube, NodePath};
