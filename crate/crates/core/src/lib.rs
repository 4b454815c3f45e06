//! Branching random walks and degree-normalized contact processes on
//! Galton-Watson trees.
//!
//! The crate has two halves:
//!
//! * closed-form and certified critical-value bounds ([`bounds`], [`walk`]),
//!   which are exact, deterministic and fast;
//! * reproducible Monte Carlo of the particle systems themselves ([`brw`],
//!   [`cp`], [`mc`]) on lazily grown random trees ([`tree`]).
//!
//! Every stochastic routine takes its randomness from streams derived in
//! [`rng`] from a master seed and a trial index, so batched runs are
//! bitwise reproducible regardless of thread count.

pub mod bounds;
pub mod brw;
pub mod cp;
pub mod dist;
pub mod mc;
pub mod rng;
pub mod tree;
pub mod walk;

pub use bounds::{BoundReport, Certificate};
pub use brw::{BrwPhase, BrwState};
pub use cp::{CpCaps, CpSummary};
pub use dist::{DistributionSpec, OffspringDistribution};
pub use mc::{SurvivalEstimate, SurvivalMode, TrialPlan};
pub use tree::{TreeMode, TreeStore, VertexId};
pub use walk::DistanceChain;

/// Crate-wide error, wrapping the per-module errors.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Dist(#[from] dist::DistError),
    #[error(transparent)]
    Tree(#[from] tree::TreeError),
    #[error(transparent)]
    Walk(#[from] walk::WalkError),
    #[error(transparent)]
    Cp(#[from] cp::CpError),
    #[error(transparent)]
    Bounds(#[from] bounds::BoundsError),
    #[error(transparent)]
    Mc(#[from] mc::McError),
}
