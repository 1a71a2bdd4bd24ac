//! Exact and Monte-Carlo relative-mixing experiments on rank-one
//! cutting-and-stacking skew products.
//!
//! The crate models a three-cut rank-one base transformation (the triadic
//! odometer or a Chacon-style variant) combinatorially as towers of
//! levels, extends it by an order-three fiber cocycle over {−1,+1}^N, and
//! computes conditional probabilities of colour events exactly through a
//! GF(2) character calculus. On top of that sit the order-2 and order-3
//! relative-mixing experiments and their Monte-Carlo cross-checks.

pub mod bits;
pub mod blockalg;
pub mod cocycle;
pub mod error;
pub mod mixstat;
pub mod rankone;
pub mod rng;
pub mod verify;

pub use blockalg::{concat, gamma, split, tau, termwise_product, ColourWord, SignBlock, YPrefix};
pub use cocycle::{
    char_run, cocycle_at, colour_run, gamma_direct, required_horizon, skew_step, ActionLabel,
    CharEngine, CharSet, CocycleAction, ColourRun, ColourStep, InversePrefixEngine,
};
pub use error::{Error, Result};
pub use mixstat::{
    event_prob_given_x, mc_check, mix2_curve, mix3_scan, pattern_prob, triple_block_census,
    DyadicProb, EventSpec, McEstimate, MixCurve, MixCurveRow, Mix3Report, Mix3Row, ResolveOptions,
    TripleCensus,
};
pub use rankone::{ClimbPosition, ConstructionSpec, ExtendPolicy, LevelPoint};
pub use rng::SplitMix64;
