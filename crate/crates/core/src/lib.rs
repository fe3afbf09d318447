//! Distributionally robust core allocations for stochastic coalitional games.
//!
//! Coalition values are uncertain piecewise-affine functions of a random
//! vector `ξ` on a box. Each coalition only sees samples of `ξ`; its value
//! threshold is the worst-case expectation over a Wasserstein ball around
//! the empirical distribution. The allocation is the minimum-norm point of
//! the resulting core polyhedron, reported together with a finite-sample
//! confidence that it is also stable for the true distribution.
//!
//! ```
//! use std::collections::BTreeMap;
//! use drcore::ambiguity::{AmbiguityConfig, Aggregation, BallSpec, TailParams};
//! use drcore::core_set::{build_dr_core, find_allocation, check_allocation};
//! use drcore::distributions::{build_multisamples, SamplingMode, SamplingPlan, TruncatedGaussianSpec};
//! use drcore::game::GameSpec;
//! use drcore::norm::NormTag;
//! use drcore::worst_case::Engine;
//!
//! let game = GameSpec::three_agent_example(12.0)?;
//! let plan = SamplingPlan::uniform(SamplingMode::Shared, &game, 100, 42);
//! let samples = build_multisamples(&plan, &TruncatedGaussianSpec::unit_example(), &game)?;
//! let balls = AmbiguityConfig::uniform(&game, BallSpec::Radius(0.3), TailParams::default(), NormTag::OneNorm);
//! let dr = build_dr_core(&game, &samples, &balls, Engine::ClosedForm, Aggregation::Product)?;
//! let x = find_allocation(&dr.core)?;
//! assert!(check_allocation(&dr.core, &x)?.stable);
//! # Ok::<(), drcore::Error>(())
//! ```

pub mod ambiguity;
pub mod core_set;
pub mod distributions;
pub mod error;
pub mod experiment;
pub mod game;
pub mod norm;
pub mod optim;
pub mod worst_case;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/games.md")]
    mod games {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/ambiguity.md")]
    mod ambiguity {}
    #[doc = include_str!("../../../book/src/worst_case.md")]
    mod worst_case {}
    #[doc = include_str!("../../../book/src/core.md")]
    mod core {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
