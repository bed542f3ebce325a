pub mod analysis;
pub mod calibration;
pub mod demand;
pub mod equilibrium;
pub mod error;
pub mod io;
pub mod market;
pub mod metrics;
pub mod pipeline;
pub mod predictors;
pub mod report;
pub mod simulation;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/market.md")]
    mod market {}
    #[doc = include_str!("../../../book/src/demand.md")]
    mod demand {}
    #[doc = include_str!("../../../book/src/equilibrium.md")]
    mod equilibrium {}
    #[doc = include_str!("../../../book/src/predictors.md")]
    mod predictors {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    mod calibration {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
