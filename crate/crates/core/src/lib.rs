//! Discount rates and expected consumption growth for a logistically bounded
//! economy with a fluctuating intrinsic growth rate.

pub mod cli;
pub mod empirics;
pub mod error;
pub mod logistic;
pub mod montecarlo;
pub mod quadrature;
pub mod rates;
pub mod term_structure;

pub use error::{Error, Result};
pub use logistic::{LogisticParams, UtilityParams};
pub use rates::RateModel;
pub use term_structure::{GrowthSpec, Metadata, Regime, TermStructure};

// Guide snippets run as doc-tests so the book cannot drift from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/logistic.md")]
    mod logistic {}
    #[doc = include_str!("../../../book/src/fluctuations.md")]
    mod fluctuations {}
    #[doc = include_str!("../../../book/src/term-structure.md")]
    mod term_structure {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/empirics.md")]
    mod empirics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
