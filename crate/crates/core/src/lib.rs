pub mod coupling;
pub mod error;
mod fit;
pub mod graph;
pub mod operator;
pub mod riesz;
pub mod zoo;

pub use error::{Error, Result};
pub use fit::LogLogFit;
pub use nalgebra;
pub use num_complex;

// Every Rust block in the guide runs as a doctest.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/riesz.md")]
    mod riesz {}
    #[doc = include_str!("../../../book/src/large-coupling.md")]
    mod large_coupling {}
    #[doc = include_str!("../../../book/src/counterexample.md")]
    mod counterexample {}
    #[doc = include_str!("../../../book/src/schur.md")]
    mod schur {}
    #[doc = include_str!("../../../book/src/hypotheses.md")]
    mod hypotheses {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/zoo.md")]
    mod zoo {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
