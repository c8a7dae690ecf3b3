//! Numerical laboratory for the L_p dual Minkowski problem near the sphere,
//! posed as a Monge-Ampère Dirichlet problem in a Euclidean chart.

pub mod analysis;
pub mod barriers;
pub mod cli;
pub mod config;
pub mod error;
pub mod functionals;
pub mod geometry;
pub mod grid;
pub mod oracle;
pub mod problem;
pub mod report;
pub mod solver;

pub use error::{Error, Result};

/// Compiles and runs every code listing in the guide (`book/src/*.md`) as a
/// doc-test, so the book cannot drift out of sync with the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/solving.md")]
    mod solving {}
    #[doc = include_str!("../../../book/src/flow.md")]
    mod flow {}
    #[doc = include_str!("../../../book/src/barriers.md")]
    mod barriers {}
    #[doc = include_str!("../../../book/src/exponents.md")]
    mod exponents {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
