#![doc = include_str!("../../../book/src/introduction.md")]

pub mod certifier;
pub mod dense;
pub mod discretization;
pub mod entropy;
pub mod equilibrium;
pub mod error;
pub mod geometry;
pub mod model;
pub mod network;
pub mod sparse;
pub mod timestepper;

pub use error::{Error, Result};

/// Version tag embedded in every exported artifact.
pub const SCHEMA_VERSION: u32 = 1;

/// Runs dense and sparse factorizations on the calling thread, which makes
/// results bit-for-bit reproducible across machines with different core counts.
pub fn use_sequential_linear_algebra() {
    faer::set_global_parallelism(faer::Par::Seq);
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/equilibria.md")]
    mod equilibria {}
    #[doc = include_str!("../../../book/src/entropy.md")]
    mod entropy {}
    #[doc = include_str!("../../../book/src/networks.md")]
    mod networks {}
    #[doc = include_str!("../../../book/src/certificates.md")]
    mod certificates {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
