//! Semiclassical simulation of atoms self-organizing in a transversely
//! pumped optical cavity, with a one-dimensional mean-field model and the
//! closed-form threshold estimates that go with it.
//!
//! Units: γ = ħ = 1, positions are stored as phases kx and kz, momenta in ħk.

pub mod analytics;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod integrator;
pub mod meanfield;
pub mod model;
pub mod observables;
pub mod stats;

pub use error::{Error, Result};
pub use model::{derive_params, DerivedParams, PhysicalParams};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/parameters.md")]
    mod parameters {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/integrator.md")]
    mod integrator {}
    #[doc = include_str!("../../../book/src/observables.md")]
    mod observables {}
    #[doc = include_str!("../../../book/src/meanfield.md")]
    mod meanfield {}
    #[doc = include_str!("../../../book/src/thresholds.md")]
    mod thresholds {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
