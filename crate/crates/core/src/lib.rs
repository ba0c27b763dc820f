//! Wasserstein distance from a univariate probability measure to the set of
//! Gaussian mixtures whose mixing measure lives on a compact semialgebraic
//! parameter set, computed through a hierarchy of moment relaxations.

pub mod config;
pub mod error;
pub mod extraction;
pub mod gaussmoments;
pub mod hierarchy;
pub mod polyalg;
pub mod relaxation;
pub mod sdp;
pub mod semialg;

pub use error::{Error, Result};
