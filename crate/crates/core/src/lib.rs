//! Effective dimensions of classical energy shells in the Dicke model.
//!
//! The crate covers the whole pipeline from the truncated quantum Hamiltonian
//! to phase-space quantities:
//!
//! * [`model`] builds and diagonalizes the Dicke Hamiltonian in the
//!   `|n⟩⊗|j,m⟩` basis, with parity bookkeeping and an on-disk cache.
//! * [`classical`] holds the classical Hamiltonian, Monte Carlo samples of
//!   energy shells and the semiclassical density of states.
//! * [`coherent`] evaluates Glauber⊗Bloch coherent-state amplitudes and the
//!   coherent-state energy width `σ_x`.
//! * [`husimi`] computes shell averages of eigenstate Husimi functions.
//! * [`ensembles`] builds random states with prescribed energy profiles and
//!   measures their dimensionality.
//! * [`effdim`] gives the effective dimension `√(2π) ν(ε) σ̄_c(ε)`.
//! * [`participation`] compares dimensionality against the participation ratio.

pub mod classical;
pub mod coherent;
pub mod effdim;
pub mod ensembles;
mod error;
pub mod husimi;
pub mod model;
pub mod participation;
pub mod rng;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
