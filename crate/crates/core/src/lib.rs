//! Two-excitation spectra of a periodic atom array chirally coupled to a
//! waveguide.
//!
//! The long-range waveguide-mediated coupling of the pair problem at fixed
//! center-of-mass momentum `K` is rewritten as a tight-binding chain with
//! second-neighbor hopping and edge defects. Discrete pair states (bound,
//! antibound and resonance) are then the roots of a degree-8 polynomial in
//! the Bloch factor `z`, reconstructed into full eigenstates and classified.
//!
//! All energies are per-photon detunings from the atomic resonance, in the
//! same units as the `gamma_1d` passed to [`model::ModelParams`].
//!
//! The crate is `no_std` and only needs `alloc`. Dense diagonalization,
//! file formats and the command line live in the companion `wqed` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod asymptotics;
pub mod error;
pub mod kernel;
pub mod model;
pub mod poly;
pub mod solver;
pub mod sweep;

pub use num_complex::Complex64 as C64;

pub use error::{Denominator, Error, Result};
pub use kernel::{CoeffParts, HoppingCoeffs, RelativeWave};
pub use model::{BandPair, ContinuumBands, EnergyRegion, ModelParams, PairMomentum};
pub use solver::{PairEigenstate, SolverOptions, StateClass};
pub use sweep::{Branch, EpResult, KGrid, SweepResult};
