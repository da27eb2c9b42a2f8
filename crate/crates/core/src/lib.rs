//! Quantum Boltzmann simulation of sympathetic and evaporative cooling of a
//! Bose–Fermi mixture in an isotropic harmonic trap, in the ergodic
//! approximation.
//!
//! Energies are in units of the trap quantum ħω (levels `e = 0, 1, ...` with
//! degeneracy `(e+1)(e+2)/2`), temperatures in the same units, and time in
//! the boson-fermion collision time unit `τ₀` (see [`trap::tau0`]).

pub mod error;
pub mod mbmodel;
pub mod meanfield;
pub mod observables;
pub mod ode;
pub mod qbe;
pub mod statmech;
pub mod trap;

pub use error::{Error, Result};
