//! Spin textures on rotating two-dimensional ion crystals.
//!
//! The crate models a single-particle drive that imprints a radial spin
//! texture on every ion of a Penning-trap crystal, simulates three-axis
//! projective readout, and computes topological diagnostics (discrete
//! winding number, order parameter, fidelities, curve fits) together with a
//! spin-echo dephasing model.
//!
//! All algorithms are `no_std` with `alloc`. Randomness comes from ChaCha
//! streams derived from a single `u64` seed (see [`rng`]), so every result is
//! reproducible and independent of how callers schedule the work.
//!
//! Units: lengths in µm, times in s, angular frequencies in rad/s, angles in
//! rad, magnetic fields in nT.
#![no_std]
#![forbid(unsafe_code)]
#![warn(missing_docs)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod diagnostics;
pub mod dynamics;
mod error;
pub mod fit;
pub mod geometry;
pub mod measurement;
pub mod noise;
mod ode;
pub mod protocols;
pub mod rng;
pub mod spin;
pub mod triangulation;
mod vector;

pub use error::{Error, Result};
pub use geometry::{generate_crystal, Ion, IonCrystal};
pub use spin::{Basis, BlochField, PulseOp};
pub use vector::{Quaternion, Vec3};
