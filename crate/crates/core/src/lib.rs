//! Forced vibration of a clamped-free Euler–Bernoulli beam striking a
//! one-sided linear spring (a snubber).
//!
//! The pipeline is: [`beam_fem`] builds the Hermite-cubic mass and stiffness
//! matrices, [`contact`] adds the unilateral spring force, [`forcing`]
//! supplies the periodic excitation, [`integrator`] advances the
//! piecewise-linear system with an adaptive BDF2 scheme, [`spectral`]
//! extracts harmonic content and [`sweep`] locates nonlinear resonances.

pub mod beam_fem;
pub mod contact;
mod error;
pub mod forcing;
pub mod integrator;
pub mod spectral;
pub mod sweep;
pub mod table;

pub use beam_fem::{BeamProperties, FEModel};
pub use contact::{SystemState, UnilateralSpring};
pub use error::{Error, Result};
pub use forcing::ForcingSignal;
pub use integrator::{IntegratorConfig, Trajectory};
pub use spectral::{Spectrum, Window};
pub use sweep::SweepCurve;
