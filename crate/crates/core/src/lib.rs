//! Gaussian-state quantum metrology for a cavity mode coupled to a magnon mode.
//!
//! The crate is organised bottom-up:
//!
//! * [`gaussian`]: one- and two-mode Gaussian states, the displaced squeezed
//!   thermal parameterisation, photon number and entanglement entropy.
//! * [`fisher`]: quantum and classical Fisher information in terms of the
//!   standard-form parameters, plus a finite-difference derivative engine.
//! * [`rwa`]: closed-form dissipative dynamics under the rotating-wave
//!   Hamiltonian.
//! * [`critical`]: beyond-RWA dynamics in the normal phase, close to the
//!   superradiant critical point.
//! * [`oracles`]: brute-force Fock-space and moment-equation integrators used
//!   to validate the closed forms.
//! * [`sweep`]: parameter sweeps, peak location and log–log exponent fits.
//!
//! Units: ħ = 1 and the gyromagnetic ratio is 1, so every frequency and rate
//! shares one unit and times are measured in its inverse.

pub mod critical;
pub mod error;
pub mod fisher;
pub mod gaussian;
pub mod oracles;
pub mod rwa;
pub mod sweep;

pub use critical::{BogoliubovData, CriticalModel, SpecialTimeFisher};
pub use error::{Error, Result};
pub use fisher::{FisherResult, ParamDerivatives};
pub use gaussian::{GaussianState, StandardForm};
pub use rwa::{EvolutionFactors, RwaModel};
pub use sweep::{FitResult, SweepRecord};

pub use num_complex::Complex64;
