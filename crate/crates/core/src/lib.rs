//! Estimation of quadratic Fourier functionals of probability distributions
//! on the torus `[0, 1)^D`.
//!
//! Given samples from distributions `P` and `Q`, the crate estimates the
//! weighted semi-inner product
//!
//! ```text
//! <P, Q>_a = sum_z phi_P(z) conj(phi_Q(z)) / a_z^2
//! ```
//!
//! together with the induced squared seminorm and squared pseudometric, using
//! truncated bilinear estimators over integer frequency sets. Alongside the
//! estimators live closed-form evaluations of the matching bias, variance and
//! MSE bounds, the minimax rate table, the truncation rules, and the
//! worst-case perturbation densities behind the lower bound.
//!
//! Conventions: `psi_z(x) = exp(2 pi i <z, x>)`, so the basis is orthonormal in
//! `L^2([0,1)^D)` and Parseval holds exactly. With this scaling the spectral
//! Sobolev product equals the derivative form only up to a factor
//! `(2 pi)^{2s}`.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the command
//! line and the parallel Monte Carlo runner live in the `quadfun` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod densities;
pub mod error;
pub mod estimators;
pub mod frequency;
pub mod harness;
pub mod spectral;
mod sum;
pub mod theory;
pub mod weights;

pub use densities::{ReferenceDensity, Regime, WorstCase};
pub use error::{Error, Result};
pub use estimators::{EstimateKind, EstimateReport};
pub use frequency::{Frequency, FrequencySet, SupportRule};
pub use num_complex::Complex64;
pub use spectral::{SampleSet, SpectralProfile};
pub use theory::{RatePrediction, RateRegime};
pub use weights::{WeightFamily, WeightKind, WeightTable};
