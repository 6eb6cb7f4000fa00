//! Sieve maximum-likelihood estimation of incubation-period and
//! generation-time densities from transmission pairs.
//!
//! Densities are modelled as `φ_θ(x) = e^{-x} (Σ_k θ_k L_k(x))^2` with unit
//! coefficient vectors `θ` ([`laguerre`]). Pairs of symptom onsets and
//! exposure windows ([`transmission`]) are fitted by multi-start
//! Nelder-Mead over polar angles ([`estimator`]); fitted densities feed plug-in
//! features ([`features`]), and [`simulator`] provides data generation,
//! Monte-Carlo studies and a parametric bootstrap test.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod density;
pub mod error;
pub mod estimator;
pub mod features;
pub mod laguerre;
pub mod optim;
pub mod quadrature;
pub mod rng;
pub mod simulator;
pub mod transmission;

pub use density::{Density, DensityRegistry, GenericDensity};
pub use error::{Result, SieveError};
pub use estimator::{bic, fit, select_model, FitOptions, FitResult};
pub use laguerre::{best_approx, hellinger_sq, rho_alpha, LaguerreDensity};
pub use transmission::{ExposureModel, Observation, QuadratureConfig};

/// Library version embedded in serialized outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
