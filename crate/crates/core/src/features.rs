//! Plug-in features of fitted densities.

use serde::{Deserialize, Serialize};

use crate::density::{Density, DEFAULT_TAIL};
use crate::error::{Result, SieveError};
use crate::estimator::FitResult;
use crate::laguerre::LaguerreDensity;
use crate::quadrature::{breakpoints, Adaptive};

/// Quantile levels reported by default.
pub const DEFAULT_PROBS: [f64; 4] = [0.3, 0.5, 0.7, 0.9];

const FEATURE_TOL: f64 = 1e-12;

/// `R0 = 1 / ∫ e^{-r t} φ_G(t) dt` (Euler-Lotka).
pub fn reproduction_number(phi_g: &LaguerreDensity, r_hat: f64) -> Result<f64> {
    Ok(1.0 / phi_g.exp_tilted_integral(r_hat)?)
}

/// Euler-Lotka reproduction number of an arbitrary generation-time
/// density, by adaptive quadrature.
pub fn reproduction_number_of(phi_g: &dyn Density, r_hat: f64) -> Result<f64> {
    if !(r_hat > -1.0) || !r_hat.is_finite() {
        return Err(SieveError::DivergentIntegral(format!(
            "growth rate {r_hat} outside (-1, ∞)"
        )));
    }
    let upper = phi_g.tail_point(DEFAULT_TAIL);
    let pts = breakpoints(0.0, upper, phi_g.kinks(upper));
    let laplace = Adaptive::with_tolerance(FEATURE_TOL)
        .integrate_pieces(|t| (-r_hat * t).exp() * phi_g.pdf(t), &pts)?;
    Ok(1.0 / laplace.value)
}

/// `P(G <= I) = ∫ F_G(i) φ_I(i) di` for independent `I ~ φ_I`, `G ~ φ_G`.
pub fn presymptomatic_prob(phi_i: &dyn Density, phi_g: &dyn Density) -> Result<f64> {
    let upper = phi_i.tail_point(DEFAULT_TAIL);
    let mut kinks = phi_i.kinks(upper);
    kinks.extend(phi_g.kinks(upper));
    let pts = breakpoints(0.0, upper, kinks);
    let p = Adaptive::with_tolerance(FEATURE_TOL)
        .integrate_pieces(|x| phi_g.cdf(x) * phi_i.pdf(x), &pts)?;
    Ok(p.value.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileEntry {
    pub p: f64,
    pub value: f64,
}

pub fn quantiles(d: &dyn Density, probs: &[f64]) -> Result<Vec<QuantileEntry>> {
    probs
        .iter()
        .map(|&p| {
            Ok(QuantileEntry {
                p,
                value: d.quantile(p)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub r0: f64,
    pub growth_rate_used: f64,
    pub quantiles_i: Vec<QuantileEntry>,
    pub quantiles_g: Vec<QuantileEntry>,
    pub presymptomatic_prob: f64,
}

fn check_probs(probs: &[f64]) -> Result<()> {
    if let Some(p) = probs.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return Err(SieveError::Domain(format!(
            "probability {p} outside (0, 1)"
        )));
    }
    Ok(())
}

/// Features of a fitted density pair.
pub fn feature_report(fit: &FitResult, r_hat: f64, probs: &[f64]) -> Result<FeatureReport> {
    features_of(&fit.phi_i_hat, &fit.phi_g_hat, r_hat, probs)
}

pub fn features_of(
    phi_i: &LaguerreDensity,
    phi_g: &LaguerreDensity,
    r_hat: f64,
    probs: &[f64],
) -> Result<FeatureReport> {
    check_probs(probs)?;
    Ok(FeatureReport {
        r0: reproduction_number(phi_g, r_hat)?,
        growth_rate_used: r_hat,
        quantiles_i: quantiles(phi_i, probs)?,
        quantiles_g: quantiles(phi_g, probs)?,
        presymptomatic_prob: presymptomatic_prob(phi_i, phi_g)?,
    })
}
