use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{replication_seeds, sample_dataset, GeneratorConfig};
use crate::density::GenericDensity;
use crate::error::{Result, SieveError};
use crate::estimator::{fit, FitOptions, FitResult};
use crate::laguerre::{best_approx, hellinger_sq, LaguerreDensity};
use crate::transmission::Observation;

/// What the test is applied to: an existing fit, or data still to be fitted.
#[derive(Debug, Clone)]
pub enum Observed {
    Fit(Box<FitResult>),
    Data(Vec<Observation>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub h0_i: String,
    pub h0_g: String,
    pub m1: usize,
    pub m2: usize,
    /// Best Laguerre approximations of the null densities.
    pub target_i: LaguerreDensity,
    pub target_g: LaguerreDensity,
    pub observed_i: f64,
    pub observed_g: f64,
    pub sim_i: Vec<f64>,
    pub sim_g: Vec<f64>,
    /// `(1 + #{sim >= observed}) / (N + 1)` over successful simulations.
    pub p_i: f64,
    pub p_g: f64,
    pub p_joint: f64,
    /// Raw fractions `#{sim >= observed} / N`.
    pub exceed_i: f64,
    pub exceed_g: f64,
    pub exceed_joint: f64,
    pub n_sims: usize,
    pub failed: usize,
    pub failures: Vec<String>,
    pub seed: u64,
    pub sample_size: usize,
    pub options: FitOptions,
    pub version: String,
}

/// Add-one Monte-Carlo p-value and raw exceedance fraction.
pub(crate) fn add_one_p(exceed: usize, total: usize) -> (f64, f64) {
    let p = (1 + exceed) as f64 / (total + 1) as f64;
    let frac = if total == 0 {
        f64::NAN
    } else {
        exceed as f64 / total as f64
    };
    (p, frac)
}

/// Parametric bootstrap test of `H0: φ_I = h0_i, φ_G = h0_g`.
///
/// The statistics are squared Hellinger distances between the fitted
/// densities and the best degree-`m` Laguerre approximations of the null
/// densities. Null data sets are generated from `cfg` with the null
/// densities in place of the true ones; simulation `k` uses
/// `replication_seeds(cfg.seed, k)`.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_test(
    observed: &Observed,
    h0_i: &GenericDensity,
    h0_g: &GenericDensity,
    m1: usize,
    m2: usize,
    cfg: &GeneratorConfig,
    n_sims: usize,
    opts: &FitOptions,
) -> Result<BootstrapResult> {
    if n_sims == 0 {
        return Err(SieveError::Validation(
            "bootstrap needs at least one simulation".into(),
        ));
    }
    cfg.validate()?;
    let target_i = best_approx(h0_i.as_dyn(), m1)?;
    let target_g = best_approx(h0_g.as_dyn(), m2)?;
    let observed_fit = match observed {
        Observed::Fit(f) => {
            if (f.m1, f.m2) != (m1, m2) {
                return Err(SieveError::Validation(format!(
                    "fit has degrees ({}, {}) but the test asks for ({m1}, {m2})",
                    f.m1, f.m2
                )));
            }
            (**f).clone()
        }
        Observed::Data(data) => fit(data, &cfg.exposure_model()?, m1, m2, opts)?,
    };
    let observed_i = hellinger_sq(&observed_fit.phi_i_hat, &target_i)?;
    let observed_g = hellinger_sq(&observed_fit.phi_g_hat, &target_g)?;

    let null_cfg = GeneratorConfig {
        phi_i_true: h0_i.clone(),
        phi_g_true: h0_g.clone(),
        ..cfg.clone()
    };
    let em = null_cfg.exposure_model()?;
    let sims: Vec<Result<(f64, f64)>> = (0..n_sims)
        .into_par_iter()
        .map(|k| {
            let (data_seed, fit_seed) = replication_seeds(cfg.seed, k);
            let data = sample_dataset(&null_cfg.with_seed(data_seed))?;
            let opts = FitOptions {
                seed: fit_seed,
                ..opts.clone()
            };
            let f = fit(&data, &em, m1, m2, &opts)?;
            Ok((
                hellinger_sq(&f.phi_i_hat, &target_i)?,
                hellinger_sq(&f.phi_g_hat, &target_g)?,
            ))
        })
        .collect();

    let mut sim_i = Vec::with_capacity(n_sims);
    let mut sim_g = Vec::with_capacity(n_sims);
    let mut failures = Vec::new();
    for (k, s) in sims.into_iter().enumerate() {
        match s {
            Ok((a, b)) => {
                sim_i.push(a);
                sim_g.push(b);
            }
            Err(e) => failures.push(format!("simulation {k}: {e}")),
        }
    }
    let ok = sim_i.len();
    let ge_i = sim_i.iter().filter(|&&v| v >= observed_i).count();
    let ge_g = sim_g.iter().filter(|&&v| v >= observed_g).count();
    let ge_joint = sim_i
        .iter()
        .zip(&sim_g)
        .filter(|(a, b)| **a >= observed_i && **b >= observed_g)
        .count();
    let (p_i, exceed_i) = add_one_p(ge_i, ok);
    let (p_g, exceed_g) = add_one_p(ge_g, ok);
    let (p_joint, exceed_joint) = add_one_p(ge_joint, ok);
    Ok(BootstrapResult {
        h0_i: h0_i.descriptor().to_string(),
        h0_g: h0_g.descriptor().to_string(),
        m1,
        m2,
        target_i,
        target_g,
        observed_i,
        observed_g,
        sim_i,
        sim_g,
        p_i,
        p_g,
        p_joint,
        exceed_i,
        exceed_g,
        exceed_joint,
        n_sims,
        failed: failures.len(),
        failures,
        seed: cfg.seed,
        sample_size: cfg.n,
        options: opts.clone(),
        version: crate::VERSION.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_one_convention() {
        assert_eq!(add_one_p(10, 10), (1.0, 1.0));
        assert_eq!(add_one_p(0, 9), (0.1, 0.0));
        assert!(add_one_p(0, 0).1.is_nan());
    }
}
