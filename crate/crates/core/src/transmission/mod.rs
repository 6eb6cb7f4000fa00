//! Transmission-pair observations and their log-likelihood.
//!
//! For a pair with infector onset `S1`, infectee onset `S2`, truncated
//! window `W̃` and exponential exposure kernel `h(u|c) = e^{-r(c) u}`, the
//! likelihood contribution is, up to a constant,
//!
//! ```text
//! ∫₀^{S2} φ_G(y) ∫₀^{W̃} e^{r t} φ_I(S1 - t) φ_I(S2 - t - y) dt dy.
//! ```

mod io;
mod strategy;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::config::KeyValues;
use crate::density::Density;
use crate::error::{Result, SieveError};
use crate::quadrature::GaussLegendre;

pub use io::{read_observations, read_observations_lenient, write_observations, RecordError};
pub use strategy::{
    AutoStrategy, DirectStrategy, LikelihoodStrategy, MomentStrategy, PreparedLikelihood,
    StrategyRegistry, MOMENT_MAX_DEGREE,
};

/// One transmission pair, times in days from the start of the infector's
/// exposure window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub id: String,
    pub s1: f64,
    pub s2: f64,
    pub w_tilde: f64,
    pub location: u32,
}

impl Observation {
    pub fn new(id: impl Into<String>, s1: f64, s2: f64, w_tilde: f64, location: u32) -> Self {
        Self {
            id: id.into(),
            s1,
            s2,
            w_tilde,
            location,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| {
            Err(SieveError::InvalidObservation {
                id: self.id.clone(),
                reason,
            })
        };
        for (name, v) in [("s1", self.s1), ("s2", self.s2), ("w_tilde", self.w_tilde)] {
            if !v.is_finite() {
                return bad(format!("{name} is not finite"));
            }
            if v < 0.0 {
                return bad(format!("{name} = {v} is negative"));
            }
        }
        if self.w_tilde > self.s1 {
            return bad(format!(
                "w_tilde = {} exceeds s1 = {}",
                self.w_tilde, self.s1
            ));
        }
        Ok(())
    }
}

/// Growth rate `r(c)` of the exposure kernel `h(u|c) = e^{-r(c) u}` per
/// location; `r = 0` is the uniform kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureModel {
    pub rates: BTreeMap<u32, f64>,
}

impl ExposureModel {
    pub fn new(rates: BTreeMap<u32, f64>) -> Result<Self> {
        if let Some((c, r)) = rates.iter().find(|(_, r)| !r.is_finite()) {
            return Err(SieveError::Validation(format!(
                "growth rate {r} for location {c} is not finite"
            )));
        }
        Ok(Self { rates })
    }

    /// The same growth rate for every listed location.
    pub fn constant(locations: impl IntoIterator<Item = u32>, rate: f64) -> Result<Self> {
        Self::new(locations.into_iter().map(|c| (c, rate)).collect())
    }

    /// Reads `location.<label>.rate` entries.
    pub fn from_config(kv: &KeyValues) -> Result<Self> {
        let rates = kv.indexed("location", "rate")?;
        if rates.is_empty() {
            return Err(SieveError::Validation(
                "exposure model lists no `location.<label>.rate` entries".into(),
            ));
        }
        Self::new(rates)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_config(&KeyValues::read(path)?)
    }

    pub fn rate(&self, location: u32) -> Result<f64> {
        self.rates.get(&location).copied().ok_or_else(|| {
            SieveError::Validation(format!("no growth rate for location {location}"))
        })
    }

    /// Checks every observation and that each location has a rate.
    pub fn validate_data(&self, data: &[Observation]) -> Result<()> {
        for o in data {
            o.validate()?;
            self.rate(o.location)
                .map_err(|e| SieveError::InvalidObservation {
                    id: o.id.clone(),
                    reason: e.to_string(),
                })?;
        }
        Ok(())
    }
}

/// Exposure kernel `h(u|c)` governing the infector's infection time inside
/// its window. Only [`ExposureModel`] implements it; the likelihood code
/// relies on the exponential form.
pub trait ExposureKernel: Send + Sync {
    fn weight(&self, u: f64, location: u32) -> Result<f64>;

    /// `∫₀^w h(u|c) du`.
    fn mass(&self, w: f64, location: u32) -> Result<f64>;
}

impl ExposureKernel for ExposureModel {
    fn weight(&self, u: f64, location: u32) -> Result<f64> {
        Ok((-self.rate(location)? * u).exp())
    }

    fn mass(&self, w: f64, location: u32) -> Result<f64> {
        let r = self.rate(location)?;
        Ok(if r == 0.0 { w } else { -(-r * w).exp_m1() / r })
    }
}

/// Gauss-Legendre node counts and the likelihood floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub nodes_t: usize,
    pub nodes_y: usize,
    /// Likelihood values at or below this are replaced by it.
    pub log_floor: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes_t: 64,
            nodes_y: 64,
            log_floor: 1e-300,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_t < 8 || self.nodes_y < 8 {
            return Err(SieveError::Validation(format!(
                "quadrature needs at least 8 nodes per axis, got {}x{}",
                self.nodes_t, self.nodes_y
            )));
        }
        if !(self.log_floor > 0.0 && self.log_floor < 1.0) {
            return Err(SieveError::Validation(format!(
                "likelihood floor must lie in (0, 1), got {}",
                self.log_floor
            )));
        }
        Ok(())
    }

    pub fn floor_ln(&self) -> f64 {
        self.log_floor.ln()
    }
}

/// Largest exponent change `(r + 2) h` allowed across one outer panel; wide
/// windows are split so a single Gauss-Legendre rule resolves `e^{(r+2)t}`.
pub(crate) const PANEL_SPAN: f64 = 16.0;

/// Outer integration panels `[a, b]` covering `[0, upper]`.
pub(crate) fn outer_panels(upper: f64, rate: f64) -> Vec<(f64, f64)> {
    let count = (((rate.abs() + 2.0) * upper / PANEL_SPAN).ceil() as usize).max(1);
    let h = upper / count as f64;
    (0..count)
        .map(|i| {
            (
                i as f64 * h,
                if i + 1 == count {
                    upper
                } else {
                    (i + 1) as f64 * h
                },
            )
        })
        .collect()
}

/// Log of the likelihood integral by iterated Gauss-Legendre quadrature:
/// outer `t` on `[0, min(W̃, S2)]`, inner `y` on `[0, S2 - t]`.
pub(crate) fn obs_loglik_with_rules(
    o: &Observation,
    rate: f64,
    phi_i: &dyn Density,
    phi_g: &dyn Density,
    outer: &GaussLegendre,
    inner: &GaussLegendre,
    floor_ln: f64,
) -> f64 {
    let upper = o.w_tilde.min(o.s2);
    if !(upper > 0.0) {
        return floor_ln;
    }
    let mut total = 0.0;
    for (a, b) in outer_panels(upper, rate) {
        for (t, wt) in outer.mapped(a, b) {
            let fi = phi_i.pdf(o.s1 - t);
            if fi == 0.0 {
                continue;
            }
            let span = o.s2 - t;
            let inner_sum = inner.integrate(0.0, span, |y| phi_g.pdf(y) * phi_i.pdf(span - y));
            total += wt * (rate * t).exp() * fi * inner_sum;
        }
    }
    if total > 0.0 && total.is_finite() {
        total.ln().max(floor_ln)
    } else {
        floor_ln
    }
}

/// Log-likelihood contribution of one pair.
pub fn obs_loglik(
    o: &Observation,
    em: &ExposureModel,
    phi_i: &dyn Density,
    phi_g: &dyn Density,
    q: &QuadratureConfig,
) -> Result<f64> {
    o.validate()?;
    q.validate()?;
    let rate = em.rate(o.location)?;
    let outer = GaussLegendre::new(q.nodes_t);
    let inner = GaussLegendre::new(q.nodes_y);
    Ok(obs_loglik_with_rules(
        o,
        rate,
        phi_i,
        phi_g,
        &outer,
        &inner,
        q.floor_ln(),
    ))
}

/// Sum of [`obs_loglik`] over the data set, with compensated summation.
pub fn dataset_loglik(
    data: &[Observation],
    em: &ExposureModel,
    phi_i: &dyn Density,
    phi_g: &dyn Density,
    q: &QuadratureConfig,
) -> Result<f64> {
    em.validate_data(data)?;
    q.validate()?;
    let outer = GaussLegendre::new(q.nodes_t);
    let inner = GaussLegendre::new(q.nodes_y);
    let floor_ln = q.floor_ln();
    let mut terms = Vec::with_capacity(data.len());
    for o in data {
        let rate = em.rate(o.location)?;
        terms.push(obs_loglik_with_rules(
            o, rate, phi_i, phi_g, &outer, &inner, floor_ln,
        ));
    }
    Ok(compensated_sum(terms))
}

/// Neumaier's compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Conditional joint density of `(S1, S2, W)` at `(x1, x2, w)` given the
/// location:
/// `n(w,c) φ_W(w) ∫₀^{x2} φ_G(y) ∫₀^{min(x1,w)} h(w-t|c) φ_I(x1-t) φ_I(x2-t-y) dt dy`
/// with `n(w,c) = 1 / ∫₀^w h(u|c) du`.
#[allow(clippy::too_many_arguments)]
pub fn joint_density(
    x1: f64,
    x2: f64,
    w: f64,
    location: u32,
    kernel: &dyn ExposureKernel,
    phi_w: &dyn Density,
    phi_i: &dyn Density,
    phi_g: &dyn Density,
) -> Result<f64> {
    for v in [x1, x2, w] {
        if !v.is_finite() {
            return Err(SieveError::Domain(format!("non-finite argument {v}")));
        }
    }
    if x1 < 0.0 || x2 < 0.0 || w < 0.0 {
        return Ok(0.0);
    }
    let mass = kernel.mass(w, location)?;
    if !(mass > 0.0) {
        return Err(SieveError::DegenerateNormalizer(w));
    }
    let fw = phi_w.pdf(w);
    let upper = x1.min(w).min(x2);
    if fw == 0.0 || !(upper > 0.0) {
        return Ok(0.0);
    }
    static RULES: OnceLock<(GaussLegendre, GaussLegendre)> = OnceLock::new();
    let (outer, inner) = RULES.get_or_init(|| {
        let q = QuadratureConfig::default();
        (GaussLegendre::new(q.nodes_t), GaussLegendre::new(q.nodes_y))
    });
    let mut total = 0.0;
    for (a, b) in outer_panels(upper, 0.0) {
        for (t, wt) in outer.mapped(a, b) {
            let fi = phi_i.pdf(x1 - t);
            if fi == 0.0 {
                continue;
            }
            let h = kernel.weight(w - t, location)?;
            let span = x2 - t;
            let inner_sum = inner.integrate(0.0, span, |y| phi_g.pdf(y) * phi_i.pdf(span - y));
            total += wt * h * fi * inner_sum;
        }
    }
    Ok(fw * total / mass)
}
