//! Densities on `[0, ∞)` and the registry of named parametric families.
//!
//! Every density used by the estimator (true data-generating laws, null
//! hypotheses, fitted Laguerre densities) is reached through the [`Density`]
//! trait. Parametric families are registered by name in a
//! [`DensityRegistry`] and built from `name:param,param` descriptors.

mod families;
mod registry;

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, SieveError};

pub use families::{Exponential, LogNormal, Weibull};
pub use registry::{DensityFamily, DensityRegistry};

/// Tail mass used to pick finite integration ranges.
pub const DEFAULT_TAIL: f64 = 1e-14;

/// Absolute tolerance used when inverting distribution functions.
const QUANTILE_CDF_TOL: f64 = 1e-10;

/// A probability density supported on `[0, ∞)`.
pub trait Density: Send + Sync + fmt::Debug {
    fn pdf(&self, x: f64) -> f64;

    fn cdf(&self, x: f64) -> f64;

    fn sf(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// Smallest `x` with `cdf(x) >= p`.
    fn quantile(&self, p: f64) -> Result<f64> {
        bisect_quantile(|x| self.cdf(x), p)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.random();
        self.quantile(u.clamp(1e-300, 1.0 - 1e-16)).unwrap_or(0.0)
    }

    /// Points in `(0, upper)` where `sqrt(pdf)` is not smooth or the density
    /// vanishes. Integrators split at these points.
    fn kinks(&self, _upper: f64) -> Vec<f64> {
        Vec::new()
    }

    /// A point beyond which the survival function is below `tail`.
    fn tail_point(&self, tail: f64) -> f64 {
        let mut x = 1.0;
        while self.sf(x) > tail && x < 1e6 {
            x *= 1.5;
        }
        x
    }

    fn descriptor(&self) -> Descriptor;
}

/// Family name plus parameter list, printed as `name:p1,p2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub family: String,
    pub params: Vec<f64>,
}

impl Descriptor {
    pub fn new(family: impl Into<String>, params: Vec<f64>) -> Self {
        Self {
            family: family.into(),
            params,
        }
    }

    /// Splits `name:p1,p2` into the family name and the raw parameter text.
    pub fn split(text: &str) -> Result<(&str, &str)> {
        let text = text.trim();
        match text.split_once(':') {
            Some((name, params)) => Ok((name.trim(), params.trim())),
            None if !text.is_empty() => Ok((text, "")),
            None => Err(SieveError::Parse("empty density descriptor".into())),
        }
    }

    pub fn parse_params(params: &str) -> Result<Vec<f64>> {
        if params.is_empty() {
            return Ok(Vec::new());
        }
        params
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| SieveError::Parse(format!("invalid density parameter `{p}`")))
            })
            .collect()
    }
}

impl fmt::Display for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family)?;
        for (i, p) in self.params.iter().enumerate() {
            let sep = if i == 0 { ':' } else { ',' };
            write!(f, "{sep}{p}")?;
        }
        Ok(())
    }
}

/// Shared handle to any [`Density`], with its descriptor.
///
/// Serializes as its descriptor string and deserializes through
/// [`DensityRegistry::with_builtins`].
#[derive(Clone)]
pub struct GenericDensity(Arc<dyn Density>);

impl GenericDensity {
    pub fn new<D: Density + 'static>(density: D) -> Self {
        Self(Arc::new(density))
    }

    pub fn from_arc(density: Arc<dyn Density>) -> Self {
        Self(density)
    }

    pub fn as_dyn(&self) -> &dyn Density {
        self.0.as_ref()
    }

    pub fn parse(text: &str) -> Result<Self> {
        DensityRegistry::with_builtins().parse(text)
    }
}

impl Deref for GenericDensity {
    type Target = dyn Density;

    fn deref(&self) -> &Self::Target {
        self.0.as_ref()
    }
}

impl fmt::Debug for GenericDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GenericDensity({})", self.0.descriptor())
    }
}

impl Serialize for GenericDensity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.descriptor().to_string())
    }
}

impl<'de> Deserialize<'de> for GenericDensity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        GenericDensity::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Bracketing plus bisection on a nondecreasing distribution function.
pub(crate) fn bisect_quantile<F: Fn(f64) -> f64>(cdf: F, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(SieveError::Domain(format!(
            "quantile probability {p} outside (0, 1)"
        )));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while cdf(hi) < p {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(SieveError::Domain(format!(
                "quantile {p} not bracketed below 1e12"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if cdf(mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1e-3) && (cdf(hi) - p).abs() <= QUANTILE_CDF_TOL {
            break;
        }
    }
    Ok(hi)
}
