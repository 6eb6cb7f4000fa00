use std::path::Path;

use serde::{Deserialize, Serialize};

use super::polynomial::{laguerre_all, laguerre_series, laguerre_square, MAX_DEGREE};
use super::sphere::canonicalize_sign;
use crate::density::{bisect_quantile, Density, Descriptor};
use crate::error::{Result, SieveError};
use crate::quadrature::Adaptive;

/// Degrees up to this use closed forms from the Laguerre expansion of
/// `p(x)^2`; above it the expansion loses accuracy and quadrature is used.
pub const CLOSED_FORM_MAX_DEGREE: usize = 20;

const NORM_TOL: f64 = 1e-12;
const QUAD_TOL: f64 = 1e-12;

/// Density `1(x >= 0) e^{-x} (Σ_k θ_k L_k(x))^2` with `‖θ‖₂ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LaguerreSpec", into = "LaguerreSpec")]
pub struct LaguerreDensity {
    theta: Vec<f64>,
    /// `α_a` with `p(x)^2 = Σ_a α_a L_a(x)`.
    square: Option<Vec<f64>>,
}

/// Serialized form: `{"m": .., "theta": [..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaguerreSpec {
    pub m: usize,
    pub theta: Vec<f64>,
}

impl TryFrom<LaguerreSpec> for LaguerreDensity {
    type Error = SieveError;

    fn try_from(spec: LaguerreSpec) -> Result<Self> {
        if spec.theta.len() != spec.m + 1 {
            return Err(SieveError::Validation(format!(
                "degree {} needs {} coefficients, got {}",
                spec.m,
                spec.m + 1,
                spec.theta.len()
            )));
        }
        LaguerreDensity::new(spec.theta)
    }
}

impl From<LaguerreDensity> for LaguerreSpec {
    fn from(d: LaguerreDensity) -> Self {
        LaguerreSpec {
            m: d.degree(),
            theta: d.theta,
        }
    }
}

impl LaguerreDensity {
    /// Requires a unit-norm coefficient vector (within 1e-12).
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(SieveError::Domain("coefficient vector is empty".into()));
        }
        if theta.len() > MAX_DEGREE + 1 {
            return Err(SieveError::UnsupportedDegree {
                degree: theta.len() - 1,
                max: MAX_DEGREE,
            });
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(SieveError::Validation("non-finite coefficient".into()));
        }
        let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(SieveError::Validation(format!(
                "coefficient vector must have unit norm, got {norm}"
            )));
        }
        Ok(Self::build(theta))
    }

    /// Normalizes `v` to unit length first.
    pub fn from_unnormalized(v: &[f64]) -> Result<Self> {
        let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(SieveError::Domain(format!(
                "cannot normalize coefficient vector with norm {norm}"
            )));
        }
        Self::new(v.iter().map(|t| t / norm).collect())
    }

    /// Unit-rate exponential, `θ = (1)`.
    pub fn exponential() -> Self {
        Self::build(vec![1.0])
    }

    /// Builds from a vector known to be unit norm (e.g. from the polar map).
    pub(crate) fn build(theta: Vec<f64>) -> Self {
        let square = (theta.len() <= CLOSED_FORM_MAX_DEGREE + 1).then(|| laguerre_square(&theta));
        Self { theta, square }
    }

    pub fn degree(&self) -> usize {
        self.theta.len() - 1
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// `Σ θ_k L_k(x)`.
    pub fn polynomial(&self, x: f64) -> f64 {
        laguerre_series(&self.theta, x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let p = self.polynomial(x);
        (-x).exp() * p * p
    }

    pub fn negated(&self) -> Self {
        Self::build(self.theta.iter().map(|t| -t).collect())
    }

    /// Same density with the first nonzero coefficient made nonnegative.
    pub fn canonical(&self) -> Self {
        let mut theta = self.theta.clone();
        canonicalize_sign(&mut theta);
        Self::build(theta)
    }

    /// `P(X <= x)`, from `∫₀^x e^{-t} L_a(t) dt = e^{-x} (L_{a-1}(x) - L_a(x))`
    /// for `a >= 1`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let Some(alpha) = &self.square else {
            return (1.0 - self.survival(x)).clamp(0.0, 1.0);
        };
        let mut l = vec![0.0; alpha.len()];
        laguerre_all(x, &mut l);
        let body: f64 = (1..alpha.len()).map(|a| alpha[a] * (l[a - 1] - l[a])).sum();
        (-alpha[0] * (-x).exp_m1() + (-x).exp() * body).clamp(0.0, 1.0)
    }

    fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match &self.square {
            Some(alpha) => {
                let mut l = vec![0.0; alpha.len()];
                laguerre_all(x, &mut l);
                let body: f64 = (0..alpha.len())
                    .map(|a| l[a] * (alpha[a] - alpha.get(a + 1).copied().unwrap_or(0.0)))
                    .sum();
                ((-x).exp() * body).clamp(0.0, 1.0)
            }
            None => {
                // mass on [x, x + 200] plus a negligible remainder
                let mass = Adaptive::with_tolerance(QUAD_TOL)
                    .integrate(|t| self.eval(t), x, x + 200.0)
                    .map(|r| r.value)
                    .unwrap_or_else(|e| match e {
                        SieveError::Accuracy { estimate, .. } => estimate,
                        _ => f64::NAN,
                    });
                mass.clamp(0.0, 1.0)
            }
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        bisect_quantile(|x| self.cdf(x), p)
    }

    /// `∫₀^∞ e^{-r t} φ_θ(t) dt`, finite for `r > -1`.
    pub fn exp_tilted_integral(&self, r: f64) -> Result<f64> {
        if !(r > -1.0) {
            return Err(SieveError::DivergentIntegral(format!(
                "exponential tilt with rate {r} <= -1"
            )));
        }
        match &self.square {
            // ∫₀^∞ e^{-(1+r)t} L_a(t) dt = r^a / (1+r)^{a+1}
            Some(alpha) => {
                let q = r / (1.0 + r);
                let mut pow = 1.0 / (1.0 + r);
                let mut acc = 0.0;
                for a in alpha {
                    acc += a * pow;
                    pow *= q;
                }
                Ok(acc)
            }
            None => {
                let upper = (200.0 + 4.0 * self.degree() as f64) / (1.0 + r);
                let res = Adaptive::with_tolerance(QUAD_TOL).integrate(
                    |t| (-r * t).exp() * self.eval(t),
                    0.0,
                    upper,
                )?;
                Ok(res.value)
            }
        }
    }

    /// Sign changes of the polynomial factor in `(0, upper)`.
    pub fn roots(&self, upper: f64) -> Vec<f64> {
        if self.degree() == 0 || !(upper > 0.0) {
            return Vec::new();
        }
        let steps = 4096usize;
        let h = upper / steps as f64;
        let mut roots = Vec::new();
        let mut x0 = 0.0;
        let mut p0 = self.polynomial(0.0);
        for i in 1..=steps {
            let x1 = i as f64 * h;
            let p1 = self.polynomial(x1);
            if p0 == 0.0 && x0 > 0.0 {
                roots.push(x0);
            } else if p0 * p1 < 0.0 {
                let (mut lo, mut hi, mut plo) = (x0, x1, p0);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let pm = self.polynomial(mid);
                    if pm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if (pm < 0.0) == (plo < 0.0) {
                        lo = mid;
                        plo = pm;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 * hi {
                        break;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            x0 = x1;
            p0 = p1;
        }
        roots
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| SieveError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

impl Density for LaguerreDensity {
    fn pdf(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        LaguerreDensity::cdf(self, x)
    }

    fn sf(&self, x: f64) -> f64 {
        self.survival(x)
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        LaguerreDensity::quantile(self, p)
    }

    fn kinks(&self, upper: f64) -> Vec<f64> {
        self.roots(upper)
    }

    fn descriptor(&self) -> Descriptor {
        Descriptor::new("laguerre", self.theta.clone())
    }
}
