//! Interchangeable evaluators of the data-set log-likelihood.
//!
//! The estimator evaluates the likelihood thousands of times for the same
//! data, so each strategy first prepares the data for fixed degrees and
//! then evaluates coefficient vectors cheaply.
//!
//! * `direct`: iterated Gauss-Legendre quadrature of the densities, as in
//!   [`obs_loglik`](super::obs_loglik). Works for every degree.
//! * `moment`: exact in the inner integral for Laguerre densities. Writing
//!   `φ(x) = e^{-x} A(x)` with polynomial `A = p^2`, the exponentials in the
//!   integrand combine to `e^{(r+2)t - S1 - S2}` and the inner integral is
//!   the polynomial convolution `K(L) = ∫₀^L B(y) A_I(L - y) dy`. The outer
//!   integral is then a bilinear form in the Laguerre coefficients of `A_I`
//!   and `K`, whose matrix of weighted moments is precomputed per
//!   observation.
//! * `auto`: `moment` for low degrees, `direct` otherwise.

use std::collections::BTreeMap;
use std::fmt;

use super::{
    compensated_sum, obs_loglik_with_rules, outer_panels, ExposureModel, Observation,
    QuadratureConfig,
};
use crate::error::{Result, SieveError};
use crate::laguerre::polynomial::{laguerre_all, laguerre_square};
use crate::laguerre::LaguerreDensity;
use crate::quadrature::GaussLegendre;

/// Highest degree handled by the moment strategy. The bilinear form loses
/// digits to cancellation as the degree grows, about 1e-8 in the
/// log-likelihood at this cap.
pub const MOMENT_MAX_DEGREE: usize = 6;

/// Log-likelihood of a fixed data set for fixed degrees.
pub trait PreparedLikelihood: Send + Sync {
    /// Per-observation terms for unit coefficient vectors `theta_i`,
    /// `theta_g` of the prepared degrees.
    fn obs_logliks(&self, theta_i: &[f64], theta_g: &[f64]) -> Vec<f64>;

    fn loglik(&self, theta_i: &[f64], theta_g: &[f64]) -> f64 {
        compensated_sum(self.obs_logliks(theta_i, theta_g))
    }
}

pub trait LikelihoodStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn supports(&self, m1: usize, m2: usize) -> bool;

    fn prepare(
        &self,
        data: &[Observation],
        em: &ExposureModel,
        m1: usize,
        m2: usize,
        q: &QuadratureConfig,
    ) -> Result<Box<dyn PreparedLikelihood>>;
}

fn check_inputs(data: &[Observation], em: &ExposureModel, q: &QuadratureConfig) -> Result<()> {
    em.validate_data(data)?;
    q.validate()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DirectStrategy;

struct DirectPrepared {
    data: Vec<(Observation, f64)>,
    outer: GaussLegendre,
    inner: GaussLegendre,
    floor_ln: f64,
}

impl PreparedLikelihood for DirectPrepared {
    fn obs_logliks(&self, theta_i: &[f64], theta_g: &[f64]) -> Vec<f64> {
        let phi_i = LaguerreDensity::build(theta_i.to_vec());
        let phi_g = LaguerreDensity::build(theta_g.to_vec());
        self.data
            .iter()
            .map(|(o, rate)| {
                obs_loglik_with_rules(
                    o,
                    *rate,
                    &phi_i,
                    &phi_g,
                    &self.outer,
                    &self.inner,
                    self.floor_ln,
                )
            })
            .collect()
    }
}

impl LikelihoodStrategy for DirectStrategy {
    fn name(&self) -> &'static str {
        "direct"
    }

    fn supports(&self, _m1: usize, _m2: usize) -> bool {
        true
    }

    fn prepare(
        &self,
        data: &[Observation],
        em: &ExposureModel,
        _m1: usize,
        _m2: usize,
        q: &QuadratureConfig,
    ) -> Result<Box<dyn PreparedLikelihood>> {
        check_inputs(data, em, q)?;
        let data = data
            .iter()
            .map(|o| Ok((o.clone(), em.rate(o.location)?)))
            .collect::<Result<_>>()?;
        Ok(Box::new(DirectPrepared {
            data,
            outer: GaussLegendre::new(q.nodes_t),
            inner: GaussLegendre::new(q.nodes_y),
            floor_ln: q.floor_ln(),
        }))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MomentStrategy;

struct MomentTerm {
    /// Log of the factor pulled out of the weights.
    offset: f64,
    /// `M[a][n] = Σ_j W_j L_a(S1 - t_j) L_n(S2 - t_j)`, row-major.
    moments: Vec<f64>,
}

struct MomentPrepared {
    m1: usize,
    m2: usize,
    terms: Vec<Option<MomentTerm>>,
    floor_ln: f64,
}

impl MomentPrepared {
    fn cols(&self) -> usize {
        2 * self.m1 + 2 * self.m2 + 2
    }

    /// Laguerre coefficients of `A_I = p_I^2` and of
    /// `K(L) = ∫₀^L B(y) A_I(L-y) dy`, using
    /// `∫₀^x L_a(t) L_b(x-t) dt = L_{a+b}(x) - L_{a+b+1}(x)`.
    fn polynomials(&self, theta_i: &[f64], theta_g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let a = laguerre_square(theta_i);
        let b = laguerre_square(theta_g);
        let mut k = vec![0.0; self.cols()];
        for (i, bi) in b.iter().enumerate() {
            for (j, aj) in a.iter().enumerate() {
                let v = bi * aj;
                k[i + j] += v;
                k[i + j + 1] -= v;
            }
        }
        (a, k)
    }
}

impl PreparedLikelihood for MomentPrepared {
    fn obs_logliks(&self, theta_i: &[f64], theta_g: &[f64]) -> Vec<f64> {
        debug_assert_eq!(theta_i.len(), self.m1 + 1);
        debug_assert_eq!(theta_g.len(), self.m2 + 1);
        let (a, k) = self.polynomials(theta_i, theta_g);
        let cols = k.len();
        self.terms
            .iter()
            .map(|term| {
                let Some(term) = term else {
                    return self.floor_ln;
                };
                let mut s = 0.0;
                for (row, ai) in term.moments.chunks_exact(cols).zip(&a) {
                    let dot: f64 = row.iter().zip(&k).map(|(m, kk)| m * kk).sum();
                    s += ai * dot;
                }
                if s > 0.0 && s.is_finite() {
                    (term.offset + s.ln()).max(self.floor_ln)
                } else {
                    self.floor_ln
                }
            })
            .collect()
    }
}

impl LikelihoodStrategy for MomentStrategy {
    fn name(&self) -> &'static str {
        "moment"
    }

    fn supports(&self, m1: usize, m2: usize) -> bool {
        m1 <= MOMENT_MAX_DEGREE && m2 <= MOMENT_MAX_DEGREE
    }

    fn prepare(
        &self,
        data: &[Observation],
        em: &ExposureModel,
        m1: usize,
        m2: usize,
        q: &QuadratureConfig,
    ) -> Result<Box<dyn PreparedLikelihood>> {
        if !self.supports(m1, m2) {
            return Err(SieveError::UnsupportedDegree {
                degree: m1.max(m2),
                max: MOMENT_MAX_DEGREE,
            });
        }
        check_inputs(data, em, q)?;
        let rows = 2 * m1 + 1;
        let cols = 2 * m1 + 2 * m2 + 2;
        let rule = GaussLegendre::new(q.nodes_t);
        let mut terms = Vec::with_capacity(data.len());
        let mut l1 = vec![0.0; rows];
        let mut l2 = vec![0.0; cols];
        for o in data {
            let rate = em.rate(o.location)?;
            let upper = o.w_tilde.min(o.s2);
            if !(upper > 0.0) {
                terms.push(None);
                continue;
            }
            let c = rate + 2.0;
            let nodes: Vec<(f64, f64)> = outer_panels(upper, rate)
                .into_iter()
                .flat_map(|(lo, hi)| rule.mapped(lo, hi).collect::<Vec<_>>())
                .collect();
            let offset = nodes
                .iter()
                .map(|(t, _)| c * t)
                .fold(f64::NEG_INFINITY, f64::max)
                - o.s1
                - o.s2;
            let mut moments = vec![0.0; rows * cols];
            for (t, wt) in nodes {
                let w = wt * (c * t - o.s1 - o.s2 - offset).exp();
                laguerre_all(o.s1 - t, &mut l1);
                laguerre_all(o.s2 - t, &mut l2);
                for (row, la) in moments.chunks_exact_mut(cols).zip(&l1) {
                    let wa = w * la;
                    for (m, ln) in row.iter_mut().zip(&l2) {
                        *m += wa * ln;
                    }
                }
            }
            terms.push(Some(MomentTerm { offset, moments }));
        }
        Ok(Box::new(MomentPrepared {
            m1,
            m2,
            terms,
            floor_ln: q.floor_ln(),
        }))
    }
}

/// Uses [`MomentStrategy`] when it supports the degrees.
#[derive(Debug, Clone, Copy, Default)]
pub struct AutoStrategy;

impl AutoStrategy {
    pub fn resolve(m1: usize, m2: usize) -> &'static str {
        if MomentStrategy.supports(m1, m2) {
            "moment"
        } else {
            "direct"
        }
    }
}

impl LikelihoodStrategy for AutoStrategy {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn supports(&self, _m1: usize, _m2: usize) -> bool {
        true
    }

    fn prepare(
        &self,
        data: &[Observation],
        em: &ExposureModel,
        m1: usize,
        m2: usize,
        q: &QuadratureConfig,
    ) -> Result<Box<dyn PreparedLikelihood>> {
        if MomentStrategy.supports(m1, m2) {
            MomentStrategy.prepare(data, em, m1, m2, q)
        } else {
            DirectStrategy.prepare(data, em, m1, m2, q)
        }
    }
}

/// Likelihood strategies selectable by name.
pub struct StrategyRegistry {
    strategies: BTreeMap<&'static str, Box<dyn LikelihoodStrategy>>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self {
            strategies: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(DirectStrategy));
        r.register(Box::new(MomentStrategy));
        r.register(Box::new(AutoStrategy));
        r
    }

    pub fn register(&mut self, strategy: Box<dyn LikelihoodStrategy>) {
        self.strategies.insert(strategy.name(), strategy);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.strategies.keys().copied()
    }

    pub fn get(&self, name: &str) -> Result<&dyn LikelihoodStrategy> {
        self.strategies
            .get(name)
            .map(|s| s.as_ref())
            .ok_or_else(|| {
                let known: Vec<_> = self.names().collect();
                SieveError::Validation(format!(
                    "unknown likelihood strategy `{name}` (known: {})",
                    known.join(", ")
                ))
            })
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl fmt::Debug for StrategyRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}
