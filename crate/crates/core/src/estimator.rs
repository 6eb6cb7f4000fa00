//! Sieve maximum likelihood over pairs of Laguerre densities.
//!
//! Coefficient vectors are parameterized by polar angles in `[0, π]`, so a
//! degree pair `(m1, m2)` gives an `m1 + m2` dimensional box. The box is
//! searched with Nelder-Mead from several uniformly drawn starts.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SieveError};
use crate::laguerre::sphere::{canonicalize_sign, polar_map};
use crate::laguerre::LaguerreDensity;
use crate::optim::{BoxDomain, LocalOptimizer, NelderMead};
use crate::rng::substream;
use crate::transmission::{
    AutoStrategy, ExposureModel, Observation, PreparedLikelihood, QuadratureConfig,
    StrategyRegistry,
};

/// Number of free parameters charged by the information criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParameterCount {
    /// `m1 + m2`: one parameter per polar angle.
    #[default]
    Angles,
    /// `m1 + m2 + 2`: raw coefficient count, ignoring the norm constraint.
    Coefficients,
}

impl ParameterCount {
    pub fn count(self, m1: usize, m2: usize) -> usize {
        match self {
            ParameterCount::Angles => m1 + m2,
            ParameterCount::Coefficients => m1 + m2 + 2,
        }
    }
}

impl std::str::FromStr for ParameterCount {
    type Err = SieveError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "angles" => Ok(Self::Angles),
            "coefficients" => Ok(Self::Coefficients),
            _ => Err(SieveError::Parse(format!(
                "unknown parameter count `{s}` (expected angles or coefficients)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub n_starts: usize,
    pub max_iters: usize,
    pub simplex_tol: f64,
    pub seed: u64,
    pub quadrature: QuadratureConfig,
    /// Likelihood strategy name, see [`StrategyRegistry`].
    pub strategy: String,
    pub parameter_count: ParameterCount,
    /// Edge length (radians) of the initial simplex around each start.
    pub initial_step: f64,
    /// Extra batches of starts tried when every start stays on the
    /// likelihood floor.
    pub retries: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            n_starts: 5,
            max_iters: 2000,
            simplex_tol: 1e-8,
            seed: 0,
            quadrature: QuadratureConfig::default(),
            strategy: "auto".into(),
            parameter_count: ParameterCount::Angles,
            initial_step: 0.5,
            retries: 2,
        }
    }
}

impl FitOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 {
            return Err(SieveError::Validation("n_starts must be at least 1".into()));
        }
        if !(self.simplex_tol > 0.0) {
            return Err(SieveError::Validation(format!(
                "simplex_tol must be positive, got {}",
                self.simplex_tol
            )));
        }
        if !(self.initial_step > 0.0) {
            return Err(SieveError::Validation(format!(
                "initial_step must be positive, got {}",
                self.initial_step
            )));
        }
        self.quadrature.validate()
    }

    fn optimizer(&self) -> NelderMead {
        NelderMead {
            max_iters: self.max_iters,
            f_tol: self.simplex_tol,
            initial_step: self.initial_step,
        }
    }
}

/// Outcome of one random start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartReport {
    pub index: usize,
    pub initial_angles: Vec<f64>,
    pub initial_loglik: f64,
    pub final_angles: Vec<f64>,
    pub final_loglik: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub m1: usize,
    pub m2: usize,
    pub n: usize,
    pub phi_i_hat: LaguerreDensity,
    pub phi_g_hat: LaguerreDensity,
    pub loglik: f64,
    pub bic: f64,
    pub best_start: usize,
    pub starts: Vec<StartReport>,
    /// Strategy that evaluated the likelihood (`auto` resolved).
    pub strategy: String,
    pub seed: u64,
    pub options: FitOptions,
    pub version: String,
}

impl FitResult {
    pub fn read_json(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SieveError::Io(format!("{}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// `-2 loglik + (m1 + m2) ln n`.
pub fn bic(loglik: f64, m1: usize, m2: usize, n: usize) -> f64 {
    bic_with(loglik, m1, m2, n, ParameterCount::Angles)
}

pub fn bic_with(loglik: f64, m1: usize, m2: usize, n: usize, count: ParameterCount) -> f64 {
    -2.0 * loglik + count.count(m1, m2) as f64 * (n as f64).ln()
}

/// Splits an angle vector into the two coefficient vectors.
fn thetas_from_angles(angles: &[f64], m1: usize, ti: &mut [f64], tg: &mut [f64]) {
    polar_map(&angles[..m1], ti);
    polar_map(&angles[m1..], tg);
}

fn run_start(
    prepared: &dyn PreparedLikelihood,
    index: usize,
    m1: usize,
    m2: usize,
    opts: &FitOptions,
    optimizer: &dyn LocalOptimizer,
) -> StartReport {
    let dim = m1 + m2;
    let mut rng = substream(opts.seed, index as u64);
    let start: Vec<f64> = (0..dim)
        .map(|_| rng.random::<f64>() * std::f64::consts::PI)
        .collect();
    let mut ti = vec![0.0; m1 + 1];
    let mut tg = vec![0.0; m2 + 1];
    let mut objective = |a: &[f64]| {
        thetas_from_angles(a, m1, &mut ti, &mut tg);
        -prepared.loglik(&ti, &tg)
    };
    let domain = BoxDomain::uniform(dim, 0.0, std::f64::consts::PI);
    let min = optimizer.minimize(&mut objective, &start, &domain);
    StartReport {
        index,
        initial_angles: start,
        initial_loglik: -min.initial_value,
        final_angles: min.x,
        final_loglik: -min.value,
        iterations: min.iterations,
        evaluations: min.evaluations,
        converged: min.converged,
    }
}

/// Maximizes the data-set log-likelihood over degree-`m1` incubation and
/// degree-`m2` generation-time densities.
pub fn fit(
    data: &[Observation],
    em: &ExposureModel,
    m1: usize,
    m2: usize,
    opts: &FitOptions,
) -> Result<FitResult> {
    if data.is_empty() {
        return Err(SieveError::Validation(
            "cannot fit an empty data set".into(),
        ));
    }
    opts.validate()?;
    let registry = StrategyRegistry::with_builtins();
    let strategy = registry.get(&opts.strategy)?;
    let strategy_name = if strategy.name() == "auto" {
        AutoStrategy::resolve(m1, m2)
    } else {
        strategy.name()
    };
    let prepared = strategy.prepare(data, em, m1, m2, &opts.quadrature)?;
    let floor_total = data.len() as f64 * opts.quadrature.floor_ln();
    let degenerate = |ll: f64| ll <= floor_total * (1.0 - 1e-12);

    let starts: Vec<StartReport> = if m1 + m2 == 0 {
        let ll = prepared.loglik(&[1.0], &[1.0]);
        vec![StartReport {
            index: 0,
            initial_angles: Vec::new(),
            initial_loglik: ll,
            final_angles: Vec::new(),
            final_loglik: ll,
            iterations: 0,
            evaluations: 1,
            converged: true,
        }]
    } else {
        let optimizer = opts.optimizer();
        let mut all = Vec::new();
        for batch in 0..=opts.retries {
            let range = batch * opts.n_starts..(batch + 1) * opts.n_starts;
            let reports: Vec<StartReport> = range
                .into_par_iter()
                .map(|k| run_start(prepared.as_ref(), k, m1, m2, opts, &optimizer))
                .collect();
            let ok = reports.iter().any(|r| !degenerate(r.final_loglik));
            all.extend(reports);
            if ok {
                break;
            }
        }
        all
    };

    // highest final loglik, ties to the lowest index
    let best = starts
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |acc, (i, s)| match acc {
            Some((_, v)) if !(s.final_loglik > v) => acc,
            _ if s.final_loglik.is_nan() => acc,
            _ => Some((i, s.final_loglik)),
        });
    let Some((best_idx, loglik)) = best else {
        return Err(SieveError::DegenerateFit);
    };
    if degenerate(loglik) {
        return Err(SieveError::DegenerateFit);
    }
    let mut ti = vec![0.0; m1 + 1];
    let mut tg = vec![0.0; m2 + 1];
    thetas_from_angles(&starts[best_idx].final_angles, m1, &mut ti, &mut tg);
    canonicalize_sign(&mut ti);
    canonicalize_sign(&mut tg);
    Ok(FitResult {
        m1,
        m2,
        n: data.len(),
        phi_i_hat: LaguerreDensity::build(ti),
        phi_g_hat: LaguerreDensity::build(tg),
        loglik,
        bic: bic_with(loglik, m1, m2, data.len(), opts.parameter_count),
        best_start: starts[best_idx].index,
        starts,
        strategy: strategy_name.to_string(),
        seed: opts.seed,
        options: opts.clone(),
        version: crate::VERSION.to_string(),
    })
}

/// One cell of a model-selection grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub m1: usize,
    pub m2: usize,
    pub loglik: Option<f64>,
    pub bic: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub best: (usize, usize),
    pub table: Vec<GridCell>,
    pub best_fit: FitResult,
}

/// Fits every degree pair of `grid` and picks the smallest BIC; ties go to
/// the smaller `m1 + m2`, then the smaller `m1`. Failed cells are recorded
/// and skipped.
pub fn select_model(
    data: &[Observation],
    em: &ExposureModel,
    grid: &[(usize, usize)],
    opts: &FitOptions,
) -> Result<Selection> {
    if grid.is_empty() {
        return Err(SieveError::Validation("model grid is empty".into()));
    }
    if data.is_empty() {
        return Err(SieveError::Validation(
            "cannot fit an empty data set".into(),
        ));
    }
    opts.validate()?;
    let fits: Vec<Result<FitResult>> = grid
        .par_iter()
        .map(|&(m1, m2)| fit(data, em, m1, m2, opts))
        .collect();
    let mut table = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, (&(m1, m2), res)) in grid.iter().zip(&fits).enumerate() {
        match res {
            Ok(f) => {
                table.push(GridCell {
                    m1,
                    m2,
                    loglik: Some(f.loglik),
                    bic: Some(f.bic),
                    error: None,
                });
                let better = match best {
                    None => true,
                    Some((j, b)) => {
                        let (n1, n2) = grid[j];
                        f.bic < b || (f.bic == b && (m1 + m2, m1) < (n1 + n2, n1))
                    }
                };
                if better && !f.bic.is_nan() {
                    best = Some((i, f.bic));
                }
            }
            Err(e) => table.push(GridCell {
                m1,
                m2,
                loglik: None,
                bic: None,
                error: Some(e.to_string()),
            }),
        }
    }
    let Some((idx, _)) = best else {
        let reasons: Vec<String> = table
            .iter()
            .filter_map(|c| {
                c.error
                    .as_ref()
                    .map(|e| format!("({},{}): {e}", c.m1, c.m2))
            })
            .collect();
        return Err(SieveError::Validation(format!(
            "every grid cell failed: {}",
            reasons.join("; ")
        )));
    };
    let best_fit = fits.into_iter().nth(idx).expect("index in range")?;
    Ok(Selection {
        best: grid[idx],
        table,
        best_fit,
    })
}

/// Parses `a..bxc..d` (inclusive ranges; single numbers allowed) into the
/// cartesian product of degree pairs.
pub fn parse_grid(text: &str) -> Result<Vec<(usize, usize)>> {
    let (left, right) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| SieveError::Parse(format!("grid `{text}` must look like 1..4x1..4")))?;
    let range = |s: &str| -> Result<Vec<usize>> {
        let s = s.trim();
        let bad = || SieveError::Parse(format!("invalid degree range `{s}`"));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (
                a.trim().parse().map_err(|_| bad())?,
                b.trim()
                    .trim_start_matches('=')
                    .parse()
                    .map_err(|_| bad())?,
            ),
            None => {
                let v = s.parse().map_err(|_| bad())?;
                (v, v)
            }
        };
        if lo > hi {
            return Err(bad());
        }
        Ok((lo..=hi).collect())
    };
    let a = range(left)?;
    let b = range(right)?;
    Ok(a.iter()
        .flat_map(|&m1| b.iter().map(move |&m2| (m1, m2)))
        .collect())
}
