use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{replication_seeds, sample_dataset, GeneratorConfig};
use crate::error::{Result, SieveError};
use crate::estimator::{fit, FitOptions};
use crate::features::{
    features_of, presymptomatic_prob, quantiles, reproduction_number, reproduction_number_of,
    QuantileEntry, DEFAULT_PROBS,
};
use crate::laguerre::{best_approx, hellinger_sq, LaguerreDensity};

/// Reference values of the data-generating densities and of their best
/// Laguerre approximations at the fitted degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSummary {
    pub r0: f64,
    pub quantiles_i: Vec<QuantileEntry>,
    pub quantiles_g: Vec<QuantileEntry>,
    pub presymptomatic_prob: f64,
    pub approx_i: LaguerreDensity,
    pub approx_g: LaguerreDensity,
    pub approx_hellinger_sq_i: f64,
    pub approx_hellinger_sq_g: f64,
    pub approx_r0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationValues {
    pub loglik: f64,
    pub hellinger_sq_i: f64,
    pub hellinger_sq_g: f64,
    /// Distances to the best Laguerre approximations of the truths.
    pub hellinger_sq_i_approx: f64,
    pub hellinger_sq_g_approx: f64,
    pub r0_hat: f64,
    pub presymptomatic_prob: f64,
    /// Estimated quantiles at the report's `probs`.
    pub quantiles_i: Vec<f64>,
    pub quantiles_g: Vec<f64>,
    pub theta_i: Vec<f64>,
    pub theta_g: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub replication: usize,
    pub data_seed: u64,
    pub fit_seed: u64,
    pub values: Option<ReplicationValues>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub column: String,
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub q10: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q90: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: GeneratorConfig,
    pub m1: usize,
    pub m2: usize,
    pub n_reps: usize,
    pub growth_rate: f64,
    pub probs: Vec<f64>,
    pub options: FitOptions,
    pub truth: TruthSummary,
    pub rows: Vec<ReplicationRow>,
    pub failures: usize,
    pub summaries: Vec<ColumnSummary>,
    pub version: String,
}

/// Empirical quantile with linear interpolation between order statistics.
pub(crate) fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(column: &str, values: &[f64]) -> ColumnSummary {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mean = if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    };
    ColumnSummary {
        column: column.to_string(),
        count: v.len(),
        mean,
        min: v.first().copied().unwrap_or(f64::NAN),
        q10: empirical_quantile(&v, 0.1),
        q25: empirical_quantile(&v, 0.25),
        median: empirical_quantile(&v, 0.5),
        q75: empirical_quantile(&v, 0.75),
        q90: empirical_quantile(&v, 0.9),
        max: v.last().copied().unwrap_or(f64::NAN),
    }
}

#[allow(clippy::too_many_arguments)]
fn replicate(
    cfg: &GeneratorConfig,
    m1: usize,
    m2: usize,
    r_hat: f64,
    probs: &[f64],
    opts: &FitOptions,
    truth: &TruthSummary,
    k: usize,
) -> ReplicationRow {
    let (data_seed, fit_seed) = replication_seeds(cfg.seed, k);
    let run = || -> Result<ReplicationValues> {
        let data = sample_dataset(&cfg.with_seed(data_seed))?;
        let em = cfg.exposure_model()?;
        let opts = FitOptions {
            seed: fit_seed,
            ..opts.clone()
        };
        let f = fit(&data, &em, m1, m2, &opts)?;
        let feats = features_of(&f.phi_i_hat, &f.phi_g_hat, r_hat, probs)?;
        Ok(ReplicationValues {
            loglik: f.loglik,
            hellinger_sq_i: hellinger_sq(&f.phi_i_hat, cfg.phi_i_true.as_dyn())?,
            hellinger_sq_g: hellinger_sq(&f.phi_g_hat, cfg.phi_g_true.as_dyn())?,
            hellinger_sq_i_approx: hellinger_sq(&f.phi_i_hat, &truth.approx_i)?,
            hellinger_sq_g_approx: hellinger_sq(&f.phi_g_hat, &truth.approx_g)?,
            r0_hat: feats.r0,
            presymptomatic_prob: feats.presymptomatic_prob,
            quantiles_i: feats.quantiles_i.iter().map(|q| q.value).collect(),
            quantiles_g: feats.quantiles_g.iter().map(|q| q.value).collect(),
            theta_i: f.phi_i_hat.theta().to_vec(),
            theta_g: f.phi_g_hat.theta().to_vec(),
        })
    };
    let (values, error) = match run() {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };
    ReplicationRow {
        replication: k,
        data_seed,
        fit_seed,
        values,
        error,
    }
}

/// Repeats simulate-fit-evaluate `n_reps` times. Replication `k` uses the
/// seeds [`replication_seeds`]`(cfg.seed, k)`; failed replications are
/// recorded in their row.
pub fn run_study(
    cfg: &GeneratorConfig,
    m1: usize,
    m2: usize,
    n_reps: usize,
    r_hat: f64,
    opts: &FitOptions,
) -> Result<StudyReport> {
    if n_reps == 0 {
        return Err(SieveError::Validation(
            "a study needs at least one replication".into(),
        ));
    }
    cfg.validate()?;
    opts.validate()?;
    let probs = DEFAULT_PROBS.to_vec();
    let approx_i = best_approx(cfg.phi_i_true.as_dyn(), m1)?;
    let approx_g = best_approx(cfg.phi_g_true.as_dyn(), m2)?;
    let truth = TruthSummary {
        r0: reproduction_number_of(cfg.phi_g_true.as_dyn(), r_hat)?,
        quantiles_i: quantiles(cfg.phi_i_true.as_dyn(), &probs)?,
        quantiles_g: quantiles(cfg.phi_g_true.as_dyn(), &probs)?,
        presymptomatic_prob: presymptomatic_prob(cfg.phi_i_true.as_dyn(), cfg.phi_g_true.as_dyn())?,
        approx_hellinger_sq_i: hellinger_sq(&approx_i, cfg.phi_i_true.as_dyn())?,
        approx_hellinger_sq_g: hellinger_sq(&approx_g, cfg.phi_g_true.as_dyn())?,
        approx_r0: reproduction_number(&approx_g, r_hat)?,
        approx_i,
        approx_g,
    };
    let rows: Vec<ReplicationRow> = (0..n_reps)
        .into_par_iter()
        .map(|k| replicate(cfg, m1, m2, r_hat, &probs, opts, &truth, k))
        .collect();
    let failures = rows.iter().filter(|r| r.values.is_none()).count();
    let mut report = StudyReport {
        config: cfg.clone(),
        m1,
        m2,
        n_reps,
        growth_rate: r_hat,
        probs,
        options: opts.clone(),
        truth,
        rows,
        failures,
        summaries: Vec::new(),
        version: crate::VERSION.to_string(),
    };
    report.summaries = report
        .column_names()
        .iter()
        .map(|c| summarize(c, &report.column(c).unwrap_or_default()))
        .collect();
    Ok(report)
}

impl StudyReport {
    /// Names of the numeric per-replication columns.
    pub fn column_names(&self) -> Vec<String> {
        let mut names: Vec<String> = [
            "loglik",
            "hellinger_sq_i",
            "hellinger_sq_g",
            "hellinger_sq_i_approx",
            "hellinger_sq_g_approx",
            "r0_hat",
            "presymptomatic_prob",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for p in &self.probs {
            names.push(format!("quantile_i_{p}"));
        }
        for p in &self.probs {
            names.push(format!("quantile_g_{p}"));
        }
        names
    }

    fn value(&self, v: &ReplicationValues, column: &str) -> Option<f64> {
        Some(match column {
            "loglik" => v.loglik,
            "hellinger_sq_i" => v.hellinger_sq_i,
            "hellinger_sq_g" => v.hellinger_sq_g,
            "hellinger_sq_i_approx" => v.hellinger_sq_i_approx,
            "hellinger_sq_g_approx" => v.hellinger_sq_g_approx,
            "r0_hat" => v.r0_hat,
            "presymptomatic_prob" => v.presymptomatic_prob,
            other => {
                let (list, p) = match other.strip_prefix("quantile_i_") {
                    Some(p) => (&v.quantiles_i, p),
                    None => (&v.quantiles_g, other.strip_prefix("quantile_g_")?),
                };
                let idx = self.probs.iter().position(|q| q.to_string() == p)?;
                list[idx]
            }
        })
    }

    /// Values of `column` over the successful replications.
    pub fn column(&self, column: &str) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            if let Some(v) = &row.values {
                out.push(self.value(v, column)?);
            }
        }
        Some(out)
    }

    pub fn summary(&self, column: &str) -> Option<&ColumnSummary> {
        self.summaries.iter().find(|s| s.column == column)
    }

    /// One row per replication; failed replications have empty value
    /// fields and the error message in the last column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let names = self.column_names();
        let mut header = vec![
            "replication".to_string(),
            "data_seed".into(),
            "fit_seed".into(),
        ];
        header.extend(names.iter().cloned());
        header.push("error".into());
        w.write_record(&header)
            .map_err(|e| SieveError::Io(e.to_string()))?;
        for row in &self.rows {
            let mut rec = vec![
                row.replication.to_string(),
                row.data_seed.to_string(),
                row.fit_seed.to_string(),
            ];
            for c in &names {
                rec.push(match &row.values {
                    Some(v) => self.value(v, c).map(|x| x.to_string()).unwrap_or_default(),
                    None => String::new(),
                });
            }
            rec.push(row.error.clone().unwrap_or_default());
            w.write_record(&rec)
                .map_err(|e| SieveError::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}
