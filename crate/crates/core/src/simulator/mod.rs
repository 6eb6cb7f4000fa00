//! Data generation under the transmission model, Monte-Carlo studies and
//! the parametric bootstrap test.
//!
//! For each pair: the infector's exposure window `[0, W]`, location `C`,
//! infection time `T1 | W, C` with density proportional to
//! `e^{-r(C)(W - s)}` on `[0, W]`, incubation periods `I1`, `I2` and
//! generation time `G`; observed are `S1 = T1 + I1`, `S2 = T1 + I2 + G`,
//! `W̃ = min(W, S1)` and `C`.

mod bootstrap;
mod impute;
mod study;

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::KeyValues;
use crate::density::{Exponential, GenericDensity, LogNormal, Weibull};
use crate::error::{Result, SieveError};
use crate::rng::derive_seed;
use crate::transmission::{ExposureModel, Observation};

pub use bootstrap::{bootstrap_test, BootstrapResult, Observed};
pub use impute::{impute_windows, read_raw_records, ImputeOutcome, RawRecord, DEFAULT_LOOKBACK};
pub use study::{
    run_study, ColumnSummary, ReplicationRow, ReplicationValues, StudyReport, TruthSummary,
};

/// Everything needed to generate a synthetic data set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub w_dist: GenericDensity,
    pub p_c: BTreeMap<u32, f64>,
    pub rates: BTreeMap<u32, f64>,
    pub phi_i_true: GenericDensity,
    pub phi_g_true: GenericDensity,
    pub n: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            w_dist: GenericDensity::new(Exponential::new(0.3820225).expect("valid rate")),
            p_c: [(0, 0.65), (1, 0.35)].into(),
            rates: [(0, 0.0), (1, std::f64::consts::LN_2 / 5.0)].into(),
            phi_i_true: GenericDensity::new(LogNormal::new(1.644, 0.363).expect("valid")),
            phi_g_true: GenericDensity::new(Weibull::new(2.826, 5.665).expect("valid")),
            n: 40,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    /// Reads keys `n`, `seed`, `window`, `incubation`, `generation`,
    /// `location.<c>.prob` and `location.<c>.rate`; missing keys keep their
    /// defaults (locations are replaced as a whole when any is given).
    pub fn from_config(kv: &KeyValues) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(n) = kv.value("n")? {
            cfg.n = n;
        }
        if let Some(seed) = kv.value("seed")? {
            cfg.seed = seed;
        }
        for (key, slot) in [
            ("window", &mut cfg.w_dist),
            ("incubation", &mut cfg.phi_i_true),
            ("generation", &mut cfg.phi_g_true),
        ] {
            if let Some(text) = kv.get(key) {
                *slot = GenericDensity::parse(text)?;
            }
        }
        let probs: BTreeMap<u32, f64> = kv.indexed("location", "prob")?;
        let rates: BTreeMap<u32, f64> = kv.indexed("location", "rate")?;
        if !probs.is_empty() || !rates.is_empty() {
            cfg.p_c = probs;
            cfg.rates = rates;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_config(&KeyValues::read(path)?)
    }

    /// The configuration in `key = value` form.
    pub fn to_config(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.insert("n", self.n);
        kv.insert("seed", self.seed);
        kv.insert("window", self.w_dist.descriptor());
        kv.insert("incubation", self.phi_i_true.descriptor());
        kv.insert("generation", self.phi_g_true.descriptor());
        for (c, p) in &self.p_c {
            kv.insert(format!("location.{c}.prob"), p);
        }
        for (c, r) in &self.rates {
            kv.insert(format!("location.{c}.rate"), r);
        }
        kv
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(SieveError::Validation(
                "sample size n must be at least 1".into(),
            ));
        }
        if self.p_c.is_empty() {
            return Err(SieveError::Validation("no locations configured".into()));
        }
        if let Some((c, p)) = self.p_c.iter().find(|(_, p)| !(**p >= 0.0)) {
            return Err(SieveError::Validation(format!(
                "probability {p} of location {c} is negative"
            )));
        }
        let total: f64 = self.p_c.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(SieveError::Validation(format!(
                "location probabilities sum to {total}, not 1"
            )));
        }
        for c in self.p_c.keys() {
            if !self.rates.contains_key(c) {
                return Err(SieveError::Validation(format!(
                    "no growth rate for location {c}"
                )));
            }
        }
        ExposureModel::new(self.rates.clone())?;
        Ok(())
    }

    pub fn exposure_model(&self) -> Result<ExposureModel> {
        ExposureModel::new(self.rates.clone())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// All generated quantities of one pair, observed or not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentRecord {
    pub w: f64,
    pub location: u32,
    pub t1: f64,
    pub i1: f64,
    pub i2: f64,
    pub g: f64,
    pub s1: f64,
    pub s2: f64,
    pub w_tilde: f64,
}

impl LatentRecord {
    pub fn observation(&self, id: impl Into<String>) -> Observation {
        Observation::new(id, self.s1, self.s2, self.w_tilde, self.location)
    }
}

/// Infection time in `[0, w]` with distribution function
/// `(e^{-r(w-s)} - e^{-rw}) / (1 - e^{-rw})`, by inversion of the uniform
/// variate `u`.
pub fn sample_t1(w: f64, rate: f64, u: f64) -> f64 {
    if rate == 0.0 {
        return u * w;
    }
    // e^{-rw} + u (1 - e^{-rw}) = 1 + (1 - u) (e^{-rw} - 1)
    let s = w + ((1.0 - u) * (-rate * w).exp_m1()).ln_1p() / rate;
    s.clamp(0.0, w)
}

fn draw_location(p_c: &BTreeMap<u32, f64>, u: f64) -> u32 {
    let mut acc = 0.0;
    let mut last = 0;
    for (&c, &p) in p_c {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = c;
        if u < acc {
            return c;
        }
    }
    last
}

/// One pair; draws `W`, `C`, `T1`, `I1`, `I2`, `G` in this order.
pub fn sample_record(cfg: &GeneratorConfig, rng: &mut dyn RngCore) -> LatentRecord {
    let w = cfg.w_dist.sample(rng);
    let location = draw_location(&cfg.p_c, rng.random());
    let rate = cfg.rates.get(&location).copied().unwrap_or(0.0);
    let t1 = sample_t1(w, rate, rng.random());
    let i1 = cfg.phi_i_true.sample(rng);
    let i2 = cfg.phi_i_true.sample(rng);
    let g = cfg.phi_g_true.sample(rng);
    let s1 = t1 + i1;
    LatentRecord {
        w,
        location,
        t1,
        i1,
        i2,
        g,
        s1,
        s2: t1 + i2 + g,
        w_tilde: w.min(s1),
    }
}

/// `cfg.n` latent records from `cfg.seed`.
pub fn sample_latent(cfg: &GeneratorConfig) -> Result<Vec<LatentRecord>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok((0..cfg.n).map(|_| sample_record(cfg, &mut rng)).collect())
}

/// Observed data set with ids `1..=n`.
pub fn sample_dataset(cfg: &GeneratorConfig) -> Result<Vec<Observation>> {
    Ok(sample_latent(cfg)?
        .iter()
        .enumerate()
        .map(|(i, r)| r.observation((i + 1).to_string()))
        .collect())
}

/// Seeds of replication `k` of a study or bootstrap run: one for the data
/// set and one for the fit.
pub fn replication_seeds(master: u64, k: usize) -> (u64, u64) {
    let rep = derive_seed(master, k as u64);
    (derive_seed(rep, 0), derive_seed(rep, 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = GeneratorConfig::default();
        cfg.validate().unwrap();
        let back = GeneratorConfig::from_config(&cfg.to_config()).unwrap();
        assert_eq!(back.to_config(), cfg.to_config());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = GeneratorConfig::default();
        cfg.p_c.insert(0, 0.7);
        assert!(cfg.validate().is_err());
        let mut cfg = GeneratorConfig::default();
        cfg.rates.remove(&1);
        assert!(cfg.validate().is_err());
        let cfg = GeneratorConfig {
            n: 0,
            ..GeneratorConfig::default()
        };
        assert!(sample_dataset(&cfg).is_err());
    }

    #[test]
    fn t1_inversion_endpoints() {
        assert_eq!(sample_t1(4.0, 0.0, 0.25), 1.0);
        assert!((sample_t1(5.0, 0.2, 1.0) - 5.0).abs() < 1e-12);
        assert!(sample_t1(5.0, 0.2, 0.0).abs() < 1e-12);
        // median of the tilted law lies above the uniform median for r > 0
        assert!(sample_t1(5.0, 0.2, 0.5) > 2.5);
    }

    #[test]
    fn records_are_consistent() {
        let cfg = GeneratorConfig {
            n: 500,
            seed: 9,
            ..GeneratorConfig::default()
        };
        let data = sample_dataset(&cfg).unwrap();
        assert_eq!(data.len(), 500);
        for o in &data {
            o.validate().unwrap();
        }
        assert_eq!(data, sample_dataset(&cfg).unwrap());
    }

    #[test]
    fn location_draw_respects_zero_probabilities() {
        let p: BTreeMap<u32, f64> = [(0, 0.0), (3, 1.0)].into();
        assert_eq!(draw_location(&p, 0.0), 3);
        assert_eq!(draw_location(&p, 0.999), 3);
    }
}
