use std::f64::consts::{PI, SQRT_2};

use rand::RngCore;
use rand_distr::Distribution;
use statrs::function::erf::{erf_inv, erfc};

use super::{Density, Descriptor};
use crate::error::{Result, SieveError};

fn positive(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(SieveError::Validation(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

/// Exponential law with the given rate (per day).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponential {
    rate: f64,
}

impl Exponential {
    pub fn new(rate: f64) -> Result<Self> {
        Ok(Self {
            rate: positive("exponential rate", rate)?,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl Density for Exponential {
    fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.rate * (-self.rate * x).exp()
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-self.rate * x).exp_m1()
        }
    }

    fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            (-self.rate * x).exp()
        }
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(SieveError::Domain(format!(
                "probability {p} outside (0, 1)"
            )));
        }
        Ok(-(-p).ln_1p() / self.rate)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        rand_distr::Exp::new(self.rate)
            .expect("rate validated at construction")
            .sample(rng)
    }

    fn tail_point(&self, tail: f64) -> f64 {
        -tail.ln() / self.rate
    }

    fn descriptor(&self) -> Descriptor {
        Descriptor::new("exponential", vec![self.rate])
    }
}

/// Log-normal law parameterized by `meanlog` and `sdlog`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormal {
    meanlog: f64,
    sdlog: f64,
}

impl LogNormal {
    pub fn new(meanlog: f64, sdlog: f64) -> Result<Self> {
        if !meanlog.is_finite() {
            return Err(SieveError::Validation(format!(
                "lognormal meanlog must be finite, got {meanlog}"
            )));
        }
        Ok(Self {
            meanlog,
            sdlog: positive("lognormal sdlog", sdlog)?,
        })
    }

    pub fn mean(&self) -> f64 {
        (self.meanlog + 0.5 * self.sdlog * self.sdlog).exp()
    }
}

impl Density for LogNormal {
    fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let z = (x.ln() - self.meanlog) / self.sdlog;
        (-0.5 * z * z).exp() / (x * self.sdlog * (2.0 * PI).sqrt())
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        0.5 * erfc(-(x.ln() - self.meanlog) / (self.sdlog * SQRT_2))
    }

    fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        0.5 * erfc((x.ln() - self.meanlog) / (self.sdlog * SQRT_2))
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(SieveError::Domain(format!(
                "probability {p} outside (0, 1)"
            )));
        }
        let guess = (self.meanlog + self.sdlog * SQRT_2 * erf_inv(2.0 * p - 1.0)).exp();
        // polish the closed form with a few Newton steps on the cdf
        let mut x = guess;
        for _ in 0..4 {
            let d = self.pdf(x);
            if d <= 0.0 {
                break;
            }
            let step = (self.cdf(x) - p) / d;
            if !step.is_finite() || (x - step) <= 0.0 {
                break;
            }
            x -= step;
        }
        Ok(x)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        rand_distr::LogNormal::new(self.meanlog, self.sdlog)
            .expect("parameters validated at construction")
            .sample(rng)
    }

    fn descriptor(&self) -> Descriptor {
        Descriptor::new("lognormal", vec![self.meanlog, self.sdlog])
    }
}

/// Weibull law with `shape` and `scale` (days).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weibull {
    shape: f64,
    scale: f64,
}

impl Weibull {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        Ok(Self {
            shape: positive("weibull shape", shape)?,
            scale: positive("weibull scale", scale)?,
        })
    }
}

impl Density for Weibull {
    fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let z = x / self.scale;
        if x == 0.0 {
            return match self.shape {
                k if k < 1.0 => f64::INFINITY,
                1.0 => 1.0 / self.scale,
                _ => 0.0,
            };
        }
        self.shape / self.scale * z.powf(self.shape - 1.0) * (-z.powf(self.shape)).exp()
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -(-(x / self.scale).powf(self.shape)).exp_m1()
    }

    fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        (-(x / self.scale).powf(self.shape)).exp()
    }

    fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(SieveError::Domain(format!(
                "probability {p} outside (0, 1)"
            )));
        }
        Ok(self.scale * (-(-p).ln_1p()).powf(1.0 / self.shape))
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        rand_distr::Weibull::new(self.scale, self.shape)
            .expect("parameters validated at construction")
            .sample(rng)
    }

    fn tail_point(&self, tail: f64) -> f64 {
        self.scale * (-tail.ln()).powf(1.0 / self.shape)
    }

    fn descriptor(&self) -> Descriptor {
        Descriptor::new("weibull", vec![self.shape, self.scale])
    }
}
