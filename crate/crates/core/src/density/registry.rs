use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::{Density, Descriptor, Exponential, GenericDensity, LogNormal, Weibull};
use crate::error::{Result, SieveError};
use crate::laguerre::LaguerreDensity;

/// A named parametric family that can build densities from parameter text.
pub trait DensityFamily: Send + Sync {
    fn name(&self) -> &'static str;

    /// Human-readable parameter list, e.g. `shape,scale`.
    fn signature(&self) -> &'static str;

    fn build(&self, params: &str) -> Result<Arc<dyn Density>>;
}

fn expect_params(family: &str, params: &str, n: usize) -> Result<Vec<f64>> {
    let values = Descriptor::parse_params(params)?;
    if values.len() != n {
        return Err(SieveError::Parse(format!(
            "{family} expects {n} parameter(s), got {}",
            values.len()
        )));
    }
    Ok(values)
}

struct ExponentialFamily;

impl DensityFamily for ExponentialFamily {
    fn name(&self) -> &'static str {
        "exponential"
    }
    fn signature(&self) -> &'static str {
        "rate"
    }
    fn build(&self, params: &str) -> Result<Arc<dyn Density>> {
        let p = expect_params(self.name(), params, 1)?;
        Ok(Arc::new(Exponential::new(p[0])?))
    }
}

struct LogNormalFamily;

impl DensityFamily for LogNormalFamily {
    fn name(&self) -> &'static str {
        "lognormal"
    }
    fn signature(&self) -> &'static str {
        "meanlog,sdlog"
    }
    fn build(&self, params: &str) -> Result<Arc<dyn Density>> {
        let p = expect_params(self.name(), params, 2)?;
        Ok(Arc::new(LogNormal::new(p[0], p[1])?))
    }
}

struct WeibullFamily;

impl DensityFamily for WeibullFamily {
    fn name(&self) -> &'static str {
        "weibull"
    }
    fn signature(&self) -> &'static str {
        "shape,scale"
    }
    fn build(&self, params: &str) -> Result<Arc<dyn Density>> {
        let p = expect_params(self.name(), params, 2)?;
        Ok(Arc::new(Weibull::new(p[0], p[1])?))
    }
}

/// Inline coefficients: `laguerre:theta0,theta1,...` (normalized on load).
struct LaguerreFamily;

impl DensityFamily for LaguerreFamily {
    fn name(&self) -> &'static str {
        "laguerre"
    }
    fn signature(&self) -> &'static str {
        "theta0,theta1,..."
    }
    fn build(&self, params: &str) -> Result<Arc<dyn Density>> {
        let theta = Descriptor::parse_params(params)?;
        Ok(Arc::new(LaguerreDensity::from_unnormalized(&theta)?))
    }
}

/// `laguerre-file:path` reads a `{"m": .., "theta": [..]}` JSON file.
struct LaguerreFileFamily;

impl DensityFamily for LaguerreFileFamily {
    fn name(&self) -> &'static str {
        "laguerre-file"
    }
    fn signature(&self) -> &'static str {
        "path"
    }
    fn build(&self, params: &str) -> Result<Arc<dyn Density>> {
        if params.is_empty() {
            return Err(SieveError::Parse("laguerre-file needs a path".into()));
        }
        Ok(Arc::new(LaguerreDensity::read_json(params)?))
    }
}

/// Density families selectable by name at runtime.
pub struct DensityRegistry {
    families: BTreeMap<&'static str, Box<dyn DensityFamily>>,
}

impl DensityRegistry {
    pub fn empty() -> Self {
        Self {
            families: BTreeMap::new(),
        }
    }

    /// Registry with `exponential`, `lognormal`, `weibull`, `laguerre` and
    /// `laguerre-file`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(ExponentialFamily));
        r.register(Box::new(LogNormalFamily));
        r.register(Box::new(WeibullFamily));
        r.register(Box::new(LaguerreFamily));
        r.register(Box::new(LaguerreFileFamily));
        r
    }

    /// Adds a family, replacing any previous family with the same name.
    pub fn register(&mut self, family: Box<dyn DensityFamily>) {
        self.families.insert(family.name(), family);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.families.keys().copied()
    }

    pub fn get(&self, name: &str) -> Option<&dyn DensityFamily> {
        self.families.get(name).map(|f| f.as_ref())
    }

    /// Builds a density from a `name:param,param` descriptor.
    pub fn parse(&self, text: &str) -> Result<GenericDensity> {
        let (name, params) = Descriptor::split(text)?;
        let family = self.get(name).ok_or_else(|| {
            let known: Vec<_> = self.names().collect();
            SieveError::Parse(format!(
                "unknown density family `{name}` (known: {})",
                known.join(", ")
            ))
        })?;
        Ok(GenericDensity::from_arc(family.build(params)?))
    }
}

impl Default for DensityRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl fmt::Debug for DensityRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.families.keys()).finish()
    }
}
