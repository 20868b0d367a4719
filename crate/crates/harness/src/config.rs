//! Experiment configuration, read from a versioned JSON file.

use std::fs;
use std::path::{Path, PathBuf};

use mlbq::designs::DesignKind;
use mlbq::gp::{LengthscaleBounds, DEFAULT_NUGGET};
use mlbq::kernels::{Kernel, Marginal, ProductMeasure, Smoothness};
use mlbq::models::{MultifidelityModel, Ode, OdeConfig, Poisson, PoissonConfig, Step, StepConfig};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    pub estimators: Vec<EstimatorConfig>,
    /// Total budgets `T` in the model's cost units.
    pub budgets: Vec<f64>,
    /// Used by estimators that do not carry their own allocation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<AllocationConfig>,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig {
    Poisson {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        elements: Option<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        costs: Option<Vec<f64>>,
    },
    Ode {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        intervals: Option<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        costs: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        forcing: Option<f64>,
    },
    Step {
        /// Equispaced breakpoint counts per level.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        breakpoints: Option<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        costs: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lo: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hi: Option<f64>,
    },
}

impl ModelConfig {
    pub fn build(&self) -> Result<Box<dyn MultifidelityModel<f64>>> {
        Ok(match self {
            Self::Poisson { elements, costs } => {
                let d = PoissonConfig::default();
                Box::new(Poisson::new(PoissonConfig {
                    elements: elements.clone().unwrap_or(d.elements),
                    costs: costs.clone().unwrap_or(d.costs),
                })?)
            }
            Self::Ode { intervals, costs, forcing } => {
                let d = OdeConfig::default();
                Box::new(Ode::new(OdeConfig {
                    intervals: intervals.clone().unwrap_or(d.intervals),
                    costs: costs.clone().unwrap_or(d.costs),
                    forcing: forcing.unwrap_or(d.forcing),
                })?)
            }
            Self::Step { breakpoints, costs, lo, hi } => {
                let d = StepConfig::default();
                let cfg = match breakpoints {
                    Some(counts) => StepConfig::equispaced(
                        counts,
                        costs.clone().unwrap_or(d.costs),
                        lo.unwrap_or(d.lo),
                        hi.unwrap_or(d.hi),
                    )?,
                    None if lo.is_some() || hi.is_some() => {
                        return Err(HarnessError::config("step bounds need explicit breakpoint counts"))
                    }
                    None => StepConfig { costs: costs.clone().unwrap_or(d.costs), ..d },
                };
                Box::new(Step::new(cfg)?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Mc,
    Mlmc,
    Bq,
    Mlbq,
    SkMlbq,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Mc => "mc",
            Self::Mlmc => "mlmc",
            Self::Bq => "bq",
            Self::Mlbq => "mlbq",
            Self::SkMlbq => "sk-mlbq",
        }
    }

    /// Single-level estimators integrate `f_L` directly.
    pub fn is_multilevel(self) -> bool {
        matches!(self, Self::Mlmc | Self::Mlbq | Self::SkMlbq)
    }

    pub fn is_bayesian(self) -> bool {
        matches!(self, Self::Bq | Self::Mlbq | Self::SkMlbq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignChoice {
    Iid,
    Grid,
    #[serde(alias = "qmc")]
    Halton,
    Lhs,
}

impl From<DesignChoice> for DesignKind {
    fn from(d: DesignChoice) -> Self {
        match d {
            DesignChoice::Iid => DesignKind::Iid,
            DesignChoice::Grid => DesignKind::Grid,
            DesignChoice::Halton => DesignKind::Halton,
            DesignChoice::Lhs => DesignKind::Lhs,
        }
    }
}

/// One component of a sampling mixture: IID points from a box with the given
/// per-dimension bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub bounds: Vec<(f64, f64)>,
}

impl MixtureComponent {
    pub fn measure(&self) -> Result<ProductMeasure<f64>> {
        let m = self.bounds.iter().map(|&(lo, hi)| Marginal::uniform(lo, hi)).collect::<mlbq::Result<Vec<_>>>()?;
        Ok(ProductMeasure::new(m)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Matern12,
    Matern52,
    Se,
    Bm,
}

impl KernelFamily {
    pub fn kernel(self, dim: usize, lengthscale: f64, amplitude: f64) -> Result<Kernel<f64>> {
        Ok(match self {
            Self::Matern12 => Kernel::matern(Smoothness::Half, dim, lengthscale, amplitude)?,
            Self::Matern52 => Kernel::matern(Smoothness::FiveHalves, dim, lengthscale, amplitude)?,
            Self::Se => Kernel::squared_exponential(dim, lengthscale, amplitude)?,
            Self::Bm if dim == 1 => Kernel::brownian_motion(amplitude)?,
            Self::Bm => return Err(HarnessError::config("the Brownian-motion kernel is one-dimensional")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase")]
pub enum Hyperparameters {
    Fixed {
        /// Either one shared value or one per dimension.
        lengthscales: Vec<f64>,
        amplitude: f64,
    },
    /// Per-level maximum marginal likelihood within the bounds.
    Fitted {
        lo: f64,
        hi: f64,
        #[serde(default)]
        per_dimension: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub family: KernelFamily,
    #[serde(flatten)]
    pub hyperparameters: Hyperparameters,
}

impl KernelConfig {
    pub fn bounds(&self) -> Result<Option<LengthscaleBounds<f64>>> {
        match self.hyperparameters {
            Hyperparameters::Fitted { lo, hi, per_dimension } => {
                let b = LengthscaleBounds::new(lo, hi)?;
                Ok(Some(if per_dimension { b.per_dimension() } else { b }))
            }
            Hyperparameters::Fixed { .. } => Ok(None),
        }
    }

    /// The fixed kernel, or the unit-amplitude template a fit starts from.
    pub fn template(&self, dim: usize) -> Result<Kernel<f64>> {
        match &self.hyperparameters {
            Hyperparameters::Fixed { lengthscales, amplitude } => {
                let k = self.family.kernel(dim, lengthscales.first().copied().unwrap_or(1.0), *amplitude)?;
                match (self.family, lengthscales.len()) {
                    (KernelFamily::Bm, _) | (_, 1) => Ok(k),
                    (_, n) if n == dim => Ok(k.with_lengthscales(lengthscales)?),
                    (_, n) => Err(HarnessError::config(format!("{n} lengthscales given for a {dim}-dimensional kernel"))),
                }
            }
            Hyperparameters::Fitted { .. } => self.family.kernel(dim, 1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AllocationConfig {
    /// Explicit counts, one row per budget.
    Table { counts: Vec<Vec<usize>> },
    MlmcFormula { variances: Vec<f64> },
    MlbqFormula {
        norms: Vec<f64>,
        /// Defaults to the kernel's Sobolev smoothness.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        smoothness: Option<f64>,
        #[serde(default = "one")]
        overhead: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub estimator: EstimatorKind,
    /// Name written to the output; defaults to the estimator name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub design: DesignChoice,
    /// IID sampling mixture replacing the integration measure (IID designs only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<Vec<MixtureComponent>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocation: Option<AllocationConfig>,
    /// Cross-level coupling `B` for the separable prior.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nugget: Option<f64>,
}

impl EstimatorConfig {
    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.estimator.name())
    }

    pub fn nugget(&self) -> f64 {
        self.nugget.unwrap_or(DEFAULT_NUGGET)
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_owned(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.estimators.is_empty() {
            return Err(HarnessError::config("no estimators requested"));
        }
        if self.budgets.is_empty() || self.budgets.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(HarnessError::config("budgets must be a non-empty list of positive numbers"));
        }
        if self.replications == 0 {
            return Err(HarnessError::config("replications must be at least 1"));
        }
        let mut labels: Vec<&str> = self.estimators.iter().map(EstimatorConfig::label).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(HarnessError::config("estimator labels must be unique; set \"label\" to disambiguate"));
        }
        for e in &self.estimators {
            let name = e.label();
            if e.estimator.is_bayesian() && e.kernel.is_none() {
                return Err(HarnessError::config(format!("{name}: Bayesian estimators need a kernel")));
            }
            if e.allocation.is_none() && self.allocation.is_none() {
                return Err(HarnessError::config(format!("{name}: no allocation given")));
            }
            if e.sampling.is_some() && e.design != DesignChoice::Iid {
                return Err(HarnessError::config(format!("{name}: sampling mixtures need an IID design")));
            }
            if (e.estimator == EstimatorKind::SkMlbq) != e.coupling.is_some() {
                return Err(HarnessError::config(format!("{name}: a coupling matrix is required for sk-mlbq and only for it")));
            }
            if let Some(AllocationConfig::Table { counts }) = e.allocation.as_ref().or(self.allocation.as_ref()) {
                if counts.len() != self.budgets.len() {
                    return Err(HarnessError::config(format!(
                        "{name}: allocation table has {} rows for {} budgets",
                        counts.len(),
                        self.budgets.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn allocation_for<'a>(&'a self, e: &'a EstimatorConfig) -> &'a AllocationConfig {
        e.allocation.as_ref().or(self.allocation.as_ref()).expect("validated")
    }
}
