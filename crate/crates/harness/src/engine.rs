//! Runs estimator comparisons over budgets and replications.
//!
//! Every (budget, replication) cell draws one design per level for each
//! distinct (design, sample sizes) pair, evaluates the increments once, and
//! hands the same level data to every estimator that asked for it.
//! Deterministic designs are evaluated once per budget and reused.

use std::collections::BTreeMap;

use mlbq::allocation::{integerize_allocation, kernel_smoothness, mlbq_allocation, mlmc_allocation, realized_cost, AllocationInput, Objective};
use mlbq::designs::{derive_seed, generate_design, iid_mixture, DesignKind};
use mlbq::gp::{fit_gp, fit_hyperparameters, LengthscaleBounds, PriorMean};
use mlbq::kernels::{Kernel, ProductMeasure};
use mlbq::linalg::Matrix;
use mlbq::models::MultifidelityModel;
use mlbq::quadrature::{bq_posterior, mc_estimate, mlbq_estimate, mlmc_estimate, sk_mlbq_estimate, LevelData};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::{AllocationConfig, DesignChoice, EstimatorConfig, EstimatorKind, ExperimentConfig};
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub replication: usize,
    pub estimator: String,
    pub budget: f64,
    pub estimate: f64,
    /// Posterior variance; `None` for Monte Carlo estimators.
    pub variance: Option<f64>,
    pub abs_error: f64,
    pub cost: f64,
    pub n_per_level: Vec<usize>,
}

/// Which data a cell fed to which estimators, identified by a SHA-256 of the
/// designs and increments.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLog {
    pub budget: f64,
    pub replication: usize,
    pub data: String,
    pub hash: String,
    pub estimators: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub budget: f64,
    pub replication: usize,
    pub estimator: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub records: Vec<ResultRecord>,
    pub cells: Vec<CellLog>,
    pub failures: Vec<CellFailure>,
    /// `Π[f_L]` that errors are measured against.
    pub reference: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct DataKey {
    design: DesignChoice,
    /// Serialised sampling mixture, if any.
    sampling: Option<String>,
    counts: Vec<usize>,
    multilevel: bool,
}

impl DataKey {
    fn is_deterministic(&self) -> bool {
        self.sampling.is_none() && !DesignKind::from(self.design).is_random()
    }

    fn describe(&self) -> String {
        let counts: Vec<String> = self.counts.iter().map(usize::to_string).collect();
        let mut s = format!("{:?}", self.design).to_lowercase();
        if self.sampling.is_some() {
            s.push_str("-mixture");
        }
        s.push_str(if self.multilevel { " increments " } else { " finest " });
        s.push_str(&counts.join(";"));
        s
    }
}

struct Prepared<'a> {
    cfg: &'a EstimatorConfig,
    counts: Vec<Vec<usize>>,
    sampling: Option<Vec<(f64, ProductMeasure<f64>)>>,
    template: Option<Kernel<f64>>,
    bounds: Option<LengthscaleBounds<f64>>,
    coupling: Option<Matrix<f64>>,
}

type Outcome = std::result::Result<(f64, Option<f64>), String>;

pub struct Experiment<'a> {
    cfg: &'a ExperimentConfig,
    model: Box<dyn MultifidelityModel<f64>>,
    reference: f64,
    estimators: Vec<Prepared<'a>>,
    notes: Vec<String>,
}

impl<'a> Experiment<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let model = cfg.model.build()?;
        let reference = model.reference_integral()?.value;
        let mut notes = Vec::new();
        let estimators = cfg
            .estimators
            .iter()
            .map(|e| prepare(cfg, e, model.as_ref(), &mut notes))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { cfg, model, reference, estimators, notes })
    }

    pub fn model(&self) -> &dyn MultifidelityModel<f64> {
        self.model.as_ref()
    }

    /// Sample sizes of estimator `e` at budget index `b`.
    pub fn counts(&self, e: usize, b: usize) -> &[usize] {
        &self.estimators[e].counts[b]
    }

    fn key(&self, e: usize, b: usize) -> DataKey {
        let p = &self.estimators[e];
        DataKey {
            design: p.cfg.design,
            sampling: p.cfg.sampling.as_ref().map(|s| serde_json::to_string(s).expect("serialisable")),
            counts: p.counts[b].clone(),
            multilevel: p.cfg.estimator.is_multilevel(),
        }
    }

    fn cost(&self, e: usize, b: usize) -> f64 {
        let p = &self.estimators[e];
        let costs = self.model.costs();
        if p.cfg.estimator.is_multilevel() {
            realized_cost(&p.counts[b], costs)
        } else {
            p.counts[b][0] as f64 * costs[costs.len() - 1]
        }
    }

    /// Level data for `key`; `owner` is any estimator in the group, whose
    /// sampling mixture (if any) the whole group shares.
    fn data(&self, key: &DataKey, owner: usize, b: usize, r: usize) -> mlbq::Result<Vec<LevelData<f64>>> {
        let model = self.model.as_ref();
        let finest = model.levels() - 1;
        let sampling = self.estimators[owner].sampling.as_ref();
        key.counts
            .iter()
            .enumerate()
            .map(|(l, &n)| {
                let seed = derive_seed(self.cfg.seed, &[b as u64, r as u64, l as u64]);
                let design = match sampling {
                    Some(mix) => iid_mixture(mix, n, seed)?,
                    None => generate_design(key.design.into(), model.measure(), n, seed)?,
                };
                if key.multilevel {
                    model.level_data(l, &design.points)
                } else {
                    let y = design.points.iter().map(|p| model.eval_level(finest, p)).collect::<mlbq::Result<Vec<_>>>()?;
                    LevelData::new(0, design.points, y, model.costs()[finest])
                }
            })
            .collect()
    }

    fn evaluate(&self, e: usize, levels: &[LevelData<f64>]) -> Outcome {
        self.try_evaluate(e, levels).map_err(|err| err.to_string())
    }

    fn try_evaluate(&self, e: usize, levels: &[LevelData<f64>]) -> mlbq::Result<(f64, Option<f64>)> {
        let p = &self.estimators[e];
        let measure = self.model.measure();
        let nugget = p.cfg.nugget();
        let zero = PriorMean::Zero;
        match p.cfg.estimator {
            EstimatorKind::Mc => Ok((mc_estimate(levels[0].increments())?, None)),
            EstimatorKind::Mlmc => Ok((mlmc_estimate(levels)?, None)),
            EstimatorKind::Bq => {
                let k = self.level_kernel(p, &levels[0])?;
                let fit = fit_gp(&k, levels[0].design(), levels[0].increments(), &zero, nugget)?;
                let post = bq_posterior(&fit, measure)?;
                Ok((post.mean, Some(post.variance)))
            }
            EstimatorKind::Mlbq => {
                let kernels = levels
                    .par_iter()
                    .map(|d| self.level_kernel(p, d).map_err(|err| err.at_level(d.level())))
                    .collect::<mlbq::Result<Vec<_>>>()?;
                let post = mlbq_estimate(levels, &kernels, &vec![zero; levels.len()], measure, nugget)?;
                Ok((post.mean, Some(post.variance)))
            }
            EstimatorKind::SkMlbq => {
                // the base kernel's hyperparameters come from the coarsest level
                let base = self.level_kernel(p, &levels[0])?;
                let b = p.coupling.as_ref().expect("validated");
                let post = sk_mlbq_estimate(levels, &base, b, &vec![zero; levels.len()], measure, nugget)?;
                Ok((post.mean, Some(post.variance)))
            }
        }
    }

    fn level_kernel(&self, p: &Prepared<'_>, d: &LevelData<f64>) -> mlbq::Result<Kernel<f64>> {
        let template = p.template.as_ref().expect("validated");
        match p.bounds {
            Some(bounds) => fit_hyperparameters(template, d.design(), d.increments(), &PriorMean::Zero, bounds, p.cfg.nugget()),
            None => Ok(template.clone()),
        }
    }

    /// Runs every cell. Output order is (budget, replication, estimator) and
    /// does not depend on the thread count.
    pub fn run(&self) -> ExperimentOutput {
        let nb = self.cfg.budgets.len();
        let ne = self.estimators.len();
        let reps = self.cfg.replications;

        let mut groups: Vec<BTreeMap<DataKey, Vec<usize>>> = vec![BTreeMap::new(); nb];
        for (b, g) in groups.iter_mut().enumerate() {
            for e in 0..ne {
                g.entry(self.key(e, b)).or_default().push(e);
            }
        }

        let fixed: Vec<(usize, DataKey)> = groups
            .iter()
            .enumerate()
            .flat_map(|(b, g)| g.keys().filter(|k| k.is_deterministic()).map(move |k| (b, k.clone())))
            .collect();
        let fixed_results: BTreeMap<(usize, DataKey), (String, Vec<Outcome>)> = fixed
            .into_par_iter()
            .map(|(b, key)| {
                let members = &groups[b][&key];
                let res = self.run_group(&key, members, b, 0);
                ((b, key), res)
            })
            .collect();

        let cells: Vec<(usize, usize)> = (0..nb).flat_map(|b| (0..reps).map(move |r| (b, r))).collect();
        let per_cell: Vec<(Vec<CellLog>, Vec<(usize, Outcome)>)> = cells
            .par_iter()
            .map(|&(b, r)| {
                let budget = self.cfg.budgets[b];
                let mut logs = Vec::new();
                let mut outcomes: Vec<(usize, Outcome)> = Vec::new();
                for (key, members) in &groups[b] {
                    let (hash, res) = if key.is_deterministic() {
                        fixed_results[&(b, key.clone())].clone()
                    } else {
                        self.run_group(key, members, b, r)
                    };
                    logs.push(CellLog {
                        budget,
                        replication: r,
                        data: key.describe(),
                        hash,
                        estimators: members.iter().map(|&e| self.estimators[e].cfg.label().to_owned()).collect(),
                    });
                    outcomes.extend(members.iter().copied().zip(res));
                }
                outcomes.sort_by_key(|(e, _)| *e);
                (logs, outcomes)
            })
            .collect();

        let mut out = ExperimentOutput {
            records: Vec::new(),
            cells: Vec::new(),
            failures: Vec::new(),
            reference: self.reference,
            notes: self.notes.clone(),
        };
        for (&(b, r), (logs, outcomes)) in cells.iter().zip(per_cell) {
            let budget = self.cfg.budgets[b];
            out.cells.extend(logs);
            for (e, outcome) in outcomes {
                let label = self.estimators[e].cfg.label().to_owned();
                match outcome {
                    Ok((estimate, variance)) => out.records.push(ResultRecord {
                        replication: r,
                        estimator: label,
                        budget,
                        estimate,
                        variance,
                        abs_error: (estimate - self.reference).abs(),
                        cost: self.cost(e, b),
                        n_per_level: self.estimators[e].counts[b].clone(),
                    }),
                    Err(message) => out.failures.push(CellFailure { budget, replication: r, estimator: label, message }),
                }
            }
        }
        out
    }

    fn run_group(&self, key: &DataKey, members: &[usize], b: usize, r: usize) -> (String, Vec<Outcome>) {
        match self.data(key, members[0], b, r) {
            Ok(levels) => {
                let hash = content_hash(&levels);
                let res = members.par_iter().map(|&e| self.evaluate(e, &levels)).collect();
                (hash, res)
            }
            Err(err) => (String::new(), members.iter().map(|_| Err(err.to_string())).collect()),
        }
    }
}

/// SHA-256 over every level's index, design coordinates and increments.
pub fn content_hash(levels: &[LevelData<f64>]) -> String {
    let mut h = Sha256::new();
    for d in levels {
        h.update((d.level() as u64).to_le_bytes());
        h.update((d.len() as u64).to_le_bytes());
        h.update((d.design().dim() as u64).to_le_bytes());
        for x in d.design().as_flat() {
            h.update(x.to_bits().to_le_bytes());
        }
        for y in d.increments() {
            h.update(y.to_bits().to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

fn prepare<'a>(
    cfg: &'a ExperimentConfig,
    e: &'a EstimatorConfig,
    model: &dyn MultifidelityModel<f64>,
    notes: &mut Vec<String>,
) -> Result<Prepared<'a>> {
    let name = e.label();
    let dim = model.dim();
    let levels = model.levels();
    let template = e.kernel.as_ref().map(|k| k.template(dim)).transpose()?;
    let bounds = e.kernel.as_ref().map(|k| k.bounds()).transpose()?.flatten();
    let sampling = e
        .sampling
        .as_ref()
        .map(|mix| {
            mix.iter()
                .map(|c| {
                    let m = c.measure()?;
                    if m.dim() != dim {
                        return Err(HarnessError::config(format!("{name}: sampling component has dimension {}", m.dim())));
                    }
                    Ok((c.weight, m))
                })
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let coupling = match &e.coupling {
        Some(rows) => {
            let b = Matrix::from_rows(rows)?;
            if b.size() != levels {
                return Err(HarnessError::config(format!("{name}: coupling must be {levels}×{levels}")));
            }
            Some(b)
        }
        None => None,
    };

    let width = if e.estimator.is_multilevel() { levels } else { 1 };
    let costs = model.costs();
    let finest_cost = costs[levels - 1];
    let mut counts = Vec::with_capacity(cfg.budgets.len());
    for (b, &t) in cfg.budgets.iter().enumerate() {
        let row = match cfg.allocation_for(e) {
            AllocationConfig::Table { counts } => {
                let row = counts[b].clone();
                if row.len() != width || row.contains(&0) {
                    return Err(HarnessError::config(format!(
                        "{name}: table row {b} must hold {width} positive count(s), got {row:?}"
                    )));
                }
                row
            }
            AllocationConfig::MlmcFormula { variances } => {
                if e.estimator.is_multilevel() {
                    mlmc_allocation(&AllocationInput::mlmc(variances.clone(), costs.to_vec(), t)?)?.counts
                } else {
                    single_level(t, finest_cost)?
                }
            }
            AllocationConfig::MlbqFormula { norms, smoothness, overhead } => {
                if e.estimator.is_multilevel() {
                    let tau = match (smoothness, &template) {
                        (Some(s), _) => *s,
                        (None, Some(k)) => kernel_smoothness(k)?,
                        (None, None) => {
                            return Err(HarnessError::config(format!("{name}: mlbq-formula needs a smoothness")))
                        }
                    };
                    let inp = AllocationInput::mlbq(norms.clone(), costs.to_vec(), t, tau, dim, *overhead)?;
                    mlbq_allocation(&inp)?.counts
                } else {
                    single_level(t / overhead, finest_cost)?
                }
            }
        };
        counts.push(row);
    }

    if e.design == DesignChoice::Grid && dim > 1 {
        for row in counts.iter_mut() {
            for n in row.iter_mut() {
                let k = ((*n as f64).powf(1.0 / dim as f64).round() as usize).max(1);
                let m = k.pow(dim as u32);
                if m != *n {
                    notes.push(format!("{name}: grid size {} replaced by {m} = {k}^{dim}", *n));
                    *n = m;
                }
            }
        }
    }
    Ok(Prepared { cfg: e, counts, sampling, template, bounds, coupling })
}

fn single_level(budget: f64, cost: f64) -> Result<Vec<usize>> {
    let obj = Objective { weights: vec![1.0], power: 1.0 };
    Ok(integerize_allocation(&[budget / cost], &[cost], budget, &obj)?)
}

/// Builds and runs an experiment, optionally on a dedicated pool of `jobs` threads.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<ExperimentOutput> {
    let exp = Experiment::new(cfg)?;
    match jobs {
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j.max(1))
                .build()
                .map_err(|e| HarnessError::config(e.to_string()))?;
            Ok(pool.install(|| exp.run()))
        }
        None => Ok(exp.run()),
    }
}
