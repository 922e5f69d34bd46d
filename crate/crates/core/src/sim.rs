//! Monte Carlo level and power tables.

use std::hash::{DefaultHasher, Hash, Hasher};

use rand::Rng;
use rand_distr::{Distribution as _, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::GsbParams;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::two_sample::{run_tests, TestConfig, TestResult, TwoSampleData};

/// A continuous sampling distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Normal { mean: f64, sd: f64 },
    /// Finite normal mixture; weights must sum to one.
    Mixture { components: Vec<MixtureComponent> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

impl Distribution {
    pub fn normal(mean: f64, sd: f64) -> Self {
        Distribution::Normal { mean, sd }
    }

    /// Standard normal.
    pub fn model0() -> Self {
        Self::normal(0.0, 1.0)
    }

    /// `N(0, (1 + a)²)` with `a = 0.75`.
    pub fn model1() -> Self {
        Self::normal(0.0, 1.75)
    }

    /// `(1 - a) N(-1, 1) + a N(1, 1)` with `a = 0.6`.
    pub fn model2() -> Self {
        Distribution::Mixture {
            components: vec![
                MixtureComponent { weight: 0.4, mean: -1.0, sd: 1.0 },
                MixtureComponent { weight: 0.6, mean: 1.0, sd: 1.0 },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match self {
            Distribution::Normal { mean, sd } => {
                if !(mean.is_finite() && *sd > 0.0 && sd.is_finite()) {
                    return bad(format!("invalid normal N({mean}, {sd}^2)"));
                }
            }
            Distribution::Mixture { components } => {
                if components.is_empty() {
                    return bad("mixture has no components".into());
                }
                let total: f64 = components.iter().map(|c| c.weight).sum();
                if components.iter().any(|c| !(c.weight >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                    return bad(format!("mixture weights must be nonnegative and sum to one, got {total}"));
                }
                for c in components {
                    Distribution::normal(c.mean, c.sd).validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Distribution::Normal { mean, sd } => Normal::new(*mean, *sd).expect("validated").sample(rng),
            Distribution::Mixture { components } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = components.last().expect("validated");
                for c in components {
                    acc += c.weight;
                    if u < acc {
                        chosen = c;
                        break;
                    }
                }
                Normal::new(chosen.mean, chosen.sd).expect("validated").sample(rng)
            }
        }
    }
}

/// Replacement of each sample-0 observation by a draw from `distribution`
/// with probability `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contamination {
    pub epsilon: f64,
    pub distribution: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub model0: Distribution,
    pub model1: Distribution,
    #[serde(default)]
    pub contamination: Option<Contamination>,
    pub n0: usize,
    pub n1: usize,
    pub replications: usize,
    pub level: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    /// The level design: both samples from model 0, 100 each, 200 replications.
    pub fn null(seed: u64) -> Self {
        Self {
            model0: Distribution::model0(),
            model1: Distribution::model0(),
            contamination: None,
            n0: 100,
            n1: 100,
            replications: 200,
            level: 0.05,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model0.validate()?;
        self.model1.validate()?;
        if let Some(c) = &self.contamination {
            c.distribution.validate()?;
            if !(0.0..=0.5).contains(&c.epsilon) {
                return Err(Error::InvalidArgument(format!("contamination must lie in [0, 0.5], got {}", c.epsilon)));
            }
        }
        if self.n0 < 2 || self.n1 < 2 {
            return Err(Error::InvalidArgument("each sample needs at least two observations".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidArgument("at least one replication is required".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidArgument(format!("level must lie in (0, 1), got {}", self.level)));
        }
        Ok(())
    }
}

/// Draws the data of replication `index`.
pub fn sample_scenario(spec: &ScenarioSpec, index: usize) -> Result<TwoSampleData> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, Purpose::Replication, index as u64);
    let y0 = (0..spec.n0)
        .map(|_| match &spec.contamination {
            Some(c) if rng.random_bool(c.epsilon) => c.distribution.sample(&mut rng),
            _ => spec.model0.sample(&mut rng),
        })
        .collect();
    let y1 = (0..spec.n1).map(|_| spec.model1.sample(&mut rng)).collect();
    TwoSampleData::new(y0, y1)
}

/// Hash of the exact bit patterns of a data set.
pub fn data_digest(data: &TwoSampleData) -> u64 {
    let mut h = DefaultHasher::new();
    for y in [data.y0(), data.y1()] {
        y.len().hash(&mut h);
        for v in y {
            v.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

/// Rejection proportions over a `λ × α` grid at fixed `β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionTable {
    pub alphas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub beta: f64,
    pub replications: usize,
    /// `cells[i][j]` is the rejection proportion at `lambdas[i]`, `alphas[j]`.
    pub cells: Vec<Vec<f64>>,
    pub standard_errors: Vec<Vec<f64>>,
    /// Data digest of every replication, shared by all cells.
    pub digests: Vec<u64>,
}

impl RejectionTable {
    pub fn cell(&self, lambda: f64, alpha: f64) -> Option<f64> {
        let i = self.lambdas.iter().position(|&l| l == lambda)?;
        let j = self.alphas.iter().position(|&a| a == alpha)?;
        Some(self.cells[i][j])
    }

    pub fn standard_error(&self, lambda: f64, alpha: f64) -> Option<f64> {
        let i = self.lambdas.iter().position(|&l| l == lambda)?;
        let j = self.alphas.iter().position(|&a| a == alpha)?;
        Some(self.standard_errors[i][j])
    }
}

/// Test results of every replication, one vector per replication in the
/// order of `params`. Each replication draws its data once.
pub fn replicate_tests(spec: &ScenarioSpec, params: &[GsbParams], config: &TestConfig) -> Result<Vec<Vec<TestResult>>> {
    Ok(replicate(spec, params, config)?.into_iter().map(|(_, r)| r).collect())
}

fn replicate(spec: &ScenarioSpec, params: &[GsbParams], config: &TestConfig) -> Result<Vec<(u64, Vec<TestResult>)>> {
    spec.validate()?;
    if params.is_empty() {
        return Err(Error::InvalidArgument("no tuning parameters to evaluate".into()));
    }
    (0..spec.replications)
        .into_par_iter()
        .map(|r| {
            let data = sample_scenario(spec, r)?;
            let cfg = TestConfig {
                level: spec.level,
                seed: rng::child_seed(spec.seed, Purpose::Permutation, r as u64),
                ..*config
            };
            Ok((data_digest(&data), run_tests(&data, params, &cfg)?))
        })
        .collect()
}

/// Rejection table over `lambdas × alphas`; the power-divergence cells are
/// permutation-calibrated unless `config.method` says otherwise.
pub fn run_table(
    spec: &ScenarioSpec,
    alphas: &[f64],
    lambdas: &[f64],
    beta: f64,
    config: &TestConfig,
) -> Result<RejectionTable> {
    if alphas.is_empty() || lambdas.is_empty() {
        return Err(Error::InvalidArgument("tuning grids must be nonempty".into()));
    }
    let mut params = Vec::with_capacity(alphas.len() * lambdas.len());
    for &l in lambdas {
        for &a in alphas {
            params.push(GsbParams::new(a, l, beta)?);
        }
    }
    let reps = replicate(spec, &params, config)?;
    let r = spec.replications as f64;
    let mut cells = vec![vec![0.0; alphas.len()]; lambdas.len()];
    let mut standard_errors = cells.clone();
    for i in 0..lambdas.len() {
        for j in 0..alphas.len() {
            let k = i * alphas.len() + j;
            let hits = reps.iter().filter(|(_, res)| res[k].reject).count() as f64;
            let p = hits / r;
            cells[i][j] = p;
            standard_errors[i][j] = (p * (1.0 - p) / r).sqrt();
        }
    }
    Ok(RejectionTable {
        alphas: alphas.to_vec(),
        lambdas: lambdas.to_vec(),
        beta,
        replications: spec.replications,
        cells,
        standard_errors,
        digests: reps.iter().map(|(d, _)| *d).collect(),
    })
}

/// The α grid of the published tables.
pub fn paper_alphas() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// The λ grid of the published tables.
pub fn paper_lambdas() -> Vec<f64> {
    vec![-0.5, -0.3, -0.2, -0.1, 0.0, 0.25, 0.5, 1.0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic() {
        let spec = ScenarioSpec::null(42);
        let a = sample_scenario(&spec, 3).unwrap();
        let b = sample_scenario(&spec, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_scenario(&spec, 4).unwrap());
        assert_eq!((a.n0(), a.n1()), (100, 100));
    }

    #[test]
    fn contamination_rate() {
        let spec = ScenarioSpec {
            contamination: Some(Contamination {
                epsilon: 0.10,
                distribution: Distribution::normal(50.0, 1.0),
            }),
            ..ScenarioSpec::null(1)
        };
        let total: usize = (0..400)
            .map(|r| sample_scenario(&spec, r).unwrap().y0().iter().filter(|&&v| v > 25.0).count())
            .sum();
        let mean = total as f64 / 400.0;
        // binomial(100, 0.1) mean over 400 draws: sd of the mean is 0.15
        assert!((mean - 10.0).abs() < 0.6, "{mean}");
    }

    #[test]
    fn mixture_moments() {
        let d = Distribution::model2();
        let mut rng = rng::stream(5, Purpose::Replication, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 0.2).abs() < 0.02, "{mean}");
        assert!((var - 1.96).abs() < 0.04, "{var}");
    }

    #[test]
    fn invalid_specs() {
        let mut s = ScenarioSpec::null(0);
        s.replications = 0;
        assert!(s.validate().is_err());
        let s = ScenarioSpec {
            model1: Distribution::Mixture { components: vec![MixtureComponent { weight: 0.5, mean: 0.0, sd: 1.0 }] },
            ..ScenarioSpec::null(0)
        };
        assert!(s.validate().is_err());
    }
}
