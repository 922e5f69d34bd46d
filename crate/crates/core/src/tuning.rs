//! Data-driven choice of `(α, λ, β)` by minimizing a resampling estimate of
//! the testing risk.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::{GsbParams, PreparedHybrid};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::two_sample::{normal_upper_quantile, run_test, test_statistic, FittedSample, Method, TestConfig, TwoSampleData};

pub const DEFAULT_RESAMPLES: usize = 200;
pub const MIN_RESAMPLES: usize = 50;
/// Initial coordinate-descent steps for `(α, λ, β)`.
pub const DEFAULT_LOCAL_STEPS: [f64; 3] = [0.2, 0.4, 0.05];
const LOCAL_SEARCH_ROUNDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilotDecision {
    pub pilot: GsbParams,
    pub p1: f64,
    pub rejected: bool,
    pub method: Method,
}

/// Runs the pilot test and records its decision at level `c`.
pub fn pilot_decide(data: &TwoSampleData, pilot: &GsbParams, c: f64, config: &TestConfig) -> Result<PilotDecision> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument(format!("level must lie in (0, 1), got {c}")));
    }
    if config.method == Method::Asymptotic && pilot.is_power_divergence() {
        return Err(Error::PowerDivergenceAsymptotic);
    }
    let r = run_test(data, pilot, &TestConfig { level: c, ..*config })?;
    Ok(PilotDecision {
        pilot: *pilot,
        p1: r.p_value,
        rejected: r.p_value <= c,
        method: r.method,
    })
}

/// Bootstrap index sets shared by every candidate.
///
/// After a rejection the groups are resampled separately; otherwise both
/// resamples come from the pooled data.
#[derive(Debug, Clone, PartialEq)]
pub struct ResamplePlan {
    pub from_groups: bool,
    pub draws: Vec<(Vec<usize>, Vec<usize>)>,
}

impl ResamplePlan {
    pub fn new(data: &TwoSampleData, rejected: bool, n_resample: usize, seed: u64) -> Result<Self> {
        if n_resample < MIN_RESAMPLES {
            return Err(Error::InvalidArgument(format!(
                "at least {MIN_RESAMPLES} resamples are needed, got {n_resample}"
            )));
        }
        let (n0, n1, n) = (data.n0(), data.n1(), data.n());
        let (range0, range1) = if rejected { (n0, n1) } else { (n, n) };
        let mut rng = rng::stream(seed, Purpose::Resample, 0);
        let draws = (0..n_resample)
            .map(|_| {
                let a = (0..n0).map(|_| rng.random_range(0..range0)).collect();
                let b = (0..n1).map(|_| rng.random_range(0..range1)).collect();
                (a, b)
            })
            .collect();
        Ok(Self { from_groups: rejected, draws })
    }

    fn materialize(&self, data: &TwoSampleData, b: usize) -> Result<TwoSampleData> {
        let (i0, i1) = &self.draws[b];
        let (s0, s1) = if self.from_groups {
            (data.y0(), data.y1())
        } else {
            (data.combined(), data.combined())
        };
        TwoSampleData::new(i0.iter().map(|&i| s0[i]).collect(), i1.iter().map(|&i| s1[i]).collect())
    }
}

/// Kernel fits of every resample, reused across candidates.
pub struct RiskEvaluator {
    decision: PilotDecision,
    tau: f64,
    fits: Vec<(FittedSample, PreparedHybrid)>,
}

impl RiskEvaluator {
    pub fn new(data: &TwoSampleData, decision: PilotDecision, plan: &ResamplePlan, c: f64, config: &TestConfig) -> Result<Self> {
        let fits = (0..plan.draws.len())
            .into_par_iter()
            .map(|b| {
                let fit = FittedSample::new(&plan.materialize(data, b)?, config)?;
                let prepared = fit.prepared();
                Ok((fit, prepared))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            decision,
            tau: normal_upper_quantile(c),
            fits,
        })
    }

    pub fn decision(&self) -> &PilotDecision {
        &self.decision
    }

    /// `(P̂, R̂)` for one candidate.
    pub fn risk(&self, params: &GsbParams) -> Result<(f64, f64)> {
        let hits = self
            .fits
            .par_iter()
            .map(|(fit, prepared)| {
                let t = test_statistic(prepared.mi(params), &fit.moments(params)?, fit.n(), fit.h())?;
                Ok(usize::from(t > self.tau))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum::<usize>();
        let p_hat = hits as f64 / self.fits.len() as f64;
        let risk = if self.decision.rejected { 1.0 - p_hat } else { p_hat };
        Ok((p_hat, risk))
    }
}

/// Resampling risk of a single candidate.
pub fn estimate_risk(
    data: &TwoSampleData,
    params: &GsbParams,
    decision: &PilotDecision,
    n_resample: usize,
    c: f64,
    seed: u64,
    config: &TestConfig,
) -> Result<(f64, f64)> {
    let plan = ResamplePlan::new(data, decision.rejected, n_resample, seed)?;
    RiskEvaluator::new(data, *decision, &plan, c, config)?.risk(params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Search {
    Grid { candidates: Vec<GsbParams> },
    /// Coordinate descent over `(α, λ, β)` with initial step sizes `steps`,
    /// halved after each round.
    LocalSearch { start: GsbParams, steps: [f64; 3] },
    /// A grid pass followed by coordinate descent from its best point.
    GridThenLocal { candidates: Vec<GsbParams>, steps: [f64; 3] },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningConfig {
    pub test: TestConfig,
    pub n_resample: usize,
    /// Lets power-divergence candidates use the asymptotic rule inside the
    /// risk estimate instead of being dropped.
    pub allow_pd_asymptotic: bool,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            test: TestConfig::default(),
            n_resample: DEFAULT_RESAMPLES,
            allow_pd_asymptotic: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEntry {
    pub params: GsbParams,
    pub p_hat: f64,
    pub risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSurface {
    pub decision: PilotDecision,
    pub entries: Vec<RiskEntry>,
    /// Index of the first entry attaining the minimum risk.
    pub best: usize,
    /// Power-divergence candidates left out of the search.
    pub excluded: Vec<GsbParams>,
}

impl RiskSurface {
    pub fn best_entry(&self) -> &RiskEntry {
        &self.entries[self.best]
    }
}

fn argmin(entries: &[RiskEntry]) -> usize {
    let mut best = 0;
    for (i, e) in entries.iter().enumerate() {
        if e.risk < entries[best].risk {
            best = i;
        }
    }
    best
}

/// Algorithm: pilot decision, shared bootstrap resamples, then the risk of
/// every candidate visited by `search`.
pub fn select_tuning(
    data: &TwoSampleData,
    pilot: &GsbParams,
    search: &Search,
    c: f64,
    seed: u64,
    config: &TuningConfig,
) -> Result<RiskSurface> {
    let decision = pilot_decide(data, pilot, c, &TestConfig { seed, ..config.test })?;
    let plan = ResamplePlan::new(data, decision.rejected, config.n_resample, seed)?;
    let eval = RiskEvaluator::new(data, decision, &plan, c, &config.test)?;
    select_with(&eval, search, config.allow_pd_asymptotic)
}

/// The search step of [`select_tuning`] on a prepared evaluator.
pub fn select_with(eval: &RiskEvaluator, search: &Search, allow_pd: bool) -> Result<RiskSurface> {
    let mut entries = Vec::new();
    let mut excluded = Vec::new();
    let mut visit = |p: GsbParams, entries: &mut Vec<RiskEntry>| -> Result<Option<f64>> {
        if p.is_power_divergence() && !allow_pd {
            if !excluded.contains(&p) {
                excluded.push(p);
            }
            return Ok(None);
        }
        if let Some(e) = entries.iter().find(|e: &&RiskEntry| e.params == p) {
            return Ok(Some(e.risk));
        }
        let (p_hat, risk) = eval.risk(&p)?;
        entries.push(RiskEntry { params: p, p_hat, risk });
        Ok(Some(risk))
    };

    let grid_pass = |candidates: &[GsbParams], entries: &mut Vec<RiskEntry>, visit: &mut dyn FnMut(GsbParams, &mut Vec<RiskEntry>) -> Result<Option<f64>>| -> Result<()> {
        if candidates.is_empty() {
            return Err(Error::InvalidArgument("empty candidate list".into()));
        }
        for p in candidates {
            visit(*p, entries)?;
        }
        Ok(())
    };
    match search {
        Search::Grid { candidates } => grid_pass(candidates, &mut entries, &mut visit)?,
        Search::LocalSearch { start, steps } => descend(*start, *steps, &mut entries, &mut visit)?,
        Search::GridThenLocal { candidates, steps } => {
            grid_pass(candidates, &mut entries, &mut visit)?;
            if !entries.is_empty() {
                let start = entries[argmin(&entries)].params;
                descend(start, *steps, &mut entries, &mut visit)?;
            }
        }
    }
    if entries.is_empty() {
        return Err(Error::PowerDivergenceAsymptotic);
    }
    Ok(RiskSurface {
        decision: *eval.decision(),
        best: argmin(&entries),
        entries,
        excluded,
    })
}

type Visit<'a> = dyn FnMut(GsbParams, &mut Vec<RiskEntry>) -> Result<Option<f64>> + 'a;

/// Coordinate descent with step halving; `α` is kept in `[-1, 1]`.
fn descend(start: GsbParams, steps: [f64; 3], entries: &mut Vec<RiskEntry>, visit: &mut Visit<'_>) -> Result<()> {
    if steps.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(Error::InvalidArgument(format!("invalid step sizes {steps:?}")));
    }
    let mut current = start;
    let mut current_risk = visit(current, entries)?;
    let mut steps = steps;
    for _ in 0..LOCAL_SEARCH_ROUNDS {
        for coord in 0..3 {
            if steps[coord] == 0.0 {
                continue;
            }
            let mut best_move: Option<(GsbParams, f64)> = None;
            for sign in [-1.0, 1.0] {
                let mut v = [current.alpha, current.lambda, current.beta];
                v[coord] += sign * steps[coord];
                v[0] = v[0].clamp(-1.0, 1.0);
                let Ok(cand) = GsbParams::new(v[0], v[1], v[2]) else { continue };
                if let Some(r) = visit(cand, entries)? {
                    let bar = best_move.map(|b| b.1).or(current_risk);
                    if bar.is_none_or(|b| r < b) {
                        best_move = Some((cand, r));
                    }
                }
            }
            if let Some((cand, r)) = best_move {
                current = cand;
                current_risk = Some(r);
            }
        }
        steps.iter_mut().for_each(|s| *s *= 0.5);
    }
    Ok(())
}

/// The power-divergence rows of the published tuning tables.
pub fn pd_grid() -> Vec<GsbParams> {
    [-0.5, -0.3, -0.2, -0.1, 0.0, 0.25, 0.5, 1.0]
        .iter()
        .map(|&l| GsbParams::new(0.0, l, 0.0).expect("valid"))
        .collect()
}

/// The published tuning grid without its power-divergence members.
pub fn gsb_grid() -> Vec<GsbParams> {
    let mut out = Vec::new();
    for beta in [0.0, -0.05] {
        for &lambda in &[-0.5, -0.3, -0.2, -0.1, 0.0, 0.25, 0.5, 1.0] {
            for i in 0..=10 {
                let p = GsbParams::new(i as f64 / 10.0, lambda, beta).expect("valid");
                if !p.is_power_divergence() {
                    out.push(p);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn sample(n: usize, shift: f64, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z + shift
            })
            .collect()
    }

    fn p(a: f64, l: f64, b: f64) -> GsbParams {
        GsbParams::new(a, l, b).unwrap()
    }

    #[test]
    fn plan_sources() {
        let d = TwoSampleData::new(sample(30, 0.0, 1), sample(20, 0.0, 2)).unwrap();
        let sep = ResamplePlan::new(&d, true, 50, 3).unwrap();
        assert!(sep.draws.iter().all(|(a, b)| a.len() == 30 && b.len() == 20
            && a.iter().all(|&i| i < 30) && b.iter().all(|&i| i < 20)));
        let pooled = ResamplePlan::new(&d, false, 50, 3).unwrap();
        assert!(pooled.draws.iter().any(|(_, b)| b.iter().any(|&i| i >= 20)));
        assert!(ResamplePlan::new(&d, true, 49, 3).is_err());
        assert_eq!(sep, ResamplePlan::new(&d, true, 50, 3).unwrap());
    }

    #[test]
    fn risk_extremes() {
        let far = TwoSampleData::new(sample(80, 0.0, 4), sample(80, 6.0, 5)).unwrap();
        let cfg = TestConfig::default();
        let q = p(0.5, 0.0, 0.0);
        let dec = pilot_decide(&far, &q, 0.05, &cfg).unwrap();
        assert!(dec.rejected);
        let (p_hat, risk) = estimate_risk(&far, &q, &dec, 50, 0.05, 9, &cfg).unwrap();
        assert_eq!((p_hat, risk), (1.0, 0.0));
    }

    #[test]
    fn single_candidate_is_best() {
        let d = TwoSampleData::new(sample(60, 0.0, 6), sample(50, 0.3, 7)).unwrap();
        let cfg = TuningConfig { n_resample: 50, ..TuningConfig::default() };
        let s = select_tuning(&d, &p(0.3, 0.0, 0.0), &Search::Grid { candidates: vec![p(0.7, 0.2, -0.05)] }, 0.05, 1, &cfg)
            .unwrap();
        assert_eq!(s.best, 0);
        assert!(s.entries[0].risk >= 0.0 && s.entries[0].risk <= 1.0);
    }

    #[test]
    fn pd_candidates_need_opt_in() {
        let d = TwoSampleData::new(sample(60, 0.0, 6), sample(50, 0.3, 7)).unwrap();
        let cfg = TuningConfig { n_resample: 50, ..TuningConfig::default() };
        let grid = Search::Grid { candidates: vec![p(0.0, 0.5, 0.0), p(0.5, 0.0, 0.0)] };
        let s = select_tuning(&d, &p(0.3, 0.0, 0.0), &grid, 0.05, 1, &cfg).unwrap();
        assert_eq!(s.entries.len(), 1);
        assert_eq!(s.excluded, vec![p(0.0, 0.5, 0.0)]);
        let only_pd = Search::Grid { candidates: vec![p(0.0, 0.5, 0.0)] };
        assert_eq!(select_tuning(&d, &p(0.3, 0.0, 0.0), &only_pd, 0.05, 1, &cfg), Err(Error::PowerDivergenceAsymptotic));
        let opt_in = TuningConfig { allow_pd_asymptotic: true, ..cfg };
        assert_eq!(select_tuning(&d, &p(0.3, 0.0, 0.0), &only_pd, 0.05, 1, &opt_in).unwrap().entries.len(), 1);
        let asym = TestConfig { method: Method::Asymptotic, ..TestConfig::default() };
        assert_eq!(pilot_decide(&d, &p(0.0, 0.5, 0.0), 0.05, &asym), Err(Error::PowerDivergenceAsymptotic));
        assert!(pilot_decide(&d, &p(0.3, 0.0, 0.0), 1.0, &asym).is_err());
    }

    #[test]
    fn local_search_is_deterministic_and_clamped() {
        let d = TwoSampleData::new(sample(70, 0.0, 8), sample(60, 0.45, 9)).unwrap();
        let cfg = TuningConfig { n_resample: 60, ..TuningConfig::default() };
        let search = Search::LocalSearch { start: p(0.9, 0.2, 0.0), steps: [0.4, 0.5, 0.05] };
        let a = select_tuning(&d, &p(0.3, 0.0, 0.0), &search, 0.05, 3, &cfg).unwrap();
        let b = select_tuning(&d, &p(0.3, 0.0, 0.0), &search, 0.05, 3, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.entries.iter().all(|e| e.params.alpha <= 1.0 && e.params.alpha >= -1.0));
        let min = a.entries.iter().map(|e| e.risk).fold(f64::INFINITY, f64::min);
        assert_eq!(a.best_entry().risk, min);
    }
}
