//! The two-sample test: plug-in mutual information, null moments,
//! the normalized statistic and its calibration.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::density::{
    bandwidth_silverman, build_grid, epanechnikov_constants, estimate_marginal_x, DensityGrid, Grid,
    KdeBasis, Kernel, KernelConstants, DEFAULT_GRID_POINTS, EPS_DENS,
};
use crate::divergence::{masked_trapezoid, CurvatureWeight, Family, GsbParams, HybridDensity, PreparedHybrid};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

pub const DEFAULT_PERMUTATIONS: usize = 500;
pub const MIN_PERMUTATIONS: usize = 19;
pub const DEFAULT_LEVEL: f64 = 0.05;

/// Two observed samples with their pooled vector and group labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleData {
    y0: Vec<f64>,
    y1: Vec<f64>,
    combined: Vec<f64>,
    labels: Vec<u8>,
}

impl TwoSampleData {
    pub fn new(y0: Vec<f64>, y1: Vec<f64>) -> Result<Self> {
        for (g, y) in [(0u8, &y0), (1, &y1)] {
            if y.is_empty() {
                return Err(Error::OneGroupEmpty(g));
            }
            if y.len() < 2 {
                return Err(Error::DegenerateSample(format!("group {g} needs at least two observations")));
            }
            if let Some(v) = y.iter().find(|v| !v.is_finite()) {
                return Err(Error::DegenerateSample(format!("group {g} contains non-finite value {v}")));
            }
        }
        let mut combined = y0.clone();
        combined.extend_from_slice(&y1);
        let mut labels = vec![0u8; y0.len()];
        labels.resize(combined.len(), 1);
        Ok(Self {
            y0,
            y1,
            combined,
            labels,
        })
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    pub fn y1(&self) -> &[f64] {
        &self.y1
    }

    pub fn combined(&self) -> &[f64] {
        &self.combined
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn n0(&self) -> usize {
        self.y0.len()
    }

    pub fn n1(&self) -> usize {
        self.y1.len()
    }

    pub fn n(&self) -> usize {
        self.combined.len()
    }

    /// The same data with the groups exchanged.
    pub fn swapped(&self) -> Self {
        Self::new(self.y1.clone(), self.y0.clone()).expect("already validated")
    }
}

/// Which closed form produced the null moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyPath {
    GenericGsb,
    PowerDivergence,
    SDivergence,
    L2,
    Bed,
    ItakuraSaito,
}

/// Plug-in centring and scaling constants of the null limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullMoments {
    pub mu: f64,
    pub sigma2: f64,
    pub family_path: FamilyPath,
}

impl NullMoments {
    fn checked(mu: f64, sigma2: f64, family_path: FamilyPath) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) || !mu.is_finite() {
            return Err(Error::DegenerateVariance(sigma2));
        }
        Ok(Self { mu, sigma2, family_path })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Auto,
    Asymptotic,
    Permutation,
}

impl Method {
    /// Permutation for the power-divergence family, asymptotic otherwise.
    pub fn resolve(self, params: &GsbParams) -> Method {
        match self {
            Method::Auto if params.is_power_divergence() => Method::Permutation,
            Method::Auto => Method::Asymptotic,
            m => m,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    #[default]
    Silverman,
    Fixed(f64),
}

/// Settings of a single test run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestConfig {
    pub level: f64,
    pub method: Method,
    pub n_perm: usize,
    pub seed: u64,
    pub grid_points: usize,
    pub bandwidth: Bandwidth,
    pub kernel: Kernel,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            level: DEFAULT_LEVEL,
            method: Method::Auto,
            n_perm: DEFAULT_PERMUTATIONS,
            seed: 0,
            grid_points: DEFAULT_GRID_POINTS,
            bandwidth: Bandwidth::Silverman,
            kernel: Kernel::Epanechnikov,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidArgument(format!("level must lie in (0, 1), got {}", self.level)));
        }
        if let Bandwidth::Fixed(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub params: GsbParams,
    pub i_hat: f64,
    pub moments: NullMoments,
    pub t_hat: f64,
    pub p_value: f64,
    pub method: Method,
    pub reject: bool,
    pub level: f64,
    pub h: f64,
    pub seed: u64,
    pub n0: usize,
    pub n1: usize,
}

/// Kernel estimates of a two-sample data set on a frozen bandwidth and grid.
///
/// The pooled sample is held in sorted order so that the estimates do not
/// depend on which group is called 0; relabelling only touches `labels`.
#[derive(Debug, Clone)]
pub struct FittedSample {
    labels: Vec<u8>,
    n0: usize,
    n1: usize,
    h: f64,
    basis: KdeBasis,
    fy: DensityGrid,
}

impl FittedSample {
    pub fn new(data: &TwoSampleData, config: &TestConfig) -> Result<Self> {
        Self::from_pooled(data.combined(), data.labels(), config)
    }

    /// Fits the estimates to pooled observations with arbitrary labels.
    pub fn from_pooled(y: &[f64], labels: &[u8], config: &TestConfig) -> Result<Self> {
        if y.len() != labels.len() {
            return Err(Error::InvalidArgument(format!("{} labels for {} observations", labels.len(), y.len())));
        }
        let mut order: Vec<usize> = (0..y.len()).collect();
        order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
        let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        let ls: Vec<u8> = order.iter().map(|&i| labels[i]).collect();
        estimate_marginal_x(&ls)?;
        let h = match config.bandwidth {
            Bandwidth::Silverman => bandwidth_silverman(&ys)?,
            Bandwidth::Fixed(h) => h,
        };
        let grid = build_grid(&ys, h, config.grid_points)?;
        let basis = KdeBasis::new(config.kernel, &ys, h, grid)?;
        let fy = basis.marginal();
        let n1 = ls.iter().filter(|&&l| l == 1).count();
        Ok(Self {
            n0: ls.len() - n1,
            n1,
            labels: ls,
            h,
            basis,
            fy,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn grid(&self) -> &Grid {
        self.basis.grid()
    }

    pub fn fy(&self) -> &DensityGrid {
        &self.fy
    }

    pub fn fx(&self) -> [f64; 2] {
        let n = self.n() as f64;
        [self.n0 as f64 / n, self.n1 as f64 / n]
    }

    /// Labels in the internal (sorted) order.
    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn hybrid(&self) -> HybridDensity {
        self.hybrid_with(&self.labels)
    }

    fn hybrid_with(&self, labels: &[u8]) -> HybridDensity {
        HybridDensity::with_marginal(self.fx(), self.basis.slices(labels), self.fy.clone())
            .expect("labels contain both groups")
    }

    fn prepared_with(&self, labels: &[u8]) -> PreparedHybrid {
        let [s0, s1] = self.basis.slices(labels);
        PreparedHybrid::new(self.fx(), [s0.values(), s1.values()], self.fy.values(), self.grid())
    }

    pub fn prepared(&self) -> PreparedHybrid {
        self.prepared_with(&self.labels)
    }

    pub fn moments(&self, params: &GsbParams) -> Result<NullMoments> {
        let fx = self.fx();
        null_moments(params, (fx[0], fx[1]), &self.fy, &epanechnikov_constants())
    }

    /// `Î` for each parameter triple under `n_perm` shared random relabellings.
    pub fn permutation_mi(&self, params: &[GsbParams], n_perm: usize, seed: u64) -> Vec<Vec<f64>> {
        (0..n_perm)
            .into_par_iter()
            .map(|b| {
                let mut labels = self.labels.clone();
                labels.shuffle(&mut rng::stream(seed, Purpose::Permutation, b as u64));
                let prepared = self.prepared_with(&labels);
                params.iter().map(|p| prepared.mi(p)).collect()
            })
            .collect()
    }
}

/// Plug-in GSB mutual information between group label and observation.
pub fn estimate_mi(data: &TwoSampleData, params: &GsbParams, config: &TestConfig) -> Result<f64> {
    Ok(FittedSample::new(data, config)?.prepared().mi(params))
}

/// Trapezoid integral over `{f_y > EPS_DENS}` of `g(f_y)`.
fn support_integral(fy: &DensityGrid, g: impl Fn(f64) -> f64) -> f64 {
    let v = fy.values();
    masked_trapezoid(fy.grid(), v, |j| g(v[j]))
}

fn check_fx(fx: (f64, f64)) -> Result<[f64; 2]> {
    if !(fx.0 > 0.0 && fx.1 > 0.0) || (fx.0 + fx.1 - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("invalid label probabilities {fx:?}")));
    }
    Ok([fx.0, fx.1])
}

/// Null moments for any curvature weight `W(f) = k² f^{2k} φ''(f^k)`:
/// `μ = ½ c1 ∫ Σ_x W(f_x f_y)(1 - f_x)/(f_x f_y) dy`, `σ² = ½ c2 ∫ (Σ_x …)² dy`.
pub fn null_moments_weighted(
    weight: &dyn CurvatureWeight,
    fx: (f64, f64),
    fy: &DensityGrid,
    kc: &KernelConstants,
) -> Result<(f64, f64)> {
    let fx = check_fx(fx)?;
    let inner = |f: f64| {
        let term = |p: f64| {
            let u = p * f;
            weight.weight(u) / u * (1.0 - p)
        };
        term(fx[0]) + term(fx[1])
    };
    let mu = 0.5 * kc.c1 * support_integral(fy, inner);
    let sigma2 = 0.5 * kc.c2 * support_integral(fy, |f| inner(f).powi(2));
    Ok((mu, sigma2))
}

/// Null moments for the GSB family, using the closed form of the matching
/// sub-family where one exists.
pub fn null_moments(
    params: &GsbParams,
    fx: (f64, f64),
    fy: &DensityGrid,
    kc: &KernelConstants,
) -> Result<NullMoments> {
    let [f0, f1] = check_fx(fx)?;
    let (c1, c2) = (kc.c1, kc.c2);
    match params.family() {
        Family::PowerDivergence => {
            let measure = support_integral(fy, |_| 1.0);
            NullMoments::checked(0.5 * c1 * measure, 0.5 * c2 * measure, FamilyPath::PowerDivergence)
        }
        Family::SquaredL2 => {
            let p = f0 * f1;
            NullMoments::checked(
                2.0 * p * c1,
                8.0 * p * p * c2 * support_integral(fy, |f| f * f),
                FamilyPath::L2,
            )
        }
        Family::DensityPower | Family::SDivergence => {
            let a = params.alpha;
            let s = 1.0 + a;
            let mix = f0.powf(a) * f1 + f1.powf(a) * f0;
            NullMoments::checked(
                0.5 * s * c1 * mix * support_integral(fy, |f| f.powf(a)),
                0.5 * s * s * c2 * mix * mix * support_integral(fy, |f| f.powf(2.0 * a)),
                FamilyPath::SDivergence,
            )
        }
        Family::ScaledBregmanExponential => {
            let (b, p) = (params.beta, f0 * f1);
            let e = |f: f64| (b * f0 * f).exp() + (b * f1 * f).exp();
            // Unscaled exponential-divergence moments, then rescaled to the
            // e^{βt} generator used throughout.
            let mu = p * c1 * support_integral(fy, |f| e(f) * f);
            let sigma2 = 2.0 * p * p * c2 * support_integral(fy, |f| (e(f) * f).powi(2));
            NullMoments::checked(mu * b * b / 2.0, sigma2 * b.powi(4) / 4.0, FamilyPath::Bed)
        }
        Family::Gsb => {
            let (mu, sigma2) = null_moments_weighted(params, fx, fy, kc)?;
            NullMoments::checked(mu, sigma2, FamilyPath::GenericGsb)
        }
    }
}

/// Null moments of the Itakura-Saito mutual information.
pub fn null_moments_itakura_saito(fx: (f64, f64), fy: &DensityGrid, kc: &KernelConstants) -> Result<NullMoments> {
    use std::f64::consts::PI;
    let [f0, f1] = check_fx(fx)?;
    let r = f0 / f1 + f1 / f0;
    NullMoments::checked(
        kc.c1 * r * support_integral(fy, |f| 1.0 / f) / (4.0 * PI),
        kc.c2 * r * r * support_integral(fy, |f| 1.0 / (f * f)) / (8.0 * PI * PI),
        FamilyPath::ItakuraSaito,
    )
}

/// `T̂ = n √h (Î - μ̂/(n h)) / σ̂`.
pub fn test_statistic(i_hat: f64, moments: &NullMoments, n: usize, h: f64) -> Result<f64> {
    if !(moments.sigma2 > 0.0) {
        return Err(Error::DegenerateVariance(moments.sigma2));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}")));
    }
    let n = n as f64;
    Ok(n * h.sqrt() * (i_hat - moments.mu / (n * h)) / moments.sigma())
}

/// One-sided upper p-value `1 - Φ(t)`.
pub fn asymptotic_p_value(t_hat: f64) -> f64 {
    Normal::standard().sf(t_hat)
}

/// Upper `c` quantile of the standard normal.
pub fn normal_upper_quantile(c: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - c)
}

/// `(1 + #{Î_b ≥ Î_obs}) / (B + 1)`.
pub fn permutation_p_from(observed: f64, permuted: impl IntoIterator<Item = f64>) -> f64 {
    let (mut count, mut total) = (0usize, 0usize);
    for v in permuted {
        total += 1;
        if v >= observed {
            count += 1;
        }
    }
    (1 + count) as f64 / (total + 1) as f64
}

pub fn permutation_p_value(
    data: &TwoSampleData,
    params: &GsbParams,
    n_perm: usize,
    seed: u64,
    config: &TestConfig,
) -> Result<f64> {
    check_n_perm(n_perm)?;
    let fit = FittedSample::new(data, config)?;
    let observed = fit.prepared().mi(params);
    let perms = fit.permutation_mi(std::slice::from_ref(params), n_perm, seed);
    Ok(permutation_p_from(observed, perms.iter().map(|v| v[0])))
}

fn check_n_perm(n_perm: usize) -> Result<()> {
    if n_perm < MIN_PERMUTATIONS {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_PERMUTATIONS} permutations are needed, got {n_perm}"
        )));
    }
    Ok(())
}

pub fn run_test(data: &TwoSampleData, params: &GsbParams, config: &TestConfig) -> Result<TestResult> {
    Ok(run_tests(data, std::slice::from_ref(params), config)?.remove(0))
}

/// Runs the test for several parameter triples on one fit; permutation-
/// calibrated triples share the same relabellings.
pub fn run_tests(data: &TwoSampleData, params: &[GsbParams], config: &TestConfig) -> Result<Vec<TestResult>> {
    config.validate()?;
    let fit = FittedSample::new(data, config)?;
    run_tests_on(&fit, params, config)
}

pub fn run_tests_on(fit: &FittedSample, params: &[GsbParams], config: &TestConfig) -> Result<Vec<TestResult>> {
    config.validate()?;
    let methods: Vec<Method> = params.iter().map(|p| config.method.resolve(p)).collect();
    let prepared = fit.prepared();
    let observed: Vec<f64> = params.iter().map(|p| prepared.mi(p)).collect();

    let perm_idx: Vec<usize> = (0..params.len()).filter(|&i| methods[i] == Method::Permutation).collect();
    let mut perm_p = vec![f64::NAN; params.len()];
    if !perm_idx.is_empty() {
        check_n_perm(config.n_perm)?;
        let subset: Vec<GsbParams> = perm_idx.iter().map(|&i| params[i]).collect();
        let perms = fit.permutation_mi(&subset, config.n_perm, config.seed);
        for (k, &i) in perm_idx.iter().enumerate() {
            perm_p[i] = permutation_p_from(observed[i], perms.iter().map(|v| v[k]));
        }
    }

    params
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let moments = fit.moments(p)?;
            let t_hat = test_statistic(observed[i], &moments, fit.n(), fit.h())?;
            let p_value = match methods[i] {
                Method::Permutation => perm_p[i],
                _ => asymptotic_p_value(t_hat),
            };
            Ok(TestResult {
                params: *p,
                i_hat: observed[i],
                moments,
                t_hat,
                p_value,
                method: methods[i],
                reject: p_value <= config.level,
                level: config.level,
                h: fit.h(),
                seed: config.seed,
                n0: fit.n0,
                n1: fit.n1,
            })
        })
        .collect()
}

/// Grid points whose density exceeds the numerical floor.
pub fn support_count(fy: &DensityGrid) -> usize {
    fy.values().iter().filter(|&&v| v > EPS_DENS).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_sample(n: usize, mu: f64, sd: f64, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                mu + sd * z
            })
            .collect()
    }

    fn params(a: f64, l: f64, b: f64) -> GsbParams {
        GsbParams::new(a, l, b).unwrap()
    }

    #[test]
    fn data_layout() {
        let d = TwoSampleData::new(vec![1.0, 2.0, 3.0], vec![4.0, 5.0]).unwrap();
        assert_eq!(d.labels(), &[0, 0, 0, 1, 1]);
        assert_eq!(d.combined(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!((d.n0(), d.n1(), d.n()), (3, 2, 5));
        assert!(TwoSampleData::new(vec![1.0], vec![1.0, 2.0]).is_err());
        assert_eq!(TwoSampleData::new(vec![], vec![1.0, 2.0]), Err(Error::OneGroupEmpty(0)));
        assert!(TwoSampleData::new(vec![1.0, f64::NAN], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn statistic_arithmetic() {
        let m = NullMoments { mu: 1.2, sigma2: 0.64, family_path: FamilyPath::GenericGsb };
        let (n, h) = (200usize, 0.3f64);
        assert_eq!(test_statistic(1.2 / (200.0 * 0.3), &m, n, h).unwrap(), 0.0);
        let unit = 1.2 / (200.0 * 0.3) + 0.8 / (200.0 * 0.3f64.sqrt());
        assert!((test_statistic(unit, &m, n, h).unwrap() - 1.0).abs() < 1e-12);
        let expected = 200.0 * 0.3f64.sqrt() * (0.05 - 0.02) / 0.8;
        assert!((test_statistic(0.05, &m, n, h).unwrap() - expected).abs() < 1e-12);
        let zero = NullMoments { sigma2: 0.0, ..m };
        assert!(matches!(test_statistic(0.05, &zero, n, h), Err(Error::DegenerateVariance(_))));
    }

    #[test]
    fn normal_tail() {
        assert_eq!(asymptotic_p_value(0.0), 0.5);
        assert!((asymptotic_p_value(1.6449) - 0.05).abs() < 1e-4);
        assert!(asymptotic_p_value(-10.0) > 1.0 - 1e-15);
        assert!((normal_upper_quantile(0.05) - 1.6448536269514722).abs() < 1e-9);
    }

    #[test]
    fn add_one_rule() {
        assert_eq!(permutation_p_from(0.1, vec![0.2; 19]), 1.0);
        assert_eq!(permutation_p_from(0.3, vec![0.2; 19]), 0.05);
    }

    #[test]
    fn method_resolution() {
        assert_eq!(Method::Auto.resolve(&params(0.0, 0.5, 0.0)), Method::Permutation);
        assert_eq!(Method::Auto.resolve(&params(0.5, 0.0, 0.0)), Method::Asymptotic);
        assert_eq!(Method::Asymptotic.resolve(&params(0.0, 0.5, 0.0)), Method::Asymptotic);
    }

    #[test]
    fn l2_mean_closed_form() {
        let g = Grid::spanning(-4.0, 4.0, 801).unwrap();
        let fy = DensityGrid::from_fn(g, |y| (-y * y / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()).unwrap();
        let kc = epanechnikov_constants();
        let m = null_moments(&params(1.0, 0.0, 0.0), (0.5, 0.5), &fy, &kc).unwrap();
        assert_eq!(m.family_path, FamilyPath::L2);
        assert!((m.mu - 0.3).abs() < 1e-9);
    }

    #[test]
    fn zero_density_is_degenerate() {
        let fy = DensityGrid::zeros(Grid::spanning(0.0, 1.0, 100).unwrap());
        let kc = epanechnikov_constants();
        for p in [params(0.5, 0.3, 0.0), params(0.0, 0.0, 0.0), params(0.3, 0.1, -0.1)] {
            assert!(matches!(
                null_moments(&p, (0.5, 0.5), &fy, &kc),
                Err(Error::DegenerateVariance(_))
            ));
        }
    }

    #[test]
    fn zero_level_is_rejected() {
        let d = TwoSampleData::new(normal_sample(20, 0.0, 1.0, 1), normal_sample(20, 0.0, 1.0, 2)).unwrap();
        let cfg = TestConfig { level: 0.0, ..TestConfig::default() };
        assert!(run_test(&d, &params(0.5, 0.0, 0.0), &cfg).is_err());
    }

    #[test]
    fn group_swap_is_bitwise_invariant() {
        let d = TwoSampleData::new(normal_sample(60, 0.0, 1.0, 3), normal_sample(45, 0.4, 1.3, 4)).unwrap();
        let cfg = TestConfig { n_perm: 99, seed: 11, ..TestConfig::default() };
        let ps = [params(0.5, 0.0, 0.0), params(0.0, -0.3, 0.0), params(0.3, 0.2, -0.05)];
        let a = run_tests(&d, &ps, &cfg).unwrap();
        let b = run_tests(&d.swapped(), &ps, &cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.i_hat, y.i_hat);
            assert_eq!(x.p_value, y.p_value);
            assert_eq!(x.moments, y.moments);
        }
        assert_eq!(a[1].method, Method::Permutation);
    }

    #[test]
    fn separated_samples_reject() {
        let d = TwoSampleData::new(normal_sample(100, 0.0, 1.0, 5), normal_sample(100, 5.0, 1.0, 6)).unwrap();
        let r = run_test(&d, &params(0.5, 0.0, 0.0), &TestConfig::default()).unwrap();
        assert!(r.reject && r.t_hat > 10.0, "{r:?}");
    }
}
