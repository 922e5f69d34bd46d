//! Influence functions of the mutual-information functional under the null,
//! gross-error sensitivity, local power and breakdown bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::density::{epanechnikov_constants, DensityGrid, Grid, EPS_DENS};
use crate::divergence::{mi_hybrid, CurvatureWeight, GsbParams, HybridDensity};
use crate::error::{Error, Result};
use crate::two_sample::{normal_upper_quantile, null_moments};

pub const DEFAULT_ETA: f64 = 0.05;

/// The level influence function vanishes identically under the null.
pub const LEVEL_INFLUENCE: f64 = 0.0;

/// Default range of contamination points for gross-error sensitivity.
pub const DEFAULT_Y_RANGE: (f64, f64) = (-20.0, 20.0);

/// Tolerance on `λ = 1/(α - 1)` for membership of region S2.
pub const S2_TOL: f64 = 1e-9;

/// A point mass at `(x0, y0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationPoint {
    pub x0: u8,
    pub y0: f64,
}

impl ContaminationPoint {
    pub fn new(x0: u8, y0: f64) -> Result<Self> {
        if x0 > 1 || !y0.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid contamination point ({x0}, {y0})")));
        }
        Ok(Self { x0, y0 })
    }
}

/// How the continuous point mass is realized on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeltaPolicy {
    /// A uniform density of width `eta` centred at the point.
    Bump { eta: f64 },
    /// Every integral against a power of the delta collapses to the
    /// integrand at the point.
    Evaluation,
}

impl Default for DeltaPolicy {
    fn default() -> Self {
        DeltaPolicy::Bump { eta: DEFAULT_ETA }
    }
}

/// Regions of tuning space where the second-order influence is damped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    S1,
    S2,
    S3,
    S4,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub params: GsbParams,
    pub x0: u8,
    /// `(y0, IF2)` pairs in increasing `y0`.
    pub if2_curve: Vec<(f64, f64)>,
    /// Evaluation points where the policy could not be realized.
    pub skipped: Vec<f64>,
    pub ges2: f64,
    pub region: Region,
    pub policy: DeltaPolicy,
    pub breakdown: Option<f64>,
}

/// Standard normal `Y` on `grid`, independent of a label with probabilities `fx`.
pub fn normal_null(fx: [f64; 2], grid: Grid) -> Result<HybridDensity> {
    let n = Normal::standard();
    HybridDensity::product(fx, DensityGrid::from_fn(grid, |y| n.pdf(y))?)
}

/// A grid fine enough to resolve the default bump over the default range.
pub fn robustness_grid() -> Grid {
    Grid::spanning(DEFAULT_Y_RANGE.0, DEFAULT_Y_RANGE.1, 8001).expect("static grid")
}

/// Grid window `[lo, hi)` and normalized height of a uniform bump.
fn bump_window(grid: &Grid, fy: &[f64], y0: f64, eta: f64) -> Result<(usize, usize, f64)> {
    if !(eta > 0.0) || eta >= 0.5 * (grid.end() - grid.start()) {
        return Err(Error::PolicyDomain(format!("bump width {eta} does not fit the grid")));
    }
    // Centred on the nearest grid point so the window is symmetric in y0.
    let c = ((y0 - grid.start()) / grid.spacing()).round();
    let half = (0.5 * eta / grid.spacing()).round();
    if half < 1.0 {
        return Err(Error::PolicyDomain(format!("grid spacing {} cannot resolve width {eta}", grid.spacing())));
    }
    if !(c - half >= 0.0 && c + half < grid.len() as f64) {
        return Err(Error::PolicyDomain(format!("bump around {y0} leaves the grid")));
    }
    let (lo, hi) = ((c - half) as usize, (c + half) as usize + 1);
    if fy[lo..hi].iter().any(|&v| v <= EPS_DENS) {
        return Err(Error::PolicyDomain(format!("density vanishes under the bump around {y0}")));
    }
    // Zero neighbours on both sides give every covered point a full trapezoid weight.
    let mass = (hi - lo) as f64 * grid.spacing();
    Ok((lo, hi, 1.0 / mass))
}

/// The bump as a grid density.
pub fn bump_density(grid: &Grid, y0: f64, eta: f64) -> Result<DensityGrid> {
    let ones = vec![1.0; grid.len()];
    let (lo, hi, height) = bump_window(grid, &ones, y0, eta)?;
    let mut v = vec![0.0; grid.len()];
    v[lo..hi].iter_mut().for_each(|x| *x = height);
    DensityGrid::new(*grid, v)
}

fn require_product(hd: &HybridDensity) -> Result<()> {
    let scale = hd.fy().values().iter().cloned().fold(0.0, f64::max);
    if hd.product_gap() > 1e-12 * scale.max(1.0) {
        return Err(Error::InvalidArgument("hybrid density is not of product form".into()));
    }
    Ok(())
}

/// `c_x` in `U_x(y) = c_x (1 - δ(y)/f_y(y))`.
fn label_factor(fx: [f64; 2], x0: u8, x: usize) -> f64 {
    if x == usize::from(x0) {
        (1.0 - fx[x]) / fx[x]
    } else {
        -1.0
    }
}

/// Second-order influence function of the mutual information under a
/// product-form null, for any curvature weight.
pub fn if2_weighted(
    weight: &(dyn CurvatureWeight + Sync),
    hd: &HybridDensity,
    t0: ContaminationPoint,
    policy: DeltaPolicy,
) -> Result<f64> {
    require_product(hd)?;
    let grid = hd.grid();
    let fx = hd.fx();
    let fy = hd.fy().values();
    let h = grid.spacing();
    let n = grid.len();
    let tw = |j: usize| if j == 0 || j + 1 == n { 0.5 * h } else { h };
    let mut total = 0.0;
    match policy {
        DeltaPolicy::Bump { eta } => {
            let (lo, hi, height) = bump_window(grid, fy, t0.y0, eta)?;
            for x in 0..2 {
                let c2 = label_factor(fx, t0.x0, x).powi(2);
                let mut acc = 0.0;
                for (j, &f) in fy.iter().enumerate() {
                    if f <= EPS_DENS {
                        continue;
                    }
                    let b = if (lo..hi).contains(&j) { height } else { 0.0 };
                    acc += tw(j) * weight.weight(fx[x] * f) * (1.0 - b / f).powi(2);
                }
                total += c2 * acc;
            }
        }
        DeltaPolicy::Evaluation => {
            let f0 = hd.fy().interpolate(t0.y0);
            if f0 <= EPS_DENS {
                return Err(Error::PolicyDomain(format!("density vanishes at {}", t0.y0)));
            }
            for x in 0..2 {
                let c2 = label_factor(fx, t0.x0, x).powi(2);
                let mut acc = 0.0;
                for (j, &f) in fy.iter().enumerate() {
                    if f > EPS_DENS {
                        acc += tw(j) * weight.weight(fx[x] * f);
                    }
                }
                let w0 = weight.weight(fx[x] * f0);
                total += c2 * (acc - 2.0 * w0 / f0 + w0 / (f0 * f0));
            }
        }
    }
    Ok(total)
}

/// Second-order influence function of the GSB mutual information.
pub fn if2_null(params: &GsbParams, hd: &HybridDensity, t0: ContaminationPoint, policy: DeltaPolicy) -> Result<f64> {
    if2_weighted(params, hd, t0, policy)
}

/// The hybrid density contaminated by `ε` times a bump at `t0`.
pub fn contaminated_hybrid(hd: &HybridDensity, t0: ContaminationPoint, eta: f64, eps: f64) -> Result<HybridDensity> {
    let grid = hd.grid();
    let (lo, hi, height) = bump_window(grid, hd.fy().values(), t0.y0, eta)?;
    let fx = hd.fx();
    let mut fx_eps = [(1.0 - eps) * fx[0], (1.0 - eps) * fx[1]];
    fx_eps[usize::from(t0.x0)] += eps;
    let slice = |x: usize| -> Result<DensityGrid> {
        let mut v: Vec<f64> = hd.joint(x as u8).values().iter().map(|g| (1.0 - eps) * g).collect();
        if x == usize::from(t0.x0) {
            v[lo..hi].iter_mut().for_each(|g| *g += eps * height);
        }
        DensityGrid::new(*grid, v).map_err(|_| {
            Error::PolicyDomain(format!("contamination {eps} at {} makes the density negative", t0.y0))
        })
    };
    HybridDensity::new(fx_eps, slice(0)?, slice(1)?)
}

/// Five-point central difference of `ε ↦ I(f^ε)` at zero under a bump of
/// width `eta`; needs the density to stay nonnegative at `±2 eps_step`.
pub fn if1_check_bump(
    params: &GsbParams,
    hd: &HybridDensity,
    t0: ContaminationPoint,
    eps_step: f64,
    eta: f64,
) -> Result<f64> {
    if !(eps_step > 0.0 && eps_step < 0.5) {
        return Err(Error::InvalidArgument(format!("step must lie in (0, 0.5), got {eps_step}")));
    }
    let at = |e: f64| -> Result<f64> { Ok(mi_hybrid(&contaminated_hybrid(hd, t0, eta, e)?, params)) };
    let (p1, m1) = (at(eps_step)?, at(-eps_step)?);
    let (p2, m2) = (at(2.0 * eps_step)?, at(-2.0 * eps_step)?);
    Ok((8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * eps_step))
}

/// First-order influence check with the default bump width; close to zero
/// under the null.
pub fn if1_null_check(params: &GsbParams, hd: &HybridDensity, t0: ContaminationPoint, eps_step: f64) -> Result<f64> {
    if1_check_bump(params, hd, t0, eps_step, DEFAULT_ETA)
}

pub fn region_classify(params: &GsbParams) -> Region {
    let GsbParams { alpha, lambda, beta } = *params;
    if alpha > 0.0 && beta == 0.0 {
        Region::S1
    } else if alpha > 0.0 && beta != 0.0 && alpha != 1.0 && (lambda - 1.0 / (alpha - 1.0)).abs() <= S2_TOL {
        Region::S2
    } else if alpha == -1.0 && lambda > -0.25 && beta != 0.0 {
        Region::S3
    } else if alpha > 0.0 && lambda * (1.0 - alpha) > -0.5 && beta != 0.0 {
        Region::S4
    } else {
        Region::Unstable
    }
}

/// IF2 over `n_eval` equally spaced contamination points in `y_range`.
/// Points where the policy cannot be realized are recorded and skipped.
pub fn ges_curve(
    params: &GsbParams,
    hd: &HybridDensity,
    x0: u8,
    y_range: (f64, f64),
    n_eval: usize,
    policy: DeltaPolicy,
) -> Result<RobustnessReport> {
    let (a, b) = y_range;
    if !(a.is_finite() && b.is_finite() && a < b) || n_eval < 2 {
        return Err(Error::InvalidArgument(format!("invalid range {y_range:?} with {n_eval} points")));
    }
    if x0 > 1 {
        return Err(Error::InvalidArgument(format!("label {x0} is not 0 or 1")));
    }
    require_product(hd)?;
    let step = (b - a) / (n_eval - 1) as f64;
    let values: Vec<(f64, Result<f64>)> = (0..n_eval)
        .into_par_iter()
        .map(|i| {
            let y0 = a + i as f64 * step;
            (y0, if2_null(params, hd, ContaminationPoint { x0, y0 }, policy))
        })
        .collect();
    let mut if2_curve = Vec::new();
    let mut skipped = Vec::new();
    for (y0, r) in values {
        match r {
            Ok(v) => if2_curve.push((y0, v)),
            Err(Error::PolicyDomain(_)) => skipped.push(y0),
            Err(e) => return Err(e),
        }
    }
    if if2_curve.is_empty() {
        return Err(Error::PolicyDomain("no contamination point in range could be evaluated".into()));
    }
    let ges2 = if2_curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(RobustnessReport {
        params: *params,
        x0,
        if2_curve,
        skipped,
        ges2,
        region: region_classify(params),
        policy,
        breakdown: breakdown_bound(params),
    })
}

/// Population `σ_φ` of a null hybrid density.
pub fn null_sigma(params: &GsbParams, hd: &HybridDensity) -> Result<f64> {
    let fx = hd.fx();
    Ok(null_moments(params, (fx[0], fx[1]), hd.fy(), &epanechnikov_constants())?.sigma())
}

/// Slope `IF2 / (2 σ_φ)` of the asymptotic power at contiguous alternatives.
pub fn local_power_slope(params: &GsbParams, hd: &HybridDensity, t0: ContaminationPoint, policy: DeltaPolicy) -> Result<f64> {
    let sigma = null_sigma(params, hd)?;
    Ok(if2_null(params, hd, t0, policy)? / (2.0 * sigma))
}

/// `1 - Φ(τ_c - d² S)`.
pub fn local_power(slope: f64, d: f64, c: f64) -> f64 {
    Normal::standard().sf(normal_upper_quantile(c) - d * d * slope)
}

/// `(d/σ) IF2 φ₁(τ_c - d² IF2/(2σ))`.
pub fn pif_from(if2: f64, sigma: f64, d: f64, c: f64) -> f64 {
    let tau = normal_upper_quantile(c);
    d / sigma * if2 * Normal::standard().pdf(tau - d * d * if2 / (2.0 * sigma))
}

/// Power influence function with contamination at the alternative's own
/// direction.
pub fn pif(params: &GsbParams, hd: &HybridDensity, t1: ContaminationPoint, d: f64, c: f64, policy: DeltaPolicy) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::InvalidArgument(format!("shift must be nonnegative, got {d}")));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument(format!("level must lie in (0, 1), got {c}")));
    }
    let sigma = null_sigma(params, hd)?;
    Ok(pif_from(if2_null(params, hd, t1, policy)?, sigma, d, c))
}

/// Closed-form lower bound on the asymptotic breakdown point for `β = 0`:
/// `min{r^{1/A}, 1 - r^{1/A}, ½}` with `r = B/(1 + α)`.
pub fn breakdown_bound(params: &GsbParams) -> Option<f64> {
    if params.beta != 0.0 || params.alpha <= -1.0 {
        return None;
    }
    let (a, b) = (params.a(), params.b());
    if b < 0.0 || a < 0.0 {
        return None;
    }
    if a == 0.0 {
        // r = 1 on this manifold, so 1 - r^{1/A} is zero.
        return Some(0.0);
    }
    let e = (b / (1.0 + params.alpha)).powf(1.0 / a);
    Some(e.min(1.0 - e).min(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, l: f64, b: f64) -> GsbParams {
        GsbParams::new(a, l, b).unwrap()
    }

    fn null() -> HybridDensity {
        normal_null([0.5, 0.5], robustness_grid()).unwrap()
    }

    #[test]
    fn regions() {
        assert_eq!(region_classify(&p(0.5, 2.0, 0.0)), Region::S1);
        assert_eq!(region_classify(&p(0.0, 0.0, 0.0)), Region::Unstable);
        assert_eq!(region_classify(&p(-1.0, 0.0, -0.05)), Region::S3);
        assert_eq!(region_classify(&p(0.5, -2.0, 0.3)), Region::S2);
        assert_eq!(region_classify(&p(0.5, 0.2, -0.1)), Region::S4);
        assert_eq!(region_classify(&p(0.5, -1.5, -0.1)), Region::Unstable);
        assert_eq!(region_classify(&p(-1.0, -0.25, -0.1)), Region::Unstable);
    }

    #[test]
    fn breakdown_examples() {
        assert_eq!(breakdown_bound(&p(0.0, 0.0, 0.0)), Some(0.0));
        assert!((breakdown_bound(&p(0.5, 0.0, 0.0)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(breakdown_bound(&p(1.0, 0.0, 0.0)), Some(0.5));
        assert!((breakdown_bound(&p(0.0, -0.5, 0.0)).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(breakdown_bound(&p(0.0, -1.0, 0.0)), Some(0.0));
        assert_eq!(breakdown_bound(&p(0.5, 0.0, -0.05)), None);
        assert_eq!(breakdown_bound(&p(0.0, 0.5, 0.0)), None);
    }

    #[test]
    fn bump_has_unit_mass() {
        let g = robustness_grid();
        for y0 in [0.0, 0.0013, -3.7] {
            let b = bump_density(&g, y0, 0.05).unwrap();
            assert!((b.integral() - 1.0).abs() < 1e-12);
        }
        assert!(matches!(bump_density(&g, 19.99, 0.05), Err(Error::PolicyDomain(_))));
    }

    #[test]
    fn if2_is_second_derivative_of_contaminated_mi() {
        let hd = null();
        let t0 = ContaminationPoint::new(0, 0.7).unwrap();
        for q in [p(0.5, 0.0, 0.0), p(0.3, 0.4, -0.1)] {
            let if2 = if2_null(&q, &hd, t0, DeltaPolicy::default()).unwrap();
            let e = 1e-4;
            let d = |eps: f64| mi_hybrid(&contaminated_hybrid(&hd, t0, 0.05, eps).unwrap(), &q);
            let fd = (d(e) - 2.0 * d(0.0) + d(-e)) / (e * e);
            assert!((fd - if2).abs() < 1e-3 * if2, "{fd} vs {if2}");
        }
    }

    #[test]
    fn if2_symmetries() {
        let hd = null();
        let q = p(0.5, 0.3, -0.05);
        let pol = DeltaPolicy::default();
        let a = if2_null(&q, &hd, ContaminationPoint { x0: 0, y0: 1.3 }, pol).unwrap();
        let b = if2_null(&q, &hd, ContaminationPoint { x0: 1, y0: 1.3 }, pol).unwrap();
        let c = if2_null(&q, &hd, ContaminationPoint { x0: 0, y0: -1.3 }, pol).unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
        assert!((a - c).abs() <= 1e-6 * a);
    }

    #[test]
    fn evaluation_policy_matches_narrow_bump_in_the_smooth_part() {
        // Under the evaluation rule the δ² term is replaced by a point value,
        // so only the linear-in-δ part is comparable to the bump.
        let hd = null();
        let q = p(1.0, 0.0, 0.0);
        let t0 = ContaminationPoint { x0: 0, y0: 0.4 };
        let ev = if2_null(&q, &hd, t0, DeltaPolicy::Evaluation).unwrap();
        // For L2, W = 2 f², so the closed form is available.
        let fy0 = Normal::standard().pdf(0.4);
        let int_fy2 = 1.0 / (2.0 * std::f64::consts::PI.sqrt());
        let per_x = |fx: f64| 2.0 * fx * fx * (int_fy2 - 2.0 * fy0 + 1.0);
        let expected = per_x(0.5) * 1.0 + per_x(0.5) * 1.0;
        assert!((ev - expected).abs() < 1e-8, "{ev} vs {expected}");
    }

    #[test]
    fn pif_and_power() {
        let v = pif_from(1.0, 1.0, 1.0, 0.05);
        let expected = Normal::standard().pdf(normal_upper_quantile(0.05) - 0.5);
        assert!((v - expected).abs() < 1e-15);
        assert_eq!(pif_from(1.0, 1.0, 0.0, 0.05), 0.0);
        assert_eq!(pif_from(0.0, 1.0, 1.0, 0.05), 0.0);
        let lp = local_power(3.0, 0.0, 0.05);
        assert!((lp - 0.05).abs() < 1e-9, "{lp}");
        assert!(local_power(2.0, 1.0, 0.05) > local_power(1.0, 1.0, 0.05));
    }
}
