//! Extended Bregman divergences between tabulated densities, the generalized
//! S-Bregman (GSB) family, and mutual information in the hybrid setup.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::{DensityGrid, Grid, EPS_DENS};
use crate::error::{Error, Result};

/// `|A|` or `|B|` at or below this switches to the closed-form limits.
pub const LIMIT_TOL: f64 = 1e-7;

const FAMILY_TOL: f64 = 1e-12;

/// GSB tuning triple `(α, λ, β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsbParams {
    pub alpha: f64,
    pub lambda: f64,
    pub beta: f64,
}

/// Named sub-families recovered at particular tuning parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    PowerDivergence,
    DensityPower,
    SquaredL2,
    SDivergence,
    ScaledBregmanExponential,
    Gsb,
}

impl GsbParams {
    pub fn new(alpha: f64, lambda: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && lambda.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tuning parameters must be finite: ({alpha}, {lambda}, {beta})"
            )));
        }
        if alpha < -1.0 {
            return Err(Error::InvalidArgument(format!("alpha must be >= -1, got {alpha}")));
        }
        Ok(Self { alpha, lambda, beta })
    }

    /// `A = 1 + λ(1 - α)`.
    #[inline]
    pub fn a(&self) -> f64 {
        1.0 + self.lambda * (1.0 - self.alpha)
    }

    /// `B = α - λ(1 - α)`.
    #[inline]
    pub fn b(&self) -> f64 {
        self.alpha - self.lambda * (1.0 - self.alpha)
    }

    /// Index of the extended Bregman divergence (`k = A`).
    pub fn k(&self) -> f64 {
        self.a()
    }

    fn zero(v: f64) -> bool {
        v.abs() <= FAMILY_TOL
    }

    pub fn is_power_divergence(&self) -> bool {
        Self::zero(self.alpha) && Self::zero(self.beta)
    }

    pub fn is_s_divergence(&self) -> bool {
        Self::zero(self.beta)
    }

    pub fn is_density_power(&self) -> bool {
        Self::zero(self.lambda) && Self::zero(self.beta)
    }

    pub fn is_squared_l2(&self) -> bool {
        Self::zero(self.beta) && Self::zero(self.alpha - 1.0) && Self::zero(self.lambda)
    }

    pub fn is_scaled_bed(&self) -> bool {
        Self::zero(self.alpha + 1.0) && Self::zero(self.lambda) && !Self::zero(self.beta)
    }

    /// Most specific family tag.
    pub fn family(&self) -> Family {
        if self.is_power_divergence() {
            Family::PowerDivergence
        } else if self.is_squared_l2() {
            Family::SquaredL2
        } else if self.is_density_power() {
            Family::DensityPower
        } else if self.is_s_divergence() {
            Family::SDivergence
        } else if self.is_scaled_bed() {
            Family::ScaledBregmanExponential
        } else {
            Family::Gsb
        }
    }

    /// `k² f^{2k} φ''(f^k)` for the GSB generator, in the closed form that
    /// stays valid on the `A = 0` and `B = 0` manifolds.
    pub fn curvature_weight(&self, f: f64) -> f64 {
        let a = self.a();
        let s = 1.0 + self.alpha;
        let ln_f = f.max(EPS_DENS).ln();
        let poly = s * (s * ln_f).exp();
        if self.beta == 0.0 {
            return poly;
        }
        let fa = (a * ln_f).exp();
        (a * self.beta).powi(2) * (self.beta * fa).exp() * fa * fa + poly
    }
}

impl fmt::Display for GsbParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(alpha={}, lambda={}, beta={})", self.alpha, self.lambda, self.beta)
    }
}

/// `W(f) = k² f^{2k} φ''(f^k)`, the weight that drives the null moments and
/// second-order influence function of an extended Bregman divergence.
pub trait CurvatureWeight {
    fn weight(&self, f: f64) -> f64;
}

impl CurvatureWeight for GsbParams {
    fn weight(&self, f: f64) -> f64 {
        self.curvature_weight(f)
    }
}

impl CurvatureWeight for ExtendedBregman {
    fn weight(&self, f: f64) -> f64 {
        self.curvature_weight(f)
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A convex generator `φ` with its first two derivatives.
#[derive(Clone)]
pub struct PhiGenerator {
    value: RealFn,
    d1: RealFn,
    d2: RealFn,
    description: String,
}

impl PhiGenerator {
    pub fn new(
        description: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
            description: description.into(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    pub fn d1(&self, t: f64) -> f64 {
        (self.d1)(t)
    }

    pub fn d2(&self, t: f64) -> f64 {
        (self.d2)(t)
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

impl fmt::Debug for PhiGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiGenerator")
            .field("description", &self.description)
            .finish_non_exhaustive()
    }
}

/// `φ(t) = e^{βt} + t^{1 + B/A} / B`, the GSB generator (used with `k = A`).
pub fn phi_gsb(params: &GsbParams) -> Result<PhiGenerator> {
    let (a, b, beta) = (params.a(), params.b(), params.beta);
    if a.abs() <= LIMIT_TOL || b.abs() <= LIMIT_TOL {
        return Err(Error::LimitCase {
            alpha: params.alpha,
            lambda: params.lambda,
            beta,
            a,
            b,
        });
    }
    let p = 1.0 + b / a;
    Ok(PhiGenerator::new(
        format!("gsb {params}"),
        move |t| (beta * t).exp() + t.powf(p) / b,
        move |t| beta * (beta * t).exp() + p / b * t.powf(p - 1.0),
        move |t| beta * beta * (beta * t).exp() + p * (p - 1.0) / b * t.powf(p - 2.0),
    ))
}

/// `φ(t) = -ln(t) / (2π)`; the Itakura-Saito member, used with `k = 1`.
pub fn phi_itakura_saito() -> PhiGenerator {
    use std::f64::consts::PI;
    PhiGenerator::new(
        "itakura-saito",
        |t| -t.ln() / (2.0 * PI),
        |t| -1.0 / (2.0 * PI * t),
        |t| 1.0 / (2.0 * PI * t * t),
    )
}

/// An extended Bregman divergence: generator plus positive index.
#[derive(Debug, Clone)]
pub struct ExtendedBregman {
    pub phi: PhiGenerator,
    pub k: f64,
}

impl ExtendedBregman {
    pub fn new(phi: PhiGenerator, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!("index k must be positive, got {k}")));
        }
        Ok(Self { phi, k })
    }

    pub fn itakura_saito() -> Self {
        Self {
            phi: phi_itakura_saito(),
            k: 1.0,
        }
    }

    /// Pointwise Bregman gap `φ(g^k) - φ(f^k) - (g^k - f^k) φ'(f^k)`.
    pub fn pointwise(&self, g: f64, f: f64) -> f64 {
        let gk = (self.k * g.max(EPS_DENS).ln()).exp();
        let fk = (self.k * f.max(EPS_DENS).ln()).exp();
        self.phi.eval(gk) - self.phi.eval(fk) - (gk - fk) * self.phi.d1(fk)
    }

    /// `k² f^{2k} φ''(f^k)`.
    pub fn curvature_weight(&self, f: f64) -> f64 {
        let fk = (self.k * f.max(EPS_DENS).ln()).exp();
        self.k * self.k * fk * fk * self.phi.d2(fk)
    }
}

/// Trapezoid integral of `φ(g^k) - φ(f^k) - (g^k - f^k)φ'(f^k)` over `{f > EPS_DENS}`.
pub fn extended_bregman(g: &DensityGrid, f: &DensityGrid, phi: &PhiGenerator, k: f64) -> Result<f64> {
    g.check_same_grid(f)?;
    let div = ExtendedBregman::new(phi.clone(), k)?;
    Ok(masked_trapezoid(f.grid(), f.values(), |j| {
        div.pointwise(g.values()[j], f.values()[j])
    }))
}

/// Trapezoid weights restricted to points where `mask_density > EPS_DENS`.
pub(crate) fn masked_trapezoid(grid: &Grid, mask_density: &[f64], integrand: impl Fn(usize) -> f64) -> f64 {
    let n = grid.len();
    let h = grid.spacing();
    let mut total = 0.0;
    for (j, &m) in mask_density.iter().enumerate() {
        if m > EPS_DENS {
            let w = if j == 0 || j + 1 == n { 0.5 * h } else { h };
            total += w * integrand(j);
        }
    }
    total
}

/// The GSB integrand at one point, given `ln g` and `ln f` (both floored).
///
/// Written in terms of `u = ln(g/f)` with `expm1` so the near-null regime,
/// where `g ≈ f`, does not lose digits to cancellation.
#[inline]
fn gsb_pointwise_ln(ln_g: f64, ln_f: f64, p: &GsbParams) -> f64 {
    let a = p.a();
    let b = p.b();
    let s = 1.0 + p.alpha;
    let u = ln_g - ln_f;
    if a.abs() <= LIMIT_TOL {
        if s.abs() <= LIMIT_TOL {
            return 0.0;
        }
        return (s * ln_f).exp() * ((s * u).exp_m1() / s - u);
    }
    if b.abs() <= LIMIT_TOL {
        if s.abs() <= LIMIT_TOL {
            return 0.0;
        }
        let power = (s * ln_f).exp() * ((s * u).exp() * u - (s * u).exp_m1() / s);
        return power + exp_part(ln_f, u, s, p.beta);
    }
    power_part(ln_f, u, a, b, s) + exp_part(ln_f, u, a, p.beta)
}

/// `(g^{s} - f^{s})/B - (g^A - f^A)(s/(AB)) f^B` with `s = A + B`.
#[inline]
fn power_part(ln_f: f64, u: f64, a: f64, b: f64, s: f64) -> f64 {
    (s * ln_f).exp() * ((s * u).exp_m1() / b - s * (a * u).exp_m1() / (a * b))
}

/// `e^{βf^A}(βf^A - βg^A - 1) + e^{βg^A}`.
#[inline]
fn exp_part(ln_f: f64, u: f64, a: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    let fa = (a * ln_f).exp();
    let d = beta * fa * (a * u).exp_m1();
    (beta * fa).exp() * (d.exp_m1() - d)
}

/// Pointwise GSB integrand `D*(g, f)` at one grid point.
pub fn gsb_pointwise(g: f64, f: f64, params: &GsbParams) -> f64 {
    gsb_pointwise_ln(g.max(EPS_DENS).ln(), f.max(EPS_DENS).ln(), params)
}

/// GSB divergence between two tabulated densities, with the `A → 0` and
/// `B → 0` limits substituted inside `LIMIT_TOL`.
pub fn gsb_divergence(g: &DensityGrid, f: &DensityGrid, params: &GsbParams) -> Result<f64> {
    g.check_same_grid(f)?;
    Ok(masked_trapezoid(f.grid(), f.values(), |j| {
        gsb_pointwise(g.values()[j], f.values()[j], params)
    }))
}

/// Joint law of a binary label and a continuous variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridDensity {
    fx: [f64; 2],
    joint: [DensityGrid; 2],
    fy: DensityGrid,
}

impl HybridDensity {
    /// Assembles the hybrid law from label probabilities and joint slices;
    /// the continuous marginal is the pointwise sum of the slices.
    pub fn new(fx: [f64; 2], slice0: DensityGrid, slice1: DensityGrid) -> Result<Self> {
        check_label_probs(fx)?;
        let fy = slice0.add(&slice1)?;
        Ok(Self {
            fx,
            joint: [slice0, slice1],
            fy,
        })
    }

    /// Like [`HybridDensity::new`] but keeps a precomputed marginal.
    pub fn with_marginal(fx: [f64; 2], joint: [DensityGrid; 2], fy: DensityGrid) -> Result<Self> {
        check_label_probs(fx)?;
        joint[0].check_same_grid(&fy)?;
        joint[1].check_same_grid(&fy)?;
        Ok(Self { fx, joint, fy })
    }

    /// Independence: slice `x` is `f_x · f_y`.
    pub fn product(fx: [f64; 2], fy: DensityGrid) -> Result<Self> {
        check_label_probs(fx)?;
        Ok(Self {
            fx,
            joint: [fy.scaled(fx[0]), fy.scaled(fx[1])],
            fy,
        })
    }

    pub fn fx(&self) -> [f64; 2] {
        self.fx
    }

    pub fn joint(&self, x: u8) -> &DensityGrid {
        &self.joint[usize::from(x)]
    }

    pub fn fy(&self) -> &DensityGrid {
        &self.fy
    }

    pub fn grid(&self) -> &Grid {
        self.fy.grid()
    }

    /// Exchanges the roles of the two labels.
    pub fn swapped(&self) -> Self {
        Self {
            fx: [self.fx[1], self.fx[0]],
            joint: [self.joint[1].clone(), self.joint[0].clone()],
            fy: self.fy.clone(),
        }
    }

    /// Largest deviation of a slice from the product form.
    pub fn product_gap(&self) -> f64 {
        let mut gap: f64 = 0.0;
        for x in 0..2 {
            for (g, f) in self.joint[x].values().iter().zip(self.fy.values()) {
                gap = gap.max((g - self.fx[x] * f).abs());
            }
        }
        gap
    }

    /// Logs of the slices and product densities, ready for repeated MI
    /// evaluation under many tuning parameters.
    pub fn prepare(&self) -> PreparedHybrid {
        PreparedHybrid::new(
            self.fx,
            [self.joint[0].values(), self.joint[1].values()],
            self.fy.values(),
            self.grid(),
        )
    }
}

fn check_label_probs(fx: [f64; 2]) -> Result<()> {
    if !(fx[0] > 0.0 && fx[1] > 0.0) || ((fx[0] + fx[1]) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "label probabilities must be positive and sum to one, got {fx:?}"
        )));
    }
    Ok(())
}

/// Precomputed logarithms over the support `{f_y > EPS_DENS}`.
#[derive(Debug, Clone)]
pub struct PreparedHybrid {
    weights: Vec<f64>,
    ln_g: [Vec<f64>; 2],
    ln_f: [Vec<f64>; 2],
}

impl PreparedHybrid {
    pub(crate) fn new(fx: [f64; 2], slices: [&[f64]; 2], fy: &[f64], grid: &Grid) -> Self {
        let n = grid.len();
        let h = grid.spacing();
        let active = fy.iter().filter(|v| **v > EPS_DENS).count();
        let mut weights = Vec::with_capacity(active);
        let mut ln_g = [Vec::with_capacity(active), Vec::with_capacity(active)];
        let mut ln_f = [Vec::with_capacity(active), Vec::with_capacity(active)];
        for (j, &f) in fy.iter().enumerate() {
            if f <= EPS_DENS {
                continue;
            }
            weights.push(if j == 0 || j + 1 == n { 0.5 * h } else { h });
            for x in 0..2 {
                ln_g[x].push(slices[x][j].max(EPS_DENS).ln());
                ln_f[x].push((fx[x] * f).max(EPS_DENS).ln());
            }
        }
        Self { weights, ln_g, ln_f }
    }

    /// GSB mutual information.
    pub fn mi(&self, params: &GsbParams) -> f64 {
        let mut total = 0.0;
        for (j, w) in self.weights.iter().enumerate() {
            let v0 = gsb_pointwise_ln(self.ln_g[0][j], self.ln_f[0][j], params);
            let v1 = gsb_pointwise_ln(self.ln_g[1][j], self.ln_f[1][j], params);
            total += w * (v0 + v1);
        }
        total
    }

    /// Mutual information under an arbitrary extended Bregman divergence.
    pub fn mi_with(&self, div: &ExtendedBregman) -> f64 {
        let mut total = 0.0;
        for (j, w) in self.weights.iter().enumerate() {
            let mut v = 0.0;
            for x in 0..2 {
                v += div.pointwise(self.ln_g[x][j].exp(), self.ln_f[x][j].exp());
            }
            total += w * v;
        }
        total
    }
}

/// GSB mutual information between the label and the continuous variable:
/// `Σ_x ∫_{f_y > 0} D*(f_{x,y}, f_x f_y) dy`.
pub fn mi_hybrid(hd: &HybridDensity, params: &GsbParams) -> f64 {
    hd.prepare().mi(params)
}

/// Hybrid mutual information under any extended Bregman divergence.
pub fn mi_hybrid_with(hd: &HybridDensity, div: &ExtendedBregman) -> f64 {
    hd.prepare().mi_with(div)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(mu: f64, sd: f64) -> impl Fn(f64) -> f64 {
        move |y| (-(y - mu).powi(2) / (2.0 * sd * sd)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
    }

    fn grid() -> Grid {
        Grid::spanning(-8.0, 8.0, 1601).unwrap()
    }

    #[test]
    fn derived_exponents() {
        let p = GsbParams::new(0.3, 0.7, -0.1).unwrap();
        assert!((p.a() + p.b() - 1.3).abs() < 1e-15);
        assert!(GsbParams::new(-1.5, 0.0, 0.0).is_err());
        assert!(GsbParams::new(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn family_tags() {
        let t = |a, l, b| GsbParams::new(a, l, b).unwrap().family();
        assert_eq!(t(0.0, 0.5, 0.0), Family::PowerDivergence);
        assert_eq!(t(1.0, 0.0, 0.0), Family::SquaredL2);
        assert_eq!(t(0.5, 0.0, 0.0), Family::DensityPower);
        assert_eq!(t(0.5, 0.3, 0.0), Family::SDivergence);
        assert_eq!(t(-1.0, 0.0, 0.2), Family::ScaledBregmanExponential);
        assert_eq!(t(0.5, 0.3, -0.05), Family::Gsb);
    }

    #[test]
    fn gsb_generator_examples() {
        // A = 2, B = -1: φ(t) = 1 - t^{1/2}, φ'' = t^{-3/2}/4
        let phi = phi_gsb(&GsbParams::new(0.0, 1.0, 0.0).unwrap()).unwrap();
        for t in [0.04, 0.5, 1.0, 3.0] {
            assert!((phi.eval(t) - (1.0 - t.sqrt())).abs() < 1e-14);
            assert!((phi.d1(t) + 0.5 / t.sqrt()).abs() < 1e-14);
            assert!((phi.d2(t) - t.powf(-1.5) / 4.0).abs() < 1e-12);
        }
        // A = B = 1: φ(t) = 1 + t^2
        let phi = phi_gsb(&GsbParams::new(1.0, 0.0, 0.0).unwrap()).unwrap();
        assert!((phi.eval(3.0) - 10.0).abs() < 1e-12);
        assert!((phi.d2(0.7) - 2.0).abs() < 1e-12);
        // B = 0 at α = 0.5, λ = 1
        assert!(matches!(
            phi_gsb(&GsbParams::new(0.5, 1.0, 0.0).unwrap()),
            Err(Error::LimitCase { .. })
        ));
    }

    #[test]
    fn generator_is_strictly_convex() {
        for (a, l, b) in [(0.5, 0.0, 0.0), (0.2, 1.0, -0.3), (-0.5, 0.3, 0.4), (0.9, -0.5, 0.1)] {
            let phi = phi_gsb(&GsbParams::new(a, l, b).unwrap()).unwrap();
            for i in 1..=200 {
                let t = i as f64 * 0.025;
                assert!(phi.d2(t) > 0.0, "{} at {t}", phi.description());
            }
        }
    }

    #[test]
    fn curvature_weight_matches_generator() {
        for (a, l, b) in [(0.5, 0.0, 0.0), (0.2, 1.0, -0.3), (-0.5, 0.3, 0.4)] {
            let p = GsbParams::new(a, l, b).unwrap();
            let eb = ExtendedBregman::new(phi_gsb(&p).unwrap(), p.k()).unwrap();
            for f in [1e-4, 0.01, 0.2, 0.45] {
                let (x, y) = (p.curvature_weight(f), eb.curvature_weight(f));
                assert!((x - y).abs() <= 1e-10 * y.abs(), "{p} {f}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn divergence_identity_and_positivity() {
        let g = grid();
        let f0 = DensityGrid::from_fn(g, gauss(0.0, 1.0)).unwrap();
        let f1 = DensityGrid::from_fn(g, gauss(0.5, 1.2)).unwrap();
        for p in [(0.5, 0.0, 0.0), (0.0, 1.0, 0.0), (0.3, -0.2, -0.05), (-1.0, 0.0, 0.3)] {
            let p = GsbParams::new(p.0, p.1, p.2).unwrap();
            assert_eq!(gsb_divergence(&f0, &f0, &p).unwrap(), 0.0);
            assert!(gsb_divergence(&f1, &f0, &p).unwrap() > 0.0);
        }
        let other = DensityGrid::zeros(Grid::spanning(-8.0, 8.0, 11).unwrap());
        assert_eq!(
            gsb_divergence(&f0, &other, &GsbParams::new(0.5, 0.0, 0.0).unwrap()),
            Err(Error::GridMismatch)
        );
    }

    #[test]
    fn itakura_saito_against_fine_quadrature() {
        // two densities on [0, 1]: g = 1 + 0.5 sin(2πy)... kept strictly positive
        let g_fn = |y: f64| 1.0 + 0.3 * (2.0 * std::f64::consts::PI * y).sin();
        let f_fn = |y: f64| 0.8 + 0.4 * y;
        let coarse = Grid::spanning(0.0, 1.0, 2001).unwrap();
        let g = DensityGrid::from_fn(coarse, g_fn).unwrap();
        let f = DensityGrid::from_fn(coarse, f_fn).unwrap();
        let value = extended_bregman(&g, &f, &phi_itakura_saito(), 1.0).unwrap();

        // Simpson's rule at 20x resolution on the closed-form integrand
        let m = 40_000;
        let hstep = 1.0 / m as f64;
        let integrand = |y: f64| {
            let (gv, fv) = (g_fn(y), f_fn(y));
            (gv / fv - (gv / fv).ln() - 1.0) / (2.0 * std::f64::consts::PI)
        };
        let mut simpson = integrand(0.0) + integrand(1.0);
        for i in 1..m {
            simpson += if i % 2 == 1 { 4.0 } else { 2.0 } * integrand(i as f64 * hstep);
        }
        simpson *= hstep / 3.0;
        assert!(value > 0.0);
        assert!((value - simpson).abs() < 1e-7, "{value} vs {simpson}");
    }

    #[test]
    fn independent_hybrid_has_zero_mi() {
        let fy = DensityGrid::from_fn(grid(), gauss(0.0, 1.0)).unwrap();
        let hd = HybridDensity::product([0.3, 0.7], fy).unwrap();
        for p in [(0.5, 0.0, 0.0), (0.0, -0.5, 0.0), (0.1, 1.0, -0.05), (-1.0, 0.0, 0.5)] {
            let p = GsbParams::new(p.0, p.1, p.2).unwrap();
            assert!(mi_hybrid(&hd, &p).abs() < 1e-8);
        }
    }

    #[test]
    fn dependent_hybrid_is_positive_and_label_symmetric() {
        let g = grid();
        let s0 = DensityGrid::from_fn(g, |y| 0.5 * gauss(-1.0, 1.0)(y)).unwrap();
        let s1 = DensityGrid::from_fn(g, |y| 0.5 * gauss(1.0, 1.0)(y)).unwrap();
        let hd = HybridDensity::new([0.5, 0.5], s0, s1).unwrap();
        let p = GsbParams::new(0.5, 0.2, -0.1).unwrap();
        let mi = mi_hybrid(&hd, &p);
        assert!(mi > 1e-3);
        assert_eq!(mi, mi_hybrid(&hd.swapped(), &p));
    }

    #[test]
    fn limit_formulas_are_used_on_the_manifolds() {
        let g = grid();
        let f = DensityGrid::from_fn(g, gauss(0.0, 1.0)).unwrap();
        let gg = DensityGrid::from_fn(g, gauss(0.3, 0.9)).unwrap();
        // α = -1 with A = 0 or B = 0 is identically zero
        let p = GsbParams::new(-1.0, -0.5, 0.3).unwrap();
        assert!(p.a().abs() < 1e-12 && p.b().abs() < 1e-12);
        assert_eq!(gsb_divergence(&gg, &f, &p).unwrap(), 0.0);
        // B = 0 at α = 0, λ = 0 gives Kullback-Leibler
        let kl = gsb_divergence(&gg, &f, &GsbParams::new(0.0, 0.0, 0.0).unwrap()).unwrap();
        let expected = 0.5 * (0.81f64.ln().abs() + 0.81 + 0.09 - 1.0);
        assert!((kl - expected).abs() < 1e-6, "{kl} vs {expected}");
    }
}
