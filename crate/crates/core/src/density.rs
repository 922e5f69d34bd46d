//! Kernel density estimation for the hybrid (binary label, continuous value) setup.
//!
//! Every continuous density in the crate lives on a uniform [`Grid`] and is
//! integrated with the composite trapezoid rule. The kernel estimates are
//! accumulated observation by observation in a fixed order, so the marginal
//! estimate and the two label-restricted estimates share the same summands.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid points whose density is at or below this value are treated as
/// outside the support `{f > 0}`.
pub const EPS_DENS: f64 = 1e-12;

/// Default number of grid points used for kernel density estimates.
pub const DEFAULT_GRID_POINTS: usize = 512;

/// Smallest grid accepted by [`build_grid`].
pub const MIN_GRID_POINTS: usize = 64;

/// Number of standard deviations of the Silverman rule.
const SILVERMAN_FACTOR: f64 = 1.06;

/// Smoothing kernel. Only bounded, symmetric kernels are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// `K(u) = 3/4 (1 - u^2)` on `[-1, 1]`.
    #[default]
    Epanechnikov,
}

impl Kernel {
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        match self {
            Kernel::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }

    /// Half-width of the kernel support.
    pub fn support_radius(self) -> f64 {
        match self {
            Kernel::Epanechnikov => 1.0,
        }
    }
}

/// Free-function form of [`Kernel::eval`].
pub fn kernel_eval(kernel: Kernel, u: f64) -> f64 {
    kernel.eval(u)
}

/// Uniformly spaced, strictly increasing support points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    start: f64,
    spacing: f64,
    len: usize,
}

impl Grid {
    /// `len` equally spaced points from `lo` to `hi` inclusive.
    pub fn spanning(lo: f64, hi: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::InvalidArgument(format!(
                "a grid needs at least two points, got {len}"
            )));
        }
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::InvalidArgument(format!(
                "grid range [{lo}, {hi}] is empty or not finite"
            )));
        }
        Ok(Self {
            start: lo,
            spacing: (hi - lo) / (len - 1) as f64,
            len,
        })
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.spacing
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.point(i))
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Indices `[lo, hi)` of the grid points inside `[a, b]` (possibly empty).
    pub fn index_range(&self, a: f64, b: f64) -> (usize, usize) {
        let lo = ((a - self.start) / self.spacing).ceil();
        let hi = ((b - self.start) / self.spacing).floor();
        let lo = if lo < 0.0 { 0 } else { lo as usize };
        if hi < 0.0 {
            return (0, 0);
        }
        let hi = ((hi as usize) + 1).min(self.len);
        (lo.min(hi), hi)
    }
}

/// Uniform grid spanning `[min(y) - 3h, max(y) + 3h]` with `n_points` points.
pub fn build_grid(y: &[f64], h: f64, n_points: usize) -> Result<Grid> {
    if n_points < MIN_GRID_POINTS {
        return Err(Error::InvalidArgument(format!(
            "grid needs at least {MIN_GRID_POINTS} points, got {n_points}"
        )));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}")));
    }
    let (lo, hi) = min_max(y)?;
    Grid::spanning(lo - 3.0 * h, hi + 3.0 * h, n_points)
}

fn min_max(y: &[f64]) -> Result<(f64, f64)> {
    if y.is_empty() {
        return Err(Error::DegenerateSample("empty sample".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in y {
        if !v.is_finite() {
            return Err(Error::DegenerateSample(format!("non-finite observation {v}")));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// Composite trapezoid rule for samples on a uniform grid.
pub fn trapezoid(values: &[f64], spacing: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = values[1..n - 1].iter().sum();
            spacing * (interior + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// A density (or sub-density) tabulated on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    grid: Grid,
    values: Vec<f64>,
}

impl DensityGrid {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "density values must be finite and nonnegative, found {v}"
            )));
        }
        Ok(Self { grid, values })
    }

    /// Tabulates `f` at every grid point.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().map(f).collect())
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.grid.spacing())
    }

    /// `true` when the trapezoid integral is within `tol` of one.
    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.integral() - 1.0).abs() <= tol
    }

    pub fn scaled(&self, c: f64) -> DensityGrid {
        DensityGrid {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &DensityGrid) -> Result<DensityGrid> {
        self.check_same_grid(other)?;
        Ok(DensityGrid {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn check_same_grid(&self, other: &DensityGrid) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Linear interpolation, zero outside the grid.
    pub fn interpolate(&self, y: f64) -> f64 {
        let g = &self.grid;
        if y < g.start() || y > g.end() {
            return 0.0;
        }
        let pos = (y - g.start()) / g.spacing();
        let i = (pos.floor() as usize).min(g.len() - 2);
        let t = pos - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }
}

/// Kernel integrals that enter the null centring and scaling constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    /// `∫ K(u)^2 du`.
    pub c1: f64,
    /// `∫ (∫ K(z) K(z + u) dz)^2 du`.
    pub c2: f64,
}

/// Trapezoid evaluation of the kernel constants with `quad_points` nodes per
/// one-dimensional integral.
pub fn kernel_constants(kernel: Kernel, quad_points: usize) -> Result<KernelConstants> {
    if quad_points < 64 {
        return Err(Error::InvalidArgument(format!(
            "kernel quadrature needs at least 64 points, got {quad_points}"
        )));
    }
    let r = kernel.support_radius();
    let step = 2.0 * r / (quad_points - 1) as f64;
    let squares: Vec<f64> = (0..quad_points)
        .map(|i| kernel.eval(-r + i as f64 * step).powi(2))
        .collect();
    let c1 = trapezoid(&squares, step);

    // The self-convolution is supported on [-2r, 2r]; for each lag only the
    // overlap of the two supports is integrated.
    let lag_points = 2 * quad_points - 1;
    let lag_step = 4.0 * r / (lag_points - 1) as f64;
    let conv_sq: Vec<f64> = (0..lag_points)
        .map(|j| {
            let u = -2.0 * r + j as f64 * lag_step;
            let lo = (-r).max(-r - u);
            let hi = r.min(r - u);
            if hi <= lo {
                return 0.0;
            }
            let dz = (hi - lo) / (quad_points - 1) as f64;
            let inner: Vec<f64> = (0..quad_points)
                .map(|i| {
                    let z = lo + i as f64 * dz;
                    kernel.eval(z) * kernel.eval(z + u)
                })
                .collect();
            trapezoid(&inner, dz).powi(2)
        })
        .collect();
    let c2 = trapezoid(&conv_sq, lag_step);
    Ok(KernelConstants { c1, c2 })
}

/// Cached Epanechnikov constants at 2049 nodes.
pub fn epanechnikov_constants() -> KernelConstants {
    static CONSTANTS: OnceLock<KernelConstants> = OnceLock::new();
    *CONSTANTS.get_or_init(|| {
        kernel_constants(Kernel::Epanechnikov, 2049).expect("quadrature size is valid")
    })
}

/// Sample standard deviation with the `n - 1` denominator.
pub fn sample_sd(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let ss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (n - 1.0)).sqrt()
}

/// Silverman's rule of thumb, `1.06 sd(y) n^{-1/5}`.
pub fn bandwidth_silverman(y: &[f64]) -> Result<f64> {
    if y.len() < 2 {
        return Err(Error::DegenerateSample(format!(
            "bandwidth needs at least two observations, got {}",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateSample("non-finite observation".into()));
    }
    let sd = sample_sd(y);
    if !(sd > 0.0) {
        return Err(Error::DegenerateSample("sample standard deviation is zero".into()));
    }
    Ok(SILVERMAN_FACTOR * sd * (y.len() as f64).powf(-0.2))
}

/// Empirical label frequencies `(f0, f1)`.
pub fn estimate_marginal_x(labels: &[u8]) -> Result<(f64, f64)> {
    if labels.is_empty() {
        return Err(Error::InvalidArgument("no labels".into()));
    }
    let mut ones = 0usize;
    for &l in labels {
        match l {
            0 => {}
            1 => ones += 1,
            other => {
                return Err(Error::InvalidArgument(format!("label {other} is not 0 or 1")));
            }
        }
    }
    let n = labels.len();
    if ones == 0 {
        return Err(Error::OneGroupEmpty(1));
    }
    if ones == n {
        return Err(Error::OneGroupEmpty(0));
    }
    let f1 = ones as f64 / n as f64;
    Ok(((n - ones) as f64 / n as f64, f1))
}

/// Kernel contributions of one observation, restricted to the grid points
/// inside its kernel window.
#[derive(Debug, Clone)]
struct Column {
    first: usize,
    weights: Vec<f64>,
}

/// Per-observation kernel columns on a fixed grid.
///
/// The basis is what makes permutation and resampling loops cheap: the
/// marginal estimate never changes under relabelling, and a label-restricted
/// estimate only needs the columns of the selected observations.
#[derive(Debug, Clone)]
pub struct KdeBasis {
    grid: Grid,
    h: f64,
    scale: f64,
    columns: Vec<Column>,
}

impl KdeBasis {
    pub fn new(kernel: Kernel, y: &[f64], h: f64, grid: Grid) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}")));
        }
        if y.is_empty() {
            return Err(Error::DegenerateSample("empty sample".into()));
        }
        let reach = kernel.support_radius() * h;
        let columns = y
            .iter()
            .map(|&yi| {
                let (lo, hi) = grid.index_range(yi - reach, yi + reach);
                Column {
                    first: lo,
                    weights: (lo..hi).map(|j| kernel.eval((yi - grid.point(j)) / h)).collect(),
                }
            })
            .collect();
        Ok(Self {
            grid,
            h,
            scale: 1.0 / (y.len() as f64 * h),
            columns,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn n_obs(&self) -> usize {
        self.columns.len()
    }

    fn accumulate(&self, select: impl Fn(usize) -> bool) -> DensityGrid {
        let mut acc = vec![0.0; self.grid.len()];
        for (i, col) in self.columns.iter().enumerate() {
            if !select(i) {
                continue;
            }
            for (a, w) in acc[col.first..].iter_mut().zip(&col.weights) {
                *a += w;
            }
        }
        for a in &mut acc {
            *a *= self.scale;
        }
        DensityGrid {
            grid: self.grid,
            values: acc,
        }
    }

    /// `f̂_y` on the grid.
    pub fn marginal(&self) -> DensityGrid {
        self.accumulate(|_| true)
    }

    /// `f̂_{x,·}`: the kernel sum restricted to observations labelled `x`.
    pub fn joint(&self, labels: &[u8], x: u8) -> DensityGrid {
        debug_assert_eq!(labels.len(), self.columns.len());
        self.accumulate(|i| labels[i] == x)
    }

    /// Both label-restricted estimates in one pass over the columns.
    pub fn slices(&self, labels: &[u8]) -> [DensityGrid; 2] {
        debug_assert_eq!(labels.len(), self.columns.len());
        let mut acc = [vec![0.0; self.grid.len()], vec![0.0; self.grid.len()]];
        for (col, &l) in self.columns.iter().zip(labels) {
            let target = &mut acc[usize::from(l == 1)];
            for (a, w) in target[col.first..].iter_mut().zip(&col.weights) {
                *a += w;
            }
        }
        acc.map(|mut v| {
            for a in &mut v {
                *a *= self.scale;
            }
            DensityGrid {
                grid: self.grid,
                values: v,
            }
        })
    }
}

/// `f̂_y(g) = (1 / (n h)) Σ K((Y_i - g) / h)` at every grid point.
pub fn estimate_marginal_y(y: &[f64], h: f64, grid: &Grid) -> Result<DensityGrid> {
    Ok(KdeBasis::new(Kernel::Epanechnikov, y, h, *grid)?.marginal())
}

/// Kernel estimate of the joint density slice at label `x`.
pub fn estimate_joint_xy(y: &[f64], labels: &[u8], x: u8, h: f64, grid: &Grid) -> Result<DensityGrid> {
    if x > 1 {
        return Err(Error::InvalidArgument(format!("label {x} is not 0 or 1")));
    }
    if labels.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} observations",
            labels.len(),
            y.len()
        )));
    }
    Ok(KdeBasis::new(Kernel::Epanechnikov, y, h, *grid)?.joint(labels, x))
}
