//! Regular rectangular grids, sampled functions and interpolation.

use rustfft::num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid shape mismatch: {0}")]
    Shape(String),
    #[error("unknown interpolator `{0}`")]
    UnknownInterpolator(String),
}

/// Nodes `origin_k + i_k · step_k`, `0 <= i_k < shape_k`; last axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub origin: Vec<f64>,
    pub step: Vec<f64>,
    pub shape: Vec<usize>,
}

impl Grid {
    /// `n` nodes per axis on `[-L, L)^d`, spacing `2L/n`.
    pub fn centered(dim: usize, n: usize, half_width: f64) -> Self {
        let h = 2.0 * half_width / n as f64;
        Self { origin: vec![-half_width; dim], step: vec![h; dim], shape: vec![n; dim] }
    }

    /// `n_k` nodes per axis spanning `[lo_k, hi_k]` inclusive.
    pub fn spanning(lo: &[f64], hi: &[f64], n: &[usize]) -> Self {
        let step = lo.iter().zip(hi).zip(n).map(|((l, h), &k)| (h - l) / (k - 1) as f64).collect();
        Self { origin: lo.to_vec(), step, shape: n.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.step.iter().product()
    }

    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            out[k] = idx % self.shape[k];
            idx /= self.shape[k];
        }
        out
    }

    pub fn ravel(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        self.unravel(idx).iter().enumerate().map(|(k, &i)| self.origin[k] + i as f64 * self.step[k]).collect()
    }

    pub fn nodes(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.node(i))
    }

    /// Continuous index coordinates of `x`.
    pub fn coords(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.origin).zip(&self.step).map(|((x, o), s)| (x - o) / s).collect()
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.shape == other.shape
            && self.origin.iter().zip(&other.origin).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0))
            && self.step.iter().zip(&other.step).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0))
    }
}

/// Complex samples on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::Shape(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.node(i))).collect();
        Self { grid, values }
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Riemann-sum `L²` norm.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(Complex64::norm_sqr).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// Riemann-sum `⟨self, other⟩`, antilinear in `other`.
    pub fn inner(&self, other: &GridFunction) -> Complex64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum::<Complex64>() * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * s).collect() }
    }

    /// Relative `L²` distance `‖self − other‖ / ‖other‖`.
    pub fn relative_error(&self, reference: &GridFunction) -> f64 {
        let diff: f64 = self.values.iter().zip(&reference.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        let base: f64 = reference.values.iter().map(Complex64::norm_sqr).sum();
        (diff / base).sqrt()
    }

    pub fn sample(&self, interp: &dyn Interpolator, x: &[f64]) -> Complex64 {
        interp.interpolate(&self.grid, &self.values, x)
    }
}

/// Evaluates grid samples off-grid. Points outside the sampled box read as zero.
pub trait Interpolator: Send + Sync {
    fn name(&self) -> &'static str;
    fn interpolate(&self, grid: &Grid, values: &[Complex64], x: &[f64]) -> Complex64;
}

pub struct Linear;
pub struct Cubic;

impl Interpolator for Linear {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn interpolate(&self, grid: &Grid, values: &[Complex64], x: &[f64]) -> Complex64 {
        tensor_interpolate(grid, values, x, 2, |c| {
            let f = c.floor();
            let w = c - f;
            (f as i64, vec![1.0 - w, w])
        })
    }
}

/// Keys cubic convolution with `a = -1/2`.
fn keys(s: f64) -> f64 {
    let s = s.abs();
    if s < 1.0 {
        1.5 * s * s * s - 2.5 * s * s + 1.0
    } else if s < 2.0 {
        -0.5 * s * s * s + 2.5 * s * s - 4.0 * s + 2.0
    } else {
        0.0
    }
}

impl Interpolator for Cubic {
    fn name(&self) -> &'static str {
        "cubic"
    }

    fn interpolate(&self, grid: &Grid, values: &[Complex64], x: &[f64]) -> Complex64 {
        tensor_interpolate(grid, values, x, 4, |c| {
            let f = c.floor();
            let w = c - f;
            (f as i64 - 1, (0..4).map(|k| keys(w + 1.0 - k as f64)).collect())
        })
    }
}

/// Separable stencil of width `width` starting at the node returned by `weights`.
fn tensor_interpolate(
    grid: &Grid,
    values: &[Complex64],
    x: &[f64],
    width: usize,
    weights: impl Fn(f64) -> (i64, Vec<f64>),
) -> Complex64 {
    let d = grid.dim();
    let coords = grid.coords(x);
    let mut starts = Vec::with_capacity(d);
    let mut ws = Vec::with_capacity(d);
    for (k, &c) in coords.iter().enumerate() {
        if !c.is_finite() || c < -1.0 || c > grid.shape[k] as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let (s, w) = weights(c);
        starts.push(s);
        ws.push(w);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let total = width.pow(d as u32);
    'corner: for corner in 0..total {
        let mut rem = corner;
        let mut flat = 0usize;
        let mut weight = 1.0;
        for k in 0..d {
            let off = rem % width;
            rem /= width;
            let i = starts[k] + off as i64;
            if i < 0 || i >= grid.shape[k] as i64 {
                continue 'corner;
            }
            weight *= ws[k][off];
            flat = flat * grid.shape[k] + i as usize;
        }
        // `flat` was built in axis order 0..d, matching the row-major layout.
        acc += values[flat] * weight;
    }
    acc
}

static INTERPOLATORS: [&dyn Interpolator; 2] = [&Linear, &Cubic];

pub fn interpolators() -> &'static [&'static dyn Interpolator] {
    &INTERPOLATORS
}

pub fn interpolator(name: &str) -> Result<&'static dyn Interpolator, GridError> {
    INTERPOLATORS.iter().copied().find(|i| i.name() == name).ok_or_else(|| GridError::UnknownInterpolator(name.into()))
}
