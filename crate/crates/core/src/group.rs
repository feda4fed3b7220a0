//! The shearlet dilation group `H = DS ∪ (-DS)` in its global chart.
//!
//! An element is `(ε, a, t)` with realized matrix
//! `ε · (I + Σ t_i X_i) · diag(a, a^{λ_2}, ..., a^{λ_d})`.
//! The scale is stored as `ln a`.
//!
//! Measures in the chart, per sign:
//! - left Haar: `a^{λ_2+...+λ_d-d} da dt`
//! - right Haar: `a^{-1} da dt`
//! - affine group `|det h|^{-1} dx dh`: `a^{-d} d(ln a) dt dx`

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use thiserror::Error;

use crate::algebra::{AlgebraError, ShearingSubgroup};
use crate::rational::{to_f64, Q};
use crate::scaling::{verify_compatibility, ExponentVector, ScalingError};

/// Relative residual allowed when re-factorizing a matrix into the chart.
pub const FACTORIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroupError {
    #[error("scale must be positive, got {0}")]
    NonpositiveScale(f64),
    #[error("exponents are not compatible with the shearing subgroup")]
    Incompatible,
    #[error("exponent vector must start with 1")]
    NotNormalized,
    #[error("matrix is not in the group chart (relative residual {0:e})")]
    FactorizationFailure(f64),
    #[error("frequency grid is degenerate: {0}")]
    GridDegenerate(&'static str),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Scaling(#[from] ScalingError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    /// `+1` or `-1`.
    pub sign: i8,
    pub log_a: f64,
    pub t: Vec<f64>,
}

impl GroupElement {
    pub fn new(sign: i8, a: f64, t: Vec<f64>) -> Result<Self, GroupError> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(GroupError::NonpositiveScale(a));
        }
        Ok(Self { sign: if sign < 0 { -1 } else { 1 }, log_a: a.ln(), t })
    }

    pub fn from_log(sign: i8, log_a: f64, t: Vec<f64>) -> Self {
        Self { sign: if sign < 0 { -1 } else { 1 }, log_a, t }
    }

    pub fn identity(d: usize) -> Self {
        Self { sign: 1, log_a: 0.0, t: vec![0.0; d - 1] }
    }

    pub fn a(&self) -> f64 {
        self.log_a.exp()
    }
}

#[derive(Debug, Clone)]
pub struct ShearletGroup {
    shear: ShearingSubgroup,
    lambda: ExponentVector,
    lambda_f: Vec<f64>,
}

impl ShearletGroup {
    pub fn new(shear: ShearingSubgroup, lambda: ExponentVector) -> Result<Self, GroupError> {
        if !lambda.is_normalized() {
            return Err(GroupError::NotNormalized);
        }
        if !verify_compatibility(&shear, &lambda)? {
            return Err(GroupError::Incompatible);
        }
        let lambda_f = lambda.to_f64();
        Ok(Self { shear, lambda, lambda_f })
    }

    pub fn dim(&self) -> usize {
        self.shear.dim()
    }

    pub fn shearing(&self) -> &ShearingSubgroup {
        &self.shear
    }

    pub fn exponents(&self) -> &ExponentVector {
        &self.lambda
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda_f
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_f.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_f[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Σ λ_i`, so that `|det h| = a^{Σ λ_i}`.
    pub fn det_exponent(&self) -> Q {
        self.lambda.lambda.iter().sum()
    }

    pub fn diag(&self, log_a: f64) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.lambda_f.iter().map(|l| (l * log_a).exp()))
    }

    pub fn element_matrix(&self, g: &GroupElement) -> Result<DMatrix<f64>, GroupError> {
        let mut m = self.shear.shear_matrix(&g.t)?;
        let diag = self.diag(g.log_a);
        for (mut col, s) in m.column_iter_mut().zip(diag.iter()) {
            col *= *s * f64::from(g.sign);
        }
        Ok(m)
    }

    /// Inverse of [`element_matrix`](Self::element_matrix).
    pub fn factorize(&self, h: &DMatrix<f64>) -> Result<GroupElement, GroupError> {
        let d = self.dim();
        if h.nrows() != d || h.ncols() != d {
            return Err(GroupError::Algebra(AlgebraError::DimensionMismatch { expected: d, got: h.nrows() }));
        }
        let h11 = h[(0, 0)];
        if h11 == 0.0 || !h11.is_finite() {
            return Err(GroupError::FactorizationFailure(f64::INFINITY));
        }
        let sign: i8 = if h11 > 0.0 { 1 } else { -1 };
        let log_a = h11.abs().ln();
        let diag = self.diag(log_a);
        let t: Vec<f64> = (1..d).map(|j| f64::from(sign) * h[(0, j)] / diag[j]).collect();
        let g = GroupElement { sign, log_a, t };
        let rebuilt = self.element_matrix(&g)?;
        let residual = (&rebuilt - h).amax() / h.amax();
        if !(residual <= FACTORIZATION_TOL) {
            return Err(GroupError::FactorizationFailure(residual));
        }
        Ok(g)
    }

    pub fn multiply(&self, g1: &GroupElement, g2: &GroupElement) -> Result<GroupElement, GroupError> {
        self.factorize(&(self.element_matrix(g1)? * self.element_matrix(g2)?))
    }

    pub fn invert(&self, g: &GroupElement) -> Result<GroupElement, GroupError> {
        // h^{-1} = ε diag(a^{-λ}) (I + X)^{-1}, assembled without a general solver.
        let mut m = self.shear.shear_invert(&g.t)?;
        let diag = self.diag(-g.log_a);
        for (mut row, s) in m.row_iter_mut().zip(diag.iter()) {
            row *= *s * f64::from(g.sign);
        }
        self.factorize(&m)
    }

    /// `hᵀ ξ`.
    pub fn dual_action(&self, g: &GroupElement, xi: &DVector<f64>) -> Result<DVector<f64>, GroupError> {
        Ok(self.element_matrix(g)?.transpose() * xi)
    }

    /// `|det h| = a^{Σ λ_i}`.
    pub fn abs_det(&self, g: &GroupElement) -> f64 {
        (to_f64(&self.det_exponent()) * g.log_a).exp()
    }

    /// `|det h|^{-1}`, the factor in `dμ_G = |det h|^{-1} dx dh`.
    pub fn haar_weight(&self, g: &GroupElement) -> f64 {
        1.0 / self.abs_det(g)
    }

    /// Density of left Haar measure w.r.t. `da dt` in the chart.
    pub fn left_haar_density(&self, g: &GroupElement) -> f64 {
        let d = self.dim() as f64;
        let s: f64 = self.lambda_f[1..].iter().sum();
        ((s - d) * g.log_a).exp()
    }

    /// Density of `|det h|^{-1} dh` w.r.t. `d(ln a) dt`, i.e. `a^{-d}`.
    pub fn affine_density_log(&self, g: &GroupElement) -> f64 {
        (-(self.dim() as f64) * g.log_a).exp()
    }

    /// `A(t)`: the lower-right `(d-1)×(d-1)` block of `Σ t_i X_i`.
    pub fn shear_block(&self, t: &[f64]) -> Result<DMatrix<f64>, GroupError> {
        let x = self.shear.lie_element_f64(t)?;
        let d = self.dim();
        Ok(x.view((1, 1), (d - 1, d - 1)).into_owned())
    }
}

/// Regular frequency grid; samples sit at cell midpoints `lo + (i + 1/2) step`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pub lo: Vec<f64>,
    pub step: Vec<f64>,
    pub shape: Vec<usize>,
}

impl FrequencyGrid {
    /// Grid of `n` cells per axis covering the box `[lo_k, hi_k]`.
    pub fn covering(lo: &[f64], hi: &[f64], n: &[usize]) -> Self {
        let step = lo.iter().zip(hi).zip(n).map(|((l, h), &k)| (h - l) / k as f64).collect();
        Self { lo: lo.to_vec(), step, shape: n.to_vec() }
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

    /// Multi-index of flat index `idx`; the last axis varies fastest.
    pub fn index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.shape.len()];
        for k in (0..self.shape.len()).rev() {
            out[k] = idx % self.shape[k];
            idx /= self.shape[k];
        }
        out
    }

    pub fn midpoint(&self, idx: usize) -> Vec<f64> {
        self.index(idx).iter().enumerate().map(|(k, &i)| self.lo[k] + (i as f64 + 0.5) * self.step[k]).collect()
    }

    fn validate(&self) -> Result<(), GroupError> {
        if self.shape.is_empty() || self.lo.len() != self.shape.len() || self.step.len() != self.shape.len() {
            return Err(GroupError::GridDegenerate("axis count mismatch"));
        }
        if self.is_empty() {
            return Err(GroupError::GridDegenerate("no cells"));
        }
        if self.step.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(GroupError::GridDegenerate("nonpositive spacing"));
        }
        Ok(())
    }
}

/// `ψ̂` sampled at the midpoints of a [`FrequencyGrid`].
#[derive(Debug, Clone)]
pub struct SampledSpectrum {
    pub grid: FrequencyGrid,
    pub values: Vec<Complex64>,
}

impl SampledSpectrum {
    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.midpoint(i))).collect();
        Self { grid, values }
    }
}

/// Midpoint-rule approximation of `∫ |ψ̂(ξ)|² / |ξ_1|^d dξ`.
///
/// Returns `f64::INFINITY` when `ψ̂` is non-negligible on a cell whose closure
/// meets the hyperplane `ξ_1 = 0`.
pub fn admissibility_integral(psi_hat: &SampledSpectrum) -> Result<f64, GroupError> {
    let grid = &psi_hat.grid;
    grid.validate()?;
    if psi_hat.values.len() != grid.len() {
        return Err(GroupError::GridDegenerate("value count does not match grid"));
    }
    let d = grid.shape.len() as i32;
    let peak = psi_hat.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(0.0);
    }
    let negligible = peak * 1e-24;
    let (lo, step) = (grid.lo[0], grid.step[0]);
    let mut sum = 0.0;
    for (idx, v) in psi_hat.values.iter().enumerate() {
        let p = v.norm_sqr();
        if p <= negligible {
            continue;
        }
        let i1 = grid.index(idx)[0] as f64;
        let (a, b) = (lo + i1 * step, lo + (i1 + 1.0) * step);
        if a <= 0.0 && b >= 0.0 {
            return Ok(f64::INFINITY);
        }
        let xi1 = lo + (i1 + 0.5) * step;
        sum += p / xi1.abs().powi(d);
    }
    Ok(sum * grid.cell_volume())
}
