//! Embedding of `ℝ^d ⋊ T(d,ℝ)_+` into `Sp(d,ℝ)` and the Fourier-side intertwining check.
//!
//! `T(d,ℝ)_+` is the group of invertible upper triangular matrices with positive
//! `(1,1)` entry. Translations are coded by the symmetric matrix `σ_b`, dilations by
//! `ρ(h) = √h₁₁ h^{-T}`, and `φ(b, h)` is the block matrix `[[ρ, 0], [σ_b ρ, ρ^{-T}]]`.
//! On functions supported in `Θ_L = {ξ₁ ≤ 0}` the metaplectic operator of `φ(b, h)`
//! has a closed form, and the unitary warp `Ψ` built from `Q(ξ) = -ξ₁ξ/2` turns it
//! into the Fourier transform of the quasi-regular representation.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use thiserror::Error;

use crate::grid::{Grid, GridFunction, Interpolator};
use crate::group::{GroupElement, GroupError, ShearletGroup};
use crate::wavefront::rng;

/// Tolerance for entries below the diagonal and for symplectic block structure.
pub const STRUCTURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymplecticError {
    #[error("matrix is not upper triangular: entry ({row}, {col}) = {value}")]
    NotUpperTriangular { row: usize, col: usize, value: f64 },
    #[error("(1,1) entry {0} is not positive")]
    NonpositiveCorner(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not in the image of the embedding: {0}")]
    NotInImage(String),
    #[error("interpolation requested ξ₁ = {0} outside the closed half-space")]
    SupportEscape(f64),
    #[error("guard band {0} does not separate the grid from ξ₁ = 0")]
    BoundaryDivergence(f64),
    #[error(transparent)]
    Group(#[from] GroupError),
}

fn check_triangular(h: &DMatrix<f64>) -> Result<(), SymplecticError> {
    let d = h.nrows();
    if h.ncols() != d || d == 0 {
        return Err(SymplecticError::Dimension(format!("{}x{} is not square", h.nrows(), h.ncols())));
    }
    let scale = h.amax().max(1.0);
    for col in 0..d {
        for row in col + 1..d {
            let value = h[(row, col)];
            if value.abs() > STRUCTURE_TOL * scale {
                return Err(SymplecticError::NotUpperTriangular { row, col, value });
            }
        }
    }
    if !(h[(0, 0)] > 0.0) {
        return Err(SymplecticError::NonpositiveCorner(h[(0, 0)]));
    }
    if (0..d).any(|i| h[(i, i)] == 0.0) {
        return Err(SymplecticError::Dimension("singular diagonal".into()));
    }
    Ok(())
}

fn upper_inverse(h: &DMatrix<f64>) -> DMatrix<f64> {
    let d = h.nrows();
    h.solve_upper_triangular(&DMatrix::identity(d, d)).expect("nonzero diagonal checked")
}

/// `σ_b`: `b₁` at `(1,1)`, `b_j/2` at `(1,j)` and `(j,1)`. Satisfies `⟨σ_b ξ, ξ⟩ = ξ₁⟨b, ξ⟩`.
pub fn sigma(b: &DVector<f64>) -> DMatrix<f64> {
    let d = b.len();
    let mut s = DMatrix::zeros(d, d);
    s[(0, 0)] = b[0];
    for j in 1..d {
        s[(0, j)] = b[j] / 2.0;
        s[(j, 0)] = b[j] / 2.0;
    }
    s
}

/// `ρ(h) = √h₁₁ h^{-T}`, lower triangular with positive `(1,1)` entry.
pub fn rho(h: &DMatrix<f64>) -> Result<DMatrix<f64>, SymplecticError> {
    check_triangular(h)?;
    Ok(upper_inverse(h).transpose() * h[(0, 0)].sqrt())
}

/// `[[0, I], [-I, 0]]`.
pub fn standard_form(d: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = 1.0;
        j[(d + i, i)] = -1.0;
    }
    j
}

/// `g(σ, h) = [[h, 0], [σh, h^{-T}]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticElement {
    pub matrix: DMatrix<f64>,
}

impl SymplecticElement {
    /// Builds `g(σ, h)` for symmetric `σ` and invertible `h`.
    pub fn from_blocks(s: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<Self, SymplecticError> {
        let d = h.nrows();
        if s.shape() != (d, d) || h.ncols() != d {
            return Err(SymplecticError::Dimension(format!("σ {:?}, h {:?}", s.shape(), h.shape())));
        }
        let h_inv_t = h
            .clone()
            .try_inverse()
            .ok_or_else(|| SymplecticError::Dimension("h is singular".into()))?
            .transpose();
        let mut m = DMatrix::zeros(2 * d, 2 * d);
        m.view_mut((0, 0), (d, d)).copy_from(h);
        m.view_mut((d, 0), (d, d)).copy_from(&(s * h));
        m.view_mut((d, d), (d, d)).copy_from(&h_inv_t);
        Ok(Self { matrix: m })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn identity(d: usize) -> Self {
        Self { matrix: DMatrix::identity(2 * d, 2 * d) }
    }

    /// Upper-left block.
    pub fn h_block(&self) -> DMatrix<f64> {
        let d = self.dim();
        self.matrix.view((0, 0), (d, d)).into_owned()
    }

    /// `σ = C h^{-1}` from the lower-left block `C = σh`.
    pub fn sigma_block(&self) -> Result<DMatrix<f64>, SymplecticError> {
        let d = self.dim();
        let inv = self
            .h_block()
            .try_inverse()
            .ok_or_else(|| SymplecticError::NotInImage("upper-left block is singular".into()))?;
        Ok(self.matrix.view((d, 0), (d, d)) * inv)
    }

    /// `max |gᵀJg − J|`.
    pub fn symplectic_residual(&self) -> f64 {
        let j = standard_form(self.dim());
        (self.matrix.transpose() * &j * &self.matrix - j).amax()
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { matrix: &self.matrix * &other.matrix }
    }
}

/// `φ(b, h) = g(σ_b, ρ(h))`.
pub fn phi(b: &DVector<f64>, h: &DMatrix<f64>) -> Result<SymplecticElement, SymplecticError> {
    if b.len() != h.nrows() {
        return Err(SymplecticError::Dimension(format!("b has {} entries, h is {}x{}", b.len(), h.nrows(), h.ncols())));
    }
    SymplecticElement::from_blocks(&sigma(b), &rho(h)?)
}

/// Left inverse of [`phi`]: `h₁₁ = ρ₁₁^{-2}`, `h = √h₁₁ ρ^{-T}`, `b` read off `σ`;
/// the candidate is re-embedded and must reproduce `g`.
pub fn phi_inverse(g: &SymplecticElement) -> Result<(DVector<f64>, DMatrix<f64>), SymplecticError> {
    let d = g.dim();
    let r = g.h_block();
    let r11 = r[(0, 0)];
    if !(r11 > 0.0) {
        return Err(SymplecticError::NotInImage(format!("ρ₁₁ = {r11}")));
    }
    let h11 = r11.powi(-2);
    let h = r
        .clone()
        .try_inverse()
        .ok_or_else(|| SymplecticError::NotInImage("upper-left block is singular".into()))?
        .transpose()
        * h11.sqrt();
    check_triangular(&h).map_err(|e| SymplecticError::NotInImage(e.to_string()))?;
    let s = g.sigma_block()?;
    let b = DVector::from_fn(d, |j, _| if j == 0 { s[(0, 0)] } else { 2.0 * s[(0, j)] });
    let recon = phi(&b, &h)?;
    if (&recon.matrix - &g.matrix).amax() > 1e-9 * g.matrix.amax().max(1.0) {
        return Err(SymplecticError::NotInImage("matrix differs from φ(b, h) of its own blocks".into()));
    }
    Ok((b, h))
}

/// `max |ρ(h)^{-T} σ_b ρ(h)^{-1} − σ_{hb}|`.
pub fn conjugation_residual(h: &DMatrix<f64>, b: &DVector<f64>) -> Result<f64, SymplecticError> {
    let r = rho(h)?;
    let r_inv = r.clone().try_inverse().expect("ρ(h) is invertible");
    let lhs = r_inv.transpose() * sigma(b) * &r_inv;
    Ok((lhs - sigma(&(h * b))).amax())
}

/// `max |ρ(h₁h₂) − ρ(h₁)ρ(h₂)|`.
pub fn rho_homomorphism_residual(h1: &DMatrix<f64>, h2: &DMatrix<f64>) -> Result<f64, SymplecticError> {
    Ok((rho(&(h1 * h2))? - rho(h1)? * rho(h2)?).amax())
}

/// `max |φ(b₁ + h₁b₂, h₁h₂) − φ(b₁,h₁)φ(b₂,h₂)|`.
pub fn phi_homomorphism_residual(
    (b1, h1): (&DVector<f64>, &DMatrix<f64>),
    (b2, h2): (&DVector<f64>, &DMatrix<f64>),
) -> Result<f64, SymplecticError> {
    let product = phi(&(b1 + h1 * b2), &(h1 * h2))?;
    Ok((product.matrix - phi(b1, h1)?.mul(&phi(b2, h2)?).matrix).amax())
}

/// `Q(ξ) = -ξ₁ξ/2`, a diffeomorphism of `{ξ₁ < 0}`.
pub fn q_map(xi: &[f64]) -> Vec<f64> {
    xi.iter().map(|x| -0.5 * xi[0] * x).collect()
}

/// `Q^{-1}(ξ) = √2 ξ / √(-ξ₁)`; not finite for `ξ₁ ≥ 0`.
pub fn q_inverse(xi: &[f64]) -> Vec<f64> {
    let c = (2.0 / -xi[0]).sqrt();
    xi.iter().map(|x| c * x).collect()
}

/// `|det J_Q(ξ)| = 2^{1-d} |ξ₁|^d`.
pub fn jacobian_q(xi: &[f64]) -> f64 {
    let d = xi.len() as i32;
    2f64.powi(1 - d) * xi[0].abs().powi(d)
}

/// `|det J_{Q^{-1}}(ξ)| = 2^{d/2-1} |ξ₁|^{-d/2}`.
pub fn jacobian_q_inverse(xi: &[f64]) -> f64 {
    let d = xi.len() as f64;
    2f64.powf(d / 2.0 - 1.0) * xi[0].abs().powf(-d / 2.0)
}

/// `max |Q(hᵀξ) − h₁₁ hᵀ Q(ξ)|`.
pub fn hq_identity_residual(h: &DMatrix<f64>, xi: &[f64]) -> f64 {
    let x = DVector::from_column_slice(xi);
    let ht = h.transpose();
    let lhs = DVector::from_vec(q_map((&ht * &x).as_slice()));
    let rhs = ht * DVector::from_vec(q_map(xi)) * h[(0, 0)];
    (lhs - rhs).amax()
}

/// `|√(|det J_{Q^{-1}}(η)| · |det J_Q(ρ(h)^{-1} Q^{-1}(η))|) − h₁₁^{d/4}|`.
pub fn jacobian_product_residual(h: &DMatrix<f64>, eta: &[f64]) -> Result<f64, SymplecticError> {
    let r_inv = rho(h)?.try_inverse().expect("ρ(h) is invertible");
    let zeta = &r_inv * DVector::from_vec(q_inverse(eta));
    let prod = (jacobian_q_inverse(eta) * jacobian_q(zeta.as_slice())).sqrt();
    Ok((prod - h[(0, 0)].powf(eta.len() as f64 / 4.0)).abs())
}

/// Box `[-Ξ, -γ] × [-Ξ, Ξ]^{d-1}` with `n` nodes per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceGrid {
    pub dim: usize,
    pub xi_max: f64,
    pub guard: f64,
    pub n: usize,
}

impl HalfSpaceGrid {
    pub fn new(dim: usize, xi_max: f64, guard: f64, n: usize) -> Result<Self, SymplecticError> {
        if !(guard > 0.0) {
            return Err(SymplecticError::BoundaryDivergence(guard));
        }
        if !(xi_max > guard) || n < 2 || dim < 2 {
            return Err(SymplecticError::Dimension(format!("Ξ={xi_max}, γ={guard}, n={n}, d={dim}")));
        }
        Ok(Self { dim, xi_max, guard, n })
    }

    /// `Ξ = 6`, `γ = 1/20`.
    pub fn default_for(dim: usize, n: usize) -> Self {
        Self { dim, xi_max: 6.0, guard: 0.05, n }
    }

    pub fn grid(&self) -> Grid {
        let mut lo = vec![-self.xi_max; self.dim];
        let mut hi = vec![self.xi_max; self.dim];
        hi[0] = -self.guard;
        lo[0] = -self.xi_max;
        Grid::spanning(&lo, &hi, &vec![self.n; self.dim])
    }

    pub fn refined(&self) -> Self {
        Self { n: 2 * self.n, ..self.clone() }
    }
}

/// Samples of `f̂` on a grid inside `{ξ₁ < 0}`; treated as zero off the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceFunction {
    pub data: GridFunction,
}

impl HalfSpaceFunction {
    pub fn new(data: GridFunction) -> Result<Self, SymplecticError> {
        let g = &data.grid;
        let top = g.origin[0] + g.step[0] * (g.shape[0] - 1) as f64;
        if !(top < 0.0) {
            return Err(SymplecticError::BoundaryDivergence(-top));
        }
        Ok(Self { data })
    }

    pub fn from_fn(grid: &HalfSpaceGrid, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Self {
        let g = grid.grid();
        let values = (0..g.len()).into_par_iter().map(|i| f(&g.node(i))).collect();
        Self { data: GridFunction { grid: g, values } }
    }

    /// `exp(-|ξ - c|² / (2s²))`.
    pub fn gaussian(grid: &HalfSpaceGrid, center: &[f64], s: f64) -> Self {
        Self::from_fn(grid, |xi| {
            let r2: f64 = xi.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
            Complex64::new((-r2 / (2.0 * s * s)).exp(), 0.0)
        })
    }

    pub fn norm(&self) -> f64 {
        self.data.l2_norm()
    }

    fn map(&self, f: impl Fn(&[f64]) -> Result<Complex64, SymplecticError> + Sync) -> Result<Self, SymplecticError> {
        let g = &self.data.grid;
        let values = (0..g.len()).into_par_iter().map(|i| f(&g.node(i))).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { data: GridFunction { grid: g.clone(), values } })
    }

    fn sample(&self, interp: &dyn Interpolator, xi: &[f64]) -> Result<Complex64, SymplecticError> {
        let step = self.data.grid.step[0];
        if xi[0] > step * 1e-9 {
            return Err(SymplecticError::SupportEscape(xi[0]));
        }
        Ok(self.data.sample(interp, xi))
    }
}

/// `ξ ↦ |det ρ|^{-1/2} e^{πi⟨σξ, ξ⟩} f̂(ρ^{-1}ξ)` for `g = g(σ, ρ)` in the image of [`phi`].
pub fn metaplectic_apply(
    g: &SymplecticElement,
    f: &HalfSpaceFunction,
    interp: &dyn Interpolator,
) -> Result<HalfSpaceFunction, SymplecticError> {
    let r = g.h_block();
    if r.nrows() != f.data.grid.dim() {
        return Err(SymplecticError::Dimension(format!("element of Sp({}) on {}-d data", r.nrows(), f.data.grid.dim())));
    }
    let s = g.sigma_block()?;
    let r_inv = r.clone().try_inverse().ok_or_else(|| SymplecticError::NotInImage("ρ is singular".into()))?;
    let amp = r.determinant().abs().powf(-0.5);
    f.map(|xi| {
        let x = DVector::from_column_slice(xi);
        let phase = PI * (&s * &x).dot(&x);
        let z = &r_inv * &x;
        Ok(f.sample(interp, z.as_slice())? * Complex64::from_polar(amp, phase))
    })
}

/// `Ψf̂(ξ) = |det J_{Q^{-1}}(ξ)|^{1/2} f̂(Q^{-1}(ξ))`.
pub fn warp(f: &HalfSpaceFunction, interp: &dyn Interpolator) -> Result<HalfSpaceFunction, SymplecticError> {
    f.map(|xi| Ok(f.sample(interp, &q_inverse(xi))? * jacobian_q_inverse(xi).sqrt()))
}

/// `Ψ^{-1}f̂(ξ) = |det J_Q(ξ)|^{1/2} f̂(Q(ξ))`.
pub fn unwarp(f: &HalfSpaceFunction, interp: &dyn Interpolator) -> Result<HalfSpaceFunction, SymplecticError> {
    f.map(|xi| Ok(f.sample(interp, &q_map(xi))? * jacobian_q(xi).sqrt()))
}

/// `π̂(b,h)f̂(ξ) = |det h|^{1/2} e^{-2πi⟨b,ξ⟩} f̂(hᵀξ)`.
pub fn quasi_regular_hat(
    b: &DVector<f64>,
    h: &DMatrix<f64>,
    f: &HalfSpaceFunction,
    interp: &dyn Interpolator,
) -> Result<HalfSpaceFunction, SymplecticError> {
    check_triangular(h)?;
    let ht = h.transpose();
    let amp = h.determinant().abs().sqrt();
    f.map(|xi| {
        let x = DVector::from_column_slice(xi);
        let y = &ht * &x;
        Ok(f.sample(interp, y.as_slice())? * Complex64::from_polar(amp, -2.0 * PI * b.dot(&x)))
    })
}

/// `‖Ψ μ(φ(b,h)) Ψ^{-1} f̂ − π̂(b,h) f̂‖ / ‖f̂‖` on the grid of `f̂`.
pub fn intertwining_residual(
    b: &DVector<f64>,
    h: &DMatrix<f64>,
    f: &HalfSpaceFunction,
    interp: &dyn Interpolator,
) -> Result<f64, SymplecticError> {
    let g = phi(b, h)?;
    let lhs = warp(&metaplectic_apply(&g, &unwarp(f, interp)?, interp)?, interp)?;
    let rhs = quasi_regular_hat(b, h, f, interp)?;
    let diff: f64 = lhs.data.values.iter().zip(&rhs.data.values).map(|(a, c)| (a - c).norm_sqr()).sum();
    Ok((diff * f.data.grid.cell_volume()).sqrt() / f.norm())
}

/// Test bump `exp(-|ξ - (-3, 0, …)|² / (2 · 0.5²))`.
pub fn default_bump(grid: &HalfSpaceGrid) -> HalfSpaceFunction {
    let mut c = vec![0.0; grid.dim];
    c[0] = -3.0;
    HalfSpaceFunction::gaussian(grid, &c, 0.5)
}

/// Residuals at `n` and `2n` nodes per axis with the observed order `log2(coarse/fine)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub coarse: f64,
    pub fine: f64,
}

impl ConvergenceRow {
    pub fn order(&self) -> f64 {
        (self.coarse / self.fine).log2()
    }
}

pub fn intertwining_convergence(
    b: &DVector<f64>,
    h: &DMatrix<f64>,
    grid: &HalfSpaceGrid,
    interp: &dyn Interpolator,
) -> Result<ConvergenceRow, SymplecticError> {
    let coarse = intertwining_residual(b, h, &default_bump(grid), interp)?;
    let fine_grid = grid.refined();
    let fine = intertwining_residual(b, h, &default_bump(&fine_grid), interp)?;
    Ok(ConvergenceRow { coarse, fine })
}

/// Where random dilations for the algebraic certificates come from.
#[derive(Debug, Clone, Copy)]
pub enum DilationSource<'g> {
    /// Upper triangular, `h₁₁ ∈ [1/2, 2]`, other diagonal entries `±[1/2, 2]`, off-diagonal in `[-1, 1]`.
    Triangular(usize),
    /// Positive part `DS` of a shearlet dilation group: `ln a ∈ [-1, 1]`, `t ∈ [-1, 1]^{d-1}`.
    Group(&'g ShearletGroup),
}

impl DilationSource<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Self::Triangular(d) => *d,
            Self::Group(g) => g.dim(),
        }
    }

    pub fn sample(&self, r: &mut ChaCha8Rng) -> Result<DMatrix<f64>, SymplecticError> {
        match self {
            Self::Triangular(d) => {
                let d = *d;
                Ok(DMatrix::from_fn(d, d, |i, j| match i.cmp(&j) {
                    std::cmp::Ordering::Greater => 0.0,
                    std::cmp::Ordering::Equal => {
                        let m = 2f64.powf(r.random_range(-1.0..=1.0));
                        if i > 0 && r.random_bool(0.5) {
                            -m
                        } else {
                            m
                        }
                    }
                    std::cmp::Ordering::Less => r.random_range(-1.0..=1.0),
                }))
            }
            Self::Group(g) => {
                let t = (1..g.dim()).map(|_| r.random_range(-1.0..=1.0)).collect();
                Ok(g.element_matrix(&GroupElement::from_log(1, r.random_range(-1.0..=1.0), t))?)
            }
        }
    }
}

fn random_translation(r: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| r.random_range(-2.0..=2.0))
}

/// Maximal residuals of the algebraic identities over random samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlgebraicCertificate {
    pub trials: usize,
    pub symplecticity: f64,
    pub rho_homomorphism: f64,
    pub phi_homomorphism: f64,
    pub conjugation: f64,
    /// `|φ^{-1}(φ(b,h)) − (b,h)|`.
    pub injectivity: f64,
    pub hq_identity: f64,
    pub jacobian_product: f64,
}

impl AlgebraicCertificate {
    pub fn max(&self) -> f64 {
        [
            self.symplecticity,
            self.rho_homomorphism,
            self.phi_homomorphism,
            self.conjugation,
            self.injectivity,
            self.hq_identity,
            self.jacobian_product,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn certify_algebraic(
    source: DilationSource<'_>,
    trials: usize,
    seed: u64,
) -> Result<AlgebraicCertificate, SymplecticError> {
    let d = source.dim();
    let mut r = rng(seed);
    let mut c = AlgebraicCertificate { trials, ..Default::default() };
    for _ in 0..trials {
        let (h1, h2) = (source.sample(&mut r)?, source.sample(&mut r)?);
        let (b1, b2) = (random_translation(&mut r, d), random_translation(&mut r, d));
        let g = phi(&b1, &h1)?;
        c.symplecticity = c.symplecticity.max(g.symplectic_residual());
        c.rho_homomorphism = c.rho_homomorphism.max(rho_homomorphism_residual(&h1, &h2)?);
        c.phi_homomorphism = c.phi_homomorphism.max(phi_homomorphism_residual((&b1, &h1), (&b2, &h2))?);
        c.conjugation = c.conjugation.max(conjugation_residual(&h1, &b1)?);
        let (b, h) = phi_inverse(&g)?;
        c.injectivity = c.injectivity.max((b - &b1).amax().max((h - &h1).amax()));
        let mut xi: Vec<f64> = (0..d).map(|_| r.random_range(-3.0..=3.0)).collect();
        xi[0] = -r.random_range(0.1..=3.0);
        c.hq_identity = c.hq_identity.max(hq_identity_residual(&h1, &xi));
        c.jacobian_product = c.jacobian_product.max(jacobian_product_residual(&h1, &xi)?);
    }
    Ok(c)
}

/// A translation and a dilation `(b, h)`.
pub type Pair = (DVector<f64>, DMatrix<f64>);

/// Test pairs for the intertwining study: the identity, a pure dilation, a shear with
/// translation, and two mixed pairs.
pub fn default_pairs(d: usize) -> Vec<Pair> {
    let mut out = vec![(DVector::zeros(d), DMatrix::identity(d, d))];
    let mut dil = DMatrix::identity(d, d);
    dil[(0, 0)] = 4.0;
    for i in 1..d {
        dil[(i, i)] = 2.0;
    }
    out.push((DVector::zeros(d), dil));
    let mut shear = DMatrix::identity(d, d);
    shear[(0, 1)] = 1.0;
    let mut b = DVector::zeros(d);
    b[0] = 1.0;
    out.push((b, shear));
    let mut mixed = DMatrix::identity(d, d) * 1.5;
    mixed[(0, d - 1)] = 0.5;
    mixed[(d - 1, d - 1)] = -1.0;
    out.push((DVector::from_fn(d, |i, _| if i % 2 == 0 { 0.5 } else { -0.5 }), mixed));
    let mut mild = DMatrix::identity(d, d);
    mild[(0, 0)] = 1.2;
    for j in 1..d {
        mild[(0, j)] = -0.3;
        mild[(j, j)] = 0.8;
    }
    out.push((DVector::from_fn(d, |i, _| 0.1 * (i as f64 + 1.0)), mild));
    out
}

/// The identity followed by `count - 1` elements of `DS` with `a ∈ [1, 2]` and
/// `t ∈ [-1/2, 1/2]^{d-1}`, paired with translations in `[-1/2, 1/2]^d`. The range of `a`
/// keeps the image of [`default_bump`] inside the default box.
pub fn group_pairs(
    g: &ShearletGroup,
    count: usize,
    seed: u64,
) -> Result<Vec<Pair>, SymplecticError> {
    let d = g.dim();
    let mut r = rng(seed);
    let mut out = vec![(DVector::zeros(d), DMatrix::identity(d, d))];
    for _ in 1..count {
        let log_a = r.random_range(0.0..=std::f64::consts::LN_2);
        let t = (1..d).map(|_| r.random_range(-0.5..=0.5)).collect();
        let h = g.element_matrix(&GroupElement::from_log(1, log_a, t))?;
        out.push((DVector::from_fn(d, |_, _| r.random_range(-0.5..=0.5)), h));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Cubic, Linear};
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho(&DMatrix::identity(3, 3)).unwrap(), DMatrix::identity(3, 3));
        let r = rho(&m(&[&[4.0, 0.0], &[0.0, 2.0]])).unwrap();
        assert!((r - m(&[&[0.5, 0.0], &[0.0, 1.0]])).amax() < 1e-15);
        assert!(matches!(
            rho(&m(&[&[1.0, 0.0], &[0.5, 1.0]])),
            Err(SymplecticError::NotUpperTriangular { row: 1, col: 0, .. })
        ));
        assert!(matches!(rho(&m(&[&[-1.0, 0.0], &[0.0, 1.0]])), Err(SymplecticError::NonpositiveCorner(_))));
    }

    #[test]
    fn sigma_codes_the_quadratic_form() {
        let b = DVector::from_vec(vec![0.7, -1.1, 2.0]);
        let s = sigma(&b);
        assert_eq!(s, s.transpose());
        assert!(s.rank(1e-12) <= 2);
        let xi = DVector::from_vec(vec![-1.3, 0.4, 2.2]);
        assert!(((&s * &xi).dot(&xi) - xi[0] * b.dot(&xi)).abs() < 1e-14);
    }

    #[test]
    fn conjugation_example() {
        let h = m(&[&[2.0, 1.0], &[0.0, 1.0]]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(conjugation_residual(&h, &b).unwrap() <= 1e-12);
        assert_eq!(conjugation_residual(&DMatrix::identity(2, 2), &b).unwrap(), 0.0);
    }

    #[test]
    fn phi_of_identity_is_identity() {
        let g = phi(&DVector::zeros(3), &DMatrix::identity(3, 3)).unwrap();
        assert_eq!(g, SymplecticElement::identity(3));
    }

    #[test]
    fn certificates_for_small_dimensions() {
        for d in 2..=5 {
            let c = certify_algebraic(DilationSource::Triangular(d), 100, d as u64).unwrap();
            assert!(c.max() <= 1e-10, "d={d}: {c:?}");
            assert!(c.symplecticity <= 1e-12, "d={d}: {}", c.symplecticity);
        }
    }

    #[test]
    fn phi_inverse_rejects_foreign_matrices() {
        let mut g = phi(&DVector::from_vec(vec![1.0, 2.0]), &m(&[&[2.0, 1.0], &[0.0, 3.0]])).unwrap();
        g.matrix[(2, 3)] += 0.5;
        assert!(matches!(phi_inverse(&g), Err(SymplecticError::NotInImage(_))));
    }

    #[test]
    fn q_examples() {
        assert!((jacobian_q(&[-1.0, 0.0]) - 0.5).abs() < 1e-15);
        let xi = [-2.3, 0.7, -1.9];
        let back = q_map(&q_inverse(&xi));
        assert!(xi.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-12));
        // J_Q at Q^{-1}(ξ) inverts J_{Q^{-1}} at ξ
        assert!((jacobian_q(&q_inverse(&xi)) * jacobian_q_inverse(&xi) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn guard_band_is_required() {
        assert!(matches!(HalfSpaceGrid::new(2, 6.0, 0.0, 64), Err(SymplecticError::BoundaryDivergence(_))));
        let bad = GridFunction::zeros(Grid::spanning(&[-1.0, -1.0], &[0.5, 1.0], &[8, 8]));
        assert!(matches!(HalfSpaceFunction::new(bad), Err(SymplecticError::BoundaryDivergence(_))));
    }

    #[test]
    fn translation_only_is_a_phase() {
        let grid = HalfSpaceGrid::default_for(2, 64);
        let f = default_bump(&grid);
        let g = phi(&DVector::from_vec(vec![0.8, -0.4]), &DMatrix::identity(2, 2)).unwrap();
        let out = metaplectic_apply(&g, &f, &Linear).unwrap();
        for (a, b) in out.data.values.iter().zip(&f.data.values) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
        let id = metaplectic_apply(&SymplecticElement::identity(2), &f, &Linear).unwrap();
        assert!(id.data.relative_error(&f.data) < 1e-12);
    }

    #[test]
    fn metaplectic_action_is_unitary() {
        let grid = HalfSpaceGrid::default_for(2, 256);
        let f = default_bump(&grid);
        let g = phi(&DVector::from_vec(vec![0.3, 0.2]), &m(&[&[1.5, 0.5], &[0.0, 1.0]])).unwrap();
        let out = metaplectic_apply(&g, &f, &Linear).unwrap();
        assert!((out.norm() / f.norm() - 1.0).abs() < 0.02);
    }

    #[test]
    fn warp_is_unitary_and_invertible() {
        let grid = HalfSpaceGrid::default_for(2, 256);
        // Smooth bump supported in -2 ≤ ξ₁ ≤ -1, |ξ₂| ≤ 1.
        let f = HalfSpaceFunction::from_fn(&grid, |xi| {
            Complex64::new(crate::window::bump(2.0 * xi[0] + 3.0) * crate::window::bump(xi[1]), 0.0)
        });
        let w = warp(&f, &Cubic).unwrap();
        assert!((w.norm() / f.norm() - 1.0).abs() < 0.01, "{} vs {}", w.norm(), f.norm());
        let back = unwarp(&w, &Cubic).unwrap();
        assert!(back.data.relative_error(&f.data) < 0.01);
    }

    #[test]
    fn identity_intertwines_exactly() {
        let grid = HalfSpaceGrid::default_for(2, 64);
        let (b, h) = (DVector::zeros(2), DMatrix::identity(2, 2));
        let f = default_bump(&grid);
        // Ψ and Ψ^{-1} still interpolate, so only the composite is approximate.
        assert!(intertwining_residual(&b, &h, &f, &Linear).unwrap() < 0.05);
    }

    #[test]
    fn dilation_pair_intertwines() {
        let grid = HalfSpaceGrid::default_for(2, 256);
        let h = m(&[&[4.0, 0.0], &[0.0, 2.0]]);
        let eta = [-3.0, 0.4];
        assert!(hq_identity_residual(&h, &eta) <= 1e-12);
        let r = intertwining_residual(&DVector::zeros(2), &h, &default_bump(&grid), &Linear).unwrap();
        assert!(r <= 0.02, "residual {r}");
    }

    #[test]
    fn shear_pair_converges() {
        let grid = HalfSpaceGrid::default_for(2, 256);
        let row = intertwining_convergence(
            &DVector::from_vec(vec![1.0, 0.0]),
            &m(&[&[1.0, 1.0], &[0.0, 1.0]]),
            &grid,
            &Linear,
        )
        .unwrap();
        assert!(row.coarse <= 0.02 && row.order() >= 1.0, "{row:?}");
    }

    #[test]
    fn group_elements_embed() {
        use crate::algebra::{canonical_basis, families};
        use crate::rational::{q, qi};
        use crate::scaling::ExponentVector;
        let s = canonical_basis(&families::build("toeplitz", 3, None).unwrap());
        let g = ShearletGroup::new(s, ExponentVector::new(vec![qi(1), q(2, 3), q(1, 3)])).unwrap();
        let c = certify_algebraic(DilationSource::Group(&g), 50, 7).unwrap();
        assert!(c.max() <= 1e-10, "{c:?}");
        let neg = g.element_matrix(&GroupElement::from_log(-1, 0.0, vec![0.0, 0.0])).unwrap();
        assert!(matches!(rho(&neg), Err(SymplecticError::NonpositiveCorner(_))));
    }

    proptest! {
        #[test]
        fn hq_identity_holds(
            h11 in 0.3f64..3.0, h12 in -2.0f64..2.0, h22 in -3.0f64..3.0,
            x1 in -5.0f64..-0.1, x2 in -5.0f64..5.0,
        ) {
            prop_assume!(h22.abs() > 0.1);
            let h = m(&[&[h11, h12], &[0.0, h22]]);
            prop_assert!(hq_identity_residual(&h, &[x1, x2]) <= 1e-12 * (1.0 + x1 * x1 + x2 * x2) * 10.0);
            prop_assert!(jacobian_product_residual(&h, &[x1, x2]).unwrap() <= 1e-12);
        }
    }
}
