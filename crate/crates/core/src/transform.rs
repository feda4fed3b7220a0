//! The continuous shearlet transform sampled on a grid of positions and group elements.
//!
//! `W_ψ f(x, h) = ⟨f, π(x, h)ψ⟩` with `π(x, h)ψ(y) = |det h|^{-1/2} ψ(h^{-1}(y - x))`.
//! On the Fourier side `(π(x,h)ψ)^(ξ) = |det h|^{1/2} e^{-2πi x·ξ} ψ̂(hᵀξ)`, so each
//! group element contributes one inverse FFT over all positions.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Grid, GridFunction, Interpolator};
use crate::group::{GroupElement, GroupError, ShearletGroup};
use crate::spectral::{SpectralLayout, PAD};
use crate::window::FrequencyWindow;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),
    #[error("admissibility constant is not finite ({0})")]
    MissingConstant(f64),
    #[error("invalid sampling: {0}")]
    InvalidSampling(String),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Discretization of `H`: a geometric scale ladder, a symmetric shear lattice and signs.
///
/// Shears are `t_i = u_i` or, when `adapted`, `t_i = a^{1-λ_i} u_i`, which keeps the
/// angular resolution of the lattice matched to the window footprint at every scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSampling {
    /// Strictly decreasing scales `a_0 ρ^m`.
    pub scales: Vec<f64>,
    /// `|ln ρ|`.
    pub log_step: f64,
    /// Symmetric lattice offsets `u ∈ Δu · {-K..K}^{d-1}`.
    pub shear_offsets: Vec<Vec<f64>>,
    pub shear_step: f64,
    pub adapted: bool,
    pub signs: Vec<i8>,
}

impl GroupSampling {
    /// `count` scales `a0 · ratio^m` with `0 < ratio < 1`, and `(2K+1)^{d-1}` shears.
    pub fn geometric(
        dim: usize,
        a0: f64,
        ratio: f64,
        count: usize,
        shear_step: f64,
        shear_radius: usize,
        adapted: bool,
        signs: Vec<i8>,
    ) -> Result<Self, TransformError> {
        if !(a0 > 0.0 && ratio > 0.0 && ratio < 1.0 && count > 0 && shear_step > 0.0 && !signs.is_empty()) {
            return Err(TransformError::InvalidSampling(format!(
                "a0={a0} ratio={ratio} count={count} shear_step={shear_step}"
            )));
        }
        let scales = (0..count).map(|m| a0 * ratio.powi(m as i32)).collect();
        let k = shear_radius as i64;
        let side: Vec<f64> = (-k..=k).map(|i| i as f64 * shear_step).collect();
        let mut shear_offsets = vec![Vec::new()];
        for _ in 1..dim {
            shear_offsets = shear_offsets
                .into_iter()
                .flat_map(|prefix| {
                    side.iter().map(move |&s| {
                        let mut v = prefix.clone();
                        v.push(s);
                        v
                    })
                })
                .collect();
        }
        Ok(Self { scales, log_step: -ratio.ln(), shear_offsets, shear_step, adapted, signs })
    }

    /// Dense planar sampling for [`test_signal`]: both signs, scales `8 · 2^{-m/k}` over
    /// five octaves with `k = per_octave`, adapted shears of step 1/8 and radius 12.
    pub fn dense(per_octave: usize) -> Result<Self, TransformError> {
        if per_octave == 0 {
            return Err(TransformError::InvalidSampling("per_octave must be positive".into()));
        }
        let ratio = 2f64.powf(-1.0 / per_octave as f64);
        Self::geometric(2, 8.0, ratio, 5 * per_octave + 1, 0.125, 12, true, vec![1, -1])
    }

    pub fn len(&self) -> usize {
        self.signs.len() * self.scales.len() * self.shear_offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat element index of `(sign, scale, shear)`.
    pub fn index(&self, sign: usize, scale: usize, shear: usize) -> usize {
        (sign * self.scales.len() + scale) * self.shear_offsets.len() + shear
    }

    pub fn shear_at(&self, g: &ShearletGroup, scale: f64, offset: &[f64]) -> Vec<f64> {
        if !self.adapted {
            return offset.to_vec();
        }
        offset.iter().zip(&g.lambda()[1..]).map(|(u, l)| u * scale.powf(1.0 - l)).collect()
    }

    /// Group elements with their quadrature weights for `|det h|^{-1} dh`
    /// (positions excluded): `Δln a · Π Δt_i · a^{-d}`.
    pub fn elements(&self, g: &ShearletGroup) -> Vec<(GroupElement, f64)> {
        let d = g.dim();
        let mut out = Vec::with_capacity(self.len());
        for &sign in &self.signs {
            for &a in &self.scales {
                let dt: f64 = if self.adapted {
                    g.lambda()[1..].iter().map(|l| self.shear_step * a.powf(1.0 - l)).product()
                } else {
                    self.shear_step.powi(d as i32 - 1)
                };
                for u in &self.shear_offsets {
                    let e = GroupElement::from_log(sign, a.ln(), self.shear_at(g, a, u));
                    let w = self.log_step * dt * g.affine_density_log(&e);
                    out.push((e, w));
                }
            }
        }
        out
    }
}

/// Default ladder density of [`GroupSampling::dense`].
pub const DENSE_PER_OCTAVE: usize = 4;

/// Reference planar signal on `[-8, 8)²` with 64 nodes per axis: a Gaussian of width 1.5
/// modulated at frequency `(0.8, 0.2)`. Its spectrum is below `e^{-60}` of the peak
/// beyond the Nyquist frequency 2.
pub fn test_signal() -> GridFunction {
    let w = 1.5;
    GridFunction::from_real_fn(Grid::centered(2, 64, 8.0), |x| {
        (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * w * w)).exp()
            * (2.0 * std::f64::consts::PI * (0.8 * x[0] + 0.2 * x[1])).cos()
    })
}

/// `W_ψ f` on all grid positions for each sampled group element.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub positions: Grid,
    pub sampling: GroupSampling,
    pub elements: Vec<GroupElement>,
    /// Quadrature weight of each element for `|det h|^{-1} dh`.
    pub weights: Vec<f64>,
    /// One slice per element, laid out like `positions`.
    pub slices: Vec<Vec<Complex64>>,
}

impl CoefficientField {
    pub fn get(&self, position: usize, scale: usize, shear: usize, sign: usize) -> Complex64 {
        self.slices[self.sampling.index(sign, scale, shear)][position]
    }

    pub fn max_abs(&self) -> f64 {
        self.slices.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.slices.iter().flatten().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

fn check_dims(f: &GridFunction, psi: &dyn FrequencyWindow, g: &ShearletGroup) -> Result<(), TransformError> {
    if f.grid.dim() != g.dim() || psi.dim() != g.dim() {
        return Err(TransformError::IncompatibleGrids(format!(
            "signal dim {}, window dim {}, group dim {}",
            f.grid.dim(),
            psi.dim(),
            g.dim()
        )));
    }
    Ok(())
}

/// `ψ̂(hᵀξ) |det h|^{1/2}` over the padded frequency lattice.
fn atom_spectrum(
    layout: &SpectralLayout,
    freqs: &[f64],
    psi: &dyn FrequencyWindow,
    g: &ShearletGroup,
    e: &GroupElement,
) -> Result<Vec<Complex64>, TransformError> {
    let d = layout.dim();
    let ht = g.element_matrix(e)?.transpose();
    let scale = g.abs_det(e).sqrt();
    let mut eta = vec![0.0; d];
    Ok(freqs
        .chunks_exact(d)
        .map(|xi| {
            for (r, out) in eta.iter_mut().enumerate() {
                *out = (0..d).map(|c| ht[(r, c)] * xi[c]).sum();
            }
            psi.eval(&eta) * scale
        })
        .collect())
}

pub fn analyze(
    f: &GridFunction,
    psi: &dyn FrequencyWindow,
    g: &ShearletGroup,
    samp: &GroupSampling,
) -> Result<CoefficientField, TransformError> {
    check_dims(f, psi, g)?;
    let layout = SpectralLayout::new(&f.grid, PAD);
    let freqs = layout.frequencies();
    let fhat = layout.forward(&f.values);
    let (elements, weights): (Vec<_>, Vec<_>) = samp.elements(g).into_iter().unzip();
    let slices = elements
        .par_iter()
        .map(|e| {
            let atom = atom_spectrum(&layout, &freqs, psi, g, e)?;
            let prod = fhat.iter().zip(&atom).map(|(a, b)| a * b.conj()).collect();
            Ok(layout.inverse(prod))
        })
        .collect::<Result<Vec<_>, TransformError>>()?;
    Ok(CoefficientField { positions: f.grid.clone(), sampling: samp.clone(), elements, weights, slices })
}

/// Number of group elements summed sequentially per parallel task; fixes the
/// floating-point summation order independently of the thread count.
const SYNTH_CHUNK: usize = 8;

/// `(1/c_ψ) Σ_h w_h Σ_x Δx^d W_ψ f(x,h) π(x,h)ψ`, evaluated on the Fourier side.
pub fn synthesize(
    coeffs: &CoefficientField,
    psi: &dyn FrequencyWindow,
    g: &ShearletGroup,
    c_psi: f64,
) -> Result<GridFunction, TransformError> {
    if !(c_psi.is_finite() && c_psi > 0.0) {
        return Err(TransformError::MissingConstant(c_psi));
    }
    let layout = SpectralLayout::new(&coeffs.positions, PAD);
    let freqs = layout.frequencies();
    let n = layout.len();
    let work: Vec<usize> = (0..coeffs.elements.len()).collect();
    let partials = work
        .par_chunks(SYNTH_CHUNK)
        .map(|chunk| {
            let mut acc = vec![Complex64::new(0.0, 0.0); n];
            for &i in chunk {
                let atom = atom_spectrum(&layout, &freqs, psi, g, &coeffs.elements[i])?;
                let w_hat = layout.forward(&coeffs.slices[i]);
                let w = coeffs.weights[i];
                for ((a, s), p) in acc.iter_mut().zip(&w_hat).zip(&atom) {
                    *a += s * p * w;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>, TransformError>>()?;
    let mut total = vec![Complex64::new(0.0, 0.0); n];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    for v in total.iter_mut() {
        *v /= c_psi;
    }
    Ok(GridFunction { grid: coeffs.positions.clone(), values: layout.inverse(total) })
}

/// `Σ_h w_h Σ_x Δx^d |W_ψ f(x,h)|² / (c_ψ ‖f‖²)`.
pub fn parseval_ratio(coeffs: &CoefficientField, f: &GridFunction, c_psi: f64) -> f64 {
    let dx = coeffs.positions.cell_volume();
    let energy: f64 = coeffs
        .slices
        .iter()
        .zip(&coeffs.weights)
        .map(|(s, w)| w * dx * s.iter().map(Complex64::norm_sqr).sum::<f64>())
        .sum();
    energy / (c_psi * f.l2_norm().powi(2))
}

/// `y ↦ |det h|^{-1/2} f(h^{-1}(y - x))` resampled on `f`'s grid.
pub fn quasi_regular_apply(
    g: &ShearletGroup,
    e: &GroupElement,
    x: &[f64],
    f: &GridFunction,
    interp: &dyn Interpolator,
) -> Result<GridFunction, TransformError> {
    let inv = g.element_matrix(&g.invert(e)?)?;
    let scale = g.abs_det(e).powf(-0.5);
    let d = g.dim();
    let values = (0..f.grid.len())
        .into_par_iter()
        .map(|i| {
            let y = f.grid.node(i);
            let z: Vec<f64> = (0..d).map(|r| (0..d).map(|c| inv[(r, c)] * (y[c] - x[c])).sum()).collect();
            f.sample(interp, &z) * scale
        })
        .collect();
    Ok(GridFunction { grid: f.grid.clone(), values })
}

/// Spatial samples of the atom `π(x,h)ψ` for windows with a closed spatial form.
pub fn atom_spatial(
    g: &ShearletGroup,
    e: &GroupElement,
    x: &[f64],
    psi: &dyn FrequencyWindow,
    grid: &Grid,
) -> Result<Option<GridFunction>, TransformError> {
    let inv = g.element_matrix(&g.invert(e)?)?;
    let scale = g.abs_det(e).powf(-0.5);
    let d = g.dim();
    let mut values = Vec::with_capacity(grid.len());
    for y in grid.nodes() {
        let z: Vec<f64> = (0..d).map(|r| (0..d).map(|c| inv[(r, c)] * (y[c] - x[c])).sum()).collect();
        match psi.spatial(&z) {
            Some(v) => values.push(v * scale),
            None => return Ok(None),
        }
    }
    Ok(Some(GridFunction { grid: grid.clone(), values }))
}
