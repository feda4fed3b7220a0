//! Analyzing windows given on the frequency side.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use thiserror::Error;

use crate::grid::{Grid, GridFunction, Interpolator, Linear};
use crate::group::{admissibility_integral, FrequencyGrid, GroupError, SampledSpectrum};
use crate::spectral::{SpectralLayout, PAD};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WindowError {
    #[error("unknown window `{0}`")]
    Unknown(String),
    #[error("window parameters invalid: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// A window `ψ` specified through `ψ̂`.
pub trait FrequencyWindow: Send + Sync {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn eval(&self, xi: &[f64]) -> Complex64;
    /// Closed box containing the support of `ψ̂`, if compact.
    fn support_box(&self) -> Option<(Vec<f64>, Vec<f64>)>;
    /// Closed-form `ψ(x)`, when one is known.
    fn spatial(&self, _x: &[f64]) -> Option<Complex64> {
        None
    }
}

/// `exp(1 - 1/(1 - x²))` on `(-1, 1)`, zero elsewhere.
pub fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

/// Smooth window supported in `V = {τ(1, v) : τ1 < τ < τ2, |v| < ε0}`.
///
/// `ψ̂(τ(1,v)) = bump(s(τ)) · bump(|v|/ε0)` with `s` the affine map of
/// `ln τ` onto `(-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpWindow {
    pub dim: usize,
    pub tau1: f64,
    pub tau2: f64,
    pub eps0: f64,
}

impl BumpWindow {
    pub fn new(dim: usize, tau1: f64, tau2: f64, eps0: f64) -> Result<Self, WindowError> {
        if !(0.0 < tau1 && tau1 < tau2 && eps0 > 0.0) {
            return Err(WindowError::InvalidParameters(format!("tau1={tau1} tau2={tau2} eps0={eps0}")));
        }
        Ok(Self { dim, tau1, tau2, eps0 })
    }

    pub fn default_for(dim: usize) -> Self {
        Self { dim, tau1: 0.5, tau2: 2.0, eps0: 0.5 }
    }

    fn log_coordinate(&self, tau: f64) -> f64 {
        let (l1, l2) = (self.tau1.ln(), self.tau2.ln());
        (2.0 * tau.ln() - l1 - l2) / (l2 - l1)
    }
}

impl FrequencyWindow for BumpWindow {
    fn name(&self) -> &'static str {
        "meyer"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, xi: &[f64]) -> Complex64 {
        let tau = xi[0];
        if tau <= self.tau1 || tau >= self.tau2 {
            return Complex64::new(0.0, 0.0);
        }
        let r2: f64 = xi[1..].iter().map(|x| (x / tau) * (x / tau)).sum();
        let r = r2.sqrt() / self.eps0;
        if r >= 1.0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(bump(self.log_coordinate(tau)) * bump(r), 0.0)
    }

    fn support_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let w = self.eps0 * self.tau2;
        let mut lo = vec![-w; self.dim];
        let mut hi = vec![w; self.dim];
        lo[0] = self.tau1;
        hi[0] = self.tau2;
        Some((lo, hi))
    }
}

/// `ψ̂(ξ) = exp(-|ξ - c|² / (2σ²))`, with `ψ(x) = (2πσ²)^{d/2} e^{-2π²σ²|x|²} e^{2πi c·x}`.
///
/// Not compactly supported; its admissibility integral diverges. Used where a
/// closed-form spatial window is needed.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianWindow {
    pub center: Vec<f64>,
    pub sigma: f64,
}

impl GaussianWindow {
    pub fn default_for(dim: usize) -> Self {
        let mut center = vec![0.0; dim];
        center[0] = 0.75;
        Self { center, sigma: 0.15 }
    }
}

impl FrequencyWindow for GaussianWindow {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    fn dim(&self) -> usize {
        self.center.len()
    }

    fn eval(&self, xi: &[f64]) -> Complex64 {
        let r2: f64 = xi.iter().zip(&self.center).map(|(x, c)| (x - c) * (x - c)).sum();
        Complex64::new((-r2 / (2.0 * self.sigma * self.sigma)).exp(), 0.0)
    }

    fn support_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }

    fn spatial(&self, x: &[f64]) -> Option<Complex64> {
        let d = self.center.len() as f64;
        let s2 = self.sigma * self.sigma;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let phase: f64 = x.iter().zip(&self.center).map(|(x, c)| x * c).sum();
        let amp = (2.0 * PI * s2).powf(d / 2.0) * (-2.0 * PI * PI * s2 * r2).exp();
        Some(Complex64::from_polar(amp, 2.0 * PI * phase))
    }
}

/// Window given by spatial samples; `ψ̂` is interpolated from their padded DFT.
pub struct SampledWindow {
    spectrum: GridFunction,
    interp: &'static dyn Interpolator,
}

impl SampledWindow {
    pub fn from_grid_function(psi: &GridFunction, interp: &'static dyn Interpolator) -> Self {
        let layout = SpectralLayout::new(&psi.grid, PAD);
        let spectrum = layout.to_sorted(&layout.forward(&psi.values));
        Self { spectrum, interp }
    }

    pub fn linear(psi: &GridFunction) -> Self {
        Self::from_grid_function(psi, &Linear)
    }

    pub fn spectrum_grid(&self) -> &Grid {
        &self.spectrum.grid
    }
}

impl FrequencyWindow for SampledWindow {
    fn name(&self) -> &'static str {
        "sampled"
    }

    fn dim(&self) -> usize {
        self.spectrum.grid.dim()
    }

    fn eval(&self, xi: &[f64]) -> Complex64 {
        self.spectrum.sample(self.interp, xi)
    }

    fn support_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let g = &self.spectrum.grid;
        let hi = g.origin.iter().zip(&g.step).zip(&g.shape).map(|((o, s), &n)| o + s * (n - 1) as f64).collect();
        Some((g.origin.clone(), hi))
    }
}

type WindowFactory = fn(usize) -> Box<dyn FrequencyWindow>;

static WINDOWS: [(&str, WindowFactory); 2] = [
    ("meyer", |d| Box::new(BumpWindow::default_for(d))),
    ("gaussian", |d| Box::new(GaussianWindow::default_for(d))),
];

pub fn window_names() -> impl Iterator<Item = &'static str> {
    WINDOWS.iter().map(|(n, _)| *n)
}

/// Registered window with default parameters.
pub fn window(name: &str, dim: usize) -> Result<Box<dyn FrequencyWindow>, WindowError> {
    WINDOWS.iter().find(|(n, _)| *n == name).map(|(_, f)| f(dim)).ok_or_else(|| WindowError::Unknown(name.into()))
}

/// `c_ψ = ∫ |ψ̂(ξ)|² / |ξ_1|^d dξ` by midpoint quadrature over the support box.
///
/// Windows without compact support yield `+∞`.
pub fn admissibility_constant(w: &dyn FrequencyWindow, cells_per_axis: usize) -> Result<f64, WindowError> {
    let Some((lo, hi)) = w.support_box() else {
        return Ok(f64::INFINITY);
    };
    let grid = FrequencyGrid::covering(&lo, &hi, &vec![cells_per_axis; w.dim()]);
    Ok(admissibility_integral(&SampledSpectrum::from_fn(grid, |xi| w.eval(xi)))?)
}

/// Default quadrature resolution for [`admissibility_constant`].
pub fn default_cells(dim: usize) -> usize {
    match dim {
        1 | 2 => 800,
        3 => 120,
        _ => 40,
    }
}
