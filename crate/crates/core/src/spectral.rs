//! Zero-padded discrete Fourier transforms approximating `f̂(ξ) = ∫ f(x) e^{-2πi x·ξ} dx`.
//!
//! A grid with `n_k` nodes and spacing `h_k` is embedded into `N_k = pad · n_k`
//! points so that correlations do not wrap around within the original box.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Grid, GridFunction};

/// Default zero-padding factor.
pub const PAD: usize = 2;

/// Separable n-dimensional FFT over a row-major array.
pub struct FftNd {
    shape: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl FftNd {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            shape: shape.to_vec(),
            forward: shape.iter().map(|&n| planner.plan_fft_forward(n)).collect(),
            inverse: shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalized forward transform (`e^{-2πi jk/N}`).
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Unnormalized inverse transform (`e^{+2πi jk/N}`).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.len());
        let d = self.shape.len();
        let mut line = Vec::new();
        for axis in 0..d {
            let n = self.shape[axis];
            let stride: usize = self.shape[axis + 1..].iter().product();
            let outer: usize = self.shape[..axis].iter().product();
            if stride == 1 {
                for chunk in data.chunks_exact_mut(n) {
                    plans[axis].process(chunk);
                }
                continue;
            }
            line.resize(n, Complex64::new(0.0, 0.0));
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * n * stride + s;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[base + i * stride];
                    }
                    plans[axis].process(&mut line);
                    for (i, v) in line.iter().enumerate() {
                        data[base + i * stride] = *v;
                    }
                }
            }
        }
    }
}

/// Frequency lattice dual to a padded spatial grid.
pub struct SpectralLayout {
    pub grid: Grid,
    pub pad_shape: Vec<usize>,
    /// Frequencies per axis in FFT order.
    pub freqs: Vec<Vec<f64>>,
    /// `e^{-2πi origin_k ξ}` per axis, the shift from index to physical coordinates.
    phase: Vec<Vec<Complex64>>,
    fft: FftNd,
}

impl SpectralLayout {
    pub fn new(grid: &Grid, pad: usize) -> Self {
        let pad_shape: Vec<usize> = grid.shape.iter().map(|n| n * pad).collect();
        let freqs: Vec<Vec<f64>> = pad_shape
            .iter()
            .zip(&grid.step)
            .map(|(&n, &h)| {
                (0..n).map(|k| {
                    let k = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
                    k / (n as f64 * h)
                })
                .collect()
            })
            .collect();
        let phase = freqs
            .iter()
            .zip(&grid.origin)
            .map(|(f, &o)| f.iter().map(|&xi| Complex64::from_polar(1.0, -2.0 * PI * o * xi)).collect())
            .collect();
        Self { grid: grid.clone(), fft: FftNd::new(&pad_shape), pad_shape, freqs, phase }
    }

    pub fn len(&self) -> usize {
        self.pad_shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.pad_shape.len()
    }

    /// Frequency spacing per axis.
    pub fn dxi(&self) -> Vec<f64> {
        self.pad_shape.iter().zip(&self.grid.step).map(|(&n, &h)| 1.0 / (n as f64 * h)).collect()
    }

    pub fn frequency(&self, mut idx: usize, out: &mut [f64]) {
        for k in (0..self.dim()).rev() {
            let n = self.pad_shape[k];
            out[k] = self.freqs[k][idx % n];
            idx /= n;
        }
    }

    /// All frequencies, flattened row-major with `dim` entries each.
    pub fn frequencies(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; self.len() * d];
        for (i, chunk) in out.chunks_exact_mut(d).enumerate() {
            self.frequency(i, chunk);
        }
        out
    }

    fn phase_at(&self, mut idx: usize) -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for k in (0..self.dim()).rev() {
            let n = self.pad_shape[k];
            p *= self.phase[k][idx % n];
            idx /= n;
        }
        p
    }

    /// Approximates `f̂` on the frequency lattice.
    pub fn forward(&self, values: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.grid.len());
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len()];
        let small = Grid { origin: vec![0.0; self.dim()], step: vec![1.0; self.dim()], shape: self.grid.shape.clone() };
        let big = Grid { origin: vec![0.0; self.dim()], step: vec![1.0; self.dim()], shape: self.pad_shape.clone() };
        for (i, v) in values.iter().enumerate() {
            buf[big.ravel(&small.unravel(i))] = *v;
        }
        self.fft.forward(&mut buf);
        let vol = self.grid.cell_volume();
        for (i, v) in buf.iter_mut().enumerate() {
            *v *= self.phase_at(i) * vol;
        }
        buf
    }

    /// Approximates `∫ G(ξ) e^{2πi x·ξ} dξ` at the nodes of the original grid.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
        assert_eq!(spectrum.len(), self.len());
        for (i, v) in spectrum.iter_mut().enumerate() {
            *v *= self.phase_at(i).conj();
        }
        self.fft.inverse(&mut spectrum);
        let dvol: f64 = self.dxi().iter().product();
        let small = Grid { origin: vec![0.0; self.dim()], step: vec![1.0; self.dim()], shape: self.grid.shape.clone() };
        let big = Grid { origin: vec![0.0; self.dim()], step: vec![1.0; self.dim()], shape: self.pad_shape.clone() };
        (0..self.grid.len()).map(|i| spectrum[big.ravel(&small.unravel(i))] * dvol).collect()
    }

    /// Discrete `L²` norm of a spectrum on this lattice.
    pub fn spectral_norm(&self, spectrum: &[Complex64]) -> f64 {
        let dvol: f64 = self.dxi().iter().product();
        (spectrum.iter().map(Complex64::norm_sqr).sum::<f64>() * dvol).sqrt()
    }

    /// Spectrum reordered onto an ascending [`Grid`] of frequencies, for interpolation.
    pub fn to_sorted(&self, spectrum: &[Complex64]) -> GridFunction {
        let d = self.dim();
        let dxi = self.dxi();
        let origin: Vec<f64> = (0..d).map(|k| -((self.pad_shape[k] / 2) as f64) * dxi[k]).collect();
        let sorted = Grid { origin, step: dxi, shape: self.pad_shape.clone() };
        let mut values = vec![Complex64::new(0.0, 0.0); self.len()];
        let mut xi = vec![0.0; d];
        for (i, v) in spectrum.iter().enumerate() {
            self.frequency(i, &mut xi);
            let multi: Vec<usize> = (0..d).map(|k| ((xi[k] - sorted.origin[k]) / sorted.step[k]).round() as usize).collect();
            values[sorted.ravel(&multi)] = *v;
        }
        GridFunction { grid: sorted, values }
    }
}
