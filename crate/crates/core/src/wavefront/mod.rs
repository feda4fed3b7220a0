//! Cone geometry of the dual action and decay-based singularity detection.
//!
//! Directions with `ξ_1 > 0` are charted by `Ω(τ, v) = τ (1, v)`. In this module a
//! group element is also described by its *dual shear* `s`, defined through
//! `I + Σ t_i X_i = (I + Σ s_i X_i)^{-1}`, because then
//! `h^{-T} = ε (I + Σ s_i X_iᵀ) diag(a^{-1}, a^{-λ_2}, ...)` and `h^{-T} e_1 ∝ (1, s)`.
//! The map `t ↦ s` is a polynomial bijection with unit Jacobian: `s_k + t_k` only
//! depends on coordinates with smaller index.

mod cone;
mod decay;
mod microlocal;

pub use cone::{
    cone_schedule, estimate_shear_constant, k_inner_member, k_outer_member, verify_cone_approximation, BoxImage,
    ConeParams, ConeReport, ConeSchedule, KSets, DEFAULT_BOUNDARY,
};
pub use decay::{
    decay_profile, decay_sampling, interior_positions, wavefront_map, DecayReport, DecayThresholds, DirectionBins,
    Profile,
};
pub use microlocal::{default_alpha2, verify_microlocal_admissibility, MicrolocalConfig, MicrolocalParams};

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::group::{GroupElement, GroupError, ShearletGroup};
use crate::transform::TransformError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WavefrontError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("sampling budget exhausted after {proposals} proposals ({accepted} accepted)")]
    BudgetExhausted { proposals: usize, accepted: usize },
    #[error("regression is degenerate: {0}")]
    RegressionDegenerate(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Truncated cone `C(W, R)` with `W = {ω(v) : |v - center| < eps}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionWindow {
    pub center: Vec<f64>,
    pub eps: f64,
    pub radius: f64,
}

impl DirectionWindow {
    pub fn new(center: Vec<f64>, eps: f64, radius: f64) -> Result<Self, WavefrontError> {
        if !(eps > 0.0 && radius >= 0.0 && center.iter().all(|c| c.is_finite())) {
            return Err(WavefrontError::InvalidParameters(format!("eps={eps} radius={radius}")));
        }
        Ok(Self { center, eps, radius })
    }

    /// Window around `e_1`.
    pub fn around_e1(dim: usize, eps: f64, radius: f64) -> Result<Self, WavefrontError> {
        Self::new(vec![0.0; dim - 1], eps, radius)
    }

    pub fn dim(&self) -> usize {
        self.center.len() + 1
    }

    /// Whether the chart coordinate `v` lies in `W`.
    pub fn contains_chart(&self, v: &[f64]) -> bool {
        dist(v, &self.center) < self.eps
    }
}

/// `V = Ω((τ_1, τ_2) × W_{ε_0})`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyBox {
    pub tau1: f64,
    pub tau2: f64,
    pub eps0: f64,
}

impl FrequencyBox {
    pub fn new(tau1: f64, tau2: f64, eps0: f64) -> Result<Self, WavefrontError> {
        if !(0.0 < tau1 && tau1 < tau2 && tau2.is_finite() && eps0 > 0.0) {
            return Err(WavefrontError::InvalidParameters(format!("tau1={tau1} tau2={tau2} eps0={eps0}")));
        }
        Ok(Self { tau1, tau2, eps0 })
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        let tau = xi[0];
        tau > self.tau1 && tau < self.tau2 && norm(&xi[1..]) < self.eps0 * tau
    }
}

impl Default for FrequencyBox {
    fn default() -> Self {
        Self { tau1: 0.5, tau2: 2.0, eps0: 0.5 }
    }
}

/// `ξ ∈ C(W, R)`: `|ξ| > R`, `ξ_1 > 0` and `ξ/ξ_1` charted inside `W`.
pub fn in_cone(xi: &[f64], w: &DirectionWindow) -> bool {
    if xi[0] <= 0.0 || norm(xi) <= w.radius {
        return false;
    }
    let v: Vec<f64> = xi[1..].iter().map(|x| x / xi[0]).collect();
    w.contains_chart(&v)
}

/// Dual shear `s` of the chart shear `t`; the map is an involution.
pub fn dual_shear(g: &ShearletGroup, t: &[f64]) -> Result<Vec<f64>, WavefrontError> {
    let inv = g.shearing().shear_invert(t).map_err(GroupError::from)?;
    Ok((1..g.dim()).map(|j| inv[(0, j)]).collect())
}

/// Element `ε (I + Σ s_i X_i)^{-1} diag(a^λ)`.
pub fn element_from_dual(g: &ShearletGroup, sign: i8, log_a: f64, s: &[f64]) -> Result<GroupElement, WavefrontError> {
    Ok(GroupElement::from_log(sign, log_a, dual_shear(g, s)?))
}

/// Spectral norm.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point of the ball of radius `r` around `c`.
pub(crate) fn uniform_in_ball(rng: &mut ChaCha8Rng, c: &[f64], r: f64) -> Vec<f64> {
    let m = c.len();
    let dir = unit_normal(rng, m);
    let rho = r * rng.random::<f64>().powf(1.0 / m as f64);
    c.iter().zip(dir).map(|(ci, u)| ci + rho * u).collect()
}

fn unit_normal(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Deterministic points on the unit sphere of `R^m`: both poles for `m = 1`,
/// equally spaced angles for `m = 2`, fixed-seed normal draws otherwise.
pub(crate) fn sphere_points(m: usize, n: usize) -> Vec<Vec<f64>> {
    match m {
        0 => vec![],
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..n)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / n as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            let mut r = rng(0x5EED);
            (0..n).map(|_| unit_normal(&mut r, m)).collect()
        }
    }
}

/// Volume of the ball of radius `r` in `R^m`.
pub(crate) fn ball_volume(m: usize, r: f64) -> f64 {
    // V_m = π^{m/2} / Γ(m/2 + 1), by the recursion V_m = V_{m-2} · 2π / m.
    let even = m.is_multiple_of(2);
    let mut v = if even { 1.0 } else { 2.0 };
    let mut k = if even { 2 } else { 3 };
    while k <= m {
        v *= std::f64::consts::TAU / k as f64;
        k += 2;
    }
    v * r.powi(m as i32)
}

/// Least-squares line `y ≈ slope · x + intercept`; `None` when `x` has no spread.
pub(crate) fn fit_line(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 1e-14 * n {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - slope * a - icpt).powi(2)).sum::<f64>() / n).sqrt();
    Some((slope, icpt, rms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{canonical_basis, families};
    use crate::rational::{q, qi};
    use crate::scaling::ExponentVector;

    #[test]
    fn cone_membership() {
        let w = DirectionWindow::around_e1(3, 0.3, 2.0).unwrap();
        assert!(in_cone(&[4.0, 0.0, 0.0], &w));
        assert!(!in_cone(&[-4.0, 0.0, 0.0], &w));
        assert!(!in_cone(&[2.0, 0.0, 0.0], &w), "closed ball is removed");
        assert!(!in_cone(&[4.0, 1.3, 0.0], &w));
        assert!(in_cone(&[4.0, 1.1, 0.0], &w));
    }

    #[test]
    fn window_validation() {
        assert!(DirectionWindow::around_e1(2, 0.0, 1.0).is_err());
        assert!(FrequencyBox::new(2.0, 1.0, 0.5).is_err());
        let v = FrequencyBox::default();
        assert!(v.contains(&[1.0, 0.2]) && !v.contains(&[1.0, 0.6]) && !v.contains(&[0.4, 0.0]));
    }

    #[test]
    fn dual_shear_is_an_involution() {
        let s = canonical_basis(&families::build("toeplitz", 4, None).unwrap());
        let g = ShearletGroup::new(s, ExponentVector::new(vec![qi(1), q(3, 4), q(1, 2), q(1, 4)])).unwrap();
        let t = [0.3, -1.2, 0.7];
        let s = dual_shear(&g, &t).unwrap();
        let back = dual_shear(&g, &s).unwrap();
        assert!(t.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-12));
        // h^{-T} e_1 ∝ (1, s)
        let e = GroupElement::from_log(1, -0.4, t.to_vec());
        let inv_t = g.element_matrix(&e).unwrap().try_inverse().unwrap().transpose();
        let col = inv_t.column(0);
        for j in 1..4 {
            assert!((col[j] / col[0] - s[j - 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn ball_volumes() {
        use std::f64::consts::PI;
        assert!((ball_volume(1, 2.0) - 4.0).abs() < 1e-12);
        assert!((ball_volume(2, 1.0) - PI).abs() < 1e-12);
        assert!((ball_volume(3, 1.0) - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((ball_volume(4, 1.0) - PI * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn line_fit() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let (s, c, r) = fit_line(&x, &y).unwrap();
        assert!((s - 2.0).abs() < 1e-12 && (c - 1.0).abs() < 1e-12 && r < 1e-12);
        assert!(fit_line(&[1.0, 1.0], &[0.0, 2.0]).is_none());
    }
}
