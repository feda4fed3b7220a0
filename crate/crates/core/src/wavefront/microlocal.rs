//! Numerical estimates for the two microlocal admissibility conditions on `K_o(W_0, V, R_0)`:
//! `‖h^{-1}‖ ≤ C ‖h‖^{-α_1}` and `∫ ‖h‖^{α_2} dh < ∞`.

use rand::Rng;

use super::{
    ball_volume, dist, element_from_dual, fit_line, operator_norm, rng, uniform_in_ball, DirectionWindow,
    FrequencyBox, KSets, WavefrontError, DEFAULT_BOUNDARY,
};
use crate::group::ShearletGroup;

#[derive(Debug, Clone, PartialEq)]
pub struct MicrolocalParams {
    /// `W_0` and `R_0`.
    pub window: DirectionWindow,
    pub boxv: FrequencyBox,
    /// Smallest scale available; members of `K_o` below it are not sampled.
    pub a_min: f64,
    /// Members of `K_o` used for the `α_1` regression.
    pub samples: usize,
    /// Proposals per dyadic scale shell for the integral (doubled for the stability check).
    pub shell_samples: usize,
    /// `None` selects [`default_alpha2`].
    pub alpha2: Option<f64>,
    pub seed: u64,
}

impl MicrolocalParams {
    pub fn new(dim: usize) -> Self {
        Self {
            window: DirectionWindow::around_e1(dim, 1.0, 4.0).expect("valid window"),
            boxv: FrequencyBox::default(),
            a_min: 1e-6,
            samples: 10_000,
            shell_samples: 4_000,
            alpha2: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicrolocalConfig {
    /// `-slope` of `ln ‖h^{-1}‖` against `ln ‖h‖`.
    pub alpha1: f64,
    /// Smallest `C` with `‖h^{-1}‖ ≤ C ‖h‖^{-α_1}` on the samples.
    pub c1: f64,
    pub regression_rms: f64,
    pub alpha2: f64,
    /// Integrability threshold `(d - 1 - Σ_{i≥2} λ_i) / λ_min` for `‖h‖ ≍ a^{λ_min}`.
    pub alpha2_threshold: f64,
    /// Integral over the sampled scale range with `n` and `2n` proposals per shell.
    pub integral: f64,
    pub integral_doubled: f64,
    /// Fitted ratio between consecutive dyadic shells; `< 1` means a summable tail.
    pub shell_ratio: f64,
    pub stable: bool,
    pub integrable: bool,
    pub samples_used: usize,
}

impl MicrolocalConfig {
    pub fn admissible(&self) -> bool {
        self.alpha1 > 0.0 && self.alpha2 > 0.0 && self.integrable && self.stable
    }
}

/// `(d - Σ_{i≥2} λ_i) / λ_min`: one unit of `1/λ_min` above the threshold, so the
/// integrand in `a` is bounded near `a = 0`.
pub fn default_alpha2(g: &ShearletGroup) -> f64 {
    let d = g.dim() as f64;
    (d - g.lambda()[1..].iter().sum::<f64>()) / g.lambda_min()
}

pub fn verify_microlocal_admissibility(
    g: &ShearletGroup,
    params: &MicrolocalParams,
) -> Result<MicrolocalConfig, WavefrontError> {
    let ks = KSets::with_boundary(g, params.boxv.clone(), DEFAULT_BOUNDARY);
    let w = &params.window;
    let a_top = ks.outer_scale_bound(w);
    if !(a_top > params.a_min) {
        return Err(WavefrontError::RegressionDegenerate(format!(
            "K_o is empty above a_min = {} (largest admissible scale {a_top})",
            params.a_min
        )));
    }
    let mut r = rng(params.seed);
    let members = ks.sample_outer(w, params.a_min, params.samples, params.samples * 1000, &mut r)?;
    let mut x = Vec::with_capacity(members.len());
    let mut y = Vec::with_capacity(members.len());
    for e in &members {
        let h = g.element_matrix(e)?;
        let hinv = g.element_matrix(&g.invert(e)?)?;
        x.push(operator_norm(&h).ln());
        y.push(operator_norm(&hinv).ln());
    }
    let (slope, _, rms) = fit_line(&x, &y)
        .ok_or_else(|| WavefrontError::RegressionDegenerate(format!("{} samples without spread", x.len())))?;
    let alpha1 = -slope;
    let c1 = x.iter().zip(&y).map(|(lx, ly)| (ly + alpha1 * lx).exp()).fold(0.0, f64::max);

    let alpha2 = params.alpha2.unwrap_or_else(|| default_alpha2(g));
    let d = g.dim() as f64;
    let alpha2_threshold = (d - 1.0 - g.lambda()[1..].iter().sum::<f64>()) / g.lambda_min();
    let shells = ((a_top / params.a_min).log2().floor() as usize).clamp(1, 40);
    let (first, _) = shell_integrals(&ks, w, a_top, shells, params.shell_samples, alpha2, params.seed + 1)?;
    let (second, _) = shell_integrals(&ks, w, a_top, shells, 2 * params.shell_samples, alpha2, params.seed + 2)?;
    let integral: f64 = first.iter().sum();
    let integral_doubled: f64 = second.iter().sum();

    let pts: Vec<(f64, f64)> =
        second.iter().enumerate().filter(|(_, v)| **v > 0.0).map(|(k, v)| (k as f64, v.ln())).collect();
    let (kx, ky): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let shell_ratio = fit_line(&kx, &ky).map_or(f64::NAN, |(s, _, _)| s.exp());
    let stable = integral.is_finite()
        && integral_doubled.is_finite()
        && (integral_doubled / integral - 1.0).abs() < 0.1;
    Ok(MicrolocalConfig {
        alpha1,
        c1,
        regression_rms: rms,
        alpha2,
        alpha2_threshold,
        integral,
        integral_doubled,
        shell_ratio,
        stable,
        integrable: shell_ratio < 1.0,
        samples_used: members.len(),
    })
}

/// Monte-Carlo `∫ ‖h‖^{α_2} dh` over `K_o ∩ {a_top 2^{-k-1} < a < a_top 2^{-k}}` for each `k`,
/// with left Haar measure `a^{Σ_{i≥2} λ_i - d} da ds`.
fn shell_integrals(
    ks: &KSets<'_>,
    w: &DirectionWindow,
    a_top: f64,
    shells: usize,
    n: usize,
    alpha2: f64,
    seed: u64,
) -> Result<(Vec<f64>, usize), WavefrontError> {
    let g = ks.group();
    let m = g.dim() - 1;
    let mut r = rng(seed);
    let mut kappa = 2.0;
    'restart: loop {
        let mut out = Vec::with_capacity(shells);
        let mut hits = 0;
        for k in 0..shells {
            let hi = a_top * 0.5f64.powi(k as i32);
            let lo = hi / 2.0;
            let mut acc = 0.0;
            for _ in 0..n {
                let a = lo + (hi - lo) * r.random::<f64>();
                let rad = ks.shear_radius(w, a, kappa);
                let s = uniform_in_ball(&mut r, &w.center, rad);
                let e = element_from_dual(g, 1, a.ln(), &s)?;
                if !ks.outer(&e, w)? {
                    continue;
                }
                if dist(&s, &w.center) > 0.6 * rad {
                    kappa *= 2.0;
                    continue 'restart;
                }
                hits += 1;
                let norm_h = operator_norm(&g.element_matrix(&e)?);
                let haar = g.left_haar_density(&e);
                acc += norm_h.powf(alpha2) * haar * (hi - lo) * ball_volume(m, rad);
            }
            out.push(acc / n as f64);
        }
        return Ok((out, hits));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{canonical_basis, families};
    use crate::rational::{q, qi, Q};
    use crate::scaling::ExponentVector;

    fn group(name: &str, dim: usize, lambda: Vec<Q>) -> ShearletGroup {
        let s = canonical_basis(&families::build(name, dim, None).unwrap());
        ShearletGroup::new(s, ExponentVector::new(lambda)).unwrap()
    }

    fn quick(dim: usize) -> MicrolocalParams {
        MicrolocalParams { samples: 2000, shell_samples: 800, ..MicrolocalParams::new(dim) }
    }

    #[test]
    fn parabolic_exponent() {
        let g = group("class2", 2, vec![qi(1), q(1, 2)]);
        let cfg = verify_microlocal_admissibility(&g, &quick(2)).unwrap();
        assert!((cfg.alpha1 - 2.0).abs() < 0.4, "alpha1 = {}", cfg.alpha1);
        assert!((cfg.alpha2 - 3.0).abs() < 1e-12 && (cfg.alpha2_threshold - 1.0).abs() < 1e-12);
        assert!(cfg.integrable && cfg.stable, "{cfg:?}");
        assert!(cfg.admissible());
    }

    #[test]
    fn isotropic_exponent_is_one() {
        let g = group("class2", 2, vec![qi(1), qi(1)]);
        let cfg = verify_microlocal_admissibility(&g, &quick(2)).unwrap();
        assert!((cfg.alpha1 - 1.0).abs() < 0.1, "alpha1 = {}", cfg.alpha1);
    }

    #[test]
    fn below_threshold_is_not_integrable() {
        let g = group("class2", 2, vec![qi(1), q(1, 2)]);
        let params = MicrolocalParams { alpha2: Some(0.25), ..quick(2) };
        let cfg = verify_microlocal_admissibility(&g, &params).unwrap();
        assert!(!cfg.integrable, "shell ratio {}", cfg.shell_ratio);
    }

    #[test]
    fn empty_outer_set_is_degenerate() {
        let g = group("class2", 2, vec![qi(1), q(1, 2)]);
        let mut params = quick(2);
        params.window.radius = 1e9;
        params.a_min = 1e-6;
        assert!(matches!(
            verify_microlocal_admissibility(&g, &params),
            Err(WavefrontError::RegressionDegenerate(_))
        ));
    }
}
