//! The sets `K_i(W,V,R) = {h : h^{-T}V ⊂ C(W,R)}` and `K_o(W,V,R) = {h : h^{-T}V ∩ C(W,R) ≠ ∅}`,
//! and sampling certificates for `K_o(W',V,R') ⊂ K_i(W,V,R)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{
    dist, element_from_dual, norm, operator_norm, rng, sphere_points, uniform_in_ball, DirectionWindow,
    FrequencyBox, WavefrontError,
};
use crate::group::{GroupElement, ShearletGroup};

pub const DEFAULT_BOUNDARY: usize = 64;

/// `h^{-T}V = Ω((ε τ_1/a, ε τ_2/a) × {s + M v : |v| < ε_0})` with
/// `M = (I + A(s)ᵀ) diag(a^{1-λ_2}, ..., a^{1-λ_d})`.
#[derive(Debug, Clone)]
pub struct BoxImage {
    pub sign: i8,
    pub inv_a: f64,
    pub shift: Vec<f64>,
    pub map: DMatrix<f64>,
}

impl BoxImage {
    pub fn point(&self, v: &[f64]) -> Vec<f64> {
        let mv = &self.map * DVector::from_column_slice(v);
        self.shift.iter().zip(mv.iter()).map(|(s, m)| s + m).collect()
    }
}

/// Membership tests for `K_i` and `K_o` at a fixed frequency box `V`.
pub struct KSets<'g> {
    group: &'g ShearletGroup,
    boxv: FrequencyBox,
    /// Unit vectors; scaled by `ε_0` they sample `∂W_{ε_0}`.
    boundary: Vec<Vec<f64>>,
}

impl<'g> KSets<'g> {
    pub fn new(group: &'g ShearletGroup, boxv: FrequencyBox) -> Self {
        Self::with_boundary(group, boxv, DEFAULT_BOUNDARY)
    }

    pub fn with_boundary(group: &'g ShearletGroup, boxv: FrequencyBox, n_boundary: usize) -> Self {
        let boundary = sphere_points(group.dim() - 1, n_boundary);
        Self { group, boxv, boundary }
    }

    pub fn group(&self) -> &ShearletGroup {
        self.group
    }

    pub fn frequency_box(&self) -> &FrequencyBox {
        &self.boxv
    }

    pub fn image(&self, e: &GroupElement) -> Result<BoxImage, WavefrontError> {
        let s = super::dual_shear(self.group, &e.t)?;
        self.image_dual(e.sign, e.log_a, s)
    }

    fn image_dual(&self, sign: i8, log_a: f64, s: Vec<f64>) -> Result<BoxImage, WavefrontError> {
        let m = self.group.dim() - 1;
        let a_block = self.group.shear_block(&s)?;
        let scale = DVector::from_iterator(m, self.group.lambda()[1..].iter().map(|l| ((1.0 - l) * log_a).exp()));
        let map = (DMatrix::identity(m, m) + a_block.transpose()) * DMatrix::from_diagonal(&scale);
        Ok(BoxImage { sign, inv_a: (-log_a).exp(), shift: s, map })
    }

    /// `h ∈ K_i(W, V, R)`.
    pub fn inner(&self, e: &GroupElement, w: &DirectionWindow) -> Result<bool, WavefrontError> {
        if e.sign < 0 {
            return Ok(false);
        }
        let img = self.image(e)?;
        let eps0 = self.boxv.eps0;
        for u in &self.boundary {
            let v: Vec<f64> = u.iter().map(|x| x * eps0).collect();
            if !w.contains_chart(&img.point(&v)) {
                return Ok(false);
            }
        }
        // Lower bound for min |v'| over the image, so the radius test errs on the safe side.
        let m_lb = (norm(&img.shift) - operator_norm(&img.map) * eps0).max(0.0);
        Ok(img.inv_a * self.boxv.tau1 * (1.0 + m_lb * m_lb).sqrt() >= w.radius)
    }

    /// `h ∈ K_o(W, V, R)`, decided on the image of the center, the boundary
    /// samples and, if it is covered, the window center itself.
    pub fn outer(&self, e: &GroupElement, w: &DirectionWindow) -> Result<bool, WavefrontError> {
        if e.sign < 0 {
            return Ok(false);
        }
        let img = self.image(e)?;
        let eps0 = self.boxv.eps0;
        let reach = img.inv_a * self.boxv.tau2;
        let hit = |v: &[f64]| w.contains_chart(v) && reach * (1.0 + v.iter().map(|x| x * x).sum::<f64>()).sqrt() > w.radius;
        if hit(&img.shift) {
            return Ok(true);
        }
        let rhs = DVector::from_iterator(w.center.len(), w.center.iter().zip(&img.shift).map(|(c, s)| c - s));
        if let Some(pre) = img.map.clone().lu().solve(&rhs) {
            if pre.norm() < eps0 && hit(&w.center) {
                return Ok(true);
            }
        }
        for u in &self.boundary {
            let v: Vec<f64> = u.iter().map(|x| x * eps0).collect();
            if hit(&img.point(&v)) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Upper bound on `a` for members of `K_o(W, V, R)`.
    pub(crate) fn outer_scale_bound(&self, w: &DirectionWindow) -> f64 {
        let vmax = norm(&w.center) + w.eps;
        self.boxv.tau2 * (1.0 + vmax * vmax).sqrt() / w.radius
    }

    /// Radius around the window center that contains the dual shears of all
    /// members of `K_o(W, V, R)` at scale `a`, up to the safety factor `kappa`.
    pub(crate) fn shear_radius(&self, w: &DirectionWindow, a: f64, kappa: f64) -> f64 {
        let spread = self.group.lambda()[1..].iter().map(|l| a.powf(1.0 - l)).fold(0.0, f64::max);
        kappa * (w.eps + self.boxv.eps0 * spread)
    }

    /// Draws `n` members of `K_o(W, V, R)` with `ln a` uniform on `[ln a_lo, ln a_hi]`
    /// and dual shears uniform in a ball; grows the ball whenever a member lands
    /// near its rim.
    pub(crate) fn sample_outer(
        &self,
        w: &DirectionWindow,
        a_lo: f64,
        n: usize,
        budget: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<GroupElement>, WavefrontError> {
        let a_hi = self.outer_scale_bound(w);
        if !(a_hi > a_lo) {
            return Ok(Vec::new());
        }
        let (l0, l1) = (a_lo.ln(), a_hi.ln());
        let mut kappa = 2.0;
        let mut out = Vec::with_capacity(n);
        let mut proposals = 0usize;
        while out.len() < n {
            if proposals >= budget {
                return Err(WavefrontError::BudgetExhausted { proposals, accepted: out.len() });
            }
            proposals += 1;
            let sign: i8 = if rng.random::<f64>() < 0.25 { -1 } else { 1 };
            let log_a = l0 + (l1 - l0) * rng.random::<f64>();
            let r = self.shear_radius(w, log_a.exp(), kappa);
            let s = uniform_in_ball(rng, &w.center, r);
            let e = element_from_dual(self.group, sign, log_a, &s)?;
            if self.outer(&e, w)? {
                if dist(&s, &w.center) > 0.6 * r {
                    kappa *= 2.0;
                    out.clear();
                    continue;
                }
                out.push(e);
            }
        }
        Ok(out)
    }
}

/// `h ∈ K_i(W, V, R)` with the default boundary resolution.
pub fn k_inner_member(
    g: &ShearletGroup,
    e: &GroupElement,
    w: &DirectionWindow,
    v: &FrequencyBox,
) -> Result<bool, WavefrontError> {
    KSets::new(g, v.clone()).inner(e, w)
}

/// `h ∈ K_o(W, V, R)` with the default boundary resolution.
pub fn k_outer_member(
    g: &ShearletGroup,
    e: &GroupElement,
    w: &DirectionWindow,
    v: &FrequencyBox,
) -> Result<bool, WavefrontError> {
    KSets::new(g, v.clone()).outer(e, w)
}

/// Constant `C` with `‖A(t)‖ ≤ C |t|` for `|t| ≤ 1`: sampled maximum times 1.5.
pub fn estimate_shear_constant(g: &ShearletGroup, samples: usize, seed: u64) -> Result<f64, WavefrontError> {
    let m = g.dim() - 1;
    let mut r = rng(seed);
    let mut best = 0.0f64;
    let mut probe = |t: &[f64]| -> Result<(), WavefrontError> {
        let n = norm(t);
        if n > 0.0 {
            best = best.max(operator_norm(&g.shear_block(t)?) / n);
        }
        Ok(())
    };
    for i in 0..m {
        let mut t = vec![0.0; m];
        t[i] = 1.0;
        probe(&t)?;
    }
    for _ in 0..samples {
        probe(&uniform_in_ball(&mut r, &vec![0.0; m], 1.0))?;
    }
    Ok(1.5 * best)
}

/// Candidate `(W', R')` for a target `(W, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSchedule {
    pub eps_prime: f64,
    pub r_prime: f64,
    pub c_estimate: f64,
    /// `false` when `λ_max ≥ 1` and the explicit radius is unavailable.
    pub explicit: bool,
}

/// `ε' = min{1, ε/7}` and
/// `R' > 2τ_2 max{1, (ε_0/ε')^{1/(1-λ_max)}, (2Cε_0)^{1/(1-λ_max)}, R/τ_1}`.
///
/// For `λ_max ≥ 1` the exponent is undefined and only `2τ_2 max{1, R/τ_1}` is used.
pub fn cone_schedule(
    g: &ShearletGroup,
    v: &FrequencyBox,
    target: &DirectionWindow,
) -> Result<ConeSchedule, WavefrontError> {
    let eps_prime = (target.eps / 7.0).min(1.0);
    let c = estimate_shear_constant(g, 256, 0)?;
    let lmax = g.lambda_max();
    let mut factor = 1.0f64.max(target.radius / v.tau1);
    let explicit = lmax < 1.0;
    if explicit {
        let e = 1.0 / (1.0 - lmax);
        factor = factor.max((v.eps0 / eps_prime).powf(e)).max((2.0 * c * v.eps0).powf(e));
    }
    // The bound is strict; a relative margin keeps it so in floating point.
    Ok(ConeSchedule { eps_prime, r_prime: 2.0 * v.tau2 * factor * (1.0 + 1e-6), c_estimate: c, explicit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeParams {
    /// Members of `K_o(W', V, R')` tested per candidate.
    pub samples: usize,
    /// Candidates tried: round `k` uses `ε'/2^k` and `4^k R'`.
    pub rounds: usize,
    pub seed: u64,
    pub boundary: usize,
    /// Proposals allowed per requested sample.
    pub budget_factor: usize,
}

impl Default for ConeParams {
    fn default() -> Self {
        Self { samples: 10_000, rounds: 3, seed: 0, boundary: DEFAULT_BOUNDARY, budget_factor: 1000 }
    }
}

#[derive(Debug, Clone)]
pub struct ConeReport {
    pub schedule: ConeSchedule,
    /// Last candidate tested.
    pub eps_prime: f64,
    pub r_prime: f64,
    pub rounds_used: usize,
    pub tested: usize,
    /// Violations of the last candidate.
    pub violations: usize,
    /// First element found in `K_o(W', V, R') ∖ K_i(W, V, R)`.
    pub witness: Option<GroupElement>,
    pub certified: bool,
}

impl ConeReport {
    pub fn certificate(&self) -> Option<(f64, f64)> {
        self.certified.then_some((self.eps_prime, self.r_prime))
    }
}

/// Samples `K_o(W', V, R')` and checks every member lies in `K_i(W, V, R)`.
pub fn verify_cone_approximation(
    g: &ShearletGroup,
    v: &FrequencyBox,
    target: &DirectionWindow,
    params: &ConeParams,
) -> Result<ConeReport, WavefrontError> {
    if target.dim() != g.dim() {
        return Err(WavefrontError::InvalidParameters(format!("window dim {} vs group dim {}", target.dim(), g.dim())));
    }
    let schedule = cone_schedule(g, v, target)?;
    let ks = KSets::with_boundary(g, v.clone(), params.boundary);
    let mut r = rng(params.seed);
    let mut witness = None;
    let mut report = None;
    for round in 0..params.rounds.max(1) {
        let eps_prime = schedule.eps_prime / f64::from(1u32 << round);
        let r_prime = schedule.r_prime * 4f64.powi(round as i32);
        let w_prime = DirectionWindow::new(target.center.clone(), eps_prime, r_prime)?;
        let a_lo = ks.outer_scale_bound(&w_prime) * 1e-6;
        let members = ks.sample_outer(&w_prime, a_lo, params.samples, params.samples * params.budget_factor, &mut r)?;
        let mut violations = 0;
        for e in &members {
            if !ks.inner(e, target)? {
                violations += 1;
                witness.get_or_insert_with(|| e.clone());
            }
        }
        let certified = violations == 0;
        report = Some(ConeReport {
            schedule: schedule.clone(),
            eps_prime,
            r_prime,
            rounds_used: round + 1,
            tested: members.len(),
            violations,
            witness: witness.clone(),
            certified,
        });
        if certified {
            break;
        }
    }
    Ok(report.expect("at least one round"))
}
