//! Diagonal scaling subgroups compatible with a shearing subgroup.
//!
//! A diagonal generator `Y = diag(1, 1+μ_2, ..., 1+μ_d)` is compatible with the
//! shearing subgroup iff `μ_i + μ_j = μ_k` for every nonzero structure constant
//! `d_{i,j,k}`. Vectors `μ` are indexed by generator `2..=d` and stored 0-based.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::algebra::{CheckedAlgebra, ShearingSubgroup};
use crate::rational::{primitive, q, qi, to_f64, RatMatrix, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalingError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Equations `μ_i + μ_j = μ_k`, stored with `i <= j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MuSystem {
    pub dim: usize,
    pub equations: Vec<(usize, usize, usize)>,
}

impl MuSystem {
    /// Coefficient matrix with one row per equation and columns `μ_2..μ_d`.
    pub fn matrix(&self) -> RatMatrix {
        let n = self.dim - 1;
        let mut m = RatMatrix::zeros(self.equations.len(), n);
        for (r, &(i, j, k)) in self.equations.iter().enumerate() {
            m[(r, i - 2)] += qi(1);
            m[(r, j - 2)] += qi(1);
            m[(r, k - 2)] -= qi(1);
        }
        m
    }

    pub fn is_satisfied(&self, mu: &[Q]) -> bool {
        mu.len() + 1 == self.dim
            && self.equations.iter().all(|&(i, j, k)| &mu[i - 2] + &mu[j - 2] == mu[k - 2])
    }
}

pub fn build_mu_system(alg: &CheckedAlgebra) -> MuSystem {
    let equations: BTreeSet<(usize, usize, usize)> =
        alg.nonzero().map(|(&(i, j, k), _)| (i.min(j), i.max(j), k)).collect();
    MuSystem { dim: alg.dim(), equations: equations.into_iter().collect() }
}

/// Exact kernel of the μ-system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScalingSolution {
    pub dim: usize,
    /// Reduced echelon basis, each row scaled to a primitive integer vector.
    pub basis: Vec<Vec<Q>>,
    pub system: MuSystem,
}

impl ScalingSolution {
    pub fn dim_solution(&self) -> usize {
        self.basis.len()
    }

    /// `Σ c_r basis_r`.
    pub fn combine(&self, coeffs: &[Q]) -> Vec<Q> {
        let mut mu = vec![Q::zero(); self.dim - 1];
        for (c, v) in coeffs.iter().zip(&self.basis) {
            for (m, x) in mu.iter_mut().zip(v) {
                *m += c * x;
            }
        }
        mu
    }

    pub fn contains(&self, mu: &[Q]) -> bool {
        self.system.is_satisfied(mu)
    }
}

pub fn solve_mu_system(sys: &MuSystem) -> ScalingSolution {
    let kernel = sys.matrix().kernel();
    let basis = if kernel.is_empty() {
        Vec::new()
    } else {
        let mut k = RatMatrix::from_rows(&kernel);
        k.rref();
        (0..k.nrows()).map(|r| primitive(k.row(r))).collect()
    };
    ScalingSolution { dim: sys.dim, basis, system: sys.clone() }
}

/// `λ = (1, 1+μ_2, ..., 1+μ_d)`; `Y = diag(λ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentVector {
    pub lambda: Vec<Q>,
}

impl ExponentVector {
    pub fn new(lambda: Vec<Q>) -> Self {
        Self { lambda }
    }

    pub fn isotropic(d: usize) -> Self {
        Self { lambda: vec![qi(1); d] }
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.lambda.iter().map(to_f64).collect()
    }

    pub fn mu(&self) -> Vec<Q> {
        self.lambda[1..].iter().map(|l| l - qi(1)).collect()
    }

    pub fn is_normalized(&self) -> bool {
        self.lambda.first().is_some_and(One::is_one)
    }

    /// True iff `0 < λ_i < 1` for `i >= 2`.
    pub fn in_wavefront_range(&self) -> bool {
        self.lambda[1..].iter().all(|l| l.is_positive() && *l < qi(1))
    }

    pub fn generator(&self) -> RatMatrix {
        let n = self.dim();
        let mut y = RatMatrix::zeros(n, n);
        for (i, l) in self.lambda.iter().enumerate() {
            y[(i, i)] = l.clone();
        }
        y
    }
}

pub fn exponents_from_mu(mu: &[Q]) -> ExponentVector {
    let mut lambda = vec![qi(1)];
    lambda.extend(mu.iter().map(|m| m + qi(1)));
    ExponentVector { lambda }
}

/// True iff `[Y, X_i]` is a multiple of `X_i` for every canonical basis element.
pub fn verify_compatibility(s: &ShearingSubgroup, y: &ExponentVector) -> Result<bool, ScalingError> {
    let d = s.dim();
    if y.dim() != d {
        return Err(ScalingError::DimensionMismatch { expected: d, got: y.dim() });
    }
    let l = &y.lambda;
    for i in 2..=d {
        let x = s.x(i);
        // Entry (1,i) of X_i is 1, which fixes the multiple.
        let c = &l[0] - &l[i - 1];
        for r in 0..d {
            for col in r + 1..d {
                let e = &x[(r, col)];
                if !e.is_zero() && &l[r] - &l[col] != c {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// A kernel point `μ` with `-1 < μ_i < 0`, or `None` if there is none.
///
/// One-dimensional kernels return the midpoint of the feasible parameter
/// interval. Larger kernels return the centroid of the optimal vertices of the
/// margin problem `max m` s.t. `-1 + m <= μ_i <= -m`.
pub fn wavefront_window(sol: &ScalingSolution) -> Option<Vec<Q>> {
    match sol.basis.len() {
        0 => None,
        1 => window_1d(&sol.basis[0]),
        _ => window_margin(sol),
    }
}

fn window_1d(v: &[Q]) -> Option<Vec<Q>> {
    if v.iter().any(Zero::is_zero) {
        return None;
    }
    let positive = v.iter().all(Signed::is_positive);
    if !positive && !v.iter().all(Signed::is_negative) {
        return None;
    }
    // Feasible s lies strictly between 0 and -1/max|v_i| (sign matched to v).
    let max_abs = v.iter().map(Signed::abs).max().expect("nonempty");
    let s = -(q(1, 2) / max_abs) * if positive { qi(1) } else { qi(-1) };
    Some(v.iter().map(|x| x * &s).collect())
}

fn window_margin(sol: &ScalingSolution) -> Option<Vec<Q>> {
    let r = sol.basis.len();
    let n = sol.dim - 1;
    // Variables (c_1..c_r, m). Constraint rows a·x <= b:
    //   μ_i + m <= 0   and   -μ_i + m <= 1.
    let mut rows: Vec<(Vec<Q>, Q)> = Vec::with_capacity(2 * n);
    for i in 0..n {
        let coeff: Vec<Q> = sol.basis.iter().map(|v| v[i].clone()).collect();
        let mut upper = coeff.clone();
        upper.push(qi(1));
        rows.push((upper, qi(0)));
        let mut lower: Vec<Q> = coeff.iter().map(|c| -c.clone()).collect();
        lower.push(qi(1));
        rows.push((lower, qi(1)));
    }
    let vars = r + 1;
    let mut best: Option<Q> = None;
    let mut optimal: BTreeSet<Vec<Q>> = BTreeSet::new();
    for subset in combinations(rows.len(), vars) {
        let a = RatMatrix::from_rows(&subset.iter().map(|&s| rows[s].0.clone()).collect::<Vec<_>>());
        let b: Vec<Q> = subset.iter().map(|&s| rows[s].1.clone()).collect();
        let Some(x) = a.solve(&b) else { continue };
        let feasible = rows.iter().all(|(row, rhs)| {
            let lhs: Q = row.iter().zip(&x).map(|(p, v)| p * v).sum();
            lhs <= *rhs
        });
        if !feasible {
            continue;
        }
        let m = x[r].clone();
        match &best {
            Some(bm) if m < *bm => {}
            Some(bm) if m == *bm => {
                optimal.insert(x[..r].to_vec());
            }
            _ => {
                best = Some(m);
                optimal.clear();
                optimal.insert(x[..r].to_vec());
            }
        }
    }
    let m = best?;
    if !m.is_positive() {
        return None;
    }
    let count = qi(optimal.len() as i64);
    let mut centroid = vec![Q::zero(); r];
    for v in &optimal {
        for (c, x) in centroid.iter_mut().zip(v) {
            *c += x;
        }
    }
    let centroid: Vec<Q> = centroid.into_iter().map(|c| c / &count).collect();
    Some(sol.combine(&centroid))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{canonical_basis, families};
    use crate::rational::qi;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn alg(name: &str, d: usize, p: Option<i64>) -> CheckedAlgebra {
        families::build(name, d, p.map(qi)).unwrap()
    }

    fn ints(v: &[i64]) -> Vec<Q> {
        v.iter().map(|&x| qi(x)).collect()
    }

    #[test]
    fn systems_match_relations() {
        assert!(build_mu_system(&alg("class2", 5, None)).equations.is_empty());
        assert_eq!(build_mu_system(&alg("toeplitz", 4, None)).equations, vec![(2, 2, 3), (2, 3, 4)]);
        assert_eq!(
            build_mu_system(&alg("isotropic-only", 4, None)).equations,
            vec![(2, 2, 3), (2, 2, 4), (2, 3, 4)]
        );
    }

    #[test]
    fn kernels() {
        let k = |a: &CheckedAlgebra| solve_mu_system(&build_mu_system(a)).basis;
        assert_eq!(k(&alg("toeplitz", 4, None)), vec![ints(&[1, 2, 3])]);
        assert_eq!(k(&alg("alpha", 4, Some(1))), vec![ints(&[1, 1, 2])]);
        assert_eq!(k(&alg("alpha", 4, Some(-1))), vec![ints(&[1, 1, 2])]);
        assert_eq!(k(&alg("alpha", 4, Some(0))), vec![ints(&[1, 0, 2]), ints(&[0, 1, 0])]);
        assert!(k(&alg("isotropic-only", 4, None)).is_empty());
        assert_eq!(k(&alg("class2", 4, None)).len(), 3);
    }

    #[test]
    fn exponent_examples() {
        assert_eq!(exponents_from_mu(&ints(&[0, 0])).lambda, ints(&[1, 1, 1]));
        assert_eq!(
            exponents_from_mu(&[q(-1, 4), q(-1, 2), q(-3, 4)]).lambda,
            vec![qi(1), q(3, 4), q(1, 2), q(1, 4)]
        );
        assert_eq!(
            exponents_from_mu(&[q(-1, 3), q(-1, 3), q(-2, 3)]).lambda,
            vec![qi(1), q(2, 3), q(2, 3), q(1, 3)]
        );
    }

    #[test]
    fn compatibility_examples() {
        let s = canonical_basis(&alg("toeplitz", 4, None));
        assert!(verify_compatibility(&s, &ExponentVector::isotropic(4)).unwrap());
        let good = ExponentVector::new(vec![qi(1), q(3, 4), q(1, 2), q(1, 4)]);
        assert!(verify_compatibility(&s, &good).unwrap());
        let bad = ExponentVector::new(vec![qi(1), q(1, 2), q(1, 2), q(1, 2)]);
        assert!(!verify_compatibility(&s, &bad).unwrap());
        assert!(verify_compatibility(&s, &ExponentVector::isotropic(3)).is_err());
    }

    #[test]
    fn window_examples() {
        let w = |a: &CheckedAlgebra| wavefront_window(&solve_mu_system(&build_mu_system(a)));
        assert_eq!(w(&alg("toeplitz", 4, None)), Some(vec![q(-1, 6), q(-1, 3), q(-1, 2)]));
        assert_eq!(w(&alg("isotropic-only", 4, None)), None);
        assert_eq!(w(&alg("class2", 3, None)), Some(vec![q(-1, 2), q(-1, 2)]));
        assert_eq!(w(&alg("alpha", 4, Some(0))), Some(vec![q(-1, 3), q(-1, 2), q(-2, 3)]));
        assert_eq!(w(&alg("alpha", 4, Some(1))), Some(vec![q(-1, 4), q(-1, 4), q(-1, 2)]));
    }

    #[test]
    fn window_none_for_mixed_signs() {
        assert_eq!(window_1d(&ints(&[1, -1])), None);
        assert_eq!(window_1d(&ints(&[1, 0])), None);
        assert_eq!(window_1d(&ints(&[-1, -2])), Some(vec![q(-1, 4), q(-1, 2)]));
    }

    fn all_algebras() -> Vec<CheckedAlgebra> {
        vec![
            alg("class2", 2, None),
            alg("class2", 3, None),
            alg("class2", 4, None),
            alg("toeplitz", 3, None),
            alg("toeplitz", 4, None),
            alg("toeplitz", 5, None),
            alg("alpha", 4, Some(-1)),
            alg("alpha", 4, Some(0)),
            alg("alpha", 4, Some(1)),
            alg("isotropic-only", 4, None),
        ]
    }

    #[test]
    fn compatibility_is_kernel_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for a in all_algebras() {
            let s = canonical_basis(&a);
            let sol = solve_mu_system(&build_mu_system(&a));
            let n = a.dim() - 1;
            if sol.dim_solution() == n {
                continue;
            }
            let mut rejected = 0;
            while rejected < 100 {
                let mu: Vec<Q> = (0..n).map(|_| q(rng.random_range(-9..=9), rng.random_range(1..=5))).collect();
                if sol.contains(&mu) {
                    assert!(verify_compatibility(&s, &exponents_from_mu(&mu)).unwrap());
                    continue;
                }
                assert!(!verify_compatibility(&s, &exponents_from_mu(&mu)).unwrap());
                rejected += 1;
            }
        }
    }

    #[test]
    fn compatibility_on_rational_grid_equals_kernel() {
        // Exhaustive over μ ∈ {-1,-1/2,0,1/2,1}^{d-1}.
        let vals = [q(-1, 1), q(-1, 2), qi(0), q(1, 2), qi(1)];
        for a in all_algebras().into_iter().filter(|a| a.dim() <= 4) {
            let s = canonical_basis(&a);
            let sol = solve_mu_system(&build_mu_system(&a));
            let n = a.dim() - 1;
            for idx in 0..vals.len().pow(n as u32) {
                let mu: Vec<Q> = (0..n).map(|p| vals[idx / vals.len().pow(p as u32) % vals.len()].clone()).collect();
                assert_eq!(verify_compatibility(&s, &exponents_from_mu(&mu)).unwrap(), sol.contains(&mu));
            }
        }
    }

    #[test]
    fn windows_lie_in_open_box_and_kernel() {
        for a in all_algebras() {
            let sol = solve_mu_system(&build_mu_system(&a));
            if let Some(mu) = wavefront_window(&sol) {
                assert!(sol.contains(&mu));
                assert!(mu.iter().all(|m| *m > qi(-1) && *m < qi(0)));
            }
        }
    }

    proptest! {
        #[test]
        fn kernel_combinations_satisfy_system(idx in 0usize..10, c in proptest::collection::vec((-20i64..20, 1i64..7), 4)) {
            let a = &all_algebras()[idx];
            let sol = solve_mu_system(&build_mu_system(a));
            let coeffs: Vec<Q> = c.iter().map(|&(n, d)| q(n, d)).collect();
            let mu = sol.combine(&coeffs);
            prop_assert!(sol.contains(&mu));
            prop_assert!(verify_compatibility(&canonical_basis(a), &exponents_from_mu(&mu)).unwrap());
        }
    }

    #[test]
    fn basis_is_independent() {
        for a in all_algebras() {
            let sol = solve_mu_system(&build_mu_system(&a));
            if !sol.basis.is_empty() {
                assert_eq!(RatMatrix::from_rows(&sol.basis).rank(), sol.basis.len());
            }
            assert_eq!(sol.dim_solution(), a.dim() - 1 - build_mu_system(&a).matrix().rank());
        }
    }
}
