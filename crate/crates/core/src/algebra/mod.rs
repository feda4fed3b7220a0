//! Nilpotent commutative associative algebras and the shearing subgroups they generate.
//!
//! Generator indices are 2-based throughout the public API: the nilradical is
//! spanned by `a_2, ..., a_d` and the canonical basis is `X_2, ..., X_d`.
//! Matrices are stored 0-based, so generator `i` corresponds to row/column `i - 1`.

pub mod families;
pub mod parse;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::rational::{format_q, RatMatrix, Q};

pub use parse::{load_algebra, parse_algebra, ParseError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("index ({i},{j},{k}) outside 2..={d}")]
    IndexOutOfBounds { i: usize, j: usize, k: usize, d: usize },
    #[error("symmetry violation: d({i},{j},{k}) = {left} but d({j},{i},{k}) = {right}")]
    SymmetryViolation { i: usize, j: usize, k: usize, left: String, right: String },
    #[error("triangularity violation: d({i},{j},{k}) is nonzero with k <= max(i,j)")]
    TriangularityViolation { i: usize, j: usize, k: usize },
    #[error("associativity violation at (i,j,l,m) = ({i},{j},{l},{m})")]
    AssociativityViolation { i: usize, j: usize, l: usize, m: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecognizeError {
    #[error("expected {expected} basis matrices, got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("basis matrix {index} is not a strictly upper triangular {dim}x{dim} matrix")]
    NotStrictlyUpper { index: usize, dim: usize },
    #[error("first rows of the basis do not span e_2..e_d")]
    FirstRowDegenerate,
    #[error("X_{i} and X_{j} do not commute")]
    NotAbelian { i: usize, j: usize },
    #[error("X_{i} X_{j} leaves the span of the basis")]
    NotClosedUnderProduct { i: usize, j: usize },
}

/// Raw structure-constant table `d_{i,j,k}` as read from input.
///
/// Only one of `(i,j,k)` / `(j,i,k)` needs to be present. Use
/// [`validate_algebra`] to obtain a [`CheckedAlgebra`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NilpotentAlgebraSpec {
    pub dim: usize,
    pub entries: Vec<((usize, usize, usize), Q)>,
}

impl NilpotentAlgebraSpec {
    pub fn new(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }

    pub fn with(mut self, i: usize, j: usize, k: usize, value: Q) -> Self {
        self.entries.push(((i, j, k), value));
        self
    }
}

/// Symmetrized structure constants satisfying symmetry, triangularity and
/// associativity exactly. Zero entries are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CheckedAlgebra {
    dim: usize,
    table: BTreeMap<(usize, usize, usize), Q>,
}

impl CheckedAlgebra {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `d_{i,j,k}` with 2-based indices; zero when absent.
    pub fn d(&self, i: usize, j: usize, k: usize) -> Q {
        self.table.get(&(i, j, k)).cloned().unwrap_or_else(Q::zero)
    }

    /// All nonzero `(i,j,k) -> value` entries including mirrored ones.
    pub fn nonzero(&self) -> impl Iterator<Item = (&(usize, usize, usize), &Q)> {
        self.table.iter()
    }

    /// Nonzero entries with `i <= j`, the canonical half of the table.
    pub fn upper_entries(&self) -> Vec<((usize, usize, usize), Q)> {
        self.table.iter().filter(|((i, j, _), _)| i <= j).map(|(k, v)| (*k, v.clone())).collect()
    }

    pub fn to_spec(&self) -> NilpotentAlgebraSpec {
        NilpotentAlgebraSpec { dim: self.dim, entries: self.upper_entries() }
    }

    /// Renders the table in the line-oriented algebra file format.
    pub fn to_file_string(&self) -> String {
        let mut s = format!("dim {}\n", self.dim);
        for ((i, j, k), v) in self.upper_entries() {
            s.push_str(&format!("{i} {j} {k} {}\n", format_q(&v)));
        }
        s
    }

    /// Exact equality of structure constants. This is not an isomorphism test.
    pub fn same_structure(&self, other: &CheckedAlgebra) -> bool {
        self == other
    }
}

pub fn validate_algebra(spec: &NilpotentAlgebraSpec) -> Result<CheckedAlgebra, AlgebraError> {
    let d = spec.dim;
    if d < 2 {
        return Err(AlgebraError::DimensionTooSmall(d));
    }
    let mut table: BTreeMap<(usize, usize, usize), Q> = BTreeMap::new();
    for ((i, j, k), v) in &spec.entries {
        let (i, j, k) = (*i, *j, *k);
        if [i, j, k].iter().any(|&x| x < 2 || x > d) {
            return Err(AlgebraError::IndexOutOfBounds { i, j, k, d });
        }
        for key in [(i, j, k), (j, i, k)] {
            if let Some(prev) = table.get(&key) {
                if prev != v {
                    return Err(AlgebraError::SymmetryViolation {
                        i: key.0,
                        j: key.1,
                        k,
                        left: format_q(prev),
                        right: format_q(v),
                    });
                }
            }
            table.insert(key, v.clone());
        }
    }
    table.retain(|_, v| !v.is_zero());
    if let Some(&(i, j, k)) = table.keys().find(|(i, j, k)| *k <= (*i).max(*j)) {
        return Err(AlgebraError::TriangularityViolation { i, j, k });
    }
    let alg = CheckedAlgebra { dim: d, table };
    check_associativity(&alg)?;
    Ok(alg)
}

fn check_associativity(alg: &CheckedAlgebra) -> Result<(), AlgebraError> {
    let d = alg.dim;
    for i in 2..=d {
        for j in 2..=d {
            for l in 2..=d {
                for m in 2..=d {
                    let mut lhs = Q::zero();
                    let mut rhs = Q::zero();
                    for k in 2..=d {
                        lhs += alg.d(i, j, k) * alg.d(k, l, m);
                        rhs += alg.d(j, l, k) * alg.d(i, k, m);
                    }
                    if lhs != rhs {
                        return Err(AlgebraError::AssociativityViolation { i, j, l, m });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Canonical basis `X_2..X_d` of a shearing Lie algebra plus its structure constants.
#[derive(Debug, Clone)]
pub struct ShearingSubgroup {
    algebra: CheckedAlgebra,
    basis: Vec<RatMatrix>,
    basis_f64: Vec<DMatrix<f64>>,
}

impl ShearingSubgroup {
    fn from_parts(algebra: CheckedAlgebra, basis: Vec<RatMatrix>) -> Self {
        let basis_f64 = basis.iter().map(RatMatrix::to_f64).collect();
        Self { algebra, basis, basis_f64 }
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim
    }

    pub fn algebra(&self) -> &CheckedAlgebra {
        &self.algebra
    }

    /// `X_i` for 2-based generator index `i`.
    pub fn x(&self, i: usize) -> &RatMatrix {
        &self.basis[i - 2]
    }

    pub fn basis(&self) -> &[RatMatrix] {
        &self.basis
    }

    pub fn basis_f64(&self) -> &[DMatrix<f64>] {
        &self.basis_f64
    }

    fn check_len(&self, n: usize) -> Result<(), AlgebraError> {
        if n + 1 != self.dim() {
            return Err(AlgebraError::DimensionMismatch { expected: self.dim() - 1, got: n });
        }
        Ok(())
    }

    /// `Σ t_i X_i` in exact arithmetic.
    pub fn lie_element(&self, t: &[Q]) -> Result<RatMatrix, AlgebraError> {
        self.check_len(t.len())?;
        let d = self.dim();
        let mut x = RatMatrix::zeros(d, d);
        for (ti, xi) in t.iter().zip(&self.basis) {
            if !ti.is_zero() {
                x = &x + &xi.scale(ti);
            }
        }
        Ok(x)
    }

    pub fn lie_element_f64(&self, t: &[f64]) -> Result<DMatrix<f64>, AlgebraError> {
        self.check_len(t.len())?;
        let d = self.dim();
        Ok(t.iter().zip(&self.basis_f64).fold(DMatrix::zeros(d, d), |acc, (ti, xi)| acc + xi * *ti))
    }

    /// `I + Σ t_i X_i`, exact.
    pub fn shear_matrix_exact(&self, t: &[Q]) -> Result<RatMatrix, AlgebraError> {
        let x = self.lie_element(t)?;
        Ok(&RatMatrix::identity(self.dim()) + &x)
    }

    pub fn shear_matrix(&self, t: &[f64]) -> Result<DMatrix<f64>, AlgebraError> {
        Ok(DMatrix::identity(self.dim(), self.dim()) + self.lie_element_f64(t)?)
    }

    /// `(I + X)^{-1} = Σ_{k=0}^{d-1} (-X)^k`, exact; the series terminates since `X^d = 0`.
    pub fn shear_invert_exact(&self, t: &[Q]) -> Result<RatMatrix, AlgebraError> {
        let neg = -&self.lie_element(t)?;
        let d = self.dim();
        let mut acc = RatMatrix::identity(d);
        let mut power = RatMatrix::identity(d);
        for _ in 1..d {
            power = &power * &neg;
            if power.is_zero() {
                break;
            }
            acc = &acc + &power;
        }
        Ok(acc)
    }

    pub fn shear_invert(&self, t: &[f64]) -> Result<DMatrix<f64>, AlgebraError> {
        let neg = -self.lie_element_f64(t)?;
        let d = self.dim();
        let mut acc = DMatrix::identity(d, d);
        let mut power = DMatrix::identity(d, d);
        for _ in 1..d {
            power = &power * &neg;
            acc += &power;
        }
        Ok(acc)
    }
}

pub fn canonical_basis(alg: &CheckedAlgebra) -> ShearingSubgroup {
    let d = alg.dim;
    let basis = (2..=d)
        .map(|i| {
            let mut x = RatMatrix::unit(d, 0, i - 1);
            for ((a, j, k), v) in alg.nonzero() {
                if *a == i {
                    x[(j - 1, k - 1)] = v.clone();
                }
            }
            x
        })
        .collect();
    ShearingSubgroup::from_parts(alg.clone(), basis)
}

/// Recovers the canonical basis and structure constants from any basis of a
/// shearing Lie algebra given as strictly upper triangular matrices.
pub fn recognize_shearing(input: &[RatMatrix]) -> Result<ShearingSubgroup, RecognizeError> {
    let d = input.len() + 1;
    if d < 2 {
        return Err(RecognizeError::WrongCount { expected: 1, got: input.len() });
    }
    for (idx, m) in input.iter().enumerate() {
        if m.nrows() != d || m.ncols() != d || !m.is_strictly_upper() {
            return Err(RecognizeError::NotStrictlyUpper { index: idx, dim: d });
        }
    }
    // Row r of F holds the first row of input r restricted to columns 2..d.
    let first_rows: Vec<Vec<Q>> = input.iter().map(|m| m.row(0)[1..].to_vec()).collect();
    let f = RatMatrix::from_rows(&first_rows);
    let c = f.inverse().ok_or(RecognizeError::FirstRowDegenerate)?;
    let basis: Vec<RatMatrix> = (0..d - 1)
        .map(|i| {
            let mut x = RatMatrix::zeros(d, d);
            for (j, m) in input.iter().enumerate() {
                if !c[(i, j)].is_zero() {
                    x = &x + &m.scale(&c[(i, j)]);
                }
            }
            x
        })
        .collect();
    for a in 0..d - 1 {
        for b in a + 1..d - 1 {
            if &basis[a] * &basis[b] != &basis[b] * &basis[a] {
                return Err(RecognizeError::NotAbelian { i: a + 2, j: b + 2 });
            }
        }
    }
    let mut table = BTreeMap::new();
    for a in 0..d - 1 {
        for b in 0..d - 1 {
            let p = &basis[a] * &basis[b];
            let mut recon = RatMatrix::zeros(d, d);
            for k in 0..d - 1 {
                let coef = &p[(0, k + 1)];
                if !coef.is_zero() {
                    recon = &recon + &basis[k].scale(coef);
                    table.insert((a + 2, b + 2, k + 2), coef.clone());
                }
            }
            if recon != p {
                return Err(RecognizeError::NotClosedUnderProduct { i: a + 2, j: b + 2 });
            }
        }
    }
    let algebra = CheckedAlgebra { dim: d, table };
    debug_assert!(check_associativity(&algebra).is_ok());
    Ok(ShearingSubgroup::from_parts(algebra, basis))
}

/// Exact check of the `ShearingSubgroup` invariants.
pub fn check_shearing_invariants(s: &ShearingSubgroup) -> bool {
    let d = s.dim();
    let one = Q::one();
    for (idx, x) in s.basis.iter().enumerate() {
        let i = idx + 2;
        if !x.is_strictly_upper() {
            return false;
        }
        if (1..d).any(|c| x[(0, c)] != if c == i - 1 { one.clone() } else { Q::zero() }) {
            return false;
        }
    }
    for i in 2..=d {
        for j in 2..=d {
            let p = s.x(i) * s.x(j);
            if p != s.x(j) * s.x(i) {
                return false;
            }
            let mut recon = RatMatrix::zeros(d, d);
            for k in i.max(j) + 1..=d {
                recon = &recon + &s.x(k).scale(&s.algebra.d(i, j, k));
            }
            if recon != p {
                return false;
            }
        }
    }
    true
}
