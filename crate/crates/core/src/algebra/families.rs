//! Named algebra families, selectable at runtime by name.

use num_traits::Zero;

use super::{validate_algebra, AlgebraError, CheckedAlgebra, NilpotentAlgebraSpec};
use crate::rational::{qi, Q};

/// A parametrized family of nilpotent algebras.
pub trait AlgebraFamily: Send + Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    /// Builds the member of dimension `dim`; `param` is family specific.
    fn spec(&self, dim: usize, param: Option<&Q>) -> Result<NilpotentAlgebraSpec, FamilyError>;
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FamilyError {
    #[error("unknown algebra family `{0}`")]
    Unknown(String),
    #[error("family `{family}` does not exist in dimension {dim}")]
    UnsupportedDimension { family: &'static str, dim: usize },
    #[error("family `{0}` requires a parameter")]
    MissingParameter(&'static str),
    #[error(transparent)]
    Invalid(#[from] AlgebraError),
}

struct ClassTwo;
struct Toeplitz;
struct AlphaFamily;
struct IsotropicOnly;

impl AlgebraFamily for ClassTwo {
    fn name(&self) -> &'static str {
        "class2"
    }
    fn describe(&self) -> &'static str {
        "all products vanish"
    }
    fn spec(&self, dim: usize, _: Option<&Q>) -> Result<NilpotentAlgebraSpec, FamilyError> {
        Ok(NilpotentAlgebraSpec::new(dim))
    }
}

impl AlgebraFamily for Toeplitz {
    fn name(&self) -> &'static str {
        "toeplitz"
    }
    fn describe(&self) -> &'static str {
        "a_i a_j = a_{i+j-1} (maximal nilpotency class)"
    }
    fn spec(&self, dim: usize, _: Option<&Q>) -> Result<NilpotentAlgebraSpec, FamilyError> {
        let mut spec = NilpotentAlgebraSpec::new(dim);
        for i in 2..=dim {
            for j in i..=dim {
                if i + j - 1 <= dim {
                    spec.entries.push(((i, j, i + j - 1), qi(1)));
                }
            }
        }
        Ok(spec)
    }
}

impl AlgebraFamily for AlphaFamily {
    fn name(&self) -> &'static str {
        "alpha"
    }
    fn describe(&self) -> &'static str {
        "d=4: a_2^2 = a_4, a_3^2 = alpha a_4"
    }
    fn spec(&self, dim: usize, param: Option<&Q>) -> Result<NilpotentAlgebraSpec, FamilyError> {
        if dim != 4 {
            return Err(FamilyError::UnsupportedDimension { family: self.name(), dim });
        }
        let alpha = param.ok_or(FamilyError::MissingParameter(self.name()))?;
        let mut spec = NilpotentAlgebraSpec::new(4).with(2, 2, 4, qi(1));
        if !alpha.is_zero() {
            spec = spec.with(3, 3, 4, alpha.clone());
        }
        Ok(spec)
    }
}

impl AlgebraFamily for IsotropicOnly {
    fn name(&self) -> &'static str {
        "isotropic-only"
    }
    fn describe(&self) -> &'static str {
        "d=4: a_2^2 = a_3 + 2 a_4, a_2 a_3 = a_4"
    }
    fn spec(&self, dim: usize, _: Option<&Q>) -> Result<NilpotentAlgebraSpec, FamilyError> {
        if dim != 4 {
            return Err(FamilyError::UnsupportedDimension { family: self.name(), dim });
        }
        Ok(NilpotentAlgebraSpec::new(4).with(2, 2, 3, qi(1)).with(2, 2, 4, qi(2)).with(2, 3, 4, qi(1)))
    }
}

static FAMILIES: [&dyn AlgebraFamily; 4] = [&ClassTwo, &Toeplitz, &AlphaFamily, &IsotropicOnly];

pub fn registry() -> &'static [&'static dyn AlgebraFamily] {
    &FAMILIES
}

pub fn lookup(name: &str) -> Result<&'static dyn AlgebraFamily, FamilyError> {
    FAMILIES.iter().copied().find(|f| f.name() == name).ok_or_else(|| FamilyError::Unknown(name.to_string()))
}

pub fn build(name: &str, dim: usize, param: Option<Q>) -> Result<CheckedAlgebra, FamilyError> {
    let spec = lookup(name)?.spec(dim, param.as_ref())?;
    Ok(validate_algebra(&spec)?)
}
