//! Line-oriented algebra file format.
//!
//! ```text
//! # comment
//! dim 4
//! 2 2 3 1
//! 2 3 4 1/1
//! ```
//!
//! The first non-comment line is `dim <d>`; each further line is `i j k value`
//! with a rational value `num` or `num/den`.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{validate_algebra, AlgebraError, CheckedAlgebra, NilpotentAlgebraSpec};
use crate::rational::parse_fraction;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("missing `dim <d>` line")]
    MissingDim,
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: index ({i},{j},{k}) outside 2..={d}")]
    OutOfBounds { line: usize, i: usize, j: usize, k: usize, d: usize },
    #[error("line {line}: triangularity violation, k={k} <= max(i={i}, j={j})")]
    Triangularity { line: usize, i: usize, j: usize, k: usize },
    #[error("line {line}: value for ({i},{j},{k}) contradicts line {previous}")]
    Contradiction { line: usize, previous: usize, i: usize, j: usize, k: usize },
    #[error(transparent)]
    Invalid(#[from] AlgebraError),
}

impl ParseError {
    /// 1-based source line the error refers to, when there is one.
    pub fn line(&self) -> Option<usize> {
        match self {
            Self::Syntax { line, .. }
            | Self::OutOfBounds { line, .. }
            | Self::Triangularity { line, .. }
            | Self::Contradiction { line, .. } => Some(*line),
            Self::MissingDim | Self::Invalid(_) => None,
        }
    }
}

pub fn parse_algebra(text: &str) -> Result<NilpotentAlgebraSpec, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (dim_line, first) = lines.next().ok_or(ParseError::MissingDim)?;
    let d = match first.split_whitespace().collect::<Vec<_>>()[..] {
        ["dim", n] => n.parse::<usize>().map_err(|_| syntax(dim_line, "dimension is not an integer"))?,
        _ => return Err(ParseError::MissingDim),
    };
    if d < 2 {
        return Err(syntax(dim_line, "dimension must be at least 2"));
    }

    let mut spec = NilpotentAlgebraSpec::new(d);
    let mut seen: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    for (line, content) in lines {
        let fields: Vec<&str> = content.split_whitespace().collect();
        let [si, sj, sk, sv] = fields[..] else {
            return Err(syntax(line, "expected `i j k value`"));
        };
        let idx = |s: &str| s.parse::<usize>().map_err(|_| syntax(line, &format!("bad index `{s}`")));
        let (i, j, k) = (idx(si)?, idx(sj)?, idx(sk)?);
        let value = parse_fraction(sv).ok_or_else(|| syntax(line, &format!("bad value `{sv}`")))?;
        if [i, j, k].iter().any(|&x| x < 2 || x > d) {
            return Err(ParseError::OutOfBounds { line, i, j, k, d });
        }
        if k <= i.max(j) {
            return Err(ParseError::Triangularity { line, i, j, k });
        }
        let key = (i.min(j), i.max(j), k);
        if let Some(&previous) = seen.get(&key) {
            let prior = spec.entries.iter().find(|((a, b, c), _)| (*a.min(b), *a.max(b), *c) == key);
            if prior.map(|(_, v)| v) != Some(&value) {
                return Err(ParseError::Contradiction { line, previous, i, j, k });
            }
            continue;
        }
        seen.insert(key, line);
        spec.entries.push(((i, j, k), value));
    }
    Ok(spec)
}

/// Parses and validates in one step.
pub fn load_algebra(text: &str) -> Result<CheckedAlgebra, ParseError> {
    Ok(validate_algebra(&parse_algebra(text)?)?)
}

fn syntax(line: usize, msg: &str) -> ParseError {
    ParseError::Syntax { line, msg: msg.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn parses_comments_and_fractions() {
        let text = "# toeplitz\n\ndim 4 # ambient\n2 2 3 1\n3 2 4 2/2\n";
        let spec = parse_algebra(text).unwrap();
        assert_eq!(spec.dim, 4);
        assert_eq!(spec.entries, vec![((2, 2, 3), qi(1)), ((3, 2, 4), qi(1))]);
        let alg = load_algebra(text).unwrap();
        assert_eq!(alg.d(2, 3, 4), qi(1));
    }

    #[test]
    fn triangularity_reports_line() {
        let err = parse_algebra("dim 4\n2 2 3 1\n\n3 3 3 1\n").unwrap_err();
        assert_eq!(err, ParseError::Triangularity { line: 4, i: 3, j: 3, k: 3 });
        assert_eq!(err.line(), Some(4));
    }

    #[test]
    fn mirrored_duplicates() {
        assert!(parse_algebra("dim 4\n2 3 4 1/2\n3 2 4 2/4\n").is_ok());
        let err = parse_algebra("dim 4\n2 3 4 1/2\n3 2 4 1\n").unwrap_err();
        assert!(matches!(err, ParseError::Contradiction { line: 3, previous: 2, .. }));
    }

    #[test]
    fn rejects_malformed_input() {
        assert_eq!(parse_algebra("# only comments\n"), Err(ParseError::MissingDim));
        assert_eq!(parse_algebra("2 2 3 1\n"), Err(ParseError::MissingDim));
        assert!(matches!(parse_algebra("dim 3\n2 2 3\n"), Err(ParseError::Syntax { line: 2, .. })));
        assert!(matches!(parse_algebra("dim 3\n2 2 3 1/0\n"), Err(ParseError::Syntax { line: 2, .. })));
        assert!(matches!(parse_algebra("dim 3\n2 2 4 1\n"), Err(ParseError::OutOfBounds { line: 2, .. })));
    }

    #[test]
    fn associativity_failure_surfaces_on_load() {
        let err = load_algebra("dim 5\n2 3 4 1\n2 4 5 1\n").unwrap_err();
        assert!(matches!(err, ParseError::Invalid(AlgebraError::AssociativityViolation { .. })));
    }

    #[test]
    fn file_string_round_trip() {
        let alg = load_algebra("dim 4\n2 2 3 1\n2 2 4 2\n2 3 4 1\n").unwrap();
        assert_eq!(load_algebra(&alg.to_file_string()).unwrap(), alg);
        assert_eq!(alg.d(2, 2, 4), q(2, 1));
    }
}
