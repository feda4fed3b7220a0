//! Binary coefficient dumps.
//!
//! Layout: the line `SHEARCOEF 1`, one line of JSON metadata, then every slice in
//! element order as interleaved `(re, im)` little-endian `f64` pairs, positions in
//! the row-major order of the grid.

use std::io::{self, BufRead, Write};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Grid;
use crate::group::GroupElement;
use crate::transform::{CoefficientField, GroupSampling};

pub const MAGIC: &str = "SHEARCOEF 1";

#[derive(Debug, Error)]
pub enum DumpError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad header: {0}")]
    Header(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Self-describing header of a dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub shape: Vec<usize>,
    pub origin: Vec<f64>,
    pub step: Vec<f64>,
    pub sampling: GroupSampling,
    /// `(sign, ln a, t)` per slice.
    pub elements: Vec<(i8, f64, Vec<f64>)>,
    pub weights: Vec<f64>,
    pub lambda: Vec<String>,
    pub window: String,
    pub seed: u64,
}

impl DumpHeader {
    pub fn from_field(field: &CoefficientField, lambda: Vec<String>, window: &str, seed: u64) -> Self {
        Self {
            shape: field.positions.shape.clone(),
            origin: field.positions.origin.clone(),
            step: field.positions.step.clone(),
            sampling: field.sampling.clone(),
            elements: field.elements.iter().map(|e| (e.sign, e.log_a, e.t.clone())).collect(),
            weights: field.weights.clone(),
            lambda,
            window: window.to_string(),
            seed,
        }
    }

    pub fn grid(&self) -> Grid {
        Grid { origin: self.origin.clone(), step: self.step.clone(), shape: self.shape.clone() }
    }

    pub fn positions(&self) -> usize {
        self.shape.iter().product()
    }
}

pub fn write_dump(out: &mut impl Write, header: &DumpHeader, slices: &[Vec<Complex64>]) -> Result<(), DumpError> {
    writeln!(out, "{MAGIC}")?;
    serde_json::to_writer(&mut *out, header)?;
    writeln!(out)?;
    for v in slices.iter().flatten() {
        out.write_all(&v.re.to_le_bytes())?;
        out.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_dump(input: &mut impl BufRead) -> Result<(DumpHeader, Vec<Vec<Complex64>>), DumpError> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    if line.trim_end() != MAGIC {
        return Err(DumpError::Header(format!("expected `{MAGIC}`, found `{}`", line.trim_end())));
    }
    line.clear();
    input.read_line(&mut line)?;
    let header: DumpHeader = serde_json::from_str(&line)?;
    if header.weights.len() != header.elements.len() {
        return Err(DumpError::Header(format!("{} weights for {} elements", header.weights.len(), header.elements.len())));
    }
    let n = header.positions();
    let mut slices = Vec::with_capacity(header.elements.len());
    let mut buf = [0u8; 16];
    for _ in 0..header.elements.len() {
        let mut s = Vec::with_capacity(n);
        for _ in 0..n {
            input.read_exact(&mut buf)?;
            let (re, im) = buf.split_at(8);
            s.push(Complex64::new(
                f64::from_le_bytes(re.try_into().expect("8 bytes")),
                f64::from_le_bytes(im.try_into().expect("8 bytes")),
            ));
        }
        slices.push(s);
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(DumpError::Header(format!("{} trailing bytes", rest.len())));
    }
    Ok((header, slices))
}

/// Rebuilds the field a dump was written from.
pub fn field_from_dump(header: &DumpHeader, slices: Vec<Vec<Complex64>>) -> CoefficientField {
    CoefficientField {
        positions: header.grid(),
        sampling: header.sampling.clone(),
        elements: header.elements.iter().map(|(s, l, t)| GroupElement::from_log(*s, *l, t.clone())).collect(),
        weights: header.weights.clone(),
        slices,
    }
}
