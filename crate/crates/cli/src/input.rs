use std::path::Path;

use anyhow::Context;
use shearlet_core::algebra::{canonical_basis, families, load_algebra, CheckedAlgebra};
use shearlet_core::grid::{Grid, GridFunction};
use shearlet_core::group::ShearletGroup;
use shearlet_core::rational::{parse_fraction, parse_fraction_list};
use shearlet_core::scaling::{build_mu_system, exponents_from_mu, solve_mu_system, wavefront_window, ExponentVector};

use crate::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|err| CliError::File { path: path.to_path_buf(), err })
}

/// Loads an algebra file, or builds `name:dim[:param]` from the family registry.
pub fn resolve_algebra(spec: &str) -> anyhow::Result<CheckedAlgebra> {
    let path = Path::new(spec);
    if path.exists() {
        let text = read_text(path)?;
        return load_algebra(&text).with_context(|| format!("{}", path.display()));
    }
    let mut parts = spec.split(':');
    let name = parts.next().unwrap_or_default();
    if families::lookup(name).is_err() {
        let known: Vec<&str> = families::registry().iter().map(|f| f.name()).collect();
        return Err(CliError::Usage(format!(
            "`{spec}` is neither a file nor a family spec `name:dim[:param]` (families: {})",
            known.join(", ")
        ))
        .into());
    }
    let dim = parts
        .next()
        .and_then(|d| d.parse::<usize>().ok())
        .ok_or_else(|| CliError::Usage(format!("family spec `{spec}` needs a dimension, e.g. `{name}:3`")))?;
    let param = match parts.next() {
        Some(p) => Some(parse_fraction(p).ok_or_else(|| CliError::Usage(format!("bad family parameter `{p}`")))?),
        None => None,
    };
    Ok(families::build(name, dim, param)?)
}

/// Explicit `--lambda`, or the solver's window point when there is one.
pub fn choose_lambda(alg: &CheckedAlgebra, lambda: Option<&str>) -> anyhow::Result<ExponentVector> {
    match lambda {
        Some(s) => {
            let v = parse_fraction_list(s).ok_or_else(|| CliError::Usage(format!("cannot parse --lambda `{s}`")))?;
            if v.len() != alg.dim() {
                return Err(CliError::Usage(format!("--lambda has {} entries, algebra dimension is {}", v.len(), alg.dim()))
                    .into());
            }
            Ok(ExponentVector::new(v))
        }
        None => {
            let sol = solve_mu_system(&build_mu_system(alg));
            let mu = wavefront_window(&sol).ok_or_else(|| {
                CliError::Usage("no --lambda given and the algebra admits no scaling with 0 < λ_i < 1".into())
            })?;
            Ok(exponents_from_mu(&mu))
        }
    }
}

pub fn build_group(spec: &str, lambda: Option<&str>) -> anyhow::Result<ShearletGroup> {
    let alg = resolve_algebra(spec)?;
    let ev = choose_lambda(&alg, lambda)?;
    Ok(ShearletGroup::new(canonical_basis(&alg), ev)?)
}

/// A square PGM image (gray levels scaled to `[0, 1]`) or CSV grid on `[-1, 1)^2`.
pub fn load_image(path: &Path) -> anyhow::Result<GridFunction> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let (rows, cols, values) = if is_csv {
        let text = read_text(path)?;
        let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut values = Vec::new();
        let mut rows = 0;
        let mut cols = None;
        for (i, record) in reader.records().enumerate() {
            let record = record.with_context(|| format!("{}: row {}", path.display(), i + 1))?;
            let row: Vec<f64> = record
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .with_context(|| format!("{}: row {} is not numeric", path.display(), i + 1))?;
            if *cols.get_or_insert(row.len()) != row.len() {
                anyhow::bail!(CliError::Usage(format!("{}: row {} has {} fields", path.display(), i + 1, row.len())));
            }
            values.extend(row);
            rows += 1;
        }
        (rows, cols.unwrap_or(0), values)
    } else {
        if !path.exists() {
            return Err(CliError::File {
                path: path.to_path_buf(),
                err: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
            }
            .into());
        }
        let img = image::open(path).with_context(|| format!("{}", path.display()))?.to_luma32f();
        let (w, h) = img.dimensions();
        (h as usize, w as usize, img.into_raw().into_iter().map(f64::from).collect())
    };
    if rows != cols || rows < 8 {
        anyhow::bail!(CliError::Usage(format!(
            "{}: expected a square image of at least 8x8, got {rows}x{cols}",
            path.display()
        )));
    }
    let mut f = GridFunction::zeros(Grid::centered(2, rows, 1.0));
    for (v, x) in f.values.iter_mut().zip(values) {
        v.re = x;
    }
    Ok(f)
}

/// Writes `values` scaled so that `max` maps to 255 as a binary PGM.
pub fn write_pgm(path: &Path, n: usize, values: &[f64], max: f64) -> anyhow::Result<()> {
    let pixels: Vec<u8> =
        values.iter().map(|v| if max > 0.0 { (255.0 * v / max).round().clamp(0.0, 255.0) as u8 } else { 0 }).collect();
    let img = image::GrayImage::from_raw(n as u32, n as u32, pixels).expect("n*n pixels");
    img.save_with_format(path, image::ImageFormat::Pnm).with_context(|| format!("{}", path.display()))?;
    Ok(())
}
