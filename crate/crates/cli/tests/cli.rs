use std::path::{Path, PathBuf};

use shearlet_core::io::{field_from_dump, read_dump, MAGIC};

fn algebra(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../algebras").join(format!("{name}.alg")).to_string_lossy().into_owned()
}

struct Run {
    code: i32,
    out: String,
    err: String,
}

impl Run {
    fn get(&self, key: &str) -> Option<&str> {
        self.out.lines().find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
    }
}

fn run(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("shearlet").chain(args.iter().copied());
    let code = shearlet_cli::run_with(argv, &mut out, &mut err);
    Run { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

/// 64x64 PGM: a horizontal edge at row 32 under a smooth cutoff away from the border.
fn edge_pgm(dir: &Path) -> PathBuf {
    let n = 64u32;
    let img = image::GrayImage::from_fn(n, n, |c, r| {
        let cut = |k: u32| 0.5 * (1.0 + ((24.0 - (k as f64 - 31.5).abs()) / 2.0).tanh());
        let v = if r >= n / 2 { cut(r) * cut(c) } else { 0.0 };
        image::Luma([(255.0 * v).round() as u8])
    });
    let path = dir.join("edge.pgm");
    img.save_with_format(&path, image::ImageFormat::Pnm).unwrap();
    path
}

#[test]
fn scalings_of_toeplitz4() {
    let r = run(&["scalings", &algebra("toeplitz4")]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.get("kernel_dim"), Some("1"));
    assert_eq!(r.get("kernel_basis_1"), Some("(1,2,3)"));
    assert_eq!(r.get("window_delta"), Some("-1/6"));
    assert_eq!(r.get("window_lambda"), Some("(1,5/6,2/3,1/2)"));
}

#[test]
fn isotropic_only_has_no_window() {
    let r = run(&["scalings", &algebra("isotropic_only")]);
    assert_eq!(r.code, 0);
    assert_eq!(r.get("kernel_dim"), Some("0"));
    assert_eq!(r.get("window"), Some("none"));
    // Without an admissible scaling the group needs an explicit λ.
    assert_eq!(run(&["group", &algebra("isotropic_only")]).code, 2);
    assert_eq!(run(&["group", &algebra("isotropic_only"), "--lambda", "1,1,1,1"]).code, 0);
}

#[test]
fn family_specs_match_files() {
    let a = run(&["scalings", "alpha:4:-1"]);
    let b = run(&["scalings", &algebra("alpha_neg1")]);
    assert_eq!(a.code, 0);
    assert_eq!(a.out, b.out);
}

#[test]
fn validate_reports_the_offending_line() {
    let r = run(&["validate", &algebra("bad")]);
    assert_eq!(r.code, 1);
    assert_eq!(r.get("valid"), Some("false"));
    assert_eq!(r.get("line"), Some("4"));
    let ok = run(&["validate", &algebra("toeplitz3")]);
    assert_eq!(ok.code, 0);
    assert_eq!(ok.get("canonical_basis_ok"), Some("true"));
}

#[test]
fn usage_and_file_errors_exit_with_2() {
    assert_eq!(run(&["validate", "/definitely/not/here.alg"]).code, 2);
    assert_eq!(run(&["scalings", "nosuchfamily:3"]).code, 2);
    assert_eq!(run(&["frobnicate"]).code, 2);
    assert_eq!(run(&["group", "class2:2", "--lambda", "1,1/2,1/3"]).code, 2);
    assert_eq!(run(&["scalings", "class2:2", "--threads", "0"]).code, 2);
    assert_eq!(run(&["--help"]).code, 0);
}

#[test]
fn group_reports_compatibility() {
    let r = run(&["group", &algebra("toeplitz3"), "--samples", "2"]);
    assert_eq!(r.code, 0, "{}", r.err);
    // Midpoint of the admissible δ ∈ (-1/2, 0).
    assert_eq!(r.get("lambda"), Some("(1,3/4,1/2)"));
    assert_eq!(r.get("compatible"), Some("true"));
    assert_eq!(r.get("det_exponent"), Some("9/4"));
}

#[test]
fn embed_check_toeplitz3_passes() {
    let r = run(&["embed-check", &algebra("toeplitz3"), "--trials", "20", "--grid", "24", "--pairs", "2"]);
    assert_eq!(r.code, 0, "{}{}", r.out, r.err);
}

#[test]
fn microlocal_flags_the_isotropic_group() {
    let r = run(&["verify-microlocal", "class2:2", "--lambda", "1,1", "--trials", "500"]);
    assert_eq!(r.code, 1);
    assert_eq!(r.get("cone_certified"), Some("false"));
    assert!(r.get("cone_witness").is_some());
    let ok = run(&["verify-microlocal", "class2:2", "--trials", "500"]);
    assert_eq!(ok.code, 0, "{}", ok.err);
    assert_eq!(ok.get("cone_violations"), Some("0"));
}

#[test]
fn wavefront_writes_map_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let img = edge_pgm(dir.path());
    let map = dir.path().join("map.pgm");
    let flags = dir.path().join("flags.csv");
    let r = run(&[
        "wavefront",
        img.to_str().unwrap(),
        "--a0",
        "0.5",
        "--border",
        "13",
        "--out",
        map.to_str().unwrap(),
        "--flags",
        flags.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    let flagged: usize = r.get("flagged_cells").unwrap().parse().unwrap();
    assert!(flagged > 0);
    let decoded = image::open(&map).unwrap().to_luma8();
    assert_eq!(decoded.dimensions(), (64, 64));
    let mut rows = csv::Reader::from_path(&flags).unwrap();
    let records: Vec<csv::StringRecord> = rows.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), flagged);
    // Flags cluster around the edge rows 31/32.
    let near = records.iter().filter(|rec| (rec[0].parse::<f64>().unwrap() - 31.5).abs() <= 6.0).count();
    assert!(near * 10 >= flagged * 9, "{near} of {flagged}");
}

#[test]
fn transform_dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let img = edge_pgm(dir.path());
    let dump = dir.path().join("coeffs.bin");
    let r = run(&["transform", img.to_str().unwrap(), "--scales", "2", "--shears", "1", "--out", dump.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(r.get("finite"), Some("true"));
    let bytes = std::fs::read(&dump).unwrap();
    assert!(bytes.starts_with(MAGIC.as_bytes()));
    let (header, slices) = read_dump(&mut bytes.as_slice()).unwrap();
    assert_eq!(header.shape, vec![64, 64]);
    assert_eq!(slices.len(), 2 * 2 * 3);
    let field = field_from_dump(&header, slices);
    let max: f64 = r.get("max_abs").unwrap().parse().unwrap();
    assert_eq!(field.max_abs(), max);
}

#[test]
fn equal_seeds_give_identical_output() {
    let args = ["group", "toeplitz:4", "--samples", "4", "--seed", "9"];
    let a = run(&args);
    let b = run(&[&args[..], &["--threads", "3"]].concat());
    assert_eq!(a.code, 0);
    assert_eq!(a.out, b.out);
    let c = run(&["group", "toeplitz:4", "--samples", "4", "--seed", "10"]);
    assert_ne!(a.out, c.out);
}

#[test]
fn out_copies_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.txt");
    let r = run(&["scalings", "class2:3", "--out", path.to_str().unwrap()]);
    assert_eq!(r.code, 0);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), r.out);
}
