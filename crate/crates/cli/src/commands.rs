use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use anyhow::Context;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shearlet_core::algebra::{canonical_basis, check_shearing_invariants, load_algebra};
use shearlet_core::group::{GroupElement, ShearletGroup};
use shearlet_core::io::{write_dump, DumpHeader};
use shearlet_core::rational::{format_q, format_vec, qi, RatMatrix};
use shearlet_core::scaling::{build_mu_system, exponents_from_mu, solve_mu_system, verify_compatibility, wavefront_window};
use shearlet_core::symplectic::{
    certify_algebraic, group_pairs, intertwining_convergence, AlgebraicCertificate, DilationSource, HalfSpaceGrid,
};
use shearlet_core::transform::{analyze, parseval_ratio, GroupSampling};
use shearlet_core::wavefront::{
    decay_sampling, verify_cone_approximation, verify_microlocal_admissibility, wavefront_map, ConeParams,
    DecayThresholds, DirectionBins, DirectionWindow, FrequencyBox, MicrolocalParams,
};
use shearlet_core::window::{admissibility_constant, default_cells, window};

use crate::input::{build_group, choose_lambda, load_image, read_text, resolve_algebra, write_pgm};
use crate::report::{num, Report};
use crate::{Cli, CliError, Command, TransformArgs, WavefrontArgs};

/// Default tolerance for the algebraic embedding identities.
const ALGEBRAIC_TOL: f64 = 1e-10;
/// Relative intertwining residual allowed on grids with at least 256 nodes per axis.
const INTERTWINING_TOL: f64 = 0.02;

pub fn dispatch(cli: &Cli) -> anyhow::Result<Report> {
    match &cli.command {
        Command::Validate { algebra } => validate(algebra),
        Command::Scalings { algebra } => scalings(algebra),
        Command::Group { algebra, group, samples } => group_info(algebra, group.lambda.as_deref(), *samples, cli.seed),
        Command::Transform(args) => transform(args, cli),
        Command::Wavefront(args) => wavefront(args, cli),
        Command::VerifyMicrolocal { algebra, group, trials, eps, radius } => {
            verify_microlocal(algebra, group.lambda.as_deref(), *trials, *eps, *radius, cli.seed)
        }
        Command::EmbedCheck { algebra, group, trials, grid, pairs } => {
            embed_check(algebra, group.lambda.as_deref(), *trials, *grid, *pairs, cli)
        }
    }
}

fn matrix_text(m: &RatMatrix) -> String {
    let rows: Vec<String> =
        (0..m.nrows()).map(|i| m.row(i).iter().map(format_q).collect::<Vec<_>>().join(",")).collect();
    format!("[{}]", rows.join(";"))
}

fn validate(path: &str) -> anyhow::Result<Report> {
    let text = read_text(Path::new(path))?;
    let mut r = Report::default();
    r.kv("file", path);
    match load_algebra(&text) {
        Ok(alg) => {
            let s = canonical_basis(&alg);
            r.kv("valid", true);
            r.kv("dim", alg.dim());
            r.kv("products", alg.upper_entries().len());
            r.kv("canonical_basis_ok", check_shearing_invariants(&s));
        }
        Err(e) => {
            r.kv("valid", false);
            r.kv("line", e.line().map_or("none".to_string(), |l| l.to_string()));
            r.kv("error", &e);
            r.violate(format!("{path}: {e}"));
        }
    }
    Ok(r)
}

fn scalings(spec: &str) -> anyhow::Result<Report> {
    let alg = resolve_algebra(spec)?;
    let sol = solve_mu_system(&build_mu_system(&alg));
    let mut r = Report::default();
    r.kv("dim", alg.dim());
    r.kv("kernel_dim", sol.dim_solution());
    for (i, v) in sol.basis.iter().enumerate() {
        r.kv(format!("kernel_basis_{}", i + 1), format_vec(v));
    }
    match wavefront_window(&sol) {
        Some(mu) => {
            if let [b] = &sol.basis[..] {
                let k = b.iter().position(|x| *x != qi(0)).expect("basis vectors are nonzero");
                r.kv("window_delta", format_q(&(&mu[k] / &b[k])));
            }
            r.kv("window_mu", format_vec(&mu));
            r.kv("window_lambda", format_vec(&exponents_from_mu(&mu).lambda));
        }
        None => r.kv("window", "none"),
    }
    Ok(r)
}

fn group_info(spec: &str, lambda: Option<&str>, samples: usize, seed: u64) -> anyhow::Result<Report> {
    let alg = resolve_algebra(spec)?;
    let ev = choose_lambda(&alg, lambda)?;
    let s = canonical_basis(&alg);
    let mut r = Report::default();
    r.kv("dim", alg.dim());
    for (i, x) in s.basis().iter().enumerate() {
        r.kv(format!("X{}", i + 2), matrix_text(x));
    }
    r.kv("lambda", format_vec(&ev.lambda));
    let compatible = verify_compatibility(&s, &ev)?;
    r.kv("compatible", compatible);
    r.kv("det_exponent", format_q(&ev.lambda.iter().sum()));
    if !compatible {
        r.violate("exponents are not compatible with the shearing subgroup");
        return Ok(r);
    }
    let g = ShearletGroup::new(s, ev)?;
    r.kv("lambda_in_wavefront_range", g.exponents().in_wavefront_range());
    r.kv("seed", seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..samples {
        let sign = if rng.random_bool(0.5) { -1 } else { 1 };
        let log_a = rng.random_range(-1.0..=1.0);
        let e = GroupElement::from_log(sign, log_a, (1..g.dim()).map(|_| rng.random_range(-1.0..=1.0)).collect());
        let m = g.element_matrix(&e)?;
        let mut text = String::from("[");
        for row in 0..g.dim() {
            if row > 0 {
                text.push(';');
            }
            let cells: Vec<String> = (0..g.dim()).map(|c| num(m[(row, c)])).collect();
            text.push_str(&cells.join(","));
        }
        text.push(']');
        let t: Vec<String> = e.t.iter().map(|x| num(*x)).collect();
        r.kv(format!("sample_{}_chart", i + 1), format!("sign={},log_a={},t=({})", e.sign, num(e.log_a), t.join(",")));
        r.kv(format!("sample_{}_matrix", i + 1), text);
    }
    Ok(r)
}

fn transform(args: &TransformArgs, cli: &Cli) -> anyhow::Result<Report> {
    let u = load_image(&args.image)?;
    let g = build_group(&args.group, args.lambda.lambda.as_deref())?;
    if g.dim() != 2 {
        anyhow::bail!(CliError::Usage(format!("images are 2-d but the group has dimension {}", g.dim())));
    }
    let psi = window(&args.window, 2).map_err(|e| CliError::Usage(e.to_string()))?;
    let samp = GroupSampling::geometric(2, args.a0, args.ratio, args.scales, args.shear_step, args.shears, true, vec![1, -1])
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let field = analyze(&u, psi.as_ref(), &g, &samp)?;
    let mut r = Report::default();
    r.kv("grid", format!("{}x{}", u.grid.shape[0], u.grid.shape[1]));
    r.kv("window", psi.name());
    r.kv("lambda", format_vec(&g.exponents().lambda));
    r.kv("scales", samp.scales.len());
    r.kv("shears", samp.shear_offsets.len());
    r.kv("elements", field.elements.len());
    r.kv("max_abs", num(field.max_abs()));
    r.kv("finite", field.is_finite());
    let c_psi = admissibility_constant(psi.as_ref(), default_cells(2))?;
    if c_psi.is_finite() {
        r.kv("c_psi", num(c_psi));
        r.kv("parseval_ratio", num(parseval_ratio(&field, &u, c_psi)));
    } else {
        r.kv("c_psi", "inf");
    }
    if let Some(path) = &cli.out {
        let lambda = g.exponents().lambda.iter().map(format_q).collect();
        let header = DumpHeader::from_field(&field, lambda, psi.name(), cli.seed);
        let file = std::fs::File::create(path).map_err(|err| CliError::File { path: path.clone(), err })?;
        let mut w = std::io::BufWriter::new(file);
        write_dump(&mut w, &header, &field.slices)?;
        w.flush().with_context(|| format!("{}", path.display()))?;
        r.kv("dump", path.display());
    } else {
        r.note("no --out given; coefficients were not written");
    }
    if !field.is_finite() {
        r.violate("non-finite coefficients");
    }
    Ok(r)
}

fn wavefront(args: &WavefrontArgs, cli: &Cli) -> anyhow::Result<Report> {
    let u = load_image(&args.image)?;
    let g = build_group(&args.group, args.lambda.lambda.as_deref())?;
    if g.dim() != 2 {
        anyhow::bail!(CliError::Usage(format!("images are 2-d but the group has dimension {}", g.dim())));
    }
    let n = u.grid.shape[0];
    let border = args.border.unwrap_or(((n as f64) * 0.2).round() as usize);
    if 2 * border >= n {
        anyhow::bail!(CliError::Usage(format!("border {border} leaves no interior in a {n}x{n} grid")));
    }
    let psi = window("meyer", 2)?;
    let samp = decay_sampling(&g, args.a0, args.ratio, args.scales, args.shear_step, 1.0)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let bins = DirectionBins::uniform(2, args.bins, 1.0).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut thresholds = DecayThresholds::for_dim(2);
    if let Some(t) = cli.tol {
        thresholds.slope = t;
    }
    let rep = wavefront_map(&u, &g, psi.as_ref(), &samp, &bins, &thresholds, border)?;
    let flagged = rep.flagged();
    let counts = rep.count_map();
    let mut per_bin = vec![0usize; bins.len()];
    for (_, b) in &flagged {
        per_bin[*b] += 1;
    }
    let mut r = Report::default();
    r.kv("grid", format!("{n}x{n}"));
    r.kv("lambda", format_vec(&g.exponents().lambda));
    r.kv("scales", rep.scales.len());
    r.kv("bins", bins.len());
    r.kv("border", border);
    r.kv("slope_threshold", num(thresholds.slope));
    r.kv("positions", rep.positions.len());
    r.kv("flagged_cells", flagged.len());
    r.kv("flagged_positions", counts.iter().filter(|c| **c > 0).count());
    r.kv("flags_per_bin", per_bin.iter().map(ToString::to_string).collect::<Vec<_>>().join(","));
    r.kv("incompatible_scaling", rep.incompatible_scaling);
    if let Some(path) = &cli.out {
        let vals: Vec<f64> = counts.iter().map(|c| f64::from(*c)).collect();
        write_pgm(path, n, &vals, bins.len() as f64)?;
        r.kv("map", path.display());
    }
    if let Some(path) = &args.flags {
        let mut text = String::from("row,col,bin\n");
        for (p, b) in &flagged {
            let m = rep.grid.unravel(*p);
            writeln!(text, "{},{},{b}", m[0], m[1]).expect("string write");
        }
        std::fs::write(path, text).map_err(|err| CliError::File { path: path.clone(), err })?;
        r.kv("flags", path.display());
    }
    if rep.incompatible_scaling {
        r.note("exponents outside (0, 1): decay flags carry no guarantee");
    }
    Ok(r)
}

fn verify_microlocal(
    spec: &str,
    lambda: Option<&str>,
    trials: usize,
    eps: f64,
    radius: f64,
    seed: u64,
) -> anyhow::Result<Report> {
    let g = build_group(spec, lambda)?;
    let d = g.dim();
    let target = DirectionWindow::around_e1(d, eps, radius).map_err(|e| CliError::Usage(e.to_string()))?;
    let params = ConeParams { samples: trials, seed, ..ConeParams::default() };
    let cone = verify_cone_approximation(&g, &FrequencyBox::default(), &target, &params)?;
    let mut r = Report::default();
    r.kv("dim", d);
    r.kv("lambda", format_vec(&g.exponents().lambda));
    r.kv("seed", seed);
    r.kv("cone_explicit_schedule", cone.schedule.explicit);
    r.kv("cone_eps_prime", num(cone.eps_prime));
    r.kv("cone_r_prime", num(cone.r_prime));
    r.kv("cone_rounds", cone.rounds_used);
    r.kv("cone_tested", cone.tested);
    r.kv("cone_violations", cone.violations);
    r.kv("cone_certified", cone.certified);
    if let Some(w) = &cone.witness {
        let t: Vec<String> = w.t.iter().map(|x| num(*x)).collect();
        r.kv("cone_witness", format!("sign={},log_a={},t=({})", w.sign, num(w.log_a), t.join(",")));
    }
    let mparams = MicrolocalParams { samples: trials, seed, ..MicrolocalParams::new(d) };
    let m = verify_microlocal_admissibility(&g, &mparams)?;
    r.kv("alpha1", num(m.alpha1));
    r.kv("alpha1_expected", num(1.0 / g.lambda_min()));
    r.kv("c1", num(m.c1));
    r.kv("alpha1_rms", num(m.regression_rms));
    r.kv("alpha2", num(m.alpha2));
    r.kv("alpha2_threshold", num(m.alpha2_threshold));
    r.kv("integral", num(m.integral));
    r.kv("integral_doubled", num(m.integral_doubled));
    r.kv("shell_ratio", num(m.shell_ratio));
    r.kv("integrable", m.integrable);
    r.kv("stable", m.stable);
    r.kv("admissible", m.admissible());
    if !cone.certified {
        r.violate("cone approximation not certified");
    }
    if !m.admissible() {
        r.violate("microlocal admissibility estimates failed");
    }
    Ok(r)
}

fn push_certificate(r: &mut Report, prefix: &str, c: &AlgebraicCertificate, tol: f64) {
    let rows = [
        ("symplecticity", c.symplecticity),
        ("rho_homomorphism", c.rho_homomorphism),
        ("phi_homomorphism", c.phi_homomorphism),
        ("conjugation", c.conjugation),
        ("injectivity", c.injectivity),
        ("hq_identity", c.hq_identity),
        ("jacobian_product", c.jacobian_product),
    ];
    for (name, v) in rows {
        r.kv(format!("{prefix}_{name}"), num(v));
        if !(v <= tol) {
            r.violate(format!("{prefix} {name} residual {v:e} exceeds {tol:e}"));
        }
    }
}

fn embed_check(
    spec: &str,
    lambda: Option<&str>,
    trials: usize,
    grid: Option<usize>,
    pairs: usize,
    cli: &Cli,
) -> anyhow::Result<Report> {
    let g = build_group(spec, lambda)?;
    let d = g.dim();
    let tol = cli.tol.unwrap_or(ALGEBRAIC_TOL);
    let mut r = Report::default();
    r.kv("dim", d);
    r.kv("lambda", format_vec(&g.exponents().lambda));
    r.kv("seed", cli.seed);
    r.kv("trials", trials);
    r.kv("tolerance", num(tol));
    let group_cert = certify_algebraic(DilationSource::Group(&g), trials, cli.seed)?;
    push_certificate(&mut r, "group", &group_cert, tol);
    let tri_cert = certify_algebraic(DilationSource::Triangular(d), trials, cli.seed)?;
    push_certificate(&mut r, "triangular", &tri_cert, tol);

    let n = match (grid, d) {
        (Some(n), _) => Some(n),
        (None, 2) => Some(256),
        (None, 3) => Some(48),
        (None, _) => None,
    };
    let Some(n) = n else {
        r.kv("intertwining", "skipped");
        r.note(format!("intertwining needs a {d}-d grid; pass --grid to run it"));
        return Ok(r);
    };
    let hs = HalfSpaceGrid::default_for(d, n);
    r.kv("intertwining_grid", n);
    let mut worst = 0.0f64;
    let mut min_order = f64::INFINITY;
    for (i, (b, h)) in group_pairs(&g, pairs, cli.seed)?.iter().enumerate() {
        let row = intertwining_convergence(b, h, &hs, &shearlet_core::grid::Linear)?;
        r.kv(format!("intertwining_{}_coarse", i + 1), num(row.coarse));
        r.kv(format!("intertwining_{}_fine", i + 1), num(row.fine));
        r.kv(format!("intertwining_{}_order", i + 1), num(row.order()));
        worst = worst.max(row.coarse);
        min_order = min_order.min(row.order());
    }
    r.kv("intertwining_max", num(worst));
    r.kv("intertwining_min_order", num(min_order));
    if !(min_order >= 1.0) {
        r.violate(format!("intertwining residual does not halve under refinement (order {min_order:.3})"));
    }
    if n >= 256 && !(worst <= INTERTWINING_TOL) {
        r.violate(format!("intertwining residual {worst:e} exceeds {INTERTWINING_TOL}"));
    } else if n < 256 {
        r.note("absolute intertwining bound applies from 256 nodes per axis; only the order is enforced");
    }
    Ok(r)
}
