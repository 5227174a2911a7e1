use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, Context};
use doa_cert::certificates::{Bound, CertError, CertMode, CertificateParams};
use doa_cert::cpwl::{
    block_spectrum_error, build_partition, check_theorem1, fit_pieces, global_lambda,
    integrate_error_bounds, pieces_csv, BoundOptions, Theorem1Verdict,
};
use doa_cert::matrix::{eig_general, solve_lyapunov, Matrix};
use doa_cert::ode::{attraction_oracle, IntegrateOptions};
use doa_cert::region::{certified_half_width, scan_region, tune_parameters, Certificate, RegionError};
use doa_cert::system::{parse_system_with, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::input::{
    parse_box, parse_counts, parse_override, parse_region_csv, read_lambdas, read_matrix,
};
use crate::{CertArgs, CpwlArgs, ModeArg, RegionArgs, SystemArgs, ValidateArgs};

/// Tolerance on `x - x_cpwl` leaving the error-bound envelope.
const SANDWICH_TOL: f64 = 1e-7;
/// Tolerance on the block-spectrum union check.
const SPECTRUM_TOL: f64 = 1e-8;

pub enum CliError {
    Input(anyhow::Error),
    NotApplicable(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::NotApplicable(_) => 3,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Input(e) => format!("{e:#}"),
            CliError::NotApplicable(m) => format!("not applicable: {m}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Input(e)
    }
}

impl From<CertError> for CliError {
    fn from(e: CertError) -> Self {
        match e {
            CertError::NotApplicable(m) => CliError::NotApplicable(m),
            other => CliError::Input(anyhow!(other)),
        }
    }
}

impl From<RegionError> for CliError {
    fn from(e: RegionError) -> Self {
        match e {
            RegionError::Cert(c) => c.into(),
            other => CliError::Input(anyhow!(other)),
        }
    }
}

type CliResult = Result<u8, CliError>;

/// Ordered `key=value` lines.
#[derive(Default)]
struct Report(Vec<(String, String)>);

impl Report {
    fn add(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }

    fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

fn load_system(sys: &SystemArgs) -> Result<VectorField, CliError> {
    let text = std::fs::read_to_string(&sys.system)
        .with_context(|| format!("cannot read {}", sys.system.display()))?;
    let overrides = sys
        .overrides
        .iter()
        .map(|s| parse_override(s))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let refs: Vec<(&str, f64)> = overrides.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    parse_system_with(&text, &refs)
        .map_err(|e| CliError::Input(anyhow!("{}: {e}", sys.system.display())))
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn analysis_box(args: &CertArgs, dim: usize) -> Result<Vec<(f64, f64)>, CliError> {
    let bounds = match &args.bounds {
        Some(s) => parse_box(s)?,
        None => vec![(-1.0, 1.0); dim],
    };
    if bounds.len() != dim {
        return Err(anyhow!("box has {} axes but the system has dimension {dim}", bounds.len()).into());
    }
    Ok(bounds)
}

fn require_hurwitz(f: &Matrix, what: &str) -> Result<(), CliError> {
    let eig = eig_general(f).map_err(|e| anyhow!("eigenvalues of {what}: {e}"))?;
    if eig.is_hurwitz() {
        Ok(())
    } else {
        Err(CliError::NotApplicable(format!(
            "{what} is not Hurwitz (max real part of its eigenvalues is {}); no stable F is available",
            eig.max_real_part
        )))
    }
}

struct Prepared {
    certificate: Certificate,
    bounds: Vec<(f64, f64)>,
    tuned_scale: Option<f64>,
}

fn prepare(vf: &VectorField, args: &CertArgs) -> Result<Prepared, CliError> {
    let bounds = analysis_box(args, vf.dim())?;
    let (f, mode) = match args.mode {
        ModeArg::Pointwise => {
            let j0 = vf
                .jacobian(&vec![0.0; vf.dim()])
                .map_err(|e| CliError::NotApplicable(format!("Jacobian at the origin: {e}")))?;
            require_hurwitz(&j0, "the Jacobian at the origin")?;
            return Ok(Prepared {
                certificate: Certificate::Systematic,
                bounds,
                tuned_scale: None,
            });
        }
        ModeArg::Origin => {
            let j0 = vf
                .jacobian(&vec![0.0; vf.dim()])
                .map_err(|e| CliError::NotApplicable(format!("Jacobian at the origin: {e}")))?;
            require_hurwitz(&j0, "the Jacobian at the origin")?;
            (j0, CertMode::JacobianOrigin)
        }
        ModeArg::Fixed => {
            let path = args
                .f
                .as_ref()
                .ok_or_else(|| anyhow!("--mode fixed needs --F PATH"))?;
            let f = read_matrix(path, vf.dim())?;
            require_hurwitz(&f, "F")?;
            (f, CertMode::FixedF)
        }
    };
    let (params, tuned_scale) = if args.lambdas == "auto" {
        let mut p = tune_parameters(vf, &f, &bounds)?;
        p.mode = mode;
        let s = match p.lambda_bar.get(0, 0) {
            Bound::Finite(s) => Some(s),
            Bound::Unbounded => None,
        };
        (p, s)
    } else {
        let (bar, tilde) = read_lambdas(Path::new(&args.lambdas), vf.dim())?;
        (CertificateParams::new(f, bar, tilde, mode)?, None)
    };
    Ok(Prepared {
        certificate: Certificate::Params(params),
        bounds,
        tuned_scale,
    })
}

fn matrix_csv(m: &Matrix) -> String {
    m.to_rows()
        .iter()
        .map(|r| r.iter().map(f64::to_string).collect::<Vec<_>>().join(",") + "\n")
        .collect()
}

pub fn certify(args: &CertArgs) -> CliResult {
    let vf = load_system(&args.sys)?;
    let prepared = prepare(&vf, args)?;
    let origin = vec![0.0; vf.dim()];
    let verdict = prepared.certificate.verdict(&vf, &origin);
    let certified = verdict.in_omega;

    let mut rep = Report::default();
    rep.add("system", args.sys.system.display());
    rep.add("mode", prepared.certificate.mode());
    rep.add("verdict", if certified { "certified" } else { "not-certified" });
    rep.add("lambda_R", verdict.lambda_r);
    rep.add("failed_condition", verdict.failed_condition);
    if let Some(s) = prepared.tuned_scale {
        rep.add("tuned_scale", s);
    }
    let mut matrices = String::new();
    match &prepared.certificate {
        Certificate::Params(p) => {
            rep.add("F", &p.f);
            rep.add("P", &p.p);
            let _ = write!(
                matrices,
                "[F]\n{}[P]\n{}[lambda_bar]\n{}[lambda_tilde]\n{}",
                matrix_csv(&p.f),
                matrix_csv(&p.p),
                p.lambda_bar.to_csv(),
                p.lambda_tilde.to_csv()
            );
        }
        Certificate::Systematic => {
            let j0 = vf.jacobian(&origin).map_err(|e| anyhow!("{e}"))?;
            let p = solve_lyapunov(&j0).map_err(|e| anyhow!("{e}"))?;
            rep.add("F", &j0);
            rep.add("P", &p);
            let _ = write!(matrices, "[F]\n{}[P]\n{}", matrix_csv(&j0), matrix_csv(&p));
        }
    }
    print!("{}", rep.render());
    write_out(&args.sys.out, "certificate.txt", &(rep.render() + &matrices))?;
    Ok(if certified { 0 } else { 1 })
}

pub fn region(args: &RegionArgs) -> CliResult {
    let vf = load_system(&args.cert.sys)?;
    let res = parse_counts(&args.res, vf.dim(), 2, "resolution")?;
    let prepared = prepare(&vf, &args.cert)?;
    let est = scan_region(&vf, &prepared.certificate, &prepared.bounds, &res)?;
    let out = &args.cert.sys.out;
    write_out(out, "region.csv", &est.to_csv())?;
    if est.dim() == 2 {
        write_out(out, "boundary.csv", &est.boundary_csv())?;
        write_out(out, "region.svg", &est.to_svg()?)?;
    }
    let h_max = prepared
        .bounds
        .iter()
        .map(|&(lo, hi)| (-lo).min(hi))
        .fold(f64::INFINITY, f64::min);
    let half_width = if h_max > 0.0 {
        certified_half_width(&vf, &prepared.certificate, h_max, 41)
    } else {
        0.0
    };

    let mut rep = Report::default();
    rep.add("system", args.cert.sys.system.display());
    rep.add("mode", prepared.certificate.mode());
    if let Some(s) = prepared.tuned_scale {
        rep.add("tuned_scale", s);
    }
    rep.add("points", est.verdicts.len());
    rep.add("certified", est.certified_count());
    rep.add("certified_fraction", est.certified_fraction);
    rep.add("certified_half_width", half_width);
    rep.add("boundary_polylines", est.boundary.len());
    print!("{}", rep.render());
    Ok(if est.certified_count() > 0 { 0 } else { 1 })
}

pub fn validate(args: &ValidateArgs) -> CliResult {
    let vf = load_system(&args.sys)?;
    let text = std::fs::read_to_string(&args.region)
        .with_context(|| format!("cannot read {}", args.region.display()))?;
    let region = parse_region_csv(&text)?;
    if region.points.iter().any(|p| p.len() != vf.dim()) {
        return Err(anyhow!("region file dimension does not match the system").into());
    }
    let certified: Vec<Vec<f64>> = region
        .points
        .iter()
        .zip(&region.in_omega)
        .filter(|(_, &c)| c)
        .map(|(p, _)| p.clone())
        .collect();

    let mut rep = Report::default();
    rep.add("system", args.sys.system.display());
    rep.add("region", args.region.display());
    rep.add("certified_points", certified.len());
    if certified.is_empty() {
        rep.add("warning", "region has no certified points; nothing to check");
        rep.add("checked", 0);
        rep.add("failures", 0);
        rep.add("verdict", "pass");
        print!("{}", rep.render());
        write_out(&args.sys.out, "validate.txt", &rep.render())?;
        return Ok(0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let k = args.samples.min(certified.len());
    let mut idx = rand::seq::index::sample(&mut rng, certified.len(), k).into_vec();
    idx.sort_unstable();
    let points: Vec<Vec<f64>> = idx.iter().map(|&i| certified[i].clone()).collect();
    let bbox = region.bounding_box().expect("nonempty region");
    let report = attraction_oracle(&vf, &points, &IntegrateOptions::for_box(&bbox, args.horizon));

    rep.add("checked", points.len());
    rep.add("horizon", args.horizon);
    rep.add("seed", args.seed);
    rep.add("converged", points.len() - report.failures.len());
    rep.add("failures", report.failures.len());
    rep.add("verdict", if report.failures.is_empty() { "pass" } else { "fail" });
    for &i in &report.failures {
        let coords: Vec<String> = points[i].iter().map(f64::to_string).collect();
        rep.add("failure", format!("{} {}", coords.join(","), report.statuses[i]));
    }
    print!("{}", rep.render());
    write_out(&args.sys.out, "validate.txt", &rep.render())?;
    Ok(if report.failures.is_empty() { 0 } else { 1 })
}

pub fn cpwl_check(args: &CpwlArgs) -> CliResult {
    let vf = load_system(&args.sys)?;
    let bounds = parse_box(&args.bounds)?;
    if bounds.len() != vf.dim() {
        return Err(anyhow!("box has {} axes but the system has dimension {}", bounds.len(), vf.dim()).into());
    }
    let div = parse_counts(&args.div, vf.dim(), 1, "divisions")?;
    let part = build_partition(&bounds, &div).map_err(|e| anyhow!("{e}"))?;
    let pieces = fit_pieces(&vf, &part).map_err(|e| anyhow!("{e}"))?;
    let theorem1 = check_theorem1(&part, &pieces);

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let opts = BoundOptions {
        horizon: args.horizon,
        ..BoundOptions::default()
    };
    let (mut samples, mut truncated, mut violations) = (0usize, 0usize, 0usize);
    let mut max_violation: f64 = 0.0;
    let mut pairs = Vec::new();
    for _ in 0..args.trajectories {
        let x0: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
        let run = integrate_error_bounds(&vf, &part, &pieces, &x0, opts);
        samples += run.samples.len();
        truncated += usize::from(run.truncated);
        violations += run.violations(SANDWICH_TOL);
        max_violation = max_violation.max(run.max_violation());
        pairs.extend(run.visited_pairs());
    }
    pairs.sort_unstable();
    pairs.dedup();
    let spectrum_error = pairs
        .iter()
        .map(|&(i, k)| block_spectrum_error(&pieces[i].a, &pieces[k].a))
        .fold(0.0, f64::max);

    let mut rep = Report::default();
    rep.add("system", args.sys.system.display());
    rep.add("simplices", part.simplex_count());
    let lambda: Vec<String> = global_lambda(&pieces).iter().map(f64::to_string).collect();
    rep.add("lambda", lambda.join(","));
    match theorem1 {
        Theorem1Verdict::Certified => rep.add("theorem1", "certified"),
        Theorem1Verdict::NotCertified { simplex, reason } => {
            rep.add("theorem1", "not-certified");
            rep.add("theorem1_simplex", simplex);
            rep.add("theorem1_reason", format!("{reason:?}"));
        }
    }
    rep.add("trajectories", args.trajectories);
    rep.add("truncated", truncated);
    rep.add("samples", samples);
    rep.add("sandwich_violations", violations);
    rep.add("sandwich_max_violation", max_violation);
    rep.add("visited_pairs", pairs.len());
    rep.add("block_spectrum_max_error", spectrum_error);
    let ok = theorem1 == Theorem1Verdict::Certified
        && violations == 0
        && spectrum_error <= SPECTRUM_TOL;
    rep.add("verdict", if ok { "pass" } else { "fail" });
    print!("{}", rep.render());
    write_out(&args.sys.out, "cpwl_check.txt", &rep.render())?;
    write_out(&args.sys.out, "pieces.csv", &pieces_csv(&part, &pieces))?;
    Ok(if ok { 0 } else { 1 })
}

