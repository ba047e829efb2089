//! Command implementations behind the `dbar-fiber` binary.
//!
//! Every command reads a [`RunConfig`], writes its tables and reports into
//! the output directory and returns an [`Outcome`]. Exit codes: 0 pass,
//! 1 verification failure, 2 configuration error, 3 numerical error.

mod config;

pub use config::{
    BoundsConfig, BoxConfig, BundleConfig, FormConfig, GridConfig, OutputConfig, PointConfig, RandomGrid, RunConfig,
    Tolerances,
};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bundle::{global_solve_report, make_opm_bundle, perturbed, BundleError};
use crate::cauchy::{f_profile, g_bound_check, is_nonincreasing, kernel_mass_bound, tail_bound, CauchyError};
use crate::fields::{
    compatibility_residual, decay_check, BaseFiberPoint, DecayBudget, FieldError, ParamValue, VariableId,
};
use crate::report::{CheckRecord, RunMeta, VerificationReport};
use crate::solver::{
    bm_boundary_envelope, bm_reconstruct, decay_profile, delta_consistency, envelope_bound, residual_convergence,
    solve_grid, SolveError, SolveResult,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<CauchyError> for CliError {
    fn from(e: CauchyError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<BundleError> for CliError {
    fn from(e: BundleError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "dbar-fiber",
    version,
    about = "Fiberwise Cauchy-transform solver for the dbar-equation, with verification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run description; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`; defaults to the working directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for sampled points (overrides `seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Only report errors.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Solve on the grid and write solution.csv.
    Solve,
    /// Run every check on the grid and write report.json.
    Verify,
    /// Kernel-mass, line, tail and profile bounds: bounds.csv and f_profile.csv.
    Bounds,
    /// Decay profiles along fiber rays: decay_profile.csv.
    Profile,
    /// Chart gluing on a bundle: bundle_report.json and overlap.csv.
    Bundle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Bounds => "bounds",
            Command::Profile => "profile",
            Command::Bundle => "bundle",
        }
    }
}

/// Result of one command.
#[derive(Debug)]
pub struct Outcome {
    pub pass: bool,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

/// Options shared by all commands, after command-line overrides.
#[derive(Clone, Debug)]
pub struct Invocation {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Invocation {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let config = match &cli.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                RunConfig::from_toml(&text)?
            }
            None => RunConfig::default(),
        };
        Ok(Self::new(config, cli.out.clone(), cli.seed))
    }

    pub fn new(config: RunConfig, out: Option<PathBuf>, seed: Option<u64>) -> Self {
        let out_dir = out.or_else(|| config.output.dir.clone()).unwrap_or_else(|| PathBuf::from("."));
        let seed = seed.unwrap_or(config.seed);
        Self { config, out_dir, seed }
    }

    fn meta(&self, command: Command) -> RunMeta {
        RunMeta::new(command.name(), self.seed, serde_json::to_value(&self.config).unwrap_or_default())
    }
}

pub fn run(command: Command, inv: &Invocation) -> Result<Outcome, CliError> {
    inv.config.validate()?;
    std::fs::create_dir_all(&inv.out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", inv.out_dir.display())))?;
    match command {
        Command::Solve => cmd_solve(inv),
        Command::Verify => cmd_verify(inv),
        Command::Bounds => cmd_bounds(inv),
        Command::Profile => cmd_profile(inv),
        Command::Bundle => cmd_bundle(inv),
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    files.push(path);
    Ok(())
}

fn write_csv(inv: &Invocation, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    if inv.config.output.csv {
        write_file(&inv.out_dir, name, contents, files)?;
    }
    Ok(())
}

fn write_json(inv: &Invocation, name: &str, value: &impl Serialize, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    if inv.config.output.json {
        let mut text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Io(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        write_file(&inv.out_dir, name, &text, files)?;
    }
    Ok(())
}

fn coord_header(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).flat_map(|i| [format!("re_{prefix}{i}"), format!("im_{prefix}{i}")]).collect()
}

fn coord_cells(cs: &[Complex64]) -> Vec<String> {
    cs.iter().flat_map(|c| [num(c.re), num(c.im)]).collect()
}

fn collect_solves(results: Vec<Result<SolveResult, SolveError>>) -> Result<Vec<SolveResult>, CliError> {
    results.into_iter().map(|r| r.map_err(CliError::from)).collect()
}

fn cmd_solve(inv: &Invocation) -> Result<Outcome, CliError> {
    let cfg = &inv.config;
    let form = cfg.build_form()?;
    let delta = cfg.delta(form.k())?;
    let points = cfg.grid_points(form.n(), form.k(), inv.seed)?;
    let solved = collect_solves(solve_grid(&form, &points, delta, &cfg.quadrature))?;

    let mut header = coord_header("z", form.n());
    header.extend(coord_header("w", form.k()));
    header.extend(["re_B", "im_B", "abs_B", "err_estimate"].map(String::from));
    let mut csv = header.join(",") + "\n";
    for (p, s) in points.iter().zip(&solved) {
        let mut row = coord_cells(&p.z);
        row.extend(coord_cells(&p.w));
        row.extend([num(s.value.re), num(s.value.im), num(s.value.norm()), num(s.err_estimate)]);
        csv += &(row.join(",") + "\n");
    }
    let mut files = vec![];
    write_csv(inv, "solution.csv", &csv, &mut files)?;
    let unconverged = solved.iter().filter(|s| !s.converged).count();
    if unconverged > 0 {
        log::warn!("{unconverged} of {} solves did not reach tol_abs", solved.len());
    }
    Ok(Outcome { pass: true, files, summary: format!("solved {} points of `{}`", points.len(), form.name()) })
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

/// Every check that applies to the configured form on the configured grid.
pub fn verify_records(inv: &Invocation) -> Result<Vec<CheckRecord>, CliError> {
    let cfg = &inv.config;
    let tol = &cfg.tolerances;
    let spec = &cfg.quadrature;
    let form = cfg.build_form()?;
    let decay = form.decay();
    let delta = cfg.delta(form.k())?;
    let points = cfg.grid_points(form.n(), form.k(), inv.seed)?;
    let z_fixed = cfg.z_fixed(form.n())?;
    let rays = cfg.rays(form.k())?;
    let mut records = Vec::new();

    let compat = points
        .par_iter()
        .map(|p| compatibility_residual(&form, p, 1e-4).map(|r| r.max()))
        .collect::<Result<Vec<_>, _>>()?;
    records.push(CheckRecord::at_most(
        "compatibility",
        "∂̄ω = 0: ∂a_α/∂z̄_β = ∂a_β/∂z̄_α, ∂a_α/∂w̄_γ = ∂b_γ/∂z̄_α, ∂b_γ/∂w̄_δ = ∂b_δ/∂w̄_γ",
        max_of(compat),
        tol.tol_compat,
    ));

    let mut radii = vec![0.0];
    radii.extend(cfg.grid.radii.iter().copied().filter(|r| *r > 0.0));
    let dec = decay_check(&form, &z_fixed, &radii, &rays)?;
    let grid_ratio = max_of(points.iter().map(|p| {
        let weight = (1.0 + decay.fiber_term(&p.w)) / decay.c_bound;
        max_of(form.b_coeffs().iter().map(|b| b.evaluate(p).norm() * weight))
    }));
    records.push(
        CheckRecord::at_most(
            "decay budget",
            "|b_γ(z, w)| ≤ C / (1 + Σ_δ |w_δ|^{1+ε})",
            dec.max_b_ratio.max(grid_ratio),
            1.0,
        )
        .with_detail(format!("epsilon = {}, C = {}; {}", decay.epsilon, decay.c_bound, dec.note)),
    );
    records.push(CheckRecord::flag("a-part decay", "a_α(z, w) → 0 as |w| → ∞", dec.a_ok));

    let solved = collect_solves(solve_grid(&form, &points, delta, spec))?;
    let unconverged = solved.iter().filter(|s| !s.converged).count();
    records.push(CheckRecord::at_most(
        "quadrature converged",
        "err_estimate ≤ tol_abs within the refinement budget",
        unconverged as f64,
        0.0,
    ));

    if form.has_primitive() {
        let worst = max_of(points.iter().zip(&solved).map(|(p, s)| {
            let phi = form.primitive(p).unwrap_or(Complex64::new(f64::NAN, 0.0));
            (s.value - phi).norm() / (s.err_estimate + tol.tol_oracle)
        }));
        records.push(
            CheckRecord::at_most("primitive oracle", "B = φ for the decaying primitive φ with ∂̄φ = ω", worst, 1.0)
                .with_detail("measured is max |B − φ| / (err_estimate + tol_oracle)"),
        );
    }

    let residual_spec = spec.with_tol_abs(tol.residual_tol_abs);
    let conv = points
        .par_iter()
        .map(|p| residual_convergence(&form, p, &residual_spec, tol.fd_step))
        .collect::<Result<Vec<_>, _>>()?;
    records.push(CheckRecord::at_most(
        "residual",
        "∂B/∂w̄_γ = b_γ and ∂B/∂z̄_α = a_α",
        max_of(conv.iter().map(|c| c.coarse.max())),
        tol.tol_residual,
    ));
    records.push(
        CheckRecord::at_most(
            "residual convergence",
            "FD residual at h/2 over residual at h tends to 1/4",
            max_of(conv.iter().map(|c| c.max_ratio())),
            tol.residual_ratio,
        )
        .with_detail(format!(
            "h = {}, noise floor {:e}; {} of {} entries above the floor",
            tol.fd_step,
            conv.first().map(|c| c.noise_floor).unwrap_or(0.0),
            conv.iter().flat_map(|c| c.ratios.iter().flatten()).count(),
            conv.iter().map(|c| c.ratios.len()).sum::<usize>()
        )),
    );

    if form.k() >= 2 {
        let dc = points.par_iter().map(|p| delta_consistency(&form, p, spec)).collect::<Result<Vec<_>, _>>()?;
        let ratio = max_of(dc.iter().map(|d| if d.max_gap == 0.0 { 0.0 } else { d.max_gap / d.bound }));
        let gap = max_of(dc.iter().map(|d| d.max_gap));
        let mut rec = CheckRecord::at_most("slot independence", "B_δ = B_δ′ for all slots δ, δ′", gap, tol.tol_delta);
        rec.pass = rec.pass && ratio <= 1.0;
        records.push(rec.with_detail(format!("largest gap / combined err_estimate: {ratio:.3e}")));
    }

    let b = &form.b_coeffs()[delta];
    let bm_point = BaseFiberPoint { z: z_fixed.clone(), w: (0..form.k()).map(|_| Complex64::new(0.0, 0.0)).collect() };
    if b.analytic_wirtinger(&bm_point, VariableId::fiber_bar(delta)).is_some() && !cfg.grid.bm_radii.is_empty() {
        let bm = cfg
            .grid
            .bm_radii
            .iter()
            .map(|&r| bm_reconstruct(b, &bm_point, delta, r, spec))
            .collect::<Result<Vec<_>, _>>()?;
        records.push(
            CheckRecord::at_most(
                "Bochner-Martinelli reconstruction",
                "b(w) = (1/2πi)∮ b(ζ)/(ζ − w) dζ + (1/2πi)∫_D ∂b/∂ζ̄ /(ζ − w) dζ∧dζ̄",
                max_of(bm.iter().map(|r| r.gap() / (r.interior_err + r.boundary_err + tol.tol_bm))),
                1.0,
            )
            .with_detail("measured is max |interior + boundary − b| / (errors + tol_bm)"),
        );
        let env_ratio = max_of(bm.iter().map(|r| r.boundary.norm() / bm_boundary_envelope(&decay, 0.0, r.radius)));
        let decreasing = bm.windows(2).all(|w| w[1].boundary.norm() <= w[0].boundary.norm() + w[0].boundary_err);
        let mut rec = CheckRecord::at_most(
            "boundary term decay",
            "|(1/2πi)∮_{|ζ|=R} b/ζ dζ| ≤ C / (1 + |R − |w_δ||^{1+ε}) → 0",
            env_ratio,
            1.0,
        );
        rec.pass = rec.pass && decreasing;
        records.push(rec);
    } else {
        log::warn!("no analytic slot derivative for `{}`; skipping the Bochner-Martinelli check", form.name());
    }

    let envelopes =
        points.par_iter().map(|p| envelope_bound(&decay, &p.w, delta, spec)).collect::<Result<Vec<_>, _>>()?;
    records.push(
        CheckRecord::at_most(
            "envelope",
            "|B(z, w)| ≤ (C/2π) F(|w_δ|)",
            max_of(solved.iter().zip(&envelopes).map(|(s, e)| s.value.norm() / (e + s.err_estimate))),
            1.0,
        )
        .with_detail("measured is max |B| / ((C/2π) F + err_estimate)"),
    );
    let (_, mass) = kernel_mass_bound(decay.epsilon)?;
    let sup = decay.c_bound / (2.0 * std::f64::consts::PI) * mass;
    records.push(CheckRecord::at_most(
        "boundedness",
        "sup |B| ≤ (C/2π) ∫ |dζ∧dζ̄| / (|ζ| (1 + |ζ|^{1+ε}))",
        max_of(solved.iter().map(|s| s.value.norm() - s.err_estimate)),
        sup,
    ));

    let profiles = rays
        .iter()
        .map(|ray| decay_profile(&form, &z_fixed, ray, &cfg.grid.radii, spec))
        .collect::<Result<Vec<_>, _>>()?;
    let last = max_of(profiles.iter().filter_map(|p| p.samples.last().map(|s| s.abs)));
    records.push(
        CheckRecord::flag(
            "solution decay",
            "B(z, w) → 0 as |w_δ| → ∞, below the envelope",
            profiles.iter().all(|p| p.tends_to_zero() && p.envelope_ok()),
        )
        .with_detail(format!("largest |B| at the outermost radius: {last:.3e}")),
    );
    Ok(records)
}

fn cmd_verify(inv: &Invocation) -> Result<Outcome, CliError> {
    let records = verify_records(inv)?;
    let report = VerificationReport::new(inv.meta(Command::Verify), records);
    let mut files = vec![];
    write_json(inv, "report.json", &report, &mut files)?;
    let failed: Vec<_> = report.failures().map(|r| r.check.clone()).collect();
    let summary = if failed.is_empty() {
        format!("verify: all {} checks passed", report.records.len())
    } else {
        format!("verify: {} of {} checks failed: {}", failed.len(), report.records.len(), failed.join(", "))
    };
    Ok(Outcome { pass: report.pass, files, summary })
}

struct BoundsRow {
    quantity: &'static str,
    epsilon: f64,
    off_term: f64,
    param: Option<f64>,
    numeric: f64,
    bound: f64,
}

fn cmd_bounds(inv: &Invocation) -> Result<Outcome, CliError> {
    let cfg = &inv.config;
    let b = &cfg.bounds;
    let mut rows = Vec::new();
    let mut profile_csv = String::from("epsilon,off_term,x,F,err_estimate\n");
    let profile_spec = cfg.quadrature.with_tol_abs(cfg.quadrature.tol_abs.max(1e-7));
    for &eps in &b.epsilons {
        let (bound, numeric) = kernel_mass_bound(eps)?;
        rows.push(BoundsRow { quantity: "kernel_mass", epsilon: eps, off_term: 0.0, param: None, numeric, bound });
        for &off in &b.off_terms {
            let (numeric, bound) = g_bound_check(off, eps)?;
            rows.push(BoundsRow {
                quantity: "line_integral",
                epsilon: eps,
                off_term: off,
                param: None,
                numeric,
                bound,
            });
            let unit = DecayBudget::new(eps, 1.0)?;
            for &r in &b.tail_radii {
                rows.push(BoundsRow {
                    quantity: "tail_bound",
                    epsilon: eps,
                    off_term: off,
                    param: Some(r),
                    numeric: tail_bound(&unit, off, 0.0, r)?,
                    bound: 2.0 * r.powf(-eps) / eps,
                });
            }
            let pts = f_profile(off, eps, &b.xs, &profile_spec)?;
            for p in &pts {
                let _ = writeln!(
                    profile_csv,
                    "{},{},{},{},{}",
                    num(eps),
                    num(off),
                    num(p.x),
                    num(p.value),
                    num(p.err_estimate)
                );
            }
            let worst_rise = pts
                .windows(2)
                .map(|w| w[1].value - w[0].value - 2.0 * w[0].err_estimate.max(w[1].err_estimate))
                .fold(f64::NEG_INFINITY, f64::max);
            rows.push(BoundsRow {
                quantity: "f_profile_nonincreasing",
                epsilon: eps,
                off_term: off,
                param: None,
                numeric: if pts.len() < 2 { 0.0 } else { worst_rise },
                bound: 0.0,
            });
            debug_assert_eq!(is_nonincreasing(&pts), pts.len() < 2 || worst_rise <= 0.0);
            if pts.len() >= 2 {
                let (first, last) = (pts[0], pts[pts.len() - 1]);
                rows.push(BoundsRow {
                    quantity: "f_profile_ratio",
                    epsilon: eps,
                    off_term: off,
                    param: Some(last.x),
                    numeric: last.value / first.value,
                    bound: 1.0,
                });
            }
        }
    }
    let mut csv = String::from("quantity,epsilon,off_term,param,numeric,bound,pass\n");
    let mut pass = true;
    for r in &rows {
        let ok = if r.quantity == "f_profile_ratio" { r.numeric < r.bound } else { r.numeric <= r.bound };
        pass &= ok;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.quantity,
            num(r.epsilon),
            num(r.off_term),
            r.param.map(num).unwrap_or_default(),
            num(r.numeric),
            num(r.bound),
            ok
        );
    }
    let mut files = vec![];
    write_csv(inv, "bounds.csv", &csv, &mut files)?;
    write_csv(inv, "f_profile.csv", &profile_csv, &mut files)?;
    Ok(Outcome {
        pass,
        files,
        summary: format!("bounds: {} rows, {}", rows.len(), if pass { "all pass" } else { "failures" }),
    })
}

fn cmd_profile(inv: &Invocation) -> Result<Outcome, CliError> {
    let cfg = &inv.config;
    let form = cfg.build_form()?;
    let z_fixed = cfg.z_fixed(form.n())?;
    let rays = cfg.rays(form.k())?;
    let mut header = vec!["ray".to_string(), "radius".to_string()];
    header.extend(coord_header("w", form.k()));
    header.extend(["re_B", "im_B", "abs_B", "err_estimate", "envelope"].map(String::from));
    let mut csv = header.join(",") + "\n";
    let mut pass = true;
    for (i, ray) in rays.iter().enumerate() {
        let prof = decay_profile(&form, &z_fixed, ray, &cfg.grid.radii, &cfg.quadrature)?;
        pass &= prof.tends_to_zero() && prof.envelope_ok();
        for s in &prof.samples {
            let mut row = vec![(i + 1).to_string(), num(s.radius)];
            row.extend(coord_cells(&s.w));
            row.extend([num(s.value.re), num(s.value.im), num(s.abs), num(s.err_estimate), num(s.envelope)]);
            csv += &(row.join(",") + "\n");
        }
    }
    let mut files = vec![];
    write_csv(inv, "decay_profile.csv", &csv, &mut files)?;
    Ok(Outcome { pass, files, summary: format!("profile: {} rays of `{}`", rays.len(), form.name()) })
}

#[derive(Serialize)]
struct BundleReportFile {
    #[serde(flatten)]
    report: VerificationReport,
    bundle: String,
    failing_samples: Vec<usize>,
}

fn cmd_bundle(inv: &Invocation) -> Result<Outcome, CliError> {
    let cfg = &inv.config;
    let bc =
        cfg.bundle.clone().ok_or_else(|| CliError::Config("the bundle command needs a [bundle] section".into()))?;
    let bundle = make_opm_bundle(bc.m);
    let mut params = cfg.form.params.clone();
    if cfg.form.name == "opm_metric_form" {
        params.entry("m".into()).or_insert(ParamValue::Int(bc.m.into()));
    }
    let form = cfg.build_named_form(&params)?;
    let other = if bc.perturb > 0.0 { perturbed(&form, bc.perturb)? } else { form.clone() };
    let forms = [form, other];
    for f in &forms {
        if (f.n(), f.k()) != (1, 1) {
            return Err(CliError::Config(format!(
                "bundle charts have (n, k) = (1, 1); form `{}` has ({}, {})",
                f.name(),
                f.n(),
                f.k()
            )));
        }
    }
    let checks = cfg.bundle_checks(&bc, inv.seed);
    let rep = global_solve_report(&bundle, &forms, &checks, &cfg.quadrature)?;

    let mut csv = String::from(
        "sample,from,to,re_z,im_z,re_w,im_w,re_z_image,im_z_image,re_w_image,im_w_image,re_B_from,im_B_from,re_B_to,im_B_to,gap,bound,pass\n",
    );
    for p in &rep.overlap.points {
        let mut row = vec![p.index.to_string(), p.from.to_string(), p.to.to_string()];
        row.extend(coord_cells(&p.point.z));
        row.extend(coord_cells(&p.point.w));
        row.extend(coord_cells(&p.image.z));
        row.extend(coord_cells(&p.image.w));
        row.extend([num(p.b_from.re), num(p.b_from.im), num(p.b_to.re), num(p.b_to.im), num(p.gap), num(p.bound)]);
        row.push(p.pass.to_string());
        csv += &(row.join(",") + "\n");
    }
    let failing_samples = rep.overlap.failing();
    let pass = rep.pass;
    let name = rep.bundle.clone();
    let file = BundleReportFile {
        report: rep.into_verification(inv.meta(Command::Bundle)),
        bundle: name.clone(),
        failing_samples: failing_samples.clone(),
    };
    let mut files = vec![];
    write_json(inv, "bundle_report.json", &file, &mut files)?;
    write_csv(inv, "overlap.csv", &csv, &mut files)?;
    let summary = if pass {
        format!("bundle {name}: all checks passed")
    } else {
        format!("bundle {name}: failed; offending overlap samples {failing_samples:?}")
    };
    Ok(Outcome { pass, files, summary })
}
