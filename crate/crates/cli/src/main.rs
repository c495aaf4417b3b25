//! `henon`: command line front end for the radial shooting solver.
//!
//! Four subcommands cover the workflows: `solve-annulus` finds the two-point
//! solution on a bounded annulus, `solve-exterior` locates or classifies
//! decay regimes on an exterior domain, `phase-portrait` renders the planar
//! dynamical system, and `check-invariants` runs the qualitative property
//! suite. All artifacts are deterministic: identical settings and seed give
//! byte-identical files.

mod checks;
mod portrait;
mod report;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use henon_core::{
    classify_decay, explore_d, find_fast_decay_delta, fit_decay_exponent, geometry, integrate_ivp,
    monotonicity_audit, small_delta_bound, solve_annulus, solve_negative, stationary_points,
    time_map_bound, AnnulusRequest, OperatorVariant, ShootingInput, SolveError, SolveReport,
    SweepReport,
};

use checks::Status;
use report::{
    base_summary, bracket_csv, csv, fmt_f64, phase_csv, profile_csv, profile_phase,
    profile_section, rho_kind, solver_section, Artifacts, Summary,
};
use settings::{ConfigError, ExteriorMode, Settings};

#[derive(Parser)]
#[command(
    name = "henon",
    version,
    about = "Positive radial solutions of Henon-weighted extremal operator equations by shooting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the two-point boundary problem on an annulus.
    SolveAnnulus(AnnulusArgs),
    /// Locate or classify decay regimes on an exterior domain.
    SolveExterior(ExteriorArgs),
    /// Render the planar dynamical system to SVG with its data tables.
    PhasePortrait(PortraitArgs),
    /// Run the qualitative property suite at the configured budgets.
    CheckInvariants(CheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OperatorArg {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Fast,
    Delta,
    Sweep,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Config file (`key = value` lines under [section] headers); flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Extremal operator branch.
    #[arg(long, value_enum)]
    operator: Option<OperatorArg>,
    /// Smaller ellipticity constant.
    #[arg(long)]
    lambda: Option<f64>,
    /// Larger ellipticity constant.
    #[arg(long = "Lambda")]
    big_lambda: Option<f64>,
    /// Space dimension.
    #[arg(long = "N")]
    dim: Option<u32>,
    /// Nonlinearity exponent.
    #[arg(long)]
    p: Option<f64>,
    /// Radial weight exponent.
    #[arg(long)]
    a: Option<f64>,
    /// Relative tolerance of the adaptive integrator.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Absolute tolerance of the adaptive integrator.
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Seed for randomized sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: $HENON_OUT, then ./henon-out).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Inner annulus radius.
    #[arg(long)]
    inner: Option<f64>,
    /// Outer annulus radius.
    #[arg(long)]
    outer: Option<f64>,
    /// Exterior domain radius.
    #[arg(long = "R")]
    exterior_r: Option<f64>,
}

#[derive(Args, Debug)]
struct AnnulusArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Accepted |u(outer)| at the found slope.
    #[arg(long)]
    boundary_tol: Option<f64>,
    /// Solve the negative branch through the swapped operator.
    #[arg(long)]
    negative: bool,
}

#[derive(Args, Debug)]
struct ExteriorArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// fast: bisect the decay transition; delta: classify one slope; sweep: tabulate a slope grid.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Launch slope for --mode delta.
    #[arg(long)]
    delta: Option<f64>,
    /// Lower end of the sweep grid.
    #[arg(long)]
    delta_min: Option<f64>,
    /// Upper end of the sweep grid.
    #[arg(long)]
    delta_max: Option<f64>,
    /// Number of sweep grid points.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args, Debug)]
struct PortraitArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of sample orbits in the fan.
    #[arg(long)]
    fan: Option<usize>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Point budget for the flow-direction audits.
    #[arg(long)]
    budget: Option<usize>,
}

fn resolve(common: &CommonArgs) -> Result<Settings, ConfigError> {
    let mut s = Settings::default();
    if let Some(path) = &common.config {
        s.apply_config_file(path)?;
    }
    if let Some(op) = common.operator {
        s.operator = match op {
            OperatorArg::Plus => OperatorVariant::Plus,
            OperatorArg::Minus => OperatorVariant::Minus,
        };
    }
    if let Some(v) = common.lambda {
        s.lambda = v;
    }
    if let Some(v) = common.big_lambda {
        s.big_lambda = v;
    }
    if let Some(v) = common.dim {
        s.dim = v;
    }
    if let Some(v) = common.p {
        s.p = v;
    }
    if let Some(v) = common.a {
        s.a = v;
    }
    if let Some(v) = common.rel_tol {
        s.rel_tol = v;
    }
    if let Some(v) = common.abs_tol {
        s.abs_tol = v;
    }
    if let Some(v) = common.seed {
        s.seed = v;
    }
    if let Some(v) = &common.out {
        s.out = Some(v.clone());
    }
    if let Some(v) = common.inner {
        s.inner = Some(v);
    }
    if let Some(v) = common.outer {
        s.outer = Some(v);
    }
    if let Some(v) = common.exterior_r {
        s.exterior_r = Some(v);
    }
    Ok(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::SolveAnnulus(args) => cmd_solve_annulus(args),
        Command::SolveExterior(args) => cmd_solve_exterior(args),
        Command::PhasePortrait(args) => cmd_phase_portrait(args),
        Command::CheckInvariants(args) => cmd_check_invariants(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            if let Some(cfg) = err.downcast_ref::<ConfigError>() {
                eprintln!("error: {cfg}");
                ExitCode::from(2)
            } else {
                eprintln!("error: {err:#}");
                ExitCode::from(1)
            }
        }
    }
}

fn audit_section(summary: &mut Summary, report: &SolveReport) {
    let profile = &report.profile;
    let audit = monotonicity_audit(profile);
    summary.section("audit");
    summary.push("energy_checks", audit.checks.to_string());
    summary.push_f64("energy_worst_small", audit.worst_small);
    summary.push_f64("energy_worst_small_r", audit.worst_small_r);
    summary.push_f64("energy_worst_big", audit.worst_big);
    summary.push_f64("energy_worst_big_r", audit.worst_big_r);
    summary.push_f64("energy_rel_tol", checks::ENERGY_REL_TOL);
    summary.push(
        "energy_pass",
        audit.passed(checks::ENERGY_REL_TOL).to_string(),
    );
    let sd = small_delta_bound(profile);
    summary.push("small_delta_holds", sd.holds.to_string());
    summary.push_f64("small_delta_worst_ratio", sd.worst_ratio);
    summary.push_f64("small_delta_at_r", sd.at_r);
    match time_map_bound(profile) {
        Ok(tm) => {
            summary.push("time_map_holds", tm.holds.to_string());
            summary.push_f64("time_map_worst_ratio", tm.worst_ratio);
            summary.push_f64("time_map_at_r", tm.at_r);
        }
        Err(e) => {
            summary.push("time_map_holds", format!("skipped: {e}"));
        }
    }
}

fn diagnostics_section(summary: &mut Summary, report: &SolveReport) {
    summary.section("diagnostics");
    summary.push("bracket_probes", report.bracket_history.len().to_string());
    for (i, line) in report.diagnostics.iter().enumerate() {
        summary.push(&format!("d{i}"), line.clone());
    }
}

/// Stdout writer that tolerates a closed pipe (`henon ... | head`).
fn emit(line: &str) {
    use std::io::Write as _;
    let mut out = std::io::stdout();
    let _ = out.write_all(line.as_bytes());
    let _ = out.write_all(b"\n");
}

fn finish(artifacts: &Artifacts, headline: &str) {
    emit(headline);
    emit(&format!(
        "wrote {} to {}",
        artifacts.written.join(" "),
        artifacts.dir().display()
    ));
}

fn cmd_solve_annulus(args: AnnulusArgs) -> anyhow::Result<ExitCode> {
    let mut s = resolve(&args.common)?;
    if let Some(v) = args.boundary_tol {
        s.boundary_tol = v;
    }
    s.negative = s.negative || args.negative;
    let (inner, outer) = s.require_annulus()?;
    let params = s.params()?;
    let config = s.solver_config();
    let request = AnnulusRequest::new(params, inner, outer)?.with_boundary_tol(s.boundary_tol);
    let report = if s.negative {
        solve_negative(&request, &config)?
    } else {
        solve_annulus(&request, &config)?
    };

    let mut summary = base_summary("solve-annulus", &s, &params);
    summary.section("geometry");
    summary.push_f64("inner", inner);
    summary.push_f64("outer", outer);
    summary.push("negative", s.negative.to_string());
    solver_section(&mut summary, &config, s.boundary_tol);
    summary.section("result");
    summary.push_f64("found_delta", report.found_delta);
    summary.push_f64("boundary_residual", report.boundary_residual);
    summary.push("decay", report.decay.as_str());
    profile_section(&mut summary, &report.profile);
    audit_section(&mut summary, &report);
    diagnostics_section(&mut summary, &report);

    let mut artifacts = Artifacts::create(&s.out_dir())?;
    artifacts.write("summary.txt", &summary.render())?;
    artifacts.write("profile.csv", &profile_csv(&report.profile))?;
    artifacts.write("phase.csv", &phase_csv(&profile_phase(&report.profile)?))?;
    artifacts.write("bracket.csv", &bracket_csv(&report.bracket_history))?;
    finish(
        &artifacts,
        &format!(
            "found_delta={} boundary_residual={}",
            fmt_f64(report.found_delta),
            fmt_f64(report.boundary_residual)
        ),
    );
    Ok(ExitCode::SUCCESS)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

fn sweep_csv(sweep: &SweepReport) -> String {
    let rows = sweep.entries.iter().map(|e| {
        format!(
            "{},{},{},{},{}",
            fmt_f64(e.delta),
            fmt_f64(e.rho.radius()),
            rho_kind(e.rho),
            e.class.as_str(),
            e.failed
        )
    });
    csv("delta,rho,rho_kind,class,failed", rows)
}

fn sweep_section(summary: &mut Summary, sweep: &SweepReport, grid: &[f64]) {
    summary.push("points", grid.len().to_string());
    summary.push_f64("grid_min", grid[0]);
    summary.push_f64("grid_max", grid[grid.len() - 1]);
    summary.push(
        "failures",
        sweep
            .entries
            .iter()
            .filter(|e| e.failed)
            .count()
            .to_string(),
    );
    summary.push(
        "annular_components",
        sweep.annular_components.len().to_string(),
    );
    for (i, (lo, hi)) in sweep.annular_components.iter().enumerate() {
        summary.push(
            &format!("component_{i}"),
            format!(
                "indices {lo}..{hi}, delta {}..{}",
                fmt_f64(grid[*lo]),
                fmt_f64(grid[*hi])
            ),
        );
    }
    match sweep.delta_star {
        Some(ds) => summary.push_f64("delta_star", ds),
        None => summary.push("delta_star", "none"),
    };
}

fn cmd_solve_exterior(args: ExteriorArgs) -> anyhow::Result<ExitCode> {
    let mut s = resolve(&args.common)?;
    if let Some(mode) = args.mode {
        s.mode = match mode {
            ModeArg::Fast => ExteriorMode::Fast,
            ModeArg::Delta => ExteriorMode::Delta,
            ModeArg::Sweep => ExteriorMode::Sweep,
        };
    }
    if let Some(v) = args.delta {
        s.delta = Some(v);
    }
    if let Some(v) = args.delta_min {
        s.delta_min = v;
    }
    if let Some(v) = args.delta_max {
        s.delta_max = v;
    }
    if let Some(v) = args.grid {
        s.grid = v;
    }
    let big_r = s.require_exterior()?;
    let params = s.params()?;
    let config = s.solver_config();
    if !(s.delta_min > 0.0 && s.delta_max > s.delta_min && s.grid >= 2) {
        return Err(ConfigError::Invalid(format!(
            "sweep grid requires 0 < delta_min < delta_max and grid >= 2, got delta_min={}, delta_max={}, grid={}",
            fmt_f64(s.delta_min),
            fmt_f64(s.delta_max),
            s.grid
        ))
        .into());
    }

    let mut summary = base_summary("solve-exterior", &s, &params);
    summary.section("geometry");
    summary.push_f64("R", big_r);
    summary.push("mode", s.mode.as_str());
    solver_section(&mut summary, &config, s.boundary_tol);
    let mut artifacts = Artifacts::create(&s.out_dir())?;

    match s.mode {
        ExteriorMode::Fast => match find_fast_decay_delta(&params, big_r, &config) {
            Ok(report) => {
                let fit_lo = 100.0 * big_r;
                let fit_hi = 1e4 * big_r;
                let fit = fit_decay_exponent(&report.profile, fit_lo, fit_hi);
                summary.section("result");
                summary.push_f64("delta_star", report.found_delta);
                summary.push_f64("closest_approach_a0", report.boundary_residual);
                summary.push("decay", report.decay.as_str());
                summary.push_f64("fit_exponent", fit.unwrap_or(f64::NAN));
                summary.push_f64("fit_window_lo", fit_lo);
                summary.push_f64("fit_window_hi", fit_hi);
                summary.push_f64("fast_rate_reference", -(params.n_effective() - 2.0));
                profile_section(&mut summary, &report.profile);
                diagnostics_section(&mut summary, &report);
                artifacts.write("summary.txt", &summary.render())?;
                artifacts.write("profile.csv", &profile_csv(&report.profile))?;
                artifacts.write("phase.csv", &phase_csv(&profile_phase(&report.profile)?))?;
                artifacts.write("bracket.csv", &bracket_csv(&report.bracket_history))?;
                finish(
                    &artifacts,
                    &format!(
                        "delta_star={} decay={} fit_exponent={}",
                        fmt_f64(report.found_delta),
                        report.decay.as_str(),
                        fmt_f64(fit.unwrap_or(f64::NAN))
                    ),
                );
                Ok(ExitCode::SUCCESS)
            }
            Err(SolveError::NoTransitionFound { lo, hi }) => {
                // Surface the failure together with a sweep table so the
                // slope range can be diagnosed.
                let grid = log_grid(s.delta_min, s.delta_max, s.grid);
                let sweep = explore_d(&params, big_r, &grid, &config);
                summary.section("result");
                summary.push(
                    "error",
                    format!(
                        "no decay transition found in delta bracket [{}, {}]",
                        fmt_f64(lo),
                        fmt_f64(hi)
                    ),
                );
                sweep_section(&mut summary, &sweep, &grid);
                artifacts.write("summary.txt", &summary.render())?;
                artifacts.write("sweep.csv", &sweep_csv(&sweep))?;
                finish(&artifacts, "no decay transition found; see sweep.csv");
                eprintln!(
                    "error: no decay transition found in delta bracket [{}, {}]",
                    fmt_f64(lo),
                    fmt_f64(hi)
                );
                Ok(ExitCode::FAILURE)
            }
            Err(e) => Err(e.into()),
        },
        ExteriorMode::Delta => {
            let Some(delta) = s.delta else {
                return Err(
                    ConfigError::Invalid("--mode delta requires --delta <slope>".into()).into(),
                );
            };
            if !(delta > 0.0) {
                return Err(ConfigError::Invalid(format!(
                    "launch slope must be positive, got delta={}",
                    fmt_f64(delta)
                ))
                .into());
            }
            let class = classify_decay(&params, big_r, delta, &config)?;
            let input = ShootingInput {
                params,
                inner_radius: big_r,
                delta,
            };
            let icfg = config.ivp_config(big_r, config.rho_r_max_factor * big_r);
            let profile = integrate_ivp(&input, &icfg)?;
            summary.section("result");
            summary.push_f64("delta", delta);
            summary.push("classification", class.as_str());
            profile_section(&mut summary, &profile);
            artifacts.write("summary.txt", &summary.render())?;
            artifacts.write("profile.csv", &profile_csv(&profile))?;
            artifacts.write("phase.csv", &phase_csv(&profile_phase(&profile)?))?;
            finish(&artifacts, &format!("classification={}", class.as_str()));
            Ok(ExitCode::SUCCESS)
        }
        ExteriorMode::Sweep => {
            let grid = log_grid(s.delta_min, s.delta_max, s.grid);
            let sweep = explore_d(&params, big_r, &grid, &config);
            summary.section("result");
            sweep_section(&mut summary, &sweep, &grid);
            artifacts.write("summary.txt", &summary.render())?;
            artifacts.write("sweep.csv", &sweep_csv(&sweep))?;
            finish(
                &artifacts,
                &format!(
                    "points={} annular_components={} delta_star={}",
                    grid.len(),
                    sweep.annular_components.len(),
                    sweep.delta_star.map_or("none".into(), fmt_f64)
                ),
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

const STATIONARY_HEADER: &str = "name,x,z,classification,eig1_re,eig1_im,eig2_re,eig2_im,dir1,dir2";

fn stationary_csv(params: &henon_core::ProblemParams) -> String {
    let rows = stationary_points(params).into_iter().map(|sp| {
        let (e1, e2) = sp.eigenvalues;
        let dir = |i: usize| sp.directions.get(i).copied().unwrap_or(f64::NAN);
        format!(
            "{:?},{},{},{:?},{},{},{},{},{},{}",
            sp.name,
            fmt_f64(sp.location.0),
            fmt_f64(sp.location.1),
            sp.classification,
            fmt_f64(e1.re),
            fmt_f64(e1.im),
            fmt_f64(e2.re),
            fmt_f64(e2.im),
            fmt_f64(dir(0)),
            fmt_f64(dir(1))
        )
    });
    csv(STATIONARY_HEADER, rows)
}

fn cmd_phase_portrait(args: PortraitArgs) -> anyhow::Result<ExitCode> {
    let mut s = resolve(&args.common)?;
    if let Some(v) = args.fan {
        s.fan = v;
    }
    let params = s.params()?;
    let geo = geometry(&params);
    let (bx, bz) = henon_core::phase::apriori_box(&params);
    let rendered = portrait::render(&params, s.fan);

    let mut summary = base_summary("phase-portrait", &s, &params);
    summary.section("loci");
    summary.push_f64("ell_slope", geo.ell_slope);
    summary.push_f64("pi1_linear", geo.pi1_linear);
    summary.push_f64("pi1_quadratic", geo.pi1_quadratic);
    summary.push_f64("pi2_x", geo.pi2_x);
    summary.push_f64("p_point_x", geo.p_point.0);
    summary.push_f64("p_point_z", geo.p_point.1);
    summary.push_f64("box_x", bx);
    summary.push_f64("box_z", bz);
    let ps = params.exponents.p_serrin;
    let pp = params.exponents.p_pseudo;
    let regime = if (params.p - ps).abs() < 1e-9 {
        "serrin-critical"
    } else if params.p < ps {
        "below-serrin"
    } else if (params.p - pp).abs() < 1e-9 {
        "pseudo-critical"
    } else if params.p < pp {
        "between-serrin-and-pseudo"
    } else {
        "above-pseudo"
    };
    summary.push("regime", regime);
    summary.section("portrait");
    summary.push("fan", s.fan.to_string());
    for (k, v) in &rendered.notes {
        summary.push(k, v.clone());
    }

    let mut artifacts = Artifacts::create(&s.out_dir())?;
    artifacts.write("summary.txt", &summary.render())?;
    artifacts.write("stationary_points.csv", &stationary_csv(&params))?;
    artifacts.write("portrait.svg", &rendered.svg)?;
    finish(&artifacts, &format!("regime={regime}"));
    Ok(ExitCode::SUCCESS)
}

fn cmd_check_invariants(args: CheckArgs) -> anyhow::Result<ExitCode> {
    let mut s = resolve(&args.common)?;
    if let Some(v) = args.budget {
        s.budget = v;
    }
    let params = s.params()?;
    let records = checks::run_all(&s, &params)?;
    let all_pass = records.iter().all(|r| r.status != Status::Fail);

    let mut report_text = String::new();
    for r in &records {
        report_text.push_str(&r.line());
        report_text.push('\n');
    }
    report_text.push_str(&format!(
        "result={}\n",
        if all_pass { "PASS" } else { "FAIL" }
    ));

    let mut summary = base_summary("check-invariants", &s, &params);
    solver_section(&mut summary, &s.solver_config(), s.boundary_tol);
    summary.section("checks");
    summary.push("budget", s.budget.to_string());
    for r in &records {
        summary.push(r.name, format!("{:?}", r.status).to_uppercase());
    }
    summary.push("all_pass", all_pass.to_string());

    let mut artifacts = Artifacts::create(&s.out_dir())?;
    artifacts.write("summary.txt", &summary.render())?;
    artifacts.write("report.txt", &report_text)?;
    emit(report_text.trim_end());
    emit(&format!(
        "wrote {} to {}",
        artifacts.written.join(" "),
        artifacts.dir().display()
    ));
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
