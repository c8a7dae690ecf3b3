//! Command-line front end: configuration-driven runs of the solver modules
//! with machine-readable reports.
//!
//! Exit codes: 0 all asserted properties pass; 1 a property failed;
//! 2 non-convergence; 3 invalid configuration.

use crate::analysis::{fit_boundary_exponent, fit_boundary_exponent_in, scaling_identity_check, Probe};
use crate::barriers::{calibrate, make_subsolution, make_supersolution, verify_inequality};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::{Chart, ConvexDomain, Point, SphericalField};
use crate::grid::{build_grid, Grid, ScalarField};
use crate::oracle::{radial_eigen, radial_solve, RadialOptions};
use crate::problem::ProblemParams;
use crate::report::RunReport;
use crate::solver::elliptic::{
    default_initial_guess, ensure_negative_energy, eps_continuation, eigen_solve, newton_solve,
    s_continuation, SolverOptions,
};
use crate::solver::flow::{flow_run, FlowNonlinearity, FlowOptions};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY_FAILURE: i32 = 1;
pub const EXIT_NON_CONVERGENCE: i32 = 2;
pub const EXIT_INVALID_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "coconvex", version, about = "Monge-Ampère laboratory for the L_p dual Minkowski problem on C-close sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the grid resolution N.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Output directory for report.json and CSV tables.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Override the random seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Damped-Newton solve of the Dirichlet problem.
    Solve(CommonArgs),
    /// Parabolic gradient flow to the steady state.
    Flow(CommonArgs),
    /// Eigenvalue fixed-point iteration for the critical case p = q.
    Eigen(CommonArgs),
    /// ε- or s-continuation.
    Continuation(CommonArgs),
    /// Solve + boundary Hölder-exponent fit.
    Holder(CommonArgs),
    /// Barrier calibration and node-wise certification.
    Barriers(CommonArgs),
    /// Radial shooting oracle.
    Oracle(CommonArgs),
    /// Built-in sanity suite: golden solve, chart round trip, scaling identity, oracle exactness.
    Selftest(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Flow(_) => "flow",
            Command::Eigen(_) => "eigen",
            Command::Continuation(_) => "continuation",
            Command::Holder(_) => "holder",
            Command::Barriers(_) => "barriers",
            Command::Oracle(_) => "oracle",
            Command::Selftest(_) => "selftest",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Solve(a)
            | Command::Flow(a)
            | Command::Eigen(a)
            | Command::Continuation(a)
            | Command::Holder(a)
            | Command::Barriers(a)
            | Command::Oracle(a)
            | Command::Selftest(a) => a,
        }
    }
}

/// Classify an error into the exit-code contract.
fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_)
        | Error::InvalidRegime(_)
        | Error::Grid(_)
        | Error::Domain(_)
        | Error::EmptyFitWindow(_)
        | Error::Io(_) => EXIT_INVALID_CONFIG,
        Error::NonConvergence(_)
        | Error::LineSearch(_)
        | Error::LinearSolve(_)
        | Error::FlowStall(_)
        | Error::Bracket(_) => EXIT_NON_CONVERGENCE,
        Error::Calibration(_) => EXIT_PROPERTY_FAILURE,
    }
}

/// Run the parsed command line; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let args = cli.command.args();
    let mut config = match &args.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_INVALID_CONFIG;
            }
        },
        None => RunConfig::default(),
    };
    if let Some(n) = args.grid {
        config.grid.n = n;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    match dispatch(&cli.command, &config, &args.out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: &Command, config: &RunConfig, out: &Path) -> Result<i32> {
    let mut report = RunReport::new(command.name(), config.seed, config)?;
    let code = match command {
        Command::Solve(_) => cmd_solve(config, out, &mut report)?,
        Command::Flow(_) => cmd_flow(config, out, &mut report)?,
        Command::Eigen(_) => cmd_eigen(config, out, &mut report)?,
        Command::Continuation(_) => cmd_continuation(config, out, &mut report)?,
        Command::Holder(_) => cmd_holder(config, out, &mut report)?,
        Command::Barriers(_) => cmd_barriers(config, out, &mut report)?,
        Command::Oracle(_) => cmd_oracle(config, out, &mut report)?,
        Command::Selftest(_) => cmd_selftest(config, &mut report)?,
    };
    report.write(out)?;
    if code != EXIT_OK {
        return Ok(code);
    }
    Ok(if report.all_pass() { EXIT_OK } else { EXIT_PROPERTY_FAILURE })
}

fn setup(config: &RunConfig) -> Result<(ProblemParams, Arc<Grid>, SolverOptions)> {
    let params = config.params()?;
    let grid = build_grid(config.domain.build()?, config.grid.n)?;
    let opts = config.tolerances.build()?;
    Ok((params, grid, opts))
}

fn write_text(out: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join(name), text)?;
    Ok(())
}

fn cmd_solve(config: &RunConfig, out: &Path, report: &mut RunReport) -> Result<i32> {
    let (params, grid, opts) = setup(config)?;
    let (u, solve) = newton_solve(&grid, &params, None, &opts)?;
    write_text(out, "field.csv", &u.dump_csv())?;
    report.add_section("solve", &solve)?;
    if !solve.converged {
        report.verdict("converged", false, format!("residual {} after {} iterations", solve.residual, solve.iterations));
        return Ok(EXIT_NON_CONVERGENCE);
    }
    report.verdict("converged", true, format!("residual {} in {} iterations", solve.residual, solve.iterations));
    report.verdict(
        "discrete_convexity",
        solve.convexity_violations == 0,
        format!("{} violating nodes", solve.convexity_violations),
    );
    Ok(EXIT_OK)
}

fn cmd_flow(config: &RunConfig, out: &Path, report: &mut RunReport) -> Result<i32> {
    let (params, grid, _) = setup(config)?;
    let flow_opts: FlowOptions = config.flow.build()?;
    let u0 = ensure_negative_energy(&default_initial_guess(&grid, &params), &params)?;
    let (state, flow) = flow_run(&grid, &params, &u0, FlowNonlinearity::Power, &flow_opts)?;
    state.dump_history_csv(&out.join("history.csv"))?;
    write_text(out, "field.csv", &state.u.dump_csv())?;
    report.add_section("flow", &flow)?;
    if !flow.steady {
        report.verdict("steady_state", false, format!("sup|u_t| = {} at t = {}", flow.final_sup_ut, flow.final_time));
        return Ok(EXIT_NON_CONVERGENCE);
    }
    report.verdict("steady_state", true, format!("sup|u_t| = {} at t = {}", flow.final_sup_ut, flow.final_time));
    report.verdict(
        "energy_descent",
        flow.max_energy_increase <= flow_opts.energy_slack,
        format!("max per-step energy increase {}", flow.max_energy_increase),
    );
    Ok(EXIT_OK)
}

fn cmd_eigen(config: &RunConfig, out: &Path, report: &mut RunReport) -> Result<i32> {
    let (params, grid, opts) = setup(config)?;
    let (lambda, u, eigen) = eigen_solve(&grid, &params, None, &opts)?;
    write_text(out, "field.csv", &u.dump_csv())?;
    report.add_section("eigen", &eigen)?;
    if !eigen.converged {
        report.verdict("eigen_converged", false, format!("λ history {:?}", eigen.lambda_history));
        return Ok(EXIT_NON_CONVERGENCE);
    }
    report.verdict("eigen_converged", true, format!("λ = {lambda} in {} outer iterations", eigen.outer_iterations));
    Ok(EXIT_OK)
}

fn cmd_continuation(config: &RunConfig, out: &Path, report: &mut RunReport) -> Result<i32> {
    let (params, grid, opts) = setup(config)?;
    match config.continuation.kind.as_str() {
        "eps" => {
            let steps = eps_continuation(&grid, &params, &config.continuation.eps_values, &opts)?;
            let mut csv = String::from("eps,sup_norm,iterations,residual\n");
            let mut rows = Vec::new();
            for (eps, u, r) in &steps {
                csv.push_str(&format!("{eps},{},{},{}\n", u.linf(), r.iterations, r.residual));
                rows.push(serde_json::json!({
                    "eps": eps,
                    "sup_norm": u.linf(),
                    "converged": r.converged,
                }));
            }
            write_text(out, "history.csv", &csv)?;
            if let Some((_, u, _)) = steps.last() {
                write_text(out, "field.csv", &u.dump_csv())?;
            }
            report.add_section("continuation", &rows)?;
            let all = steps.iter().all(|(_, _, r)| r.converged)
                && steps.len() == config.continuation.eps_values.len();
            if !all {
                report.verdict("continuation_converged", false, format!("solved {} of {} steps", steps.len(), config.continuation.eps_values.len()));
                return Ok(EXIT_NON_CONVERGENCE);
            }
            report.verdict("continuation_converged", true, format!("{} steps", steps.len()));
            let monotone = steps.windows(2).all(|w| w[1].1.linf() >= w[0].1.linf() - 1e-12);
            report.verdict("sup_norm_monotone", monotone, "‖u_ε‖∞ non-decreasing as ε decreases".into());
        }
        "s" => {
            let (cont, fields) = s_continuation(&grid, &params, &config.continuation.s_values, &opts)?;
            let mut csv = String::from("s,sup_norm,converged\n");
            for s in &cont.samples {
                csv.push_str(&format!("{},{},{}\n", s.s, s.sup_norm, s.converged));
            }
            write_text(out, "history.csv", &csv)?;
            if let Some(u) = fields.last() {
                write_text(out, "field.csv", &u.dump_csv())?;
            }
            report.add_section("continuation", &cont)?;
            let all = cont.samples.iter().all(|s| s.converged);
            if !all {
                report.verdict("continuation_converged", false, "a step failed".into());
                return Ok(EXIT_NON_CONVERGENCE);
            }
            report.verdict("continuation_converged", true, format!("{} steps", cont.samples.len()));
            report.verdict(
                "blowup_extrapolated",
                cont.s_critical.is_some(),
                format!("S = {:?}", cont.s_critical),
            );
        }
        other => {
            return Err(Error::InvalidConfig(format!("continuation kind '{other}' (eps | s)")));
        }
    }
    Ok(EXIT_OK)
}

fn cmd_holder(config: &RunConfig, out: &Path, report: &mut RunReport) -> Result<i32> {
    let (params, grid, opts) = setup(config)?;
    let (u, solve) = newton_solve(&grid, &params, None, &opts)?;
    report.add_section("solve", &solve)?;
    if !solve.converged {
        report.verdict("converged", false, format!("residual {}", solve.residual));
        return Ok(EXIT_NON_CONVERGENCE);
    }
    let probe = match config.holder.probe.as_str() {
        "all_nodes" => Probe::AllNodes,
        "ray" => Probe::Ray { z0: config.holder.z0, dir: config.holder.dir },
        other => return Err(Error::InvalidConfig(format!("holder probe '{other}' (all_nodes | ray)"))),
    };
    let fit = match config.holder.window {
        Some(window) => fit_boundary_exponent_in(&u, probe, window)?,
        None => fit_boundary_exponent(&u, probe)?,
    };
    write_text(out, "profile.csv", &fit.profile_csv())?;
    write_text(out, "field.csv", &u.dump_csv())?;
    report.add_section("exponent_fit", &fit)?;
    report.verdict("converged", true, format!("residual {}", solve.residual));
    if let Some([lo, hi]) = config.holder.band {
        report.verdict(
            "exponent_in_band",
            lo <= fit.slope && fit.slope <= hi && fit.r_squared >= config.holder.min_r_squared,
            format!("slope {} in [{lo}, {hi}], R² = {}", fit.slope, fit.r_squared),
        );
    }
    Ok(EXIT_OK)
}

fn cmd_barriers(config: &RunConfig, out: &Path, report: &mut RunReport) -> Result<i32> {
    let params = config.params()?;
    let opts_grid_n = config.grid.n;
    let (spec, domain) = match config.barriers.family.as_str() {
        "subsolution" => {
            let domain = config.domain.build()?;
            let z0 = config.barriers.z0.unwrap_or_else(|| default_support_point(&domain));
            let spec = make_subsolution(&params, domain.clone(), z0, config.barriers.normal)?;
            (spec, domain)
        }
        "supersolution" => {
            let (spec, domain) = make_supersolution(&params, config.barriers.a)?;
            (spec, domain)
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "barrier family '{other}' (subsolution | supersolution)"
            )))
        }
    };
    let grid = build_grid(domain, opts_grid_n)?;
    let calibrated = calibrate(&spec, &params, &grid)?;
    let cert = verify_inequality(&calibrated, &params, &grid);
    write_text(out, "certificate.csv", &cert.dump_csv(&grid))?;
    report.add_section("barrier", &calibrated)?;
    report.add_section(
        "certificate",
        &serde_json::json!({
            "pass": cert.pass,
            "worst_margin": cert.worst_margin,
            "worst_node": cert.worst_node,
            "nodes": cert.margins.len(),
        }),
    )?;
    report.verdict(
        "certified",
        cert.pass,
        format!("C = {}, worst margin {} at node {}", calibrated.c, cert.worst_margin, cert.worst_node),
    );
    Ok(EXIT_OK)
}

/// Lowest boundary point of the domain, the default v_a frame origin.
fn default_support_point(domain: &ConvexDomain) -> Point {
    match domain {
        ConvexDomain::Disk { radius } => [0.0, -radius],
        ConvexDomain::Superellipse { a2, .. } => [0.0, -a2],
        ConvexDomain::Cusp { .. } => [0.0, 0.0],
        ConvexDomain::Polygon { vertices } => vertices
            .iter()
            .copied()
            .min_by(|u, v| u[1].total_cmp(&v[1]))
            .unwrap_or([0.0, 0.0]),
    }
}

fn cmd_oracle(config: &RunConfig, out: &Path, report: &mut RunReport) -> Result<i32> {
    let params = config.params()?;
    let ConvexDomain::Disk { radius } = config.domain.build()? else {
        return Err(Error::InvalidConfig("the radial oracle needs a disk domain".into()));
    };
    let opts = RadialOptions::default();
    let g = |r: f64| params.g([r, 0.0]);
    if params.p == params.q {
        let (lambda, profile) = radial_eigen(params.n, params.p, g, radius, &opts)?;
        profile.dump_csv(&out.join("profile.csv"))?;
        report.add_section(
            "oracle",
            &serde_json::json!({"lambda": lambda, "m": profile.m, "radius": profile.radius}),
        )?;
        report.verdict("shooting_converged", true, format!("λ = {lambda}, depth {}", profile.m));
    } else {
        let profile = radial_solve(params.n, params.p, params.q, params.eps, g, radius, &opts)?;
        profile.dump_csv(&out.join("profile.csv"))?;
        report.add_section(
            "oracle",
            &serde_json::json!({"m": profile.m, "radius": profile.radius}),
        )?;
        let hit = profile.sample(radius).abs();
        report.verdict(
            "shooting_converged",
            hit <= opts.shoot_tol * 10.0,
            format!("|u(R)| = {hit}, depth {}", profile.m),
        );
    }
    Ok(EXIT_OK)
}

fn cmd_selftest(config: &RunConfig, report: &mut RunReport) -> Result<i32> {
    // 1. Golden paraboloid: n=3, p=1, q=3, g≡1 on the unit disk has the exact
    // solution (|x|²-1)/2.
    let params = ProblemParams::constant_density(3, 1.0, 3.0, 0.0, 1.0)?;
    let grid = build_grid(ConvexDomain::disk(1.0)?, 33)?;
    let exact = ScalarField::from_fn(grid.clone(), |x| 0.5 * (x[0] * x[0] + x[1] * x[1] - 1.0));
    let (u, solve) = newton_solve(&grid, &params, None, &SolverOptions::default())?;
    let err = u.linf_diff(&exact);
    report.verdict(
        "golden_paraboloid",
        solve.converged && err <= 5e-3,
        format!("L∞ error {err} at N=33, residual {}", solve.residual),
    );

    // 2. Chart transform round trip u -> h -> u.
    let coords: Vec<Point> = grid.coords.clone();
    let h = SphericalField::from_chart_values(Chart::canonical(3), coords, &exact.values);
    let back = h.to_chart_values();
    let round = back
        .iter()
        .zip(&exact.values)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    report.verdict("chart_round_trip", round <= 1e-12, format!("max deviation {round}"));

    // 3. RHS homogeneity identity on seeded samples.
    let scaling_params = ProblemParams::constant_density(3, 1.0, 4.0, 0.0, 1.0)?;
    let scaling = scaling_identity_check(&scaling_params, 10_000, config.seed)?;
    report.add_section("scaling", &scaling)?;
    report.verdict(
        "scaling_identity",
        scaling.max_rel_deviation <= 1e-12,
        format!("max relative deviation {}", scaling.max_rel_deviation),
    );

    // 4. Radial oracle exactness on the paraboloid instance.
    let profile = radial_solve(3, 1.0, 3.0, 0.0, |_| 1.0, 1.0, &RadialOptions::default())?;
    let mut worst: f64 = 0.0;
    for k in 0..=100 {
        let r = k as f64 / 100.0;
        worst = worst.max((profile.sample(r) - 0.5 * (r * r - 1.0)).abs());
    }
    report.verdict("oracle_paraboloid_exact", worst <= 1e-9, format!("max |u - (r²-1)/2| = {worst}"));
    Ok(EXIT_OK)
}
