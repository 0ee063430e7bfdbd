//! Command-line front end: configuration loading, the solver subcommands,
//! and output management.
//!
//! Exit codes: 0 success, 1 usage/configuration error, 2 solver error,
//! 3 failed verification check.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use shiftfront::bvp::{derivative_at_right, solve_logistic_bvp, BvpSpec, Coefficient};
use shiftfront::classify::{
    asymptotic_report, classify_run, find_sigma_star_auto, phase_sweep, ClassifySpec, Regime,
    SweepAxis, SweepTemplate, Verdict,
};
use shiftfront::config::RunConfig;
use shiftfront::forced::{ForcedOptions, ForcedWaveSolver};
use shiftfront::output::{fmt_sig, render_trajectory_csv, write_csv, write_jsonl};
use shiftfront::semiwave::{critical_speed, solve_semiwave};
use shiftfront::stefan::{SimulationSpec, StefanSolver, TimeStepRule, Trajectory};
use shiftfront::verify::{convergence_study, oracle_bvp, oracle_simulate, OracleSimSpec};
use shiftfront::{Error, Result};

#[derive(Parser)]
#[command(
    name = "shiftfront",
    about = "Free boundary logistic spreading under a shifting climate",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Directory for output files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Assert that no randomness is involved anywhere (it is not; the
    /// flag exists so scripts can state the expectation).
    #[arg(long, global = true)]
    seedless: bool,

    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the critical speed c0 and write the q_c0 profile.
    CriticalSpeed {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve the semi-wave q_c at a given speed.
    Semiwave {
        #[arg(long)]
        config: PathBuf,
        /// Wave speed; must lie in (0, 2 sqrt(a d)).
        #[arg(long)]
        speed: f64,
    },
    /// Solve the forced semi-wave v_L at a given shift.
    ForcedSemiwave {
        #[arg(long)]
        config: PathBuf,
        /// Shift L of the zero boundary.
        #[arg(long, allow_hyphen_values = true, name = "L")]
        shift: f64,
    },
    /// Find the critical shift L0 and write the v_L0 profile.
    L0 {
        #[arg(long)]
        config: PathBuf,
    },
    /// Time-step the free boundary problem and write the trajectory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Classify one run as spreading / vanishing / undetermined.
    Classify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Bisect the sharp initial-amplitude threshold.
    Threshold {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        sigma_lo: f64,
        #[arg(long, default_value_t = 4.0)]
        sigma_hi: f64,
        /// Relative bracket width target.
        #[arg(long, default_value_t = 0.01)]
        rel_tol: f64,
        /// Amplitude cap; exceeding it reports a possibly infinite
        /// threshold.
        #[arg(long, default_value_t = 1e4)]
        sigma_cap: f64,
    },
    /// Classify a grid of runs over (c, sigma) or (c, h0).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated shift speeds.
        #[arg(long)]
        speeds: String,
        /// Comma-separated amplitudes (mutually exclusive with --h0s).
        #[arg(long)]
        sigmas: Option<String>,
        /// Comma-separated initial range lengths.
        #[arg(long)]
        h0s: Option<String>,
    },
    /// Run the oracle cross-check suite and write a pass/fail manifest.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's help/version paths are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.seedless {
        println!("seedless: no randomness is used anywhere; outputs are deterministic");
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = RunConfig::parse(&text)?;
    let report = cfg.validate()?;
    if !report.pass() {
        return Err(Error::Validation(report));
    }
    Ok(cfg)
}

fn profile_comments<'a>(cfg: &'a RunConfig, extra: Vec<(&'a str, String)>) -> Vec<(&'a str, String)> {
    let mut comments = vec![
        ("config_hash", cfg.hash.clone()),
        ("mode", cfg.mode.to_string()),
    ];
    comments.extend(extra);
    comments
}

fn write_profile(
    cfg: &RunConfig,
    out_dir: &Path,
    name: &str,
    extra: Vec<(&str, String)>,
    grid: &[f64],
    values: &[f64],
) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    let mut file = fs::File::create(&path)?;
    write_csv(
        &mut file,
        &profile_comments(cfg, extra),
        &["x", "v"],
        grid.iter().zip(values).map(|(x, v)| vec![*x, *v]),
    )?;
    Ok(path)
}

fn trajectory_csv(cfg: &RunConfig, trajectory: &Trajectory) -> Result<Vec<u8>> {
    let comments = profile_comments(
        cfg,
        vec![(
            "c0",
            trajectory
                .c0
                .map(fmt_sig)
                .unwrap_or_else(|| "unknown".to_string()),
        )],
    );
    Ok(render_trajectory_csv(trajectory, &comments)?)
}

fn parse_list(raw: &str, what: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid {what} entry '{tok}'")))
        })
        .collect()
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::CriticalSpeed { config } => {
            let cfg = load_config(config)?;
            let params = cfg.params();
            let cs = critical_speed(&params, &cfg.mu(), cfg.c0_tol)?;
            let wave = solve_semiwave(cs.c0, &params, cfg.bvp_tol)?;
            let path = write_profile(
                &cfg,
                &cli.out_dir,
                "semiwave_c0.csv",
                vec![
                    ("c0", fmt_sig(cs.c0)),
                    ("residual", fmt_sig(cs.residual)),
                    ("truncation_radius", fmt_sig(cs.x_radius)),
                ],
                &wave.grid,
                &wave.values,
            )?;
            println!("c0 = {}", fmt_sig(cs.c0));
            println!("residual = {}", fmt_sig(cs.residual));
            println!("truncation_radius = {}", fmt_sig(cs.x_radius));
            println!("profile = {}", path.display());
            Ok(0)
        }
        Command::Semiwave { config, speed } => {
            let cfg = load_config(config)?;
            let wave = solve_semiwave(*speed, &cfg.params(), cfg.bvp_tol)?;
            let path = write_profile(
                &cfg,
                &cli.out_dir,
                "semiwave.csv",
                vec![
                    ("speed", fmt_sig(*speed)),
                    ("slope0", fmt_sig(wave.slope0)),
                    ("residual", fmt_sig(wave.residual)),
                ],
                &wave.grid,
                &wave.values,
            )?;
            println!("slope0 = {}", fmt_sig(wave.slope0));
            println!("profile = {}", path.display());
            Ok(0)
        }
        Command::ForcedSemiwave { config, shift } => {
            let cfg = load_config(config)?;
            let solver =
                ForcedWaveSolver::with_options(&cfg.params(), &cfg.climate(), &cfg.mu(), cfg.c, forced_options(&cfg))?;
            let wave = solver.solve(*shift)?;
            let path = write_profile(
                &cfg,
                &cli.out_dir,
                "forced_semiwave.csv",
                vec![
                    ("shift", fmt_sig(*shift)),
                    ("slope_end", fmt_sig(wave.slope_end)),
                    ("residual", fmt_sig(wave.profile.residual)),
                    ("spec_hash", wave.profile.spec_hash.clone()),
                ],
                &wave.profile.grid,
                &wave.profile.values,
            )?;
            println!("slope_end = {}", fmt_sig(wave.slope_end));
            println!("profile = {}", path.display());
            Ok(0)
        }
        Command::L0 { config } => {
            let cfg = load_config(config)?;
            let solver =
                ForcedWaveSolver::with_options(&cfg.params(), &cfg.climate(), &cfg.mu(), cfg.c, forced_options(&cfg))?;
            let shift = solver.find_l0(cfg.l0_tol)?;
            let wave = solver.solve(shift.l0)?;
            let path = write_profile(
                &cfg,
                &cli.out_dir,
                "forced_semiwave_l0.csv",
                vec![
                    ("l0", fmt_sig(shift.l0)),
                    ("residual", fmt_sig(shift.residual)),
                    ("c0", fmt_sig(solver.critical_speed().c0)),
                ],
                &wave.profile.grid,
                &wave.profile.values,
            )?;
            println!("l0 = {}", fmt_sig(shift.l0));
            println!("residual = {}", fmt_sig(shift.residual));
            println!("c0 = {}", fmt_sig(solver.critical_speed().c0));
            println!("profile = {}", path.display());
            Ok(0)
        }
        Command::Simulate { config } => {
            let cfg = load_config(config)?;
            let solver = cfg.stefan_solver()?;
            let c0 = critical_speed(&cfg.params(), &cfg.mu(), cfg.c0_tol)
                .ok()
                .map(|cs| cs.c0);
            let spec = cfg.simulation_spec(c0)?;
            let out = solver.simulate(&spec)?;
            fs::create_dir_all(&cli.out_dir)?;
            let traj_path = cli.out_dir.join("trajectory.csv");
            fs::write(&traj_path, trajectory_csv(&cfg, &out.trajectory)?)?;
            for (k, snap) in out.snapshots.iter().enumerate() {
                let mut file = fs::File::create(cli.out_dir.join(format!("snapshot_{k:04}.csv")))?;
                write_csv(
                    &mut file,
                    &profile_comments(
                        &cfg,
                        vec![("t", fmt_sig(snap.t)), ("h", fmt_sig(snap.h))],
                    ),
                    &["x", "u"],
                    snap.x.iter().zip(&snap.u).map(|(x, u)| vec![*x, *u]),
                )?;
            }
            let last = out.trajectory.final_sample();
            println!("t_final = {}", fmt_sig(last.t));
            println!("h_final = {}", fmt_sig(last.h));
            println!("h_minus_ct = {}", fmt_sig(last.h - cfg.c * last.t));
            println!("sup_u = {}", fmt_sig(last.sup_u));
            println!("steps = {}", out.trajectory.invariants.steps);
            println!("trajectory = {}", traj_path.display());
            Ok(0)
        }
        Command::Classify { config } => {
            let cfg = load_config(config)?;
            let solver = cfg.stefan_solver()?;
            let mut spec = ClassifySpec::with_defaults(&solver, cfg.t_max);
            spec.step = cfg.step_rule();
            spec.scheme = cfg.scheme;
            spec.record_dt = cfg.record_dt.or(cfg.t_max / 2000.0);
            let run = classify_run(&solver, &cfg.initial_data()?, &spec)?;

            #[derive(serde::Serialize)]
            struct Record<'a> {
                config_hash: &'a str,
                verdict: Verdict,
                certificate: &'a shiftfront::classify::Certificate,
                diagnostics: &'a shiftfront::classify::Diagnostics,
            }
            let record = Record {
                config_hash: &cfg.hash,
                verdict: run.classification.verdict,
                certificate: &run.classification.certificate,
                diagnostics: &run.classification.diagnostics,
            };
            fs::create_dir_all(&cli.out_dir)?;
            let mut file = fs::File::create(cli.out_dir.join("classification.jsonl"))?;
            write_jsonl(&mut file, &record)?;
            println!("verdict = {}", run.classification.verdict);
            println!(
                "certificate = {}",
                serde_json::to_string(&run.classification.certificate)
                    .unwrap_or_else(|_| "unserializable".into())
            );

            // front-law summary for spreading runs when c0 is available
            if run.classification.verdict == Verdict::Spreading {
                if let Ok(cs) = critical_speed(&cfg.params(), &cfg.mu(), cfg.c0_tol) {
                    let mut trajectory = run.trajectory.clone();
                    trajectory.c0 = Some(cs.c0);
                    if let Ok(report) = asymptotic_report(
                        &trajectory,
                        Verdict::Spreading,
                        Regime::of(cfg.c, cs.c0),
                        0.1,
                    ) {
                        println!("gap_estimate = {}", fmt_sig(report.gap_estimate));
                        println!("tail_oscillation = {}", fmt_sig(report.tail_oscillation));
                    }
                }
            }
            Ok(0)
        }
        Command::Threshold {
            config,
            sigma_lo,
            sigma_hi,
            rel_tol,
            sigma_cap,
        } => {
            let cfg = load_config(config)?;
            let solver = cfg.stefan_solver()?;
            let mut spec = ClassifySpec::with_defaults(&solver, cfg.t_max);
            spec.step = cfg.step_rule();
            spec.scheme = cfg.scheme;
            let result = find_sigma_star_auto(
                &solver,
                cfg.shape,
                &spec,
                (*sigma_lo, *sigma_hi),
                *rel_tol,
                *sigma_cap,
            )?;
            #[derive(serde::Serialize)]
            struct Record<'a> {
                config_hash: &'a str,
                #[serde(flatten)]
                result: &'a shiftfront::classify::ThresholdResult,
            }
            fs::create_dir_all(&cli.out_dir)?;
            let mut file = fs::File::create(cli.out_dir.join("threshold.jsonl"))?;
            write_jsonl(
                &mut file,
                &Record {
                    config_hash: &cfg.hash,
                    result: &result,
                },
            )?;
            println!("sigma_lo = {}", fmt_sig(result.sigma_lo));
            println!("sigma_hi = {}", fmt_sig(result.sigma_hi));
            println!(
                "status = {}",
                serde_json::to_string(&result.status).unwrap_or_else(|_| "unknown".into())
            );
            Ok(0)
        }
        Command::Sweep {
            config,
            speeds,
            sigmas,
            h0s,
        } => {
            let cfg = load_config(config)?;
            let speeds = parse_list(speeds, "speed")?;
            let axis = match (sigmas, h0s) {
                (Some(s), None) => SweepAxis::Sigma(parse_list(s, "sigma")?),
                (None, Some(h)) => SweepAxis::RangeLength(parse_list(h, "h0")?),
                _ => {
                    return Err(Error::Config(
                        "sweep needs exactly one of --sigmas or --h0s".into(),
                    ))
                }
            };
            let template = SweepTemplate {
                params: cfg.params(),
                climate_kind: cfg.climate,
                mu0: cfg.mu0,
                mu_slope: cfg.mu_slope,
                family: cfg.shape,
                sigma: cfg.sigma,
                grid_n: cfg.grid_n,
                t_max: cfg.t_max,
            };
            let cells = phase_sweep(&template, &speeds, &axis, cli.threads.max(1))?;
            fs::create_dir_all(&cli.out_dir)?;
            let mut jsonl = fs::File::create(cli.out_dir.join("sweep.jsonl"))?;
            let mut csv = String::from("row,col,c,sigma,h0,verdict\n");
            for cell in &cells {
                write_jsonl(&mut jsonl, cell)?;
                let verdict = cell
                    .verdict
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "error".into());
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    cell.row,
                    cell.col,
                    fmt_sig(cell.c),
                    fmt_sig(cell.sigma),
                    fmt_sig(cell.h0),
                    verdict
                ));
            }
            fs::write(cli.out_dir.join("sweep.csv"), csv)?;
            let errors = cells.iter().filter(|c| c.error.is_some()).count();
            println!("cells = {}", cells.len());
            println!("errors = {errors}");
            Ok(0)
        }
        Command::Verify { config } => {
            let cfg = load_config(config)?;
            let checks = verification_suite(&cfg)?;
            fs::create_dir_all(&cli.out_dir)?;
            let mut manifest = fs::File::create(cli.out_dir.join("verify.jsonl"))?;
            let mut all_pass = true;
            for check in &checks {
                write_jsonl(&mut manifest, check)?;
                println!(
                    "{}: {} ({})",
                    check.check,
                    if check.pass { "pass" } else { "FAIL" },
                    check.detail
                );
                all_pass &= check.pass;
            }
            Ok(if all_pass { 0 } else { 3 })
        }
    }
}

fn forced_options(cfg: &RunConfig) -> ForcedOptions {
    ForcedOptions {
        points_per_scale: cfg.points_per_scale,
        residual_tol: cfg.bvp_tol,
        trunc_tol: cfg.trunc_tol,
    }
}

#[derive(serde::Serialize)]
struct CheckRecord {
    check: String,
    config_hash: String,
    pass: bool,
    detail: String,
}

/// The oracle cross-check suite behind `verify`: solver agreement,
/// convergence orders, positivity/bound/monotonicity invariants, and
/// byte-identical reruns, all tied to the config hash.
fn verification_suite(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let params = cfg.params();
    let climate = cfg.climate();
    let mu = cfg.mu();
    let mut checks = Vec::new();
    let mut push = |name: &str, pass: bool, detail: String| {
        checks.push(CheckRecord {
            check: name.to_string(),
            config_hash: cfg.hash.clone(),
            pass,
            detail,
        });
    };

    // finite differences vs shooting on the favourable-plateau wave
    let drift = 0.25 * params.speed_bound();
    let spec = BvpSpec {
        xl: -20.0 * params.length_scale(),
        xr: 0.0,
        left_value: params.carrying_capacity(),
        right_value: 0.0,
        drift,
        diffusion: params.d,
        competition: params.b,
        coefficient: Coefficient::Constant(params.a),
    };
    let oracle = oracle_bvp(&spec, 1e-10)?;
    let slope = |n: usize| -> Result<f64> {
        Ok(derivative_at_right(&solve_logistic_bvp(&spec, n, 1e-11)?))
    };
    let fd_slope = slope(8192)?;
    let gap = (fd_slope - oracle.slope_right).abs();
    push(
        "bvp_slope_vs_shooting",
        gap <= 1e-5,
        format!("|fd - shooting| = {gap:.3e} (tolerance 1e-5)"),
    );

    // spatial order from the same ladder
    let ladder = [
        (512.0, slope(512)?),
        (1024.0, slope(1024)?),
        (2048.0, slope(2048)?),
    ];
    let space = convergence_study(&ladder, 2.0)?;
    push(
        "bvp_space_order",
        (space.order - 2.0).abs() <= 0.3,
        format!("estimated order {:.3} (expect 2 +- 0.3)", space.order),
    );

    // main stepper vs explicit oracle on a desk-scale horizon
    let desk_n = cfg.grid_n.min(256);
    let solver = StefanSolver::new(&params, &climate, &mu, desk_n)?;
    let u0 = cfg.initial_data()?;
    let t_check = cfg.t_max.min(5.0 / params.a.max(0.1));
    let sim = SimulationSpec {
        u0: u0.clone(),
        t_max: t_check,
        step: TimeStepRule::Fixed(1e-3 / params.a.max(0.1)),
        scheme: cfg.scheme,
        record_dt: t_check / 50.0,
        snapshot_dt: None,
        c0: None,
        gap_margin: cfg.gap_margin,
    };
    let main_run = solver.simulate(&sim)?;
    let oracle_run = oracle_simulate(
        &params,
        &climate,
        &mu,
        &u0,
        desk_n,
        &OracleSimSpec::new(t_check, t_check / 10.0),
    )?;
    let rel = (main_run.final_state.h - oracle_run.final_h).abs() / oracle_run.final_h;
    push(
        "stefan_front_vs_oracle",
        rel <= 0.01,
        format!("relative front gap {rel:.3e} at t = {t_check} (tolerance 1e-2)"),
    );

    // temporal order on the same desk problem
    let h_at = |dt: f64| -> Result<f64> {
        let mut s = sim.clone();
        s.step = TimeStepRule::Fixed(dt);
        Ok(solver.simulate(&s)?.final_state.h)
    };
    let dt0 = 0.02 / params.a.max(0.1);
    let time_ladder = [
        (1.0 / dt0, h_at(dt0)?),
        (2.0 / dt0, h_at(dt0 / 2.0)?),
        (4.0 / dt0, h_at(dt0 / 4.0)?),
    ];
    let time = convergence_study(&time_ladder, 2.0)?;
    push(
        "stefan_time_order",
        (time.order - 1.0).abs() <= 0.3,
        format!("estimated order {:.3} (expect 1 +- 0.3)", time.order),
    );

    // invariants: positivity, a priori bound, monotone front
    let stats = main_run.trajectory.invariants;
    let bound_ok = stats.min_u >= 0.0
        && stats.max_u <= stats.density_bound * (1.0 + 1e-6)
        && stats.monotone_front;
    push(
        "invariant_sweep",
        bound_ok,
        format!(
            "u in [{:.3e}, {:.6}], bound {:.6}, monotone front: {}",
            stats.min_u, stats.max_u, stats.density_bound, stats.monotone_front
        ),
    );

    // byte-identical rerun of the trajectory file
    let rerun = solver.simulate(&sim)?;
    let bytes_a = trajectory_csv(cfg, &main_run.trajectory)?;
    let bytes_b = trajectory_csv(cfg, &rerun.trajectory)?;
    push(
        "deterministic_rerun",
        bytes_a == bytes_b,
        format!("{} bytes compared", bytes_a.len()),
    );

    Ok(checks)
}
