use clap::{Args, Parser, Subcommand, ValueEnum};
use paced_auctions::jsonio::{read_json_file, write_json_file};
use paced_auctions::{
    check_budgets, check_colinear_pacing, check_monotonicity, gen_arc_instance, gen_grid_instance,
    revenue_equivalence_report, solve_equilibrium, AuctionFormat, AuctionInstance, PacingProfile,
    SolveOptions,
};
use paced_auctions_cli::{
    export_paced_vectors, export_revenue, export_shading_surface, instance_digest,
    parse_profile_document, write_text, RunManifest, SimulateReportFile, SolveReportFile,
};
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "paced-auctions",
    version,
    about = "Compute and check value-pacing equilibria for budget-constrained auction markets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a reference instance file.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Run best-response dynamics to an approximate pacing equilibrium.
    Solve(SolveArgs),
    /// Check structural properties of a profile on an instance.
    Check {
        #[command(subcommand)]
        kind: CheckKind,
    },
    /// Monte Carlo revenue estimate for one auction format.
    Simulate(SimulateArgs),
    /// Convert a report file to CSV for plotting.
    Export(ExportArgs),
}

#[derive(Subcommand)]
enum GenKind {
    /// Quarter-annulus market with two basis items.
    Arc {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// 10x10 buyer grid against ten simplex items.
    Grid {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    max_rounds: Option<usize>,
    /// Fixed-point tolerance on the L-infinity multiplier change.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckCommon {
    #[arg(long)]
    instance: PathBuf,
    /// Profile document or solve report whose profile is used.
    #[arg(long)]
    profile: PathBuf,
    /// Write the check report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CheckKind {
    /// Per-type expenditure, violations and slackness.
    Budgets(CheckCommon),
    /// Multiplier monotonicity in weights and budgets.
    Monotone(CheckCommon),
    /// Colinear paced-vector collapse.
    Colinear(CheckCommon),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Fp,
    Sp,
    Ap,
}

impl From<FormatArg> for AuctionFormat {
    fn from(f: FormatArg) -> AuctionFormat {
        match f {
            FormatArg::Fp => AuctionFormat::FirstPrice,
            FormatArg::Sp => AuctionFormat::SecondPrice,
            FormatArg::Ap => AuctionFormat::AllPay,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    profile: PathBuf,
    #[arg(long, value_enum)]
    format: FormatArg,
    #[arg(long)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportKind {
    PacedVectors,
    ShadingSurface,
    Revenue,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long, value_enum)]
    kind: ExportKind,
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    /// Bad input: malformed files, invalid instances, unwritable paths.
    User(String),
    /// A bug: our own artifacts failed to serialize or reload.
    Internal(String),
}

fn user<E: std::fmt::Display>(e: E) -> CliError {
    CliError::User(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints rendered usage/help itself
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    let start = Instant::now();
    match run(cli.command, start) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::User(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Internal(message)) => {
            eprintln!("internal error: {message}");
            ExitCode::from(2)
        }
    }
}

fn load_instance(path: &Path) -> Result<AuctionInstance, CliError> {
    let instance: AuctionInstance = read_json_file(path)
        .map_err(|e| CliError::User(format!("cannot load instance {}: {e}", path.display())))?;
    for warning in instance.warnings() {
        eprintln!("warning: {warning}");
    }
    Ok(instance)
}

fn load_profile(path: &Path, instance: &AuctionInstance) -> Result<PacingProfile, CliError> {
    let body = std::fs::read_to_string(path)
        .map_err(|e| CliError::User(format!("cannot read profile {}: {e}", path.display())))?;
    let profile = parse_profile_document(&body).map_err(CliError::User)?;
    profile.validate(instance).map_err(user)?;
    Ok(profile)
}

fn emit_report<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => write_json_file(path, value)
            .map_err(|e| CliError::User(format!("cannot write {}: {e}", path.display()))),
        None => {
            let body = paced_auctions::jsonio::to_json_string(value)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            println!("{body}");
            Ok(())
        }
    }
}

fn run(command: Command, start: Instant) -> Result<(), CliError> {
    match command {
        Command::Gen { kind } => {
            let (instance, label, options, out) = match kind {
                GenKind::Arc { a, b, count, out } => {
                    let inst = gen_arc_instance(a, b, count).map_err(user)?;
                    (inst, "gen arc", json!({"a": a, "b": b, "count": count}), out)
                }
                GenKind::Grid { out } => (gen_grid_instance(), "gen grid", json!({}), out),
            };
            write_json_file(&out, &instance)
                .map_err(|e| CliError::User(format!("cannot write {}: {e}", out.display())))?;
            RunManifest {
                command: label.to_string(),
                instance_digest: Some(instance_digest(&instance)),
                options,
                seed: None,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                duration_seconds: start.elapsed().as_secs_f64(),
                outcome: format!("wrote {}", out.display()),
            }
            .emit();
            Ok(())
        }
        Command::Solve(args) => {
            let instance = load_instance(&args.instance)?;
            let mut options = SolveOptions::default();
            if let Some(d) = args.damping {
                options.damping = d;
            }
            if let Some(r) = args.max_rounds {
                options.max_rounds = r;
            }
            if let Some(t) = args.tol {
                options.fixpoint_tol = t;
            }
            options.validate().map_err(CliError::User)?;
            let report = solve_equilibrium(&instance, &options);
            if !report.converged {
                match report.diagnostics.oscillation_period {
                    Some(p) => eprintln!(
                        "warning: dynamics did not converge in {} rounds (residual cycle of period {p} detected); the report is still valid",
                        report.rounds
                    ),
                    None => eprintln!(
                        "warning: dynamics did not converge in {} rounds (last residual {:?}); the report is still valid",
                        report.rounds, report.linf_residual
                    ),
                }
            }
            let digest = instance_digest(&instance);
            let outcome = format!(
                "converged={} rounds={} max_budget_violation={:.3e}",
                report.converged, report.rounds, report.max_budget_violation
            );
            let file = SolveReportFile {
                instance,
                options: options.clone(),
                report,
            };
            write_json_file(&args.out, &file)
                .map_err(|e| CliError::User(format!("cannot write {}: {e}", args.out.display())))?;
            RunManifest {
                command: "solve".to_string(),
                instance_digest: Some(digest),
                options: serde_json::to_value(&options).unwrap_or_default(),
                seed: None,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                duration_seconds: start.elapsed().as_secs_f64(),
                outcome,
            }
            .emit();
            Ok(())
        }
        Command::Check { kind } => {
            let (label, common) = match &kind {
                CheckKind::Budgets(c) => ("check budgets", c),
                CheckKind::Monotone(c) => ("check monotone", c),
                CheckKind::Colinear(c) => ("check colinear", c),
            };
            let instance = load_instance(&common.instance)?;
            let profile = load_profile(&common.profile, &instance)?;
            let outcome;
            match &kind {
                CheckKind::Budgets(c) => {
                    let checks = check_budgets(&instance, &profile);
                    let max_rel = checks
                        .iter()
                        .map(|b| b.violation / b.budget)
                        .fold(0.0, f64::max);
                    outcome = format!("max relative violation {max_rel:.3e}");
                    #[derive(Serialize)]
                    struct BudgetsFile {
                        kind: &'static str,
                        max_relative_violation: f64,
                        checks: Vec<paced_auctions::BudgetCheck>,
                    }
                    emit_report(
                        &BudgetsFile {
                            kind: "budgets",
                            max_relative_violation: max_rel,
                            checks,
                        },
                        c.out.as_deref(),
                    )?;
                }
                CheckKind::Monotone(c) => {
                    let report = check_monotonicity(&instance, &profile);
                    outcome = if report.vacuous {
                        "vacuous: no comparable pairs".to_string()
                    } else {
                        format!(
                            "{} violations over {} weight pairs, {} budget pairs",
                            report.violations.len(),
                            report.weight_pairs,
                            report.budget_pairs
                        )
                    };
                    emit_report(&report, c.out.as_deref())?;
                }
                CheckKind::Colinear(c) => {
                    let report = check_colinear_pacing(&instance, &profile);
                    outcome = if report.vacuous {
                        "vacuous: no colinear groups".to_string()
                    } else {
                        format!(
                            "max pairwise deviation {:.3e}, collapse deviation {:?}",
                            report.max_pairwise_deviation, report.max_collapse_deviation
                        )
                    };
                    emit_report(&report, c.out.as_deref())?;
                }
            }
            RunManifest {
                command: label.to_string(),
                instance_digest: Some(instance_digest(&instance)),
                options: json!({"profile": common.profile.display().to_string()}),
                seed: None,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                duration_seconds: start.elapsed().as_secs_f64(),
                outcome,
            }
            .emit();
            Ok(())
        }
        Command::Simulate(args) => {
            let instance = load_instance(&args.instance)?;
            let profile = load_profile(&args.profile, &instance)?;
            let format: AuctionFormat = args.format.into();
            let report =
                revenue_equivalence_report(&instance, &profile, &[format], args.samples, args.seed)
                    .map_err(user)?;
            let outcome = {
                let f = &report.formats[0];
                format!(
                    "analytic={:.6} mc={:.6} se={:.3e} ties={:.4}",
                    f.analytic_total, f.mc_total, f.mc_std_error, f.tie_frequency
                )
            };
            let digest = instance_digest(&instance);
            let file = SimulateReportFile {
                instance,
                profile,
                report,
            };
            emit_report(&file, args.out.as_deref())?;
            RunManifest {
                command: "simulate".to_string(),
                instance_digest: Some(digest),
                options: json!({"format": format.tag(), "samples": args.samples}),
                seed: Some(args.seed),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                duration_seconds: start.elapsed().as_secs_f64(),
                outcome,
            }
            .emit();
            Ok(())
        }
        Command::Export(args) => {
            let body = std::fs::read_to_string(&args.report).map_err(|e| {
                CliError::User(format!("cannot read {}: {e}", args.report.display()))
            })?;
            let csv = match args.kind {
                ExportKind::PacedVectors | ExportKind::ShadingSurface => {
                    let report: SolveReportFile = serde_json::from_str(&body).map_err(|e| {
                        CliError::User(format!("report is not a solve report: {e}"))
                    })?;
                    let result = match args.kind {
                        ExportKind::PacedVectors => {
                            export_paced_vectors(&report.instance, &report.report.profile)
                        }
                        _ => export_shading_surface(&report.instance, &report.report.profile),
                    };
                    result.map_err(CliError::User)?
                }
                ExportKind::Revenue => {
                    let report: SimulateReportFile = serde_json::from_str(&body).map_err(|e| {
                        CliError::User(format!("report is not a simulate report: {e}"))
                    })?;
                    export_revenue(&report.report)
                }
            };
            write_text(&args.out, &csv)
                .map_err(|e| CliError::User(format!("cannot write {}: {e}", args.out.display())))?;
            RunManifest {
                command: "export".to_string(),
                instance_digest: None,
                options: json!({"report": args.report.display().to_string()}),
                seed: None,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                duration_seconds: start.elapsed().as_secs_f64(),
                outcome: format!("wrote {}", args.out.display()),
            }
            .emit();
            Ok(())
        }
    }
}
