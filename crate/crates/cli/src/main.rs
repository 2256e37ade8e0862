use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tree_qcqp::heuristic::{restore_feasibility, HeuristicConfig, HeuristicResult};
use tree_qcqp::io::generator::TreeModel;
use tree_qcqp::io::{bench_case, gen_random_radial, parse_case, parse_json, RandomCircuitParams, CSV_HEADER};
use tree_qcqp::opf::{check_opf_condition, apply_pattern, ObjectiveKind, ObjectiveSpec, OpfSolveConfig, OpfStatus, Pattern};
use tree_qcqp::problem::ProblemDocument;
use tree_qcqp::recovery::{solve_exact, Outcome, RecoveryConfig, RecoveryReport};

const EXIT_INPUT: u8 = 1;
const EXIT_CONDITION: u8 = 2;
const EXIT_HEURISTIC: u8 = 3;
const EXIT_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "tree-qcqp", version, about = "Exact semidefinite relaxation of tree-structured QCQPs and radial OPF")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Voltage,
    Loss,
    Cost,
}

#[derive(Clone, Copy, ValueEnum)]
enum PatternArg {
    None,
    Oversatisfaction,
    Example1,
    Example3,
}

impl From<PatternArg> for Pattern {
    fn from(p: PatternArg) -> Self {
        match p {
            PatternArg::None => Pattern::None,
            PatternArg::Oversatisfaction => Pattern::Oversatisfaction,
            PatternArg::Example1 => Pattern::Example1,
            PatternArg::Example3 => Pattern::Example3,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeArg {
    Attachment,
    Pruefer,
}

#[derive(Subcommand)]
enum Command {
    /// Check the exactness condition of an OPF case; exit 0 on pass, 2 on fail.
    Check {
        /// Case file, or `-` for stdin.
        case: PathBuf,
        #[arg(long, value_enum)]
        objective: Option<ObjectiveArg>,
        #[arg(long, value_enum, default_value = "none")]
        pattern: PatternArg,
    },
    /// Solve a QCQP document and report the recovery stages.
    SolveQcqp {
        problem: PathBuf,
        #[arg(long)]
        zeta: Option<f64>,
        /// Run even when the exactness condition fails.
        #[arg(long)]
        skip_condition_check: bool,
    },
    /// Solve an OPF case and emit per-bus and per-line quantities.
    SolveOpf {
        case: PathBuf,
        #[arg(long, value_enum)]
        objective: Option<ObjectiveArg>,
        #[arg(long, value_enum, default_value = "none")]
        pattern: PatternArg,
        /// Heuristic trust-region radius: a positive number or `inf`.
        #[arg(long, default_value = "inf", value_parser = parse_gamma)]
        gamma: f64,
        #[arg(long)]
        zeta: Option<f64>,
        /// Let the heuristic move the gauge bus voltage magnitude.
        #[arg(long)]
        free_gauge_magnitude: bool,
    },
    /// Write a random radial circuit.
    GenCase {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        pv_fraction: Option<f64>,
        #[arg(long, value_enum, default_value = "attachment")]
        tree: TreeArg,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Solve seeded random circuits and print one CSV row per seed.
    Bench {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seeds: u64,
        #[arg(long, value_enum, default_value = "loss")]
        objective: ObjectiveArg,
        #[arg(long, value_enum, default_value = "none")]
        pattern: PatternArg,
        #[arg(long, default_value = "inf", value_parser = parse_gamma)]
        gamma: f64,
    },
}

fn parse_gamma(s: &str) -> Result<f64, String> {
    if s.eq_ignore_ascii_case("inf") {
        return Ok(f64::INFINITY);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number or `inf`, got `{s}`")),
    }
}

fn read_input(path: &PathBuf) -> anyhow::Result<String> {
    let mut text = String::new();
    if path.as_os_str() == "-" {
        std::io::stdin().read_to_string(&mut text).context("reading stdin")?;
    } else {
        text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    }
    Ok(text)
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Objective from the flag, else from the case, else loss. `cost` needs the
/// coefficients from the case file.
fn objective(arg: Option<ObjectiveArg>, from_case: Option<ObjectiveSpec>) -> anyhow::Result<ObjectiveSpec> {
    Ok(match (arg, from_case) {
        (None, Some(spec)) => spec,
        (None, None) | (Some(ObjectiveArg::Loss), _) => ObjectiveSpec::loss(),
        (Some(ObjectiveArg::Voltage), _) => ObjectiveSpec::voltage(),
        (Some(ObjectiveArg::Cost), Some(spec)) if spec.kind == ObjectiveKind::Cost => spec,
        (Some(ObjectiveArg::Cost), _) => bail!(tree_qcqp::Error::Validation("--objective cost needs cost coefficients in the case file".into())),
    })
}

fn objective_kind(arg: ObjectiveArg) -> ObjectiveKind {
    match arg {
        ObjectiveArg::Voltage => ObjectiveKind::Voltage,
        ObjectiveArg::Loss => ObjectiveKind::Loss,
        ObjectiveArg::Cost => ObjectiveKind::Cost,
    }
}

fn heuristic_config(gamma: f64) -> HeuristicConfig {
    HeuristicConfig { gamma, ..HeuristicConfig::default() }
}

#[derive(Serialize)]
struct QcqpOutput {
    #[serde(flatten)]
    recovery: RecoveryReport,
    heuristic: Option<HeuristicResult>,
}

fn outcome_code(o: Outcome) -> u8 {
    match o {
        Outcome::ExactRank1 | Outcome::CascadeRank1 => 0,
        Outcome::HandedToHeuristic => EXIT_HEURISTIC,
        Outcome::Failed => EXIT_FAILED,
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Check { case, objective: obj, pattern } => {
            let (net, spec) = parse_case(&read_input(&case)?)?;
            let spec = objective(obj, spec)?;
            let report = check_opf_condition(&apply_pattern(&net, pattern.into()), &spec)?;
            print_json(&report)?;
            Ok(if report.report.overall { 0 } else { EXIT_CONDITION })
        }
        Command::SolveQcqp { problem, zeta, skip_condition_check } => {
            let doc: ProblemDocument = parse_json(&read_input(&problem)?)?;
            let p = doc.into_problem()?;
            let cfg = RecoveryConfig { zeta, skip_condition_check, ..RecoveryConfig::default() };
            let recovery = solve_exact(&p, &cfg)?;
            let mut code = outcome_code(recovery.outcome);
            let heuristic = match (&recovery.outcome, &recovery.relaxation) {
                (Outcome::HandedToHeuristic, Some(rel)) => {
                    let h = restore_feasibility(&p, &rel.w, recovery.lower_bound, &HeuristicConfig::default());
                    if h.x_tilde.is_none() {
                        code = EXIT_FAILED;
                    }
                    Some(h)
                }
                _ => None,
            };
            print_json(&QcqpOutput { recovery, heuristic })?;
            Ok(code)
        }
        Command::SolveOpf { case, objective: obj, pattern, gamma, zeta, free_gauge_magnitude } => {
            let (net, spec) = parse_case(&read_input(&case)?)?;
            let spec = objective(obj, spec)?;
            let mut cfg = OpfSolveConfig {
                pattern: pattern.into(),
                heuristic: heuristic_config(gamma),
                reoptimize_gauge_magnitude: free_gauge_magnitude,
                ..OpfSolveConfig::default()
            };
            cfg.recovery.zeta = zeta;
            let sol = tree_qcqp::opf::solve_opf(&net, &spec, &cfg)?;
            print_json(&sol)?;
            Ok(match sol.summary.status {
                OpfStatus::Exact | OpfStatus::Cascade => 0,
                OpfStatus::Heuristic => EXIT_HEURISTIC,
                OpfStatus::Failed => EXIT_FAILED,
            })
        }
        Command::GenCase { n, seed, pv_fraction, tree, output } => {
            let tree = match tree {
                TreeArg::Attachment => TreeModel::Attachment,
                TreeArg::Pruefer => TreeModel::Pruefer,
            };
            let case = gen_random_radial(&RandomCircuitParams { n, pv_fraction, seed, tree })?;
            let text = serde_json::to_string_pretty(&case)? + "\n";
            match output {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => std::io::stdout().write_all(text.as_bytes())?,
            }
            Ok(0)
        }
        Command::Bench { n, seeds, objective: obj, pattern, gamma } => {
            let cfg = OpfSolveConfig { pattern: pattern.into(), heuristic: heuristic_config(gamma), ..OpfSolveConfig::default() };
            let mut out = std::io::stdout().lock();
            writeln!(out, "{CSV_HEADER}")?;
            for seed in 0..seeds {
                let (row, _) = bench_case(n, seed, objective_kind(obj), &cfg)?;
                writeln!(out, "{}", row.csv())?;
            }
            Ok(0)
        }
    }
}

#[derive(Serialize)]
struct ErrorDocument {
    error: String,
    stage: &'static str,
}

fn fail(error: String, stage: &'static str, code: u8) -> ExitCode {
    let doc = ErrorDocument { error, stage };
    eprintln!("{}", serde_json::to_string(&doc).expect("plain strings serialize"));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default().trim_start_matches("error: ");
            return fail(first.to_string(), "usage", EXIT_INPUT);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let (stage, code) = match e.downcast_ref::<tree_qcqp::Error>() {
                Some(err @ tree_qcqp::Error::ConditionFailed(_)) => (err.stage(), EXIT_CONDITION),
                Some(err) => (err.stage(), EXIT_INPUT),
                None if e.downcast_ref::<std::io::Error>().is_some() => ("io", EXIT_INPUT),
                None => ("input", EXIT_INPUT),
            };
            fail(format!("{e:#}"), stage, code)
        }
    }
}
