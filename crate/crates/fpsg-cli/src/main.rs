//! Command-line front end: validate models, evaluate policies, search for
//! and certify equilibria, and emit the period-length table.
//!
//! Exit codes are a stable contract: 0 success (and a passing certificate
//! for `solve`), 1 domain failure (validation findings, impossible
//! certification, shape mismatches), 2 parse failure, 3 budget exhaustion.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fpsg::error::Error;
use fpsg::io::{
    certificate_csv, certificate_report, parse_game_file, parse_policy_file, table1_csv,
    write_game_file, write_policy_file,
};
use fpsg::scenarios::energy::{build_energy_model, ActionCaps, EnergyParams, EnergyStageParams, Pmf};
use fpsg::scenarios::insurance::build_insurance_model;
use fpsg::solver::{
    horizon_for, solve_best_response_dynamics, solve_grid, CandidateOrder,
};
use fpsg::{
    build_goal_lattice, canonicalize_goal, check_divergence, compute_beta, enumerate_oracle,
    evaluate_best_response, evaluate_policy, simulate, validate_model, GoalVector, Rational,
};

const EXIT_OK: u8 = 0;
const EXIT_DOMAIN: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_EXHAUSTED: u8 = 3;

/// Path-node budget for the exact enumeration columns of `evaluate`; the
/// columns stay empty on instances whose trees outgrow it.
const ORACLE_BUDGET: u64 = 100_000;

#[derive(Parser)]
#[command(
    name = "fpsg",
    about = "First-passage stochastic games: validate, evaluate, solve, certify",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Strategy {
    /// Best-response dynamics with certification each round.
    Brd,
    /// Deterministic lexicographic grid enumeration.
    Grid,
    /// Seeded-random grid sampling (requires --seed).
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Report,
}

#[derive(Args)]
struct CommonOut {
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel loops.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check every model invariant and report the absorption bounds.
    Validate {
        #[arg(long)]
        model: PathBuf,
        /// Stages to probe for the divergence check.
        #[arg(long, default_value_t = 10)]
        probe: usize,
    },
    /// Search for an equilibrium and write the certificate and policy.
    Solve {
        #[arg(long)]
        model: PathBuf,
        /// Accuracy parameter (exact decimal or fraction, e.g. 0.5 or 1/2).
        #[arg(long)]
        epsilon: Rational,
        #[arg(long, value_enum, default_value_t = Strategy::Brd)]
        strategy: Strategy,
        /// Candidate budget (rounds for brd, candidates for grid orders).
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        /// RNG seed; mandatory for the random strategy.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        common: CommonOut,
    },
    /// Evaluate a policy file: per-cell values, bounds, best-response
    /// values, and optional Monte Carlo and enumeration cross-checks.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        /// Accuracy parameter fixing the sweep horizon.
        #[arg(long)]
        epsilon: Rational,
        /// Monte Carlo seed; sampling columns appear only when given.
        #[arg(long)]
        seed: Option<u64>,
        /// Monte Carlo episodes per stage-0 cell.
        #[arg(long, default_value_t = 10_000)]
        budget: u64,
        #[command(flatten)]
        common: CommonOut,
    },
    /// Emit the (epsilon, period length) table for epsilon = 0.1 .. 1.0.
    Table1 {
        /// Absorption bound; read from --model when omitted.
        #[arg(long)]
        beta: Option<Rational>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOut,
    },
    /// Write a bundled scenario as a game file.
    Scenario {
        #[arg(value_enum)]
        kind: ScenarioKind,
        #[command(flatten)]
        common: CommonOut,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScenarioKind {
    Insurance,
    Energy,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(classify(&err))
        }
    }
}

/// Parse failures exit 2, budget exhaustion 3, everything else is a domain
/// failure.
fn classify(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Json(_))
        | Some(Error::GameFile(_))
        | Some(Error::PolicyFile(_))
        | Some(Error::InvalidRational(..)) => EXIT_PARSE,
        Some(Error::BudgetExceeded(_)) => EXIT_EXHAUSTED,
        _ => EXIT_DOMAIN,
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Validate { model, probe } => cmd_validate(&model, probe),
        Command::Solve {
            model,
            epsilon,
            strategy,
            budget,
            seed,
            format,
            common,
        } => {
            configure_jobs(common.jobs);
            cmd_solve(&model, &epsilon, strategy, budget, seed, format, common.out)
        }
        Command::Evaluate {
            model,
            policy,
            epsilon,
            seed,
            budget,
            common,
        } => {
            configure_jobs(common.jobs);
            cmd_evaluate(&model, &policy, &epsilon, seed, budget, common.out)
        }
        Command::Table1 { beta, model, common } => cmd_table1(beta, model, common.out),
        Command::Scenario { kind, common } => cmd_scenario(kind, common.out),
    }
}

fn configure_jobs(jobs: Option<usize>) {
    if let Some(j) = jobs {
        if !fpsg::set_parallelism(j) && j > 1 {
            eprintln!("note: built without the parallel feature; running sequentially");
        }
    }
}

fn load_model(path: &Path) -> anyhow::Result<(fpsg::GameModel, Vec<GoalVector>)> {
    let text = fs::read_to_string(path)
        .map_err(|e| anyhow::Error::new(Error::GameFile(format!("{}: {e}", path.display()))))?;
    let parsed = parse_game_file(&text)?;
    Ok(parsed)
}

fn emit(out: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, content).map_err(|e| anyhow::anyhow!(Error::Io(e))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_validate(model_path: &Path, probe: usize) -> anyhow::Result<u8> {
    let (model, goals) = load_model(model_path)?;
    let report = validate_model(&model);
    for f in &report.findings {
        println!("{:?}: {}: {}", f.severity, f.location, f.message);
    }
    if !goals.is_empty() {
        println!(
            "initial goals: {}",
            goals
                .iter()
                .map(|g| format!("({g})"))
                .collect::<Vec<_>>()
                .join(" ")
        );
    }
    if let Some(beta) = &report.beta {
        println!("beta = {beta}");
    }
    if let Some(seq) = &report.beta_sequence {
        println!("per-stage absorption bounds:");
        for (n, b) in seq.prefix.iter().enumerate() {
            println!("  stage {n}: {b}");
        }
        println!("  tail: {}", seq.tail);
        let (verdict, partial) = check_divergence(&model, probe);
        println!("absorption series over {probe} probed stages: partial sum {partial}");
        println!("divergence: {verdict}");
    }
    if report.ok {
        println!("model ok");
        Ok(EXIT_OK)
    } else {
        println!("model invalid");
        Ok(EXIT_DOMAIN)
    }
}

fn policy_path_for(out: &Path) -> PathBuf {
    out.with_extension("policy.json")
}

fn cmd_solve(
    model_path: &Path,
    epsilon: &Rational,
    strategy: Strategy,
    budget: u64,
    seed: Option<u64>,
    format: Format,
    out: Option<PathBuf>,
) -> anyhow::Result<u8> {
    let (model, goals) = load_model(model_path)?;
    let report = validate_model(&model);
    if !report.ok {
        anyhow::bail!(Error::InvalidParameter(
            "model fails validation; run `fpsg validate` for the findings".into()
        ));
    }
    if goals.is_empty() {
        anyhow::bail!(Error::InvalidParameter(
            "the game file declares no initial_goals".into()
        ));
    }
    let beta = compute_beta(&model);
    if !beta.is_positive() {
        anyhow::bail!(Error::AbsorptionBoundZero);
    }

    let outcome = match strategy {
        Strategy::Brd => solve_best_response_dynamics(&model, &goals, epsilon, budget, seed)?,
        Strategy::Grid => solve_grid(&model, &goals, epsilon, budget, CandidateOrder::Deterministic)?,
        Strategy::Random => {
            let seed = seed.ok_or_else(|| {
                Error::InvalidParameter("--seed is mandatory for the random strategy".into())
            })?;
            solve_grid(&model, &goals, epsilon, budget, CandidateOrder::SeededRandom(seed))?
        }
    };

    let cert = outcome.certificate();
    let rendered = match format {
        Format::Csv => certificate_csv(cert),
        Format::Report => certificate_report(cert),
    };
    emit(out.as_deref(), &rendered)?;
    if let Some(out_path) = &out {
        fs::write(
            policy_path_for(out_path),
            write_policy_file(&model, outcome.policy()),
        )?;
    }

    eprintln!("{}", certificate_report(cert));
    if outcome.passed() {
        Ok(EXIT_OK)
    } else {
        eprintln!("budget exhausted without a passing certificate");
        Ok(EXIT_EXHAUSTED)
    }
}

fn cmd_evaluate(
    model_path: &Path,
    policy_path: &Path,
    epsilon: &Rational,
    seed: Option<u64>,
    episodes: u64,
    out: Option<PathBuf>,
) -> anyhow::Result<u8> {
    let (model, goals) = load_model(model_path)?;
    let policy_text = fs::read_to_string(policy_path)
        .map_err(|e| anyhow::Error::new(Error::PolicyFile(format!("{}: {e}", policy_path.display()))))?;
    let policy = parse_policy_file(&policy_text, &model)?;
    let beta = compute_beta(&model);
    let horizon = horizon_for(epsilon, &beta)?;
    let lattice = build_goal_lattice(&model, &goals, horizon);
    if let Err(e) = policy.validate_against(&model, &lattice) {
        anyhow::bail!(Error::InvalidParameter(format!(
            "policy does not match the model/goal lattice: {e}"
        )));
    }

    let mut csv = String::new();
    let n_players = model.num_players();
    let goal_cols: Vec<String> = (0..n_players).map(|k| format!("goal{k}")).collect();
    csv.push_str(&format!(
        "stage,state,{},player,value,bound,best_response,mc_estimate,mc_stderr,oracle_lower,oracle_upper\n",
        goal_cols.join(",")
    ));
    for player in 0..n_players {
        let u = evaluate_policy(&model, &policy, &lattice, player, horizon)?;
        let br = evaluate_best_response(&model, &policy, &lattice, player, horizon)?;
        for (n, stage) in u.stages().iter().enumerate() {
            for (state, goal, value) in stage.iter() {
                let bound = u
                    .bound_at(n, &beta)
                    .map(|b| b.to_string())
                    .unwrap_or_default();
                let v = br
                    .table
                    .stage(n)
                    .get(state, goal)
                    .map(|x| x.to_string())
                    .unwrap_or_default();
                let (mc_est, mc_se) = if n == 0 {
                    match seed {
                        Some(s) => {
                            let (est, se) =
                                simulate(&model, &policy, state, goal, player, episodes, horizon, s)?;
                            (est.to_string(), se.to_string())
                        }
                        None => (String::new(), String::new()),
                    }
                } else {
                    (String::new(), String::new())
                };
                let (lo, hi) = if n == 0 {
                    match enumerate_oracle(&model, &policy, state, goal, player, horizon, ORACLE_BUDGET) {
                        Ok((lo, hi)) => (lo.to_f64().to_string(), hi.to_f64().to_string()),
                        Err(Error::BudgetExceeded(_)) => (String::new(), String::new()),
                        Err(e) => return Err(e.into()),
                    }
                } else {
                    (String::new(), String::new())
                };
                let goal_vals = goal
                    .components()
                    .iter()
                    .map(Rational::to_string)
                    .collect::<Vec<_>>()
                    .join(",");
                csv.push_str(&format!(
                    "{n},{state},{goal_vals},{player},{value},{bound},{v},{mc_est},{mc_se},{lo},{hi}\n"
                ));
            }
        }
    }
    emit(out.as_deref(), &csv)?;
    Ok(EXIT_OK)
}

fn cmd_table1(
    beta: Option<Rational>,
    model: Option<PathBuf>,
    out: Option<PathBuf>,
) -> anyhow::Result<u8> {
    let beta = match (beta, model) {
        (Some(b), _) => b,
        (None, Some(path)) => {
            let (model, _) = load_model(&path)?;
            compute_beta(&model)
        }
        (None, None) => anyhow::bail!(Error::InvalidParameter(
            "supply --beta or --model".into()
        )),
    };
    let mut rows = Vec::with_capacity(10);
    for i in 1..=10u64 {
        let eps = &Rational::from(i) / &Rational::from_int(10);
        let t = horizon_for(&eps, &beta)?;
        rows.push((format!("{}.{}", i / 10, i % 10), t));
    }
    emit(out.as_deref(), &table1_csv(&rows))?;
    Ok(EXIT_OK)
}

fn cmd_scenario(kind: ScenarioKind, out: Option<PathBuf>) -> anyhow::Result<u8> {
    let content = match kind {
        ScenarioKind::Insurance => {
            let (model, goal) = build_insurance_model();
            write_game_file(&model, &[goal])
        }
        ScenarioKind::Energy => {
            let (model, goals) = demo_energy_model()?;
            write_game_file(&model, &goals)
        }
    };
    emit(out.as_deref(), &content)?;
    Ok(EXIT_OK)
}

/// A small stationary demo of the energy game with unit-per-trade rewards.
fn demo_energy_model() -> anyhow::Result<(fpsg::GameModel, Vec<GoalVector>)> {
    let rat = |s: &str| s.parse::<Rational>().expect("literal rational");
    let stage = EnergyStageParams {
        capacities: [1, 1, 1],
        net_demand: Pmf::new([(-1, rat("1/4")), (0, rat("1/4")), (1, rat("1/2"))])?,
        consumption: [
            Pmf::new([(0, rat("1/2")), (1, rat("1/4")), (2, rat("1/4"))])?,
            Pmf::new([(0, rat("1/2")), (1, rat("1/4")), (2, rat("1/4"))])?,
        ],
        purchase: [
            Pmf::new([(0, rat("1/2")), (1, rat("1/2"))])?,
            Pmf::new([(0, rat("1/2")), (1, rat("1/2"))])?,
        ],
    };
    let params = EnergyParams::stationary(stage);
    let model = build_energy_model(&params, ActionCaps::default())?;
    let goals = vec![canonicalize_goal(&[rat("1"), rat("1"), rat("1")])];
    Ok((model, goals))
}
