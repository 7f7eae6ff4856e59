//! Experiment harness for the evotree engines: configuration-driven
//! runs, lineage exponent estimation, parameter sweeps, and the built-in
//! verification suite.
//!
//! Determinism contract: identical config, flags, and seed produce
//! byte-identical CSV/JSON artifacts.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use evotree::analysis::{
    concentration_mass, coordinate_means, eta_preservation_check, expected_utility,
    geometric_mean_floor_check, UtilityProfile,
};
use evotree::export::{frontier_json, trajectory_csv};
use evotree::finite::{evolve_finite, perron_eigenpair, FiniteModel, PopulationState};
use evotree::gaussian::{discretized_dominant_eigenvalue, equilibrium, GaussianPeak};
use evotree::particle::particle_oracle;
use evotree::tree::{exponent_estimate, lineage_sizes, run_tree, TraitPredicate, TreeModel, TreeRun};
use evotree::verify;
use evotree::zoo::{self, ZooModel};

// ---------------------------------------------------------------------------
// errors and exit codes

#[derive(Debug)]
enum CliError {
    /// Bad or missing configuration (exit 2).
    Config(String),
    /// Model construction or simulation failure (exit 3).
    Model(String),
    /// Filesystem failure (exit 4).
    Io(String),
    /// Verification suite reported failures (exit 1).
    VerifyFailed(usize),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::VerifyFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Model(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Model(m) => write!(f, "model error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::VerifyFailed(n) => write!(f, "{n} verification criteria failed"),
        }
    }
}

// ---------------------------------------------------------------------------
// configuration

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    engine: String,
    model: ModelSpec,
    #[serde(default)]
    steps: usize,
    #[serde(default)]
    prune_threshold: f64,
    #[serde(default)]
    traits: Vec<String>,
    #[serde(default)]
    analyses: Vec<String>,
    #[serde(default)]
    outputs: Outputs,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSpec {
    name: String,
    #[serde(default)]
    params: serde_json::Map<String, Value>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Outputs {
    trajectory: Option<String>,
    frontier: Option<String>,
    report: Option<String>,
    oracle: Option<String>,
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig, CliError> {
    let path = path
        .ok_or_else(|| CliError::Config("--config <path> is required for this command".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn expect_engine(cfg: &ExperimentConfig, engine: &str) -> Result<(), CliError> {
    if cfg.engine != engine {
        return Err(CliError::Config(format!(
            "engine is {:?} but this command runs the {engine} engine",
            cfg.engine
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// command line

#[derive(Parser)]
#[command(
    name = "evotree",
    version,
    about = "Population-dynamics experiment harness (finite selection-mutation and lazy infinite trees)"
)]
struct Cli {
    /// Experiment configuration file (JSON)
    #[arg(long, global = true, value_name = "path")]
    config: Option<PathBuf>,
    /// Directory for output artifacts
    #[arg(long, global = true, value_name = "dir", default_value = ".")]
    out: PathBuf,
    /// Particle-oracle seed (overrides the config's seed)
    #[arg(long, global = true, value_name = "n")]
    seed: Option<u64>,
    /// Prune threshold (overrides the config's prune_threshold)
    #[arg(long, global = true, value_name = "x")]
    prune: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Finite selection-mutation engine
    Finite {
        #[command(subcommand)]
        action: RunAction,
    },
    /// Lazy infinite-tree engine
    Tree {
        #[command(subcommand)]
        action: RunAction,
    },
    /// Closed-form and discretized Gaussian-peak equilibrium
    Gaussian(GaussianArgs),
    /// Lineage mass and exponent estimate from a node path
    Lineage(LineageArgs),
    /// Parameter sweep over one model parameter
    Sweep(SweepArgs),
    /// Run the built-in verification suite
    Verify,
}

#[derive(Subcommand)]
enum RunAction {
    /// Run the configured experiment
    Run,
}

#[derive(Args)]
struct GaussianArgs {
    #[arg(long, default_value_t = 1.0)]
    peak_height: f64,
    #[arg(long, default_value_t = 1.0)]
    landscape_variance: f64,
    #[arg(long, default_value_t = 1.0)]
    mutation_variance: f64,
    #[arg(long, default_value_t = 1)]
    dimension: usize,
    /// Half-width of the discretization interval (d = 1 only)
    #[arg(long, default_value_t = 10.0)]
    half_width: f64,
    #[arg(long, default_value_t = 2001)]
    grid_points: usize,
}

#[derive(Args)]
struct LineageArgs {
    /// Origin node as dot-separated child indices (empty for the root)
    #[arg(long, default_value = "")]
    path: String,
    /// Steps to propagate (defaults to the config's steps)
    #[arg(long)]
    steps: Option<usize>,
    /// Trailing window for the exponent estimate (defaults to steps/5)
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    /// Model parameter to vary
    #[arg(long)]
    axis: String,
    /// Comma-separated list of values
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
}

// ---------------------------------------------------------------------------
// helpers

/// JSON value for a possibly non-finite f64 (JSON has no infinities).
fn json_f64(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        Value::Null
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn parse_path(text: &str) -> Result<Vec<usize>, CliError> {
    if text.is_empty() || text == "root" {
        return Ok(Vec::new());
    }
    text.split('.')
        .map(|part| {
            part.parse::<usize>()
                .map_err(|_| CliError::Config(format!("bad node path segment {part:?}")))
        })
        .collect()
}

fn parse_traits(names: &[String]) -> Result<Vec<TraitPredicate>, CliError> {
    names
        .iter()
        .map(|name| {
            if name == "zero_fitness" {
                Ok(TraitPredicate::zero_fitness())
            } else if let Some(rest) = name.strip_prefix("subtree:") {
                Ok(TraitPredicate::subtree(parse_path(rest)?))
            } else {
                Ok(TraitPredicate::tag(name))
            }
        })
        .collect()
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn model_eta(cfg: &ExperimentConfig) -> f64 {
    cfg.model
        .params
        .get("eta")
        .and_then(Value::as_f64)
        .unwrap_or(0.5)
}

// ---------------------------------------------------------------------------
// tree engine

struct TreeArtifacts {
    run: TreeRun,
    model: ZooModel,
    traits: Vec<TraitPredicate>,
}

fn execute_tree(cfg: &ExperimentConfig, prune: f64) -> Result<TreeArtifacts, CliError> {
    let model =
        zoo::by_name(&cfg.model.name, &cfg.model.params).map_err(|e| CliError::Model(e.to_string()))?;
    let traits = parse_traits(&cfg.traits)?;
    let run = run_tree(&model, cfg.steps, prune, &traits).map_err(|e| CliError::Model(e.to_string()))?;
    Ok(TreeArtifacts { run, model, traits })
}

/// The analysis report: one JSON entry per requested analysis.
fn tree_report(
    cfg: &ExperimentConfig,
    artifacts: &TreeArtifacts,
) -> Result<serde_json::Map<String, Value>, CliError> {
    let TreeArtifacts { run, model, .. } = artifacts;
    let eta = model_eta(cfg);
    // f*: declared supremum where available, else the largest fitness
    // seen on the final frontier (flagged as such).
    let declared = model.fitness_supremum().filter(|s| s.is_finite());
    let running_max = run
        .frontier
        .nodes
        .iter()
        .map(|n| n.fitness)
        .fold(0.0, f64::max);
    let f_star = declared.unwrap_or(running_max);

    let mut report = serde_json::Map::new();
    for analysis in &cfg.analyses {
        let entry = match analysis.as_str() {
            "exponents" => {
                let mut logs = Vec::with_capacity(run.records.len() + 1);
                logs.push(0.0);
                logs.extend(run.records.iter().map(|r| r.log_total_mass));
                let window = (logs.len().saturating_sub(1) / 5).max(1);
                let est = exponent_estimate(&logs, window)
                    .map_err(|e| CliError::Model(e.to_string()))?;
                json!({
                    "horizon": est.horizon,
                    "lower": json_f64(est.lower),
                    "upper": json_f64(est.upper),
                    "window": est.window,
                    "full_sequence_available": est.full_sequence_available,
                })
            }
            "preservation_check" => {
                let report = eta_preservation_check(model, 10, eta, 200_000);
                json!({
                    "eta": eta,
                    "holds": report.holds,
                    "witness": report.witness.map(|w| w.to_string()),
                    "nodes_checked": report.nodes_checked,
                    "complete": report.complete,
                })
            }
            "geometric_floor" => {
                let (floor, passes) =
                    geometric_mean_floor_check(&run.records, eta, f_star, 0.25, 1e-3)
                        .map_err(|e| CliError::Model(e.to_string()))?;
                json!({
                    "eta": eta,
                    "f_star": f_star,
                    "f_star_declared": declared.is_some(),
                    "floor": json_f64(floor),
                    "passes": passes,
                })
            }
            "concentration" => {
                let mass = concentration_mass(&run.frontier, f_star, 0.05);
                json!({
                    "f_star": f_star,
                    "f_star_declared": declared.is_some(),
                    "epsilon": 0.05,
                    "mass": mass,
                })
            }
            "coordinates" => {
                let (mean_c, mean_d) = coordinate_means(&run.frontier, model)
                    .map_err(|e| CliError::Model(e.to_string()))?;
                json!({ "mean_c": mean_c, "mean_d": mean_d })
            }
            other => {
                if let Some(profile_name) = other.strip_prefix("utility:") {
                    let profile = match profile_name {
                        "identity" => UtilityProfile::identity(),
                        "squared" => UtilityProfile::squared(),
                        "log" => UtilityProfile::log_fitness(),
                        _ => {
                            return Err(CliError::Config(format!(
                                "unknown utility profile {profile_name:?} (expected identity, squared, or log)"
                            )))
                        }
                    };
                    let u = expected_utility(&run.frontier, &profile);
                    json!({
                        "profile": profile_name,
                        "value": json_f64(u.value),
                        "neg_infinite_share": u.neg_infinite_share,
                    })
                } else {
                    return Err(CliError::Config(format!("unknown analysis {other:?}")));
                }
            }
        };
        report.insert(analysis.clone(), entry);
    }
    Ok(report)
}

fn tree_run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli.config.as_ref())?;
    expect_engine(&cfg, "tree")?;
    let prune = cli.prune.unwrap_or(cfg.prune_threshold);
    let artifacts = execute_tree(&cfg, prune)?;

    let trait_names: Vec<String> = artifacts.traits.iter().map(|t| t.name.clone()).collect();
    let csv = trajectory_csv(&artifacts.run.records, &trait_names);
    let trajectory_name = cfg.outputs.trajectory.as_deref().unwrap_or("trajectory.csv");
    write_artifact(&cli.out, trajectory_name, &csv)?;

    let snapshot = frontier_json(&artifacts.run.frontier, &artifacts.model);
    let frontier_name = cfg.outputs.frontier.as_deref().unwrap_or("frontier.json");
    write_artifact(&cli.out, frontier_name, &format!("{:#}\n", snapshot))?;

    let mut report = tree_report(&cfg, &artifacts)?;
    report.insert("model".into(), json!(artifacts.model.name));
    report.insert("steps".into(), json!(cfg.steps));
    report.insert("prune_threshold".into(), json!(prune));
    report.insert(
        "extinct_at".into(),
        artifacts.run.extinct_at.map_or(Value::Null, |t| json!(t)),
    );
    let report_name = cfg.outputs.report.as_deref().unwrap_or("report.json");
    write_artifact(&cli.out, report_name, &format!("{:#}\n", Value::Object(report)))?;

    if let Some(seed) = cli.seed.or(cfg.seed) {
        let records = particle_oracle(&artifacts.model, 10_000, cfg.steps, seed, &artifacts.traits)
            .map_err(|e| CliError::Model(e.to_string()))?;
        let mut oracle = String::from("t,mean_fitness");
        for name in &trait_names {
            oracle.push(',');
            oracle.push_str(name);
        }
        oracle.push('\n');
        for r in &records {
            oracle.push_str(&format!("{},{}", r.time, r.mean_fitness));
            for (_, share) in &r.trait_shares {
                oracle.push_str(&format!(",{share}"));
            }
            oracle.push('\n');
        }
        let oracle_name = cfg.outputs.oracle.as_deref().unwrap_or("oracle.csv");
        write_artifact(&cli.out, oracle_name, &oracle)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// finite engine

fn finite_model(spec: &ModelSpec) -> Result<FiniteModel, CliError> {
    let fitness: Vec<f64> = spec
        .params
        .get("fitness")
        .cloned()
        .map(serde_json::from_value)
        .transpose()
        .map_err(|e| CliError::Config(format!("bad fitness vector: {e}")))?
        .ok_or_else(|| CliError::Config("finite models need a fitness vector".into()))?;
    match spec.name.as_str() {
        "selection_only" => {
            FiniteModel::selection_only(fitness).map_err(|e| CliError::Model(e.to_string()))
        }
        "matrix" => {
            let mutation: Vec<Vec<f64>> = spec
                .params
                .get("mutation")
                .cloned()
                .map(serde_json::from_value)
                .transpose()
                .map_err(|e| CliError::Config(format!("bad mutation matrix: {e}")))?
                .ok_or_else(|| CliError::Config("matrix models need mutation columns".into()))?;
            FiniteModel::new(fitness, mutation).map_err(|e| CliError::Model(e.to_string()))
        }
        other => Err(CliError::Config(format!(
            "unknown finite model {other:?} (expected selection_only or matrix)"
        ))),
    }
}

fn finite_run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli.config.as_ref())?;
    expect_engine(&cfg, "finite")?;
    let model = finite_model(&cfg.model)?;
    let n = model.len();
    let traj = evolve_finite(&model, &PopulationState::uniform(n), cfg.steps);

    let mut csv = String::from("t,mean_fitness");
    for i in 0..n {
        csv.push_str(&format!(",x{i}"));
    }
    csv.push('\n');
    for (t, (state, mean)) in traj.states.iter().enumerate() {
        csv.push_str(&format!("{t},{mean}"));
        for x in state.frequencies() {
            csv.push_str(&format!(",{x}"));
        }
        csv.push('\n');
    }
    let trajectory_name = cfg.outputs.trajectory.as_deref().unwrap_or("trajectory.csv");
    write_artifact(&cli.out, trajectory_name, &csv)?;

    let perron = perron_eigenpair(&model, 1e-13, 200_000);
    let report = json!({
        "model": cfg.model.name,
        "steps": cfg.steps,
        "extinct_at": traj.extinct_at,
        "final_mean_fitness": traj.states.last().map(|(_, m)| *m),
        "perron": {
            "eigenvalue": perron.eigenvalue,
            "right_vector": perron.right_vector,
            "converged": perron.converged,
            "iterations": perron.iterations,
        },
    });
    let report_name = cfg.outputs.report.as_deref().unwrap_or("report.json");
    write_artifact(&cli.out, report_name, &format!("{:#}\n", report))
}

// ---------------------------------------------------------------------------
// gaussian

fn gaussian_run(cli: &Cli, args: &GaussianArgs) -> Result<(), CliError> {
    let peak = GaussianPeak::new(
        args.peak_height,
        args.landscape_variance,
        args.mutation_variance,
        args.dimension,
        vec![],
    )
    .map_err(|e| CliError::Model(e.to_string()))?;
    let eq = equilibrium(&peak);
    let discretized = if args.dimension == 1 {
        Some(
            discretized_dominant_eigenvalue(&peak, args.half_width, args.grid_points, 1e-12)
                .map_err(|e| CliError::Model(e.to_string()))?,
        )
    } else {
        None
    };
    let report = json!({
        "peak_height": args.peak_height,
        "landscape_variance": args.landscape_variance,
        "mutation_variance": args.mutation_variance,
        "dimension": args.dimension,
        "width": eq.width,
        "eigenvalue": eq.eigenvalue,
        "discretized_eigenvalue": discretized,
    });
    write_artifact(&cli.out, "gaussian.json", &format!("{:#}\n", report))
}

// ---------------------------------------------------------------------------
// lineage

fn lineage_run(cli: &Cli, args: &LineageArgs) -> Result<(), CliError> {
    let cfg = load_config(cli.config.as_ref())?;
    expect_engine(&cfg, "tree")?;
    let model =
        zoo::by_name(&cfg.model.name, &cfg.model.params).map_err(|e| CliError::Model(e.to_string()))?;
    let path = parse_path(&args.path)?;
    let steps = args.steps.unwrap_or(cfg.steps);
    let prune = cli.prune.unwrap_or(cfg.prune_threshold);
    let logs =
        lineage_sizes(&model, &path, steps, prune).map_err(|e| CliError::Model(e.to_string()))?;
    let window = args.window.unwrap_or_else(|| (steps / 5).max(1));
    let estimate = exponent_estimate(&logs, window).map_err(|e| CliError::Model(e.to_string()))?;
    let report = json!({
        "model": model.name,
        "path": path,
        "steps": steps,
        "log_sizes": logs.iter().map(|&v| json_f64(v)).collect::<Vec<_>>(),
        "estimate": {
            "horizon": estimate.horizon,
            "lower": json_f64(estimate.lower),
            "upper": json_f64(estimate.upper),
            "window": estimate.window,
            "full_sequence_available": estimate.full_sequence_available,
        },
    });
    write_artifact(&cli.out, "lineage.json", &format!("{:#}\n", report))
}

// ---------------------------------------------------------------------------
// sweep

fn sweep_summary(cfg: &ExperimentConfig, prune: f64) -> Result<Value, CliError> {
    let artifacts = execute_tree(cfg, prune)?;
    let records = &artifacts.run.records;
    let tail_start = records.len() - (records.len() / 4).max(1);
    let tail = &records[tail_start..];
    let tail_mean = |parity: usize| -> Option<f64> {
        let values: Vec<f64> = tail
            .iter()
            .filter(|r| r.time % 2 == parity)
            .map(|r| r.mean_fitness)
            .collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    };
    let eta = model_eta(cfg);
    let f_star = artifacts
        .model
        .fitness_supremum()
        .filter(|s| s.is_finite())
        .unwrap_or(1.0);
    let (floor, _) = geometric_mean_floor_check(records, eta, f_star, 0.25, 1e-3)
        .map_err(|e| CliError::Model(e.to_string()))?;
    let shares: serde_json::Map<String, Value> = artifacts
        .traits
        .iter()
        .map(|t| {
            let share = evotree::tree::trait_share(&artifacts.run.frontier, &artifacts.model, t);
            (t.name.clone(), json!(share))
        })
        .collect();
    Ok(json!({
        "final_mean_fitness": json_f64(records.last().map_or(0.0, |r| r.mean_fitness)),
        "tail_even_mean_fitness": tail_mean(0).map_or(Value::Null, json_f64),
        "tail_odd_mean_fitness": tail_mean(1).map_or(Value::Null, json_f64),
        "geometric_mean_floor": json_f64(floor),
        "final_trait_shares": shares,
        "truncated_share_bound": artifacts.run.frontier.truncated_share_bound,
        "extinct_at": artifacts.run.extinct_at,
    }))
}

fn sweep_run(cli: &Cli, args: &SweepArgs) -> Result<(), CliError> {
    let mut cfg = load_config(cli.config.as_ref())?;
    expect_engine(&cfg, "tree")?;
    let prune = cli.prune.unwrap_or(cfg.prune_threshold);
    let mut rows = Vec::new();
    for &value in &args.values {
        cfg.model
            .params
            .insert(args.axis.clone(), json!(value));
        // Per-value failures are reported in the row, not fatal.
        let row = match sweep_summary(&cfg, prune) {
            Ok(summary) => json!({ "value": value, "summary": summary }),
            Err(e) => json!({ "value": value, "error": e.to_string() }),
        };
        rows.push(row);
    }
    let table = json!({
        "model": cfg.model.name,
        "axis": args.axis,
        "rows": rows,
    });
    write_artifact(&cli.out, "sweep.json", &format!("{:#}\n", table))
}

// ---------------------------------------------------------------------------
// verify

fn verify_run() -> Result<(), CliError> {
    let results = verify::run_all();
    let mut failures = 0;
    for r in &results {
        println!(
            "[{}] criterion {:2} {:28} {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.details
        );
        if !r.passed {
            failures += 1;
        }
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failures,
        results.len()
    );
    if failures > 0 {
        Err(CliError::VerifyFailed(failures))
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Finite { action: RunAction::Run } => finite_run(cli),
        Command::Tree { action: RunAction::Run } => tree_run(cli),
        Command::Gaussian(args) => gaussian_run(cli, args),
        Command::Lineage(args) => lineage_run(cli, args),
        Command::Sweep(args) => sweep_run(cli, args),
        Command::Verify => verify_run(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
