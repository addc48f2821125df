//! `ats`: command-line front end for scenario trees, model compilation,
//! bounds, heuristics, the newsvendor simulation and expansion sweeps.

use std::fs;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ats_core::bounds::{bounds_report, select_t_cb, select_t_db};
use ats_core::experiments::{run_sweep, ExperimentPlan};
use ats_core::genexp::GenExpData;
use ats_core::heuristics::{run_method, Method};
use ats_core::newsvendor::{best_revision_time, simulate_curve, write_curve_csv, CurvePolicy, NewsvendorConfig, Simulation};
use ats_core::scenario_tree::generate_tree;
use ats_core::{BuildOptions, CapacityExpansionData, ExpansionProblem, ScenarioTree, Structure, TreeGenConfig};
use ats_lp::{read_lp, solve, write_lp, Backend, SolverConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "ats", version, about = "Adaptive two-stage stochastic programming on scenario trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or check scenario tree files.
    #[command(subcommand)]
    Tree(TreeCommand),
    /// Solve an LP file.
    Solve(SolveArgs),
    /// Write a model of a tree and a dataset as an LP file.
    Compile(CompileArgs),
    /// Closed-form bounds on the value of revising at each stage.
    Bounds(BoundsArgs),
    /// Choose revision times with a heuristic or the exact joint model.
    Heuristic(HeuristicArgs),
    /// Simulate newsvendor policies against the revision time.
    Newsvendor(NewsvendorArgs),
    /// Generation expansion experiments.
    #[command(subcommand)]
    Genexp(GenexpCommand),
}

#[derive(Subcommand)]
enum TreeCommand {
    /// Random M-ary tree with multiplicative demand growth.
    Generate(GenerateArgs),
    /// Load a tree file and report its shape.
    Validate {
        tree: PathBuf,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 2)]
    branches: usize,
    #[arg(long, default_value_t = 4)]
    stages: usize,
    /// Multiplier range `[1 - gamma t, 1.2 + gamma t]`.
    #[arg(long, default_value_t = 0.005)]
    gamma: f64,
    /// Same multiplier range `LOW,HIGH` at every stage instead of gamma.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    alpha: Option<Vec<f64>>,
    /// Payload names; the subperiods of the bundled expansion dataset by default.
    #[arg(long, value_delimiter = ',')]
    fields: Option<Vec<String>>,
    /// Root value per field.
    #[arg(long, value_delimiter = ',')]
    root_demand: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SolverArgs {
    /// Relative MIP gap.
    #[arg(long, default_value_t = 1e-3)]
    gap: f64,
    /// Seconds.
    #[arg(long, default_value_t = 7200.0)]
    timelimit: f64,
    /// `highs` or `embedded`.
    #[arg(long)]
    backend: Option<String>,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig> {
        let mut c = SolverConfig::default().with_gap(self.gap).with_time_limit(self.timelimit);
        if let Some(b) = &self.backend {
            c = c.with_backend(b.parse::<Backend>().map_err(anyhow::Error::msg)?);
        }
        Ok(c)
    }
}

#[derive(Args)]
struct SolveArgs {
    model: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write variable values as JSON.
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Formulation {
    Ms,
    Ts,
    AtsFixed,
    AtsJoint,
    Genexp,
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long, value_enum)]
    formulation: Formulation,
    #[arg(long)]
    tree: PathBuf,
    /// Capacity expansion or generation expansion dataset (JSON).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Revision time per resource.
    #[arg(long, value_delimiter = ',')]
    revisions: Option<Vec<usize>>,
    /// Big-M per resource for the joint model.
    #[arg(long, value_delimiter = ',')]
    big_m: Option<Vec<f64>>,
    /// Continuous capacities.
    #[arg(long)]
    relax: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    tree: PathBuf,
    /// Payload holding unit costs.
    #[arg(long)]
    a: String,
    /// Payload holding requirements.
    #[arg(long)]
    delta: String,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct HeuristicArgs {
    #[arg(long, value_parser = parse_method)]
    method: Method,
    #[arg(long)]
    tree: PathBuf,
    /// Capacity expansion or generation expansion dataset (JSON).
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct NewsvendorArgs {
    /// `1a`, `1b`, `1c` or a JSON configuration file.
    #[arg(long, default_value = "1a")]
    config: String,
    #[arg(long, value_delimiter = ',', default_value = "static,adaptive,dynamic")]
    policies: Vec<String>,
    /// Range of revision times, e.g. `1..5`.
    #[arg(long, default_value = "1..5")]
    revisions: String,
    #[arg(long, default_value_t = 1000)]
    scenarios: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Subcommand)]
enum GenexpCommand {
    /// Run an experiment plan and write its tables, plans and manifest.
    Sweep {
        /// Plan file; the desk plan when absent.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Use the full plan instead of the desk plan.
        #[arg(long, conflicts_with = "plan")]
        full: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print the bundled dataset.
    Data,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: ats_core::Error| e.to_string())
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>> {
    let (a, b) = s.split_once("..").context("expected a range like 1..5")?;
    let a: usize = a.trim().parse()?;
    let b: usize = b.trim_start_matches('=').trim().parse()?;
    if a == 0 || a > b {
        bail!("empty revision range {s}");
    }
    Ok(a..=b)
}

/// A dataset file holds either capacity expansion or generation expansion
/// data; without a file the bundled expansion data is used.
enum Dataset {
    Capacity(CapacityExpansionData),
    Generation(GenExpData),
}

impl Dataset {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Dataset::Generation(GenExpData::default()));
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        if let Ok(d) = serde_json::from_str::<CapacityExpansionData>(&text) {
            return Ok(Dataset::Capacity(d));
        }
        Ok(Dataset::Generation(
            GenExpData::from_json(&text).with_context(|| format!("parsing {}", path.display()))?,
        ))
    }

    fn problem(&self) -> &dyn ExpansionProblem {
        match self {
            Dataset::Capacity(d) => d,
            Dataset::Generation(d) => d,
        }
    }
}

fn tree_generate(args: GenerateArgs) -> Result<()> {
    let data = GenExpData::default();
    let fields = args.fields.unwrap_or_else(|| data.subperiod_names());
    let root = match args.root_demand {
        Some(r) => r,
        None if fields == data.subperiod_names() => data.subperiods.iter().map(|s| s.root_demand).collect(),
        None => bail!("--root-demand is required with custom fields"),
    };
    let config = match args.alpha {
        Some(a) => TreeGenConfig::constant(args.branches, args.stages, fields, root, a[0], a[1], args.seed),
        None => TreeGenConfig::with_gamma(args.branches, args.stages, fields, root, args.gamma, args.seed),
    };
    let tree = generate_tree(&config)?;
    tree.save(&args.output)?;
    println!("{} nodes, {} stages -> {}", tree.len(), tree.stage_count(), args.output.display());
    Ok(())
}

fn tree_validate(path: &Path) -> Result<()> {
    let tree = ScenarioTree::load(path).with_context(|| format!("loading {}", path.display()))?;
    println!("valid: {} nodes, {} stages, {} leaves", tree.len(), tree.stage_count(), tree.leaves().len());
    for (name, values) in tree.payloads() {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!("  {name}: [{lo}, {hi}]");
    }
    Ok(())
}

fn solve_file(args: SolveArgs) -> Result<()> {
    let text = fs::read_to_string(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let model = read_lp(&text)?;
    let sol = solve(&model, &args.solver.config()?)?;
    println!("status {}", sol.status);
    println!("objective {}", sol.objective);
    println!("bound {}", sol.bound);
    println!("seconds {:.3}", sol.seconds);
    if let Some(out) = args.solution {
        let values: serde_json::Map<String, serde_json::Value> = model
            .variables
            .iter()
            .zip(&sol.values)
            .map(|(v, x)| (v.name.clone(), serde_json::json!(x)))
            .collect();
        let doc = serde_json::json!({
            "status": sol.status.to_string(),
            "objective": sol.objective,
            "bound": sol.bound,
            "values": values,
        });
        fs::write(&out, serde_json::to_string_pretty(&doc)?)?;
    }
    Ok(())
}

fn compile(args: CompileArgs) -> Result<()> {
    let tree = ScenarioTree::load(&args.tree)?;
    let data = Dataset::load(args.data.as_deref())?;
    if matches!(args.formulation, Formulation::Genexp) && !matches!(data, Dataset::Generation(_)) {
        bail!("the genexp formulation needs a generation expansion dataset");
    }
    let problem = data.problem();
    let structure = match (args.formulation, &args.revisions) {
        (Formulation::Ms, _) => Structure::MultiStage,
        (Formulation::Ts, _) => Structure::TwoStage,
        (Formulation::AtsFixed, Some(rv)) | (Formulation::Genexp, Some(rv)) => Structure::Fixed(rv.clone()),
        (Formulation::AtsFixed, None) => bail!("ats-fixed needs --revisions"),
        (Formulation::AtsJoint, _) | (Formulation::Genexp, None) => Structure::Joint {
            x_upper: match &args.big_m {
                Some(m) => m.clone(),
                None => problem.default_big_m(&tree)?,
            },
        },
    };
    let opts = BuildOptions {
        relax_state: args.relax,
        ..Default::default()
    };
    let compiled = problem.compile(&tree, &structure, &opts)?;
    fs::write(&args.output, write_lp(&compiled.model)?)?;
    println!(
        "{}: {} variables ({} integer), {} constraints -> {}",
        structure.label(),
        compiled.model.num_vars(),
        compiled.model.num_integer(),
        compiled.model.num_constraints(),
        args.output.display()
    );
    Ok(())
}

fn bounds(args: BoundsArgs) -> Result<()> {
    let tree = ScenarioTree::load(&args.tree)?;
    let a = tree.payload(&args.a)?;
    let d = tree.payload(&args.delta)?;
    let report = bounds_report(&tree, a, d)?;
    report.write_csv(fs::File::create(&args.report)?)?;
    if tree.stage_count() >= 2 {
        println!("t_DB = {}, t_CB = {}", select_t_db(&tree, d)?, select_t_cb(&tree, a)?);
    }
    println!("delta* = {}, delta bar = {}", report.tree.delta_max, report.tree.delta_bar);
    Ok(())
}

fn heuristic(args: HeuristicArgs) -> Result<()> {
    let tree = ScenarioTree::load(&args.tree)?;
    let data = Dataset::load(args.data.as_deref())?;
    let result = run_method(args.method, &tree, data.problem(), &args.solver.config()?)?;
    fs::write(&args.report, serde_json::to_string_pretty(&result)?)?;
    println!(
        "{}: revisions {:?}, objective {}, status {}",
        result.method, result.revisions, result.objective, result.status
    );
    Ok(())
}

fn newsvendor(args: NewsvendorArgs) -> Result<()> {
    let config = match args.config.as_str() {
        "1a" | "stationary" => NewsvendorConfig::stationary(),
        "1b" | "increasing-demand" => NewsvendorConfig::increasing_demand(),
        "1c" | "increasing-costs" => NewsvendorConfig::increasing_costs(),
        path => serde_json::from_str(&fs::read_to_string(path).with_context(|| format!("reading {path}"))?)?,
    };
    let policies: Vec<CurvePolicy> = args.policies.iter().map(|p| p.parse()).collect::<Result<_, _>>()?;
    let sim = Simulation {
        scenarios: args.scenarios,
        seed: args.seed,
    };
    let points = simulate_curve(&config, &policies, parse_range(&args.revisions)?, &sim)?;
    write_curve_csv(&points, fs::File::create(&args.output)?)?;
    if let Some(t) = best_revision_time(&points) {
        println!("best revision time {t}");
    }
    Ok(())
}

fn genexp(cmd: GenexpCommand) -> Result<()> {
    match cmd {
        GenexpCommand::Sweep { plan, full, output } => {
            let plan = match (plan, full) {
                (Some(p), _) => ExperimentPlan::load(&p).with_context(|| format!("loading {}", p.display()))?,
                (None, true) => ExperimentPlan::full(),
                (None, false) => ExperimentPlan::desk(),
            };
            let results = run_sweep(&plan)?;
            results.write(&output)?;
            let failed = results.rvats.iter().filter(|c| c.error.is_some()).count();
            println!(
                "{} cells ({failed} failed) in {:.0} s -> {}",
                results.rvats.len(),
                results.seconds,
                output.display()
            );
        }
        GenexpCommand::Data => {
            let text = GenExpData::default().to_json()? + "\n";
            match std::io::stdout().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Tree(TreeCommand::Generate(a)) => tree_generate(a),
        Command::Tree(TreeCommand::Validate { tree }) => tree_validate(&tree),
        Command::Solve(a) => solve_file(a),
        Command::Compile(a) => compile(a),
        Command::Bounds(a) => bounds(a),
        Command::Heuristic(a) => heuristic(a),
        Command::Newsvendor(a) => newsvendor(a),
        Command::Genexp(c) => genexp(c),
    }
}
