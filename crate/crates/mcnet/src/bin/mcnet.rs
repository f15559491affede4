//! Command-line front end: simulate trajectories, solve steady states, run
//! the verification suites, and emit canonical preset instances.
//!
//! Exit codes: 0 on success, 1 when `verify` finds violations, 2 on
//! configuration or parse errors, 3 on numerical failures. Logging is
//! controlled by `MCNET_LOG={error|info|debug}`.

use clap::{Args, Parser, Subcommand, ValueEnum};
use mcnet::dynamics::{self, StateVector};
use mcnet::error::Error;
use mcnet::files::{self, SteadyReport};
use mcnet::graph::WeightedGraph;
use mcnet::steady::{self, SolveMethod};
use mcnet::verify::{self, Suite, VerifyOptions};
use mcnet::ChainParams;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mcnet", version, about = "Coupled two-state chains on networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the flow and write a trajectory CSV.
    Simulate(SimulateArgs),
    /// Solve for the steady state and write a JSON report.
    Steady(SteadyArgs),
    /// Fuzz the analytic properties on seeded random instances.
    Verify(VerifyArgs),
    /// Emit a canonical graph/params instance.
    Preset(PresetArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Edge-list graph file.
    #[arg(long)]
    graph: PathBuf,
    /// Params JSON file.
    #[arg(long)]
    params: PathBuf,
    /// Integrator step.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// End time.
    #[arg(long = "t-end")]
    t_end: f64,
    /// Steady-state JSON report to record relative entropy against.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Initial state: a single probability broadcast to all nodes, or a
    /// comma-separated list.
    #[arg(long, default_value = "0.5")]
    p0: String,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Auto,
    Ode,
    Newton,
    Iterate,
}

impl From<MethodArg> for SolveMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => SolveMethod::Auto,
            MethodArg::Ode => SolveMethod::Ode,
            MethodArg::Newton => SolveMethod::Newton,
            MethodArg::Iterate => SolveMethod::Iterate,
        }
    }
}

#[derive(Args)]
struct SteadyArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    params: PathBuf,
    /// Solver; `auto` chains iterate -> newton -> ode.
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    /// Residual tolerance in the sup norm.
    #[arg(long, default_value_t = steady::DEFAULT_TOL)]
    tol: f64,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Entropy,
    Lemmas,
    Bounds,
    Embedding,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Entropy => Suite::Entropy,
            SuiteArg::Lemmas => Suite::Lemmas,
            SuiteArg::Bounds => Suite::Bounds,
            SuiteArg::Embedding => Suite::Embedding,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Property family to fuzz.
    #[arg(long, value_enum)]
    suite: SuiteArg,
    /// Trials per property.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// PRNG seed (ChaCha8, one stream per suite).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Check this graph instead of sampling instances (requires --params).
    #[arg(long, requires = "params")]
    graph: Option<PathBuf>,
    /// Params for --graph.
    #[arg(long, requires = "graph")]
    params: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum PresetName {
    Sis,
    Homogeneous,
    #[value(name = "gamma-hat-zero")]
    GammaHatZero,
}

#[derive(Args)]
struct PresetArgs {
    /// Which instance family to emit.
    #[arg(value_enum)]
    name: PresetName,
    /// Node count.
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Degree of the homogeneous circulant graph.
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Coupling for sis (transmission) and gamma-hat-zero (both directions).
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Couplings for the homogeneous preset.
    #[arg(long, default_value_t = 1.0)]
    gamma01: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma10: f64,
    /// Directory receiving NAME.edges and NAME.params.json.
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Parse { .. }
        | Error::InvalidGraph(_)
        | Error::InvalidParams(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::DimensionMismatch { .. }
        | Error::OutsideCube { .. }
        | Error::TooManyNodes { .. } => 2,
        _ => 3,
    }
}

fn load_instance(
    graph: &PathBuf,
    params: &PathBuf,
) -> Result<(WeightedGraph, ChainParams), Error> {
    let g = WeightedGraph::load(graph)?;
    let p = files::load_params(params, g.node_count())?;
    Ok((g, p))
}

fn parse_p0(spec: &str, n: usize) -> Result<StateVector, Error> {
    let values: Vec<f64> = spec
        .split(',')
        .map(|tok| {
            tok.trim().parse::<f64>().map_err(|_| Error::InvalidParams(
                format!("bad p0 component {tok:?}"),
            ))
        })
        .collect::<Result<_, _>>()?;
    match values.as_slice() {
        [single] => StateVector::constant(n, *single),
        _ if values.len() == n => StateVector::from_slice(&values),
        _ => Err(Error::DimensionMismatch {
            expected: n,
            got: values.len(),
        }),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let (g, params) = load_instance(&args.graph, &args.params)?;
    if !(args.dt > 0.0) || !(args.t_end > 0.0) {
        return Err(Error::InvalidParams(
            "dt and t-end must be positive".into(),
        ));
    }
    let p0 = parse_p0(&args.p0, g.node_count())?;
    let reference = match &args.reference {
        Some(path) => Some(files::load_steady_report(path)?.to_steady_state()?),
        None => None,
    };

    let tr = dynamics::integrate(&g, &params, &p0, args.dt, args.t_end, reference.as_ref())?;
    let file = std::fs::File::create(&args.out)?;
    tr.write_csv(std::io::BufWriter::new(file))?;

    let summary = json!({
        "samples": tr.len(),
        "t_end": tr.times.last(),
        "final_state": tr.final_state().as_slice(),
        "final_residual": tr.final_residual(),
        "clamped": tr.clamped,
        "final_entropy": tr.entropies.as_ref().map(|e| e[e.len() - 1]),
        "csv": args.out.display().to_string(),
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_steady(args: &SteadyArgs) -> Result<(), Error> {
    let (g, params) = load_instance(&args.graph, &args.params)?;
    if !(args.tol > 0.0) {
        return Err(Error::InvalidParams("tol must be positive".into()));
    }
    let s = steady::solve_steady(&g, &params, args.method.into(), args.tol)?;
    let report = SteadyReport::build(&g, &params, &s);
    std::fs::write(&args.out, serde_json::to_string_pretty(&report)? + "\n")?;
    log::info!(
        "steady state via {} in {} iterations, residual {:.3e}",
        report.method,
        report.iterations,
        report.residual
    );
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, Error> {
    let instance = match (&args.graph, &args.params) {
        (Some(g), Some(p)) => Some(load_instance(g, p)?),
        _ => None,
    };
    let report = verify::run(&VerifyOptions {
        suite: args.suite.into(),
        trials: args.trials,
        seed: args.seed,
        instance,
    })?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(report.passed())
}

fn cmd_preset(args: &PresetArgs) -> Result<(), Error> {
    let (name, (g, params)) = match args.name {
        PresetName::Sis => ("sis", mcnet::presets::sis_preset(args.n, args.beta, args.gamma)?),
        PresetName::Homogeneous => (
            "homogeneous",
            mcnet::presets::homogeneous_preset(
                args.n,
                args.d,
                args.alpha,
                args.beta,
                args.gamma01,
                args.gamma10,
            )?,
        ),
        PresetName::GammaHatZero => (
            "gamma-hat-zero",
            mcnet::presets::gamma_hat_zero_preset(args.n, args.alpha, args.beta, args.gamma)?,
        ),
    };
    std::fs::create_dir_all(&args.out_dir)?;
    let graph_path = args.out_dir.join(format!("{name}.edges"));
    let params_path = args.out_dir.join(format!("{name}.params.json"));
    std::fs::write(&graph_path, g.to_edge_list())?;
    files::save_params(&params_path, &params)?;
    println!("{}", graph_path.display());
    println!("{}", params_path.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MCNET_LOG", "error")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args).map(|()| true),
        Command::Steady(args) => cmd_steady(args).map(|()| true),
        Command::Verify(args) => cmd_verify(args),
        Command::Preset(args) => cmd_preset(args).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
