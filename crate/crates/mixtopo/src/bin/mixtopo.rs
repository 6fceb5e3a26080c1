//! Command-line front end: generate topologies, profile anonymity
//! convergence, evaluate attacks, and estimate spectral quantities, with
//! JSON/CSV outputs and reproducible seeds.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use mixtopo::anonymity::{convergence_profile, recommend_route_length, ConvergenceCriterion};
use mixtopo::attacks::{
    network_batch_size, simulate_compromise, top_degree_nodes, CompromiseScenario,
};
use mixtopo::generators::{GeneratorConfig, SfrShape};
use mixtopo::graph::{load_edge_list, save_edge_list, Graph};
use mixtopo::markov::{
    conductance_exact, degree_stationary, lambda2_size_experiment, Distribution, TransitionMatrix,
};
use mixtopo::sub_seed;

const SCHEMA_VERSION: u32 = 1;
const OUT_DIR_ENV: &str = "MIXTOPO_OUT_DIR";

#[derive(Parser)]
#[command(name = "mixtopo", version, about = "Mix-network topology analysis toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic topology and write it as an edge list.
    Generate(GenerateArgs),
    /// Profile anonymity convergence of the random walk on a graph.
    Analyze(AnalyzeArgs),
    /// Evaluate traffic-analysis attacks on a graph.
    #[command(subcommand)]
    Attack(AttackCommand),
    /// Estimate the second eigenvalue, conductance, or run a size sweep.
    Spectral(SpectralArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Model: er, ba, sfr, kws, regular.
    #[arg(long)]
    model: String,
    /// Node count (er, ba, sfr, regular; kws derives it from --side).
    #[arg(long)]
    nodes: Option<usize>,
    /// Edge probability (er).
    #[arg(long)]
    p: Option<f64>,
    /// Edges per arriving node (ba).
    #[arg(long)]
    m: Option<usize>,
    /// Power-law intercept (sfr).
    #[arg(long)]
    alpha: Option<f64>,
    /// Power-law exponent (sfr).
    #[arg(long)]
    beta: Option<f64>,
    /// Target mean degree (sfr alternative to --alpha/--beta).
    #[arg(long)]
    mean_degree: Option<f64>,
    /// Lattice side length (kws).
    #[arg(long)]
    side: Option<usize>,
    /// Local-link lattice radius (kws).
    #[arg(long, default_value_t = 1)]
    radius: usize,
    /// Long-range links per node (kws).
    #[arg(long, default_value_t = 0)]
    q: usize,
    /// Long-range distance exponent (kws).
    #[arg(long, default_value_t = 2.0)]
    r_exp: f64,
    /// Uniform degree (regular).
    #[arg(long)]
    degree: Option<usize>,
}

impl ModelArgs {
    fn config(&self) -> Result<GeneratorConfig, CliError> {
        let need_nodes = || {
            self.nodes
                .ok_or_else(|| CliError::usage("--nodes is required for this model"))
        };
        match self.model.as_str() {
            "er" => Ok(GeneratorConfig::Er {
                n: need_nodes()?,
                p: self.p.ok_or_else(|| CliError::usage("er needs --p"))?,
            }),
            "ba" => Ok(GeneratorConfig::Ba {
                n: need_nodes()?,
                m: self.m.ok_or_else(|| CliError::usage("ba needs --m"))?,
            }),
            "sfr" => {
                let shape = match (self.mean_degree, self.alpha, self.beta) {
                    (Some(mean), None, None) => SfrShape::MeanDegree { mean },
                    (None, Some(alpha), Some(beta)) => SfrShape::AlphaBeta { alpha, beta },
                    _ => {
                        return Err(CliError::usage(
                            "sfr needs either --mean-degree or both --alpha and --beta",
                        ))
                    }
                };
                Ok(GeneratorConfig::Sfr {
                    n: need_nodes()?,
                    shape,
                })
            }
            "kws" => Ok(GeneratorConfig::Kws {
                side: self
                    .side
                    .ok_or_else(|| CliError::usage("kws needs --side"))?,
                radius: self.radius,
                q: self.q,
                r_exp: self.r_exp,
            }),
            "regular" => Ok(GeneratorConfig::Regular {
                n: need_nodes()?,
                degree: self
                    .degree
                    .ok_or_else(|| CliError::usage("regular needs --degree"))?,
            }),
            other => Err(CliError::usage(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output edge-list path; a manifest is written alongside.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Edge-list file to analyze.
    #[arg(long)]
    graph: PathBuf,
    /// Treat the edge list as directed (overridden by a file header).
    #[arg(long)]
    directed: bool,
    #[arg(long, default_value_t = 100)]
    t_max: usize,
    /// Convergence rule: entropy-gap, sustained-entropy-gap, rpd.
    #[arg(long, default_value = "entropy-gap")]
    criterion: String,
    #[arg(long, default_value_t = 0.01)]
    threshold: f64,
    /// Consecutive steps required by sustained-entropy-gap.
    #[arg(long, default_value_t = 10)]
    hold: usize,
    /// Initial distribution: uniform or point.
    #[arg(long, default_value = "uniform")]
    q0: String,
    /// Node carrying the point mass when --q0 point.
    #[arg(long, default_value_t = 0)]
    q0_node: usize,
    /// Evolve the lazy walk (P + I)/2 instead of P.
    #[arg(long)]
    lazy: bool,
    /// Restrict analysis to the largest connected component.
    #[arg(long)]
    giant_component: bool,
    /// Also report the smallest step reaching this fraction of maximal
    /// anonymity.
    #[arg(long)]
    fraction: Option<f64>,
    /// Report JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AttackCommand {
    /// Monte-Carlo fraction of routes fully inside a compromised set.
    Compromise(CompromiseArgs),
    /// Intersection-attack batch size from the maximum degree.
    BatchSize(BatchSizeArgs),
}

#[derive(Args)]
struct CompromiseArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    directed: bool,
    /// Compromise the k highest-degree nodes.
    #[arg(long)]
    top_k: Option<usize>,
    /// File with one compromised node id per line.
    #[arg(long)]
    nodes_file: Option<PathBuf>,
    /// Route length in visited nodes.
    #[arg(long)]
    length: usize,
    #[arg(long, default_value_t = 100_000)]
    walks: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BatchSizeArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    directed: bool,
    /// Traffic deviation percentage (5 means 5%).
    #[arg(long, default_value_t = 5.0)]
    f: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectralArgs {
    /// Edge-list file (alternative to --model).
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    directed: bool,
    #[command(flatten)]
    model: SweepModelArgs,
    /// Comma-separated node counts for the size sweep (requires --model).
    #[arg(long, value_delimiter = ',')]
    size_sweep: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Also compute exact conductance (n <= 24) and the eigenvalue bound.
    #[arg(long)]
    conductance: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepModelArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    mean_degree: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    side: Option<usize>,
    #[arg(long, default_value_t = 1)]
    radius: usize,
    #[arg(long, default_value_t = 0)]
    q: usize,
    #[arg(long, default_value_t = 2.0)]
    r_exp: f64,
    #[arg(long)]
    degree: Option<usize>,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(msg: impl Into<String>) -> CliError {
        CliError {
            code: 2,
            message: msg.into(),
        }
    }
    fn generation(msg: impl Into<String>) -> CliError {
        CliError {
            code: 3,
            message: msg.into(),
        }
    }
    fn graph_condition(msg: impl Into<String>) -> CliError {
        CliError {
            code: 4,
            message: msg.into(),
        }
    }
    fn io(msg: impl std::fmt::Display) -> CliError {
        CliError {
            code: 1,
            message: msg.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args, started),
        Command::Analyze(args) => cmd_analyze(args, started),
        Command::Attack(AttackCommand::Compromise(args)) => cmd_compromise(args, started),
        Command::Attack(AttackCommand::BatchSize(args)) => cmd_batch_size(args, started),
        Command::Spectral(args) => cmd_spectral(args, started),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

/// Resolves a path against MIXTOPO_OUT_DIR when it is relative.
fn resolve_out(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) => PathBuf::from(dir).join(path),
        None => path.to_path_buf(),
    }
}

fn write_manifest(
    command: &str,
    config: serde_json::Value,
    seed: u64,
    outputs: &[&Path],
    started: Instant,
) -> Result<(), CliError> {
    let primary = outputs[0];
    let manifest_path = primary.with_extension(format!(
        "{}manifest.json",
        primary
            .extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    let manifest = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "seed": seed,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "duration_ms": started.elapsed().as_millis() as u64,
    });
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).unwrap(),
    )
    .map_err(CliError::io)
}

fn emit_report<T: Serialize>(report: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).unwrap();
    match out {
        Some(path) => std::fs::write(path, text).map_err(CliError::io),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_graph(path: &Path, directed: bool) -> Result<Graph, CliError> {
    load_edge_list(path, directed)
        .map(|(g, _)| g)
        .map_err(|e| CliError::usage(format!("cannot load {}: {e}", path.display())))
}

/// Connected graph ready for walk analysis, honoring --giant-component.
fn prepare_graph(g: Graph, take_giant: bool) -> Result<Graph, CliError> {
    if g.is_connected() {
        return Ok(g);
    }
    if !take_giant {
        return Err(CliError::graph_condition(
            "graph is disconnected; rerun with --giant-component to analyze the largest component",
        ));
    }
    let (gc, _, _) = g.giant_component();
    Ok(gc)
}

fn cmd_generate(args: GenerateArgs, started: Instant) -> Result<(), CliError> {
    let config = args.model.config()?;
    let g = config
        .generate(sub_seed(args.seed, "generation"))
        .map_err(|e| CliError::generation(e.to_string()))?;
    let out = resolve_out(&args.out);
    save_edge_list(&g, &out).map_err(CliError::io)?;
    write_manifest(
        "generate",
        serde_json::to_value(&config).unwrap(),
        args.seed,
        &[&out],
        started,
    )
}

fn stationary_for(g: &Graph, p: &TransitionMatrix) -> Result<Distribution, CliError> {
    if g.directed() {
        p.stationary(1e-12, 200_000, true)
            .map(|r| r.dist)
            .map_err(|e| CliError::graph_condition(e.to_string()))
    } else {
        degree_stationary(g).map_err(|e| CliError::graph_condition(e.to_string()))
    }
}

fn cmd_analyze(args: AnalyzeArgs, started: Instant) -> Result<(), CliError> {
    let g = load_graph(&args.graph, args.directed)?;
    let g = prepare_graph(g, args.giant_component)?;
    let p = TransitionMatrix::from_graph(&g)
        .map_err(|e| CliError::graph_condition(e.to_string()))?;
    let pi = stationary_for(&g, &p)?;
    let q0 = match args.q0.as_str() {
        "uniform" => Distribution::uniform(g.n()),
        "point" => {
            if args.q0_node >= g.n() {
                return Err(CliError::usage("--q0-node outside graph"));
            }
            Distribution::point_mass(g.n(), args.q0_node)
        }
        other => return Err(CliError::usage(format!("unknown q0 {other:?}"))),
    };
    let criterion = match args.criterion.as_str() {
        "entropy-gap" => ConvergenceCriterion::EntropyGap {
            threshold: args.threshold,
        },
        "sustained-entropy-gap" => ConvergenceCriterion::SustainedEntropyGap {
            threshold: args.threshold,
            hold: args.hold,
        },
        "rpd" => ConvergenceCriterion::Rpd {
            threshold: args.threshold,
        },
        other => return Err(CliError::usage(format!("unknown criterion {other:?}"))),
    };
    let report = convergence_profile(&p, &q0, &pi, args.t_max, criterion, args.lazy)
        .map_err(|e| CliError::graph_condition(e.to_string()))?;
    let recommended = match args.fraction {
        Some(f) => Some(
            recommend_route_length(&report, f).map_err(|e| CliError::usage(e.to_string()))?,
        ),
        None => None,
    };
    let payload = json!({
        "schema_version": SCHEMA_VERSION,
        "graph": args.graph.display().to_string(),
        "n": g.n(),
        "directed": g.directed(),
        "max_anonymity_bits": report.max_anonymity_bits,
        "t_converge": report.t_converge,
        "criterion": report.criterion,
        "recommended_route_length": recommended,
        "trace": report.trace,
    });
    let mut outputs: Vec<PathBuf> = Vec::new();
    if let Some(csv) = &args.csv {
        let csv = resolve_out(csv);
        report.write_csv(&csv).map_err(|e| CliError::io(e.to_string()))?;
        outputs.push(csv);
    }
    match &args.out {
        Some(out) => {
            let out = resolve_out(out);
            emit_report(&payload, Some(&out))?;
            outputs.insert(0, out);
            let refs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
            let config = json!({
                "graph": args.graph.display().to_string(),
                "t_max": args.t_max,
                "criterion": args.criterion,
                "threshold": args.threshold,
                "q0": args.q0,
                "lazy": args.lazy,
            });
            write_manifest("analyze", config, 0, &refs, started)
        }
        None => emit_report(&payload, None),
    }
}

fn cmd_compromise(args: CompromiseArgs, started: Instant) -> Result<(), CliError> {
    let g = load_graph(&args.graph, args.directed)?;
    let compromised: Vec<u32> = match (&args.top_k, &args.nodes_file) {
        (Some(k), None) => {
            if *k > g.n() {
                return Err(CliError::usage(format!(
                    "--top-k {k} exceeds node count {}",
                    g.n()
                )));
            }
            top_degree_nodes(&g, *k)
        }
        (None, Some(path)) => std::fs::read_to_string(path)
            .map_err(CliError::io)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.trim()
                    .parse()
                    .map_err(|_| CliError::usage(format!("bad node id {l:?}")))
            })
            .collect::<Result<_, _>>()?,
        _ => {
            return Err(CliError::usage(
                "exactly one of --top-k or --nodes-file is required",
            ))
        }
    };
    let scenario = CompromiseScenario {
        compromised,
        walk_length: args.length,
        n_walks: args.walks,
        seed: sub_seed(args.seed, "walks"),
        threads: args.threads,
    };
    let report =
        simulate_compromise(&g, &scenario).map_err(|e| CliError::usage(e.to_string()))?;
    let payload = json!({
        "schema_version": SCHEMA_VERSION,
        "graph": args.graph.display().to_string(),
        "compromised_count": scenario.compromised.len(),
        "report": report,
    });
    match &args.out {
        Some(out) => {
            let out = resolve_out(out);
            emit_report(&payload, Some(&out))?;
            write_manifest(
                "attack compromise",
                serde_json::to_value(&scenario).unwrap(),
                args.seed,
                &[&out],
                started,
            )
        }
        None => emit_report(&payload, None),
    }
}

fn cmd_batch_size(args: BatchSizeArgs, started: Instant) -> Result<(), CliError> {
    if args.f <= 0.0 {
        return Err(CliError::usage("--f must be positive"));
    }
    let g = load_graph(&args.graph, args.directed)?;
    let nb = network_batch_size(&g, args.f);
    let payload = json!({
        "schema_version": SCHEMA_VERSION,
        "graph": args.graph.display().to_string(),
        "f": args.f,
        "max_degree": nb.max_degree,
        "p_min": nb.p_min,
        "batch_size": nb.batch_size,
    });
    match &args.out {
        Some(out) => {
            let out = resolve_out(out);
            emit_report(&payload, Some(&out))?;
            write_manifest("attack batch-size", json!({"f": args.f}), 0, &[&out], started)
        }
        None => emit_report(&payload, None),
    }
}

fn cmd_spectral(args: SpectralArgs, started: Instant) -> Result<(), CliError> {
    if !args.size_sweep.is_empty() {
        let sweep_args = &args.model;
        let model = sweep_args
            .model
            .as_deref()
            .ok_or_else(|| CliError::usage("--size-sweep requires --model"))?;
        let config = ModelArgs {
            model: model.to_string(),
            nodes: sweep_args.nodes.or(Some(args.size_sweep[0])),
            p: sweep_args.p,
            m: sweep_args.m,
            alpha: sweep_args.alpha,
            beta: sweep_args.beta,
            mean_degree: sweep_args.mean_degree,
            side: sweep_args.side.or_else(|| {
                Some((args.size_sweep[0] as f64).sqrt().round().max(2.0) as usize)
            }),
            radius: sweep_args.radius,
            q: sweep_args.q,
            r_exp: sweep_args.r_exp,
            degree: sweep_args.degree,
        }
        .config()?;
        let rows = lambda2_size_experiment(&config, &args.size_sweep, args.trials, args.seed)
            .map_err(|e| CliError::generation(e.to_string()))?;
        let means: Vec<f64> = rows.iter().map(|r| r.mean_lambda2).collect();
        let spread = means.iter().cloned().fold(f64::MIN, f64::max)
            - means.iter().cloned().fold(f64::MAX, f64::min);
        let payload = json!({
            "schema_version": SCHEMA_VERSION,
            "config": config,
            "trials": args.trials,
            "rows": rows,
            "mean_lambda2_spread": spread,
        });
        return match &args.out {
            Some(out) => {
                let out = resolve_out(out);
                emit_report(&payload, Some(&out))?;
                write_manifest(
                    "spectral",
                    serde_json::to_value(&config).unwrap(),
                    args.seed,
                    &[&out],
                    started,
                )
            }
            None => emit_report(&payload, None),
        };
    }
    let path = args
        .graph
        .as_ref()
        .ok_or_else(|| CliError::usage("spectral needs --graph or --model with --size-sweep"))?;
    let g = load_graph(path, args.directed)?;
    let g = prepare_graph(g, true)?;
    let p = TransitionMatrix::from_graph(&g)
        .map_err(|e| CliError::graph_condition(e.to_string()))?;
    let pi = stationary_for(&g, &p)?;
    let summary = p
        .lambda2_estimate(&pi, args.tol, args.max_iter)
        .map_err(|e| CliError::graph_condition(e.to_string()))?;
    let conductance = if args.conductance {
        if g.n() > 24 || g.directed() {
            return Err(CliError::usage(
                "exact conductance requires an undirected graph with at most 24 nodes",
            ));
        }
        let phi = conductance_exact(&g).map_err(|e| CliError::usage(e.to_string()))?;
        let lower = 1.0 - 2.0 * phi;
        let upper = 1.0 - phi * phi / 2.0;
        Some(json!({
            "phi": phi,
            "lambda2_lower_bound": lower,
            "lambda2_upper_bound": upper,
            "bound_holds": lower <= summary.lambda2 && summary.lambda2 <= upper,
        }))
    } else {
        None
    };
    let payload = json!({
        "schema_version": SCHEMA_VERSION,
        "graph": path.display().to_string(),
        "n": g.n(),
        "lambda2": summary.lambda2,
        "lambda2_signed": summary.lambda2_signed,
        "gap": summary.gap,
        "iterations": summary.iterations,
        "converged": summary.converged,
        "method": summary.method,
        "conductance": conductance,
    });
    match &args.out {
        Some(out) => {
            let out = resolve_out(out);
            emit_report(&payload, Some(&out))?;
            write_manifest("spectral", json!({"graph": path.display().to_string()}), args.seed, &[&out], started)
        }
        None => emit_report(&payload, None),
    }
}
