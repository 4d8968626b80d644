//! Command-line surface: `order`, `stats`, `spread`, `gradient`,
//! `conditional`, `sample`, `maximize`, and `compare` subcommands over the
//! edge-list format. Reports go to standard output as JSON or CSV; exit code
//! 0 on success, 2 when the node budget aborts a construction, 1 otherwise.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bdd::DEFAULT_NODE_LIMIT;
use crate::error::{Error, Result};
use crate::frontier::PruneMode;
use crate::graph::{load_graph, LoadOptions, ProbGraph, VertexId};
use crate::maximize;
use crate::oracle;
use crate::ordering::{beam_search_order, frontier_profile, parse_index_list, EdgeOrder};
use crate::spread::{Engine, EngineOptions};

#[derive(Parser)]
#[command(
    name = "icbdd",
    version,
    about = "Exact influence spread under the independent cascade model",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute (or load) the shared edge ordering and report its width.
    Order(CommonArgs),
    /// Build the diagrams for all distinct pairs and report sizes,
    /// cardinalities, shared size, and timings.
    Stats(StatsArgs),
    /// Exact influence spread of a seed set with the per-target breakdown.
    Spread(SeedArgs),
    /// Derivatives of the spread with respect to every edge probability.
    Gradient(GradientArgs),
    /// Conditional spread given influenced / uninfluenced observations.
    Conditional(ConditionalArgs),
    /// Draw connecting realizations without rejection.
    Sample(SampleArgs),
    /// Greedy influence maximization with exact marginals.
    Maximize(MaximizeArgs),
    /// Compare Monte-Carlo estimates against the exact spread.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct CommonArgs {
    /// Edge-list file: `tail head [prob]` per line, `#` comments.
    graph: PathBuf,
    /// Treat each input line as two directed edges.
    #[arg(long)]
    undirected: bool,
    /// Probability for lines that omit the third field.
    #[arg(long, value_name = "P")]
    default_prob: Option<f64>,
    /// Override every edge probability.
    #[arg(long, value_name = "P")]
    prob: Option<f64>,
    /// Beam width of the ordering search.
    #[arg(long, default_value_t = 100)]
    beam_width: usize,
    /// Seed perturbing the initial ordering beam.
    #[arg(long, default_value_t = 0)]
    order_seed: u64,
    /// Load the edge order from this file if it exists, otherwise compute
    /// and store it there.
    #[arg(long, value_name = "FILE")]
    order_file: Option<PathBuf>,
    /// Abort constructions that exceed this many nodes.
    #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
    node_limit: usize,
    /// Disable edge pruning.
    #[arg(long, conflicts_with = "prune_weak")]
    no_prune: bool,
    /// Use the cheap reachability pruner instead of the simple-path pruner.
    #[arg(long)]
    prune_weak: bool,
    /// Report format.
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    /// Worker threads for Monte-Carlo estimation.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Write the shared diagram as text (`node id level lo hi` lines).
    #[arg(long, value_name = "FILE")]
    export_bdd: Option<PathBuf>,
}

#[derive(Args)]
struct SeedArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated seed labels.
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<String>,
}

#[derive(Args)]
struct GradientArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<String>,
    /// Restrict to the influence probability of one target; the default
    /// differentiates the total spread.
    #[arg(long)]
    target: Option<String>,
}

#[derive(Args)]
struct ConditionalArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<String>,
    /// Vertices observed influenced.
    #[arg(long, value_delimiter = ',')]
    positives: Vec<String>,
    /// Vertices observed not influenced.
    #[arg(long, value_delimiter = ',')]
    negatives: Vec<String>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<String>,
    /// Target the realizations must connect to.
    #[arg(long, required = true)]
    target: String,
    /// Number of realizations.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
}

#[derive(Args)]
struct MaximizeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of seeds to select.
    #[arg(long, short)]
    k: usize,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<String>,
    /// Sample counts, one comparison row each.
    #[arg(long, value_delimiter = ',', required = true)]
    samples: Vec<u64>,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
}

/// Parses `argv` and executes one subcommand, writing the report to `out`.
pub fn run<I, T, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    1
                }
            };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(Error::NodeLimit(limit)) => {
            eprintln!("error: node limit exceeded ({limit} nodes)");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute<W: Write>(command: Command, out: &mut W) -> Result<()> {
    match command {
        Command::Order(common) => cmd_order(&common, out),
        Command::Stats(args) => cmd_stats(&args, out),
        Command::Spread(args) => cmd_spread(&args, out),
        Command::Gradient(args) => cmd_gradient(&args, out),
        Command::Conditional(args) => cmd_conditional(&args, out),
        Command::Sample(args) => cmd_sample(&args, out),
        Command::Maximize(args) => cmd_maximize(&args, out),
        Command::Compare(args) => cmd_compare(&args, out),
    }
}

struct Session {
    graph: ProbGraph,
    order: EdgeOrder,
    common_threads: usize,
}

impl Session {
    fn open(common: &CommonArgs) -> Result<Session> {
        let file = fs::File::open(&common.graph)?;
        let loaded = load_graph(
            std::io::BufReader::new(file),
            &LoadOptions {
                undirected: common.undirected,
                default_prob: common.default_prob,
            },
        )?;
        for warning in &loaded.warnings {
            eprintln!("warning: {warning}");
        }
        let mut graph = loaded.graph;
        if let Some(p) = common.prob {
            graph.set_probabilities(vec![p; graph.num_edges()])?;
        }
        let order = match &common.order_file {
            Some(path) if path.exists() => {
                let perm = parse_index_list(&fs::read_to_string(path)?)?;
                frontier_profile(&graph, perm)?
            }
            maybe_path => {
                let order = beam_search_order(&graph, common.beam_width, common.order_seed);
                if let Some(path) = maybe_path {
                    fs::write(path, order.to_index_list())?;
                }
                order
            }
        };
        Ok(Session {
            graph,
            order,
            common_threads: common.threads,
        })
    }

    fn engine(self, common: &CommonArgs) -> Result<Engine> {
        let prune = if common.no_prune {
            PruneMode::Off
        } else if common.prune_weak {
            PruneMode::Weak
        } else {
            PruneMode::Exact
        };
        Engine::new(
            self.graph,
            EngineOptions {
                beam_width: common.beam_width,
                order_seed: common.order_seed,
                node_limit: common.node_limit,
                prune,
                order: Some(self.order.perm().to_vec()),
            },
        )
    }

    fn resolve(&self, labels: &[String]) -> Result<Vec<VertexId>> {
        labels.iter().map(|l| self.graph.vertex(l)).collect()
    }
}

fn emit<W: Write, R: Serialize>(out: &mut W, format: OutFormat, report: &R, csv: String) -> Result<()> {
    match format {
        OutFormat::Json => {
            let text = serde_json::to_string_pretty(report)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            writeln!(out, "{text}")?;
        }
        OutFormat::Csv => {
            write!(out, "{csv}")?;
        }
    }
    Ok(())
}

fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

/// `2.2e+07`-style scientific rendering of `x / divisor`.
fn big_to_sci(x: &BigUint, divisor: f64) -> String {
    let digits = x.to_string();
    if digits == "0" {
        return "0.0e+00".into();
    }
    let take = digits.len().min(17);
    let mut mantissa: f64 = digits[..take].parse().unwrap();
    let mut exp = (digits.len() - take) as i64;
    mantissa /= divisor;
    while mantissa >= 10.0 {
        mantissa /= 10.0;
        exp += 1;
    }
    while mantissa > 0.0 && mantissa < 1.0 {
        mantissa *= 10.0;
        exp -= 1;
    }
    let rounded = (mantissa * 10.0).round() / 10.0;
    let (mantissa, exp) = if rounded >= 10.0 {
        (rounded / 10.0, exp + 1)
    } else {
        (rounded, exp)
    };
    format!("{mantissa:.1}e{exp:+03}")
}

fn per_target_map(graph: &ProbGraph, values: &[f64]) -> BTreeMap<String, f64> {
    values
        .iter()
        .enumerate()
        .map(|(v, &p)| (graph.label(v).to_string(), p))
        .collect()
}

#[derive(Serialize)]
struct OrderReport {
    edges: usize,
    width: usize,
    perm: Vec<usize>,
}

fn cmd_order<W: Write>(common: &CommonArgs, out: &mut W) -> Result<()> {
    let session = Session::open(common)?;
    let order = &session.order;
    let report = OrderReport {
        edges: session.graph.num_edges(),
        width: order.width(),
        perm: order.perm().to_vec(),
    };
    let mut csv = format!("# width,{}\nposition,edge,tail,head\n", order.width());
    for (pos, &e) in order.perm().iter().enumerate() {
        let (u, v) = session.graph.edge(e);
        csv.push_str(&format!(
            "{pos},{e},{},{}\n",
            csv_field(session.graph.label(u)),
            csv_field(session.graph.label(v))
        ));
    }
    emit(out, common.format, &report, csv)
}

#[derive(Serialize)]
struct PairReport {
    s: String,
    t: String,
    bdd_size: usize,
    cardinality: String,
    cardinality_sci: String,
    time_ms: f64,
}

#[derive(Serialize)]
struct StatsReportOut {
    vertices: usize,
    edges: usize,
    pairs: usize,
    avg_time_ms: f64,
    avg_bdd_size: f64,
    shared_size: usize,
    avg_cardinality: String,
    per_pair: Vec<PairReport>,
}

fn cmd_stats<W: Write>(args: &StatsArgs, out: &mut W) -> Result<()> {
    let common = &args.common;
    let session = Session::open(common)?;
    let graph = session.graph.clone();
    let mut engine = session.engine(common)?;
    let stats = engine.all_pairs_stats()?;
    let pairs = stats.pairs.len();
    let total_cardinality: BigUint = stats.pairs.iter().map(|p| p.cardinality.clone()).sum();
    let report = StatsReportOut {
        vertices: graph.num_vertices(),
        edges: graph.num_edges(),
        pairs,
        avg_time_ms: stats.pairs.iter().map(|p| p.millis).sum::<f64>() / pairs.max(1) as f64,
        avg_bdd_size: stats.pairs.iter().map(|p| p.size as f64).sum::<f64>() / pairs.max(1) as f64,
        shared_size: stats.shared_size,
        avg_cardinality: big_to_sci(&total_cardinality, pairs.max(1) as f64),
        per_pair: stats
            .pairs
            .iter()
            .map(|p| PairReport {
                s: graph.label(p.s).to_string(),
                t: graph.label(p.t).to_string(),
                bdd_size: p.size,
                cardinality: p.cardinality.to_string(),
                cardinality_sci: big_to_sci(&p.cardinality, 1.0),
                time_ms: p.millis,
            })
            .collect(),
    };
    if let Some(path) = &args.export_bdd {
        fs::write(path, engine.export_pairs()?)?;
    }
    let mut csv = String::from("s,t,bdd_size,cardinality,cardinality_sci,time_ms\n");
    for p in &report.per_pair {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            csv_field(&p.s),
            csv_field(&p.t),
            p.bdd_size,
            p.cardinality,
            p.cardinality_sci,
            p.time_ms
        ));
    }
    csv.push_str(&format!(
        "# pairs={} avg_bdd_size={} shared_size={} avg_cardinality={} avg_time_ms={}\n",
        report.pairs,
        report.avg_bdd_size,
        report.shared_size,
        report.avg_cardinality,
        report.avg_time_ms
    ));
    emit(out, common.format, &report, csv)
}

#[derive(Serialize)]
struct SpreadReport {
    seeds: Vec<String>,
    sigma: f64,
    per_target: BTreeMap<String, f64>,
}

fn cmd_spread<W: Write>(args: &SeedArgs, out: &mut W) -> Result<()> {
    let common = &args.common;
    let session = Session::open(common)?;
    let seeds = session.resolve(&args.seeds)?;
    let graph = session.graph.clone();
    let mut engine = session.engine(common)?;
    let outcome = engine.influence_spread(&seeds)?;
    let report = SpreadReport {
        seeds: args.seeds.clone(),
        sigma: outcome.sigma,
        per_target: per_target_map(&graph, &outcome.per_target),
    };
    let mut csv = String::from("target,probability\n");
    for (t, &p) in outcome.per_target.iter().enumerate() {
        csv.push_str(&format!("{},{p}\n", csv_field(graph.label(t))));
    }
    csv.push_str(&format!("TOTAL,{}\n", outcome.sigma));
    emit(out, common.format, &report, csv)
}

#[derive(Serialize)]
struct GradientEntry {
    tail: String,
    head: String,
    value: f64,
}

#[derive(Serialize)]
struct GradientReport {
    seeds: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<String>,
    sigma: f64,
    gradients: Vec<GradientEntry>,
}

fn cmd_gradient<W: Write>(args: &GradientArgs, out: &mut W) -> Result<()> {
    let common = &args.common;
    let session = Session::open(common)?;
    let seeds = session.resolve(&args.seeds)?;
    let graph = session.graph.clone();
    let target = args
        .target
        .as_ref()
        .map(|l| session.graph.vertex(l))
        .transpose()?;
    let mut engine = session.engine(common)?;
    let (sigma, grad) = match target {
        Some(t) => (engine.sigma_to(&seeds, t)?, engine.gradient_to(&seeds, t)?),
        None => (
            engine.influence_spread(&seeds)?.sigma,
            engine.gradient_total(&seeds)?,
        ),
    };
    let gradients: Vec<GradientEntry> = grad
        .iter()
        .enumerate()
        .map(|(e, &value)| {
            let (u, v) = graph.edge(e);
            GradientEntry {
                tail: graph.label(u).to_string(),
                head: graph.label(v).to_string(),
                value,
            }
        })
        .collect();
    let report = GradientReport {
        seeds: args.seeds.clone(),
        target: args.target.clone(),
        sigma,
        gradients,
    };
    let mut csv = String::from("edge,tail,head,gradient\n");
    for (e, entry) in report.gradients.iter().enumerate() {
        csv.push_str(&format!(
            "{e},{},{},{}\n",
            csv_field(&entry.tail),
            csv_field(&entry.head),
            entry.value
        ));
    }
    emit(out, common.format, &report, csv)
}

#[derive(Serialize)]
struct ConditionalReport {
    seeds: Vec<String>,
    positives: Vec<String>,
    negatives: Vec<String>,
    evidence_probability: f64,
    sigma: f64,
    per_target: BTreeMap<String, f64>,
}

fn cmd_conditional<W: Write>(args: &ConditionalArgs, out: &mut W) -> Result<()> {
    let common = &args.common;
    let session = Session::open(common)?;
    let seeds = session.resolve(&args.seeds)?;
    let positives = session.resolve(&args.positives)?;
    let negatives = session.resolve(&args.negatives)?;
    let graph = session.graph.clone();
    let mut engine = session.engine(common)?;
    let outcome = engine.conditional_spread(&seeds, &positives, &negatives)?;
    let report = ConditionalReport {
        seeds: args.seeds.clone(),
        positives: args.positives.clone(),
        negatives: args.negatives.clone(),
        evidence_probability: outcome.evidence_probability,
        sigma: outcome.sigma,
        per_target: per_target_map(&graph, &outcome.per_target),
    };
    let mut csv = String::from("target,probability\n");
    for (t, &p) in outcome.per_target.iter().enumerate() {
        csv.push_str(&format!("{},{p}\n", csv_field(graph.label(t))));
    }
    csv.push_str(&format!("TOTAL,{}\n", outcome.sigma));
    emit(out, common.format, &report, csv)
}

#[derive(Serialize)]
struct SampleReport {
    seeds: Vec<String>,
    target: String,
    count: usize,
    rng_seed: u64,
    samples: Vec<Vec<[String; 2]>>,
}

fn cmd_sample<W: Write>(args: &SampleArgs, out: &mut W) -> Result<()> {
    let common = &args.common;
    let session = Session::open(common)?;
    let seeds = session.resolve(&args.seeds)?;
    let target = session.graph.vertex(&args.target)?;
    let graph = session.graph.clone();
    let mut engine = session.engine(common)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.rng_seed);
    let samples = engine.sample_realizations(&seeds, target, args.count, &mut rng)?;
    let report = SampleReport {
        seeds: args.seeds.clone(),
        target: args.target.clone(),
        count: args.count,
        rng_seed: args.rng_seed,
        samples: samples
            .iter()
            .map(|edges| {
                edges
                    .iter()
                    .map(|&e| {
                        let (u, v) = graph.edge(e);
                        [graph.label(u).to_string(), graph.label(v).to_string()]
                    })
                    .collect()
            })
            .collect(),
    };
    let mut csv = String::from("sample,edges\n");
    for (i, edges) in samples.iter().enumerate() {
        let rendered: Vec<String> = edges
            .iter()
            .map(|&e| {
                let (u, v) = graph.edge(e);
                format!("{}>{}", graph.label(u), graph.label(v))
            })
            .collect();
        csv.push_str(&format!("{i},{}\n", csv_field(&rendered.join(" "))));
    }
    emit(out, common.format, &report, csv)
}

#[derive(Serialize)]
struct MaximizeStep {
    step: usize,
    vertex: String,
    sigma: f64,
    marginal: f64,
    shared_size: usize,
    time_s: f64,
}

#[derive(Serialize)]
struct MaximizeReport {
    k: usize,
    trace: Vec<MaximizeStep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    aborted: Option<String>,
}

fn cmd_maximize<W: Write>(args: &MaximizeArgs, out: &mut W) -> Result<()> {
    let common = &args.common;
    let session = Session::open(common)?;
    let graph = session.graph.clone();
    let mut engine = session.engine(common)?;
    let trace = maximize::greedy(&mut engine, args.k)?;
    let report = MaximizeReport {
        k: args.k,
        trace: trace
            .steps
            .iter()
            .map(|s| MaximizeStep {
                step: s.step,
                vertex: graph.label(s.vertex).to_string(),
                sigma: s.sigma,
                marginal: s.marginal,
                shared_size: s.shared_size,
                time_s: s.elapsed.as_secs_f64(),
            })
            .collect(),
        aborted: trace.aborted.clone(),
    };
    let mut csv = String::from("step,vertex,sigma,marginal,shared_size,time\n");
    for s in &report.trace {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.step,
            csv_field(&s.vertex),
            s.sigma,
            s.marginal,
            s.shared_size,
            s.time_s
        ));
    }
    if let Some(reason) = &report.aborted {
        csv.push_str(&format!("# aborted: {reason}\n"));
    }
    emit(out, common.format, &report, csv)?;
    if trace.aborted.is_some() {
        return Err(Error::NodeLimit(common.node_limit));
    }
    Ok(())
}

#[derive(Serialize)]
struct CompareRow {
    samples: u64,
    estimate: f64,
    exact: f64,
    error: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct CompareReport {
    seeds: Vec<String>,
    rng_seed: u64,
    rows: Vec<CompareRow>,
}

fn cmd_compare<W: Write>(args: &CompareArgs, out: &mut W) -> Result<()> {
    let common = &args.common;
    let session = Session::open(common)?;
    let seeds = session.resolve(&args.seeds)?;
    let graph = session.graph.clone();
    let threads = session.common_threads;
    let mut engine = session.engine(common)?;
    let exact = engine.influence_spread(&seeds)?.sigma;
    let mut rows = Vec::with_capacity(args.samples.len());
    for (i, &n) in args.samples.iter().enumerate() {
        let est = oracle::monte_carlo_spread(&graph, &seeds, n, args.rng_seed.wrapping_add(i as u64), threads)?;
        rows.push(CompareRow {
            samples: n,
            estimate: est.mean,
            exact,
            error: est.mean - exact,
            stderr: est.stderr,
        });
    }
    let report = CompareReport {
        seeds: args.seeds.clone(),
        rng_seed: args.rng_seed,
        rows,
    };
    let mut csv = String::from("samples,estimate,exact,error,stderr\n");
    for r in &report.rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.samples, r.estimate, r.exact, r.error, r.stderr
        ));
    }
    emit(out, common.format, &report, csv)
}
