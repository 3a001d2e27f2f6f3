//! `ddeg`: command line access to the oracles, the `bad` estimator, the
//! cluster machinery, the partition, the extractor and the experiments.
//!
//! Graphs are read in the edge-list format (`n m`, then one `u v` per line).
//! Output is JSON by default; `--format csv` writes rows with the columns
//! `n,p,seed,metric,value,half_width,budget,commit`.
//!
//! Exit codes: 0 on success, 2 when an input or precondition is rejected,
//! 3 when a construction ran and failed, 1 on I/O errors.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use ddeg::bad;
use ddeg::clusters::{self, ClusterParams};
use ddeg::distributions::DistributionSpec;
use ddeg::experiments::{self, Axis, ExperimentPlan, Row};
use ddeg::extract::{self, PressureInstance, SynthesisBudget};
use ddeg::oracles;
use ddeg::partition::{self, PartitionConfig};
use ddeg::{Error, Graph, Result, VertexSet};

#[derive(Parser)]
#[command(name = "ddeg", version, about = "Homogeneous sets and distinct degrees in induced subgraphs")]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a graph in the edge-list format.
    Gen(GenArgs),
    /// Exact homogeneous number.
    Hom(GraphArg),
    /// Exact f(G) for n <= 20.
    FExact(GraphArg),
    /// Local-search lower bound for f(G).
    FGreedy {
        graph: PathBuf,
        #[arg(long, default_value_t = 8)]
        effort: usize,
    },
    /// Large induced subgraph with degrees within a 5 log2 n factor.
    Regularize(GraphArg),
    /// Monte Carlo estimate of bad for a pair or a set.
    Bad(BadArgs),
    /// Cluster view of one vertex.
    Cluster(ClusterArgs),
    /// The randomized cluster partition.
    Partition(PartitionArgs),
    /// Pressure pipeline and a realized witness.
    Pressure(PressureArgs),
    /// Recursive synthesis of a controlled set.
    Synthesize(SynthArgs),
    /// Experiment runs.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GraphArg {
    graph: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Gnp,
    Complete,
    Empty,
    Path,
    Cycle,
    Star,
    Cliques,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value_t = GenKind::Gnp)]
    kind: GenKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Clique size for `cliques` (n is the number of cliques).
    #[arg(long, default_value_t = 2)]
    size: usize,
}

#[derive(Args)]
struct BadArgs {
    graph: PathBuf,
    /// `trivial`, `uniform`, or a path to a spec JSON file.
    #[arg(long, default_value = "trivial")]
    spec: String,
    /// A pair `u,v`.
    #[arg(long, conflicts_with = "set")]
    pair: Option<String>,
    /// A set `a,b,c,...`.
    #[arg(long)]
    set: Option<String>,
    /// `all` or a list `a,b,c,...`.
    #[arg(long, default_value = "all")]
    s: String,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
}

#[derive(Args)]
struct ClusterArgs {
    graph: PathBuf,
    #[arg(long)]
    vertex: usize,
    #[arg(long, default_value_t = 16.0)]
    m: f64,
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    #[arg(long, default_value = "all")]
    s: String,
}

#[derive(Args)]
struct PartitionArgs {
    graph: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 8.0)]
    m: f64,
    #[arg(long, default_value_t = 2.0)]
    lambda: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 200)]
    attempts: usize,
    /// Literal constants; hypothesis gaps are rejected.
    #[arg(long)]
    strict: bool,
    #[arg(long, default_value_t = 1.0 / 1024.0)]
    relax_a3: f64,
    #[arg(long, default_value_t = 1.0)]
    relax_floor: f64,
    #[arg(long, default_value_t = 1.0)]
    relax_ii: f64,
    #[arg(long, default_value_t = 1.0)]
    relax_v: f64,
    /// Partition `all` vertices or only the `eligible` ones.
    #[arg(long, default_value = "eligible")]
    a: String,
}

#[derive(Args)]
struct PressureArgs {
    graph: PathBuf,
    /// Use the G(n, p) instance with this p.
    #[arg(long, conflicts_with_all = ["u", "d", "gamma"])]
    p: Option<f64>,
    /// Size constant for the G(n, p) instance.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Explicit U.
    #[arg(long, requires_all = ["d", "gamma"])]
    u: Option<String>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value = "all")]
    s: String,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
}

#[derive(Args)]
struct SynthArgs {
    graph: PathBuf,
    /// Target k (default sqrt n).
    #[arg(long)]
    k: Option<f64>,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 400)]
    samples: usize,
    #[arg(long, default_value_t = 10)]
    trials: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentKind {
    /// f_hat against n at p = 1/2.
    #[value(name = "f-n")]
    FN,
    /// f_hat against p at n = 1024.
    #[value(name = "f-p")]
    FP,
    /// hom(G(n, 1/2)) for n in {32, 64}.
    Hom,
    /// Exact f and hom on small graphs.
    Regime,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: ExperimentKind,
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    #[arg(long, default_value_t = 400)]
    samples: usize,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Override the grid: comma-separated n values.
    #[arg(long)]
    ns: Option<String>,
    /// Override the grid: comma-separated p values.
    #[arg(long)]
    ps: Option<String>,
}

/// A JSON document and its CSV rows.
struct Output {
    json: Value,
    rows: Vec<Row>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let res = run(&cli).and_then(|out| emit(&cli, out));
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Construction(_) => 3,
        Error::Io(_) | Error::Csv(_) => 1,
        e if e.is_precondition() => 2,
        _ => 1,
    }
}

fn emit(cli: &Cli, out: Output) -> Result<()> {
    let mut sink: Box<dyn Write> = match &cli.out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    match cli.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, &out.json)?;
            writeln!(sink)?;
        }
        Format::Csv => experiments::write_csv(&out.rows, &mut sink)?,
    }
    sink.flush()?;
    Ok(())
}

fn to_json(x: &impl Serialize) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

fn parse_list(text: &str, n: usize) -> Result<VertexSet> {
    let mut vs = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let v: usize = part
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("not a vertex: {part:?}")))?;
        vs.push(v);
    }
    VertexSet::from_vertices(n, vs)
}

fn parse_s(text: &str, g: &Graph) -> Result<VertexSet> {
    if text == "all" {
        Ok(g.vertices())
    } else {
        parse_list(text, g.n())
    }
}

fn parse_floats(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("not a number: {s:?}")))
        })
        .collect()
}

fn run(cli: &Cli) -> Result<Output> {
    let seed = cli.seed;
    let row = |n: usize, metric: &str, value: f64, hw: f64| Row::new(n, f64::NAN, seed, metric, value, hw, "");
    match &cli.cmd {
        Cmd::Gen(a) => {
            let g = match a.kind {
                GenKind::Gnp => Graph::gnp(a.n, a.p, seed)?,
                GenKind::Complete => Graph::complete(a.n),
                GenKind::Empty => Graph::empty(a.n),
                GenKind::Path => Graph::path(a.n),
                GenKind::Cycle => Graph::cycle(a.n),
                GenKind::Star => Graph::star(a.n),
                GenKind::Cliques => Graph::disjoint_cliques(&vec![a.size; a.n]),
            };
            // the graph itself is the output; --format does not apply
            let text = g.to_edge_list();
            match &cli.out {
                Some(path) => std::fs::write(path, text)?,
                None => io::stdout().lock().write_all(text.as_bytes())?,
            }
            std::process::exit(0);
        }
        Cmd::Hom(a) => {
            let g = Graph::read(&a.graph)?;
            let r = oracles::hom_exact(&g)?;
            Ok(Output {
                json: to_json(&r)?,
                rows: vec![row(g.n(), "hom", r.value as f64, 0.0)],
            })
        }
        Cmd::FExact(a) => {
            let g = Graph::read(&a.graph)?;
            let w = oracles::f_exact(&g)?;
            Ok(Output {
                json: to_json(&w)?,
                rows: vec![row(g.n(), "f", w.value as f64, 0.0)],
            })
        }
        Cmd::FGreedy { graph, effort } => {
            let g = Graph::read(graph)?;
            let w = oracles::f_lower_greedy(&g, *effort, seed)?;
            Ok(Output {
                json: to_json(&w)?,
                rows: vec![row(g.n(), "f_lower", w.value as f64, 0.0)],
            })
        }
        Cmd::Regularize(a) => {
            let g = Graph::read(&a.graph)?;
            let set = oracles::regularize(&g)?;
            let (lo, hi) = oracles::induced_degree_range(&g, &set);
            Ok(Output {
                json: json!({
                    "value": set.len(),
                    "witness": set,
                    "min_degree": lo,
                    "max_degree": hi,
                    "certified": oracles::regularization_certified(&g, &set),
                }),
                rows: vec![row(g.n(), "size", set.len() as f64, 0.0)],
            })
        }
        Cmd::Bad(a) => bad_cmd(a, seed),
        Cmd::Cluster(a) => {
            let g = Graph::read(&a.graph)?;
            if a.vertex >= g.n() {
                return Err(Error::InvalidArgument(format!("vertex {} out of range", a.vertex)));
            }
            let params = ClusterParams::new(a.m, a.lambda, parse_s(&a.s, &g)?)?;
            let view = clusters::theta_moment(&g, a.vertex, &params);
            let check = clusters::check_view(&g, &view, &params);
            Ok(Output {
                rows: vec![
                    row(g.n(), "t_moment", view.t_moment as f64, 0.0),
                    row(g.n(), "w_star", view.w_star.len() as f64, 0.0),
                    row(g.n(), "w_plus", view.w_plus.len() as f64, 0.0),
                ],
                json: json!({ "view": view, "check": check }),
            })
        }
        Cmd::Partition(a) => partition_cmd(a, seed),
        Cmd::Pressure(a) => pressure_cmd(a, seed),
        Cmd::Synthesize(a) => {
            let g = Graph::read(&a.graph)?;
            let mut budget = SynthesisBudget::for_n(g.n());
            if let Some(k) = a.k {
                budget.k = k;
            }
            budget.depth_cap = a.depth;
            budget.n_samples = a.samples;
            budget.realize_trials = a.trials;
            let r = extract::synthesize(&g, &budget, seed)?;
            let rows = vec![
                row(g.n(), "u_size", r.controlled.len() as f64, 0.0),
                row(g.n(), "alpha", r.controlled.alpha, r.controlled.alpha_half_width),
                row(g.n(), "witness", r.witness.value as f64, 0.0),
            ];
            Ok(Output {
                json: json!({
                    "u_set": r.controlled.u_set,
                    "alpha": r.controlled.alpha,
                    "alpha_half_width": r.controlled.alpha_half_width,
                    "provenance": r.controlled.provenance,
                    "witness": r.witness,
                    "trace": r.trace,
                    "complemented": r.complemented,
                    "schedule": r.schedule,
                    "budget": budget,
                }),
                rows,
            })
        }
        Cmd::Experiment(a) => experiment_cmd(a),
    }
}

fn load_spec(text: &str, g: &Graph) -> Result<DistributionSpec> {
    match text {
        "trivial" => Ok(DistributionSpec::trivial(g.vertices())),
        "uniform" => Ok(DistributionSpec::uniform_constant(g.vertices())),
        path => {
            let spec = DistributionSpec::from_json_str(&std::fs::read_to_string(path)?)?;
            if spec.universe() != g.n() {
                return Err(Error::InvalidArgument(format!(
                    "spec over {} vertices, graph has {}",
                    spec.universe(),
                    g.n()
                )));
            }
            Ok(spec.complete_with_trivial())
        }
    }
}

fn bad_cmd(a: &BadArgs, seed: u64) -> Result<Output> {
    let g = Graph::read(&a.graph)?;
    let spec = load_spec(&a.spec, &g)?;
    let s = parse_s(&a.s, &g)?;
    let n = g.n();
    if let Some(pair) = &a.pair {
        let uv = parse_list(pair, n)?.to_vec();
        if uv.len() != 2 {
            return Err(Error::InvalidArgument("--pair needs two distinct vertices".into()));
        }
        let e = bad::bad_pair(&g, &spec, uv[0], uv[1], &s, a.samples, seed)?;
        return Ok(Output {
            json: to_json(&e)?,
            rows: vec![Row::new(n, f64::NAN, seed, "bad", e.point, e.half_width, &format!("s{}", a.samples))],
        });
    }
    let set = match &a.set {
        Some(t) => parse_list(t, n)?,
        None => return Err(Error::InvalidArgument("give --pair or --set".into())),
    };
    let r = bad::bad_set(&g, &spec, &set, &s, a.samples, seed)?;
    Ok(Output {
        rows: vec![Row::new(n, f64::NAN, seed, "bad_set", r.total, r.half_width_sum, &format!("s{}", a.samples))],
        json: to_json(&r)?,
    })
}

fn partition_cmd(a: &PartitionArgs, seed: u64) -> Result<Output> {
    let g = Graph::read(&a.graph)?;
    let mut cfg = if a.strict {
        PartitionConfig::strict(a.k, a.m, a.lambda, a.alpha)
    } else {
        PartitionConfig::desk(a.k, a.m, a.lambda, a.alpha)
    };
    cfg.max_attempts = a.attempts;
    if !a.strict {
        cfg.relax_a3 = a.relax_a3;
        cfg.relax_floor = a.relax_floor;
        cfg.relax_ii = a.relax_ii;
        cfg.relax_v = a.relax_v;
    }
    let set = match a.a.as_str() {
        "all" => g.vertices(),
        "eligible" => partition::eligible_set(&g, &cfg)?,
        other => parse_list(other, g.n())?,
    };
    let run = partition::run_partition(&g, &set, &cfg, seed)?;
    let notes = run.notes.clone();
    let res = run.into_result()?;
    let report = partition::verify_partition(&g, &res, &cfg);
    let n = g.n();
    Ok(Output {
        rows: vec![
            Row::new(n, f64::NAN, seed, "t", res.t as f64, 0.0, ""),
            Row::new(n, f64::NAN, seed, "gamma", res.gamma, 0.0, ""),
            Row::new(n, f64::NAN, seed, "attempts", res.attempts_used as f64, 0.0, ""),
        ],
        json: json!({ "result": res, "report": report, "notes": notes, "config": cfg }),
    })
}

fn pressure_cmd(a: &PressureArgs, seed: u64) -> Result<Output> {
    let g = Graph::read(&a.graph)?;
    let n = g.n();
    let mut trace = Vec::new();
    let inst = match a.p {
        Some(p) => {
            let size = PressureInstance::gnp_size(n, p, a.c);
            trace.push(format!("G(n, p) instance: |U| target {size}, D = np/4, S = V, gamma = 2p"));
            PressureInstance::gnp(&g, p, size, seed)?
        }
        None => {
            let u = parse_list(
                a.u.as_deref()
                    .ok_or_else(|| Error::InvalidArgument("give --p or --u with --d and --gamma".into()))?,
                n,
            )?;
            let d = a.d.unwrap_or(1.0);
            let gamma = a.gamma.unwrap_or(1.0);
            PressureInstance::new(&g, u, parse_s(&a.s, &g)?, d, gamma)?
        }
    };
    let rep = extract::pressure_pipeline(&g, &inst, a.samples, seed)?;
    trace.push(format!(
        "trims: D {} -> {}, |S| {} -> {}",
        rep.untrimmed.0,
        rep.instance.d,
        rep.untrimmed.1,
        rep.instance.s.len()
    ));
    trace.push(format!(
        "beta = {:.6}, target = {:.6}, {}/{} pairs within target",
        rep.instance.beta, rep.target, rep.pairs_ok, rep.pairs
    ));
    let w = extract::realize_witness(&g, &rep.controlled, a.trials, seed);
    let budget = format!("s{}-t{}", a.samples, a.trials);
    let p = a.p.unwrap_or(f64::NAN);
    Ok(Output {
        rows: vec![
            Row::new(n, p, seed, "u_size", rep.instance.u_set.len() as f64, 0.0, &budget),
            Row::new(n, p, seed, "alpha", rep.controlled.alpha, rep.controlled.alpha_half_width, &budget),
            Row::new(n, p, seed, "pairs_ok", rep.pairs_ok as f64, 0.0, &budget),
            Row::new(n, p, seed, "witness", w.witness.value as f64, 0.0, &budget),
        ],
        json: json!({
            "u_set": rep.instance.u_set,
            "alpha": rep.controlled.alpha,
            "alpha_half_width": rep.controlled.alpha_half_width,
            "witness": w.witness,
            "trace": trace,
            "instance": { "D": rep.instance.d, "gamma": rep.instance.gamma, "beta": rep.instance.beta },
            "target": rep.target,
            "pairs_ok": rep.pairs_ok,
            "pairs": rep.pairs,
            "worst": rep.worst,
        }),
    })
}

fn experiment_cmd(a: &ExperimentArgs) -> Result<Output> {
    let mut plan = match a.kind {
        ExperimentKind::FP => ExperimentPlan::p_sweep(a.seeds),
        ExperimentKind::FN => ExperimentPlan::n_sweep(a.seeds),
        ExperimentKind::Hom => ExperimentPlan {
            ns: vec![32, 64],
            ..ExperimentPlan::n_sweep(a.seeds)
        },
        ExperimentKind::Regime => ExperimentPlan {
            ns: vec![8, 10, 12],
            ps: vec![0.25, 0.5],
            ..ExperimentPlan::n_sweep(a.seeds)
        },
    };
    plan.n_samples = a.samples;
    plan.trials = a.trials;
    plan.c = a.c;
    if let Some(t) = &a.ns {
        plan.ns = parse_floats(t)?.into_iter().map(|x| x as usize).collect();
    }
    if let Some(t) = &a.ps {
        plan.ps = parse_floats(t)?;
    }
    let budget = plan.budget_tag();
    match a.kind {
        ExperimentKind::FN | ExperimentKind::FP => {
            let axis = if matches!(a.kind, ExperimentKind::FN) { Axis::N } else { Axis::P };
            let rep = experiments::f_scaling(&plan, axis)?;
            Ok(Output {
                rows: rep.rows(&budget),
                json: json!({ "plan": plan, "report": rep }),
            })
        }
        ExperimentKind::Hom => {
            let pts = experiments::hom_scaling(&plan, 2.0)?;
            let rows = pts
                .iter()
                .map(|pt| Row::new(pt.n, pt.p, pt.seed, "hom", pt.hom as f64, 0.0, &budget))
                .collect();
            Ok(Output {
                rows,
                json: json!({ "plan": plan, "points": pts }),
            })
        }
        ExperimentKind::Regime => {
            let table = experiments::regime_map(&plan)?;
            let rows = table
                .iter()
                .map(|r| Row::new(r.n, f64::NAN, 0, &format!("ratio[{}]", r.label.replace(',', ";")), r.ratio, 0.0, &budget))
                .collect();
            Ok(Output {
                rows,
                json: json!({ "plan": plan, "table": table }),
            })
        }
    }
}
