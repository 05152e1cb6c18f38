use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use diagest::adaptive::Limits;
use diagest::bounds::{
    baston_reference_bound, g_query_count, lemma23_bound, ErrorBudget, Tolerance,
};
use diagest::data::{synth_matrix, triangle_counts, SpectrumKind, SpectrumSpec, TriangleConfig, TriangleMethod};
use diagest::estimators::Method;
use diagest::linop::mm;
use diagest::probes::{Distribution, ProbeStream};
use diagest_cli::rows::{float, write_group, HEADER};
use diagest_cli::runner::{needs_budget, run_trial, trial_seed, MethodConfig, Problem};
use diagest_cli::suites::{load_graph, run_suite, write_suite, BenchConfig, SUITES};

#[derive(Parser)]
#[command(name = "diagest", version, about = "Stochastic estimation of matrix diagonals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic symmetric test matrix in Matrix Market format.
    Synth(SynthArgs),
    /// Estimate the diagonal of a synthetic or file matrix over repeated trials.
    Estimate(EstimateArgs),
    /// Run a benchmark suite.
    Bench(BenchArgs),
    /// Per-vertex triangle counts of an undirected graph.
    Triangles(TriangleArgs),
    /// Probe-count bounds for given tolerances and Frobenius norms.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: SpectrumKind,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TargetArgs {
    /// Relative tolerance: the error target is eps·‖diag(A)‖₂.
    #[arg(long, default_value_t = 0.25, value_parser = unit_interval, conflicts_with = "eps_absolute")]
    eps: f64,
    /// Absolute error target.
    #[arg(long, value_parser = positive)]
    eps_absolute: Option<f64>,
    #[arg(long, default_value_t = 0.01, value_parser = unit_interval)]
    delta: f64,
}

impl TargetArgs {
    fn tolerance(&self) -> Tolerance {
        match self.eps_absolute {
            Some(e) => Tolerance::Absolute(e),
            None => Tolerance::Relative(self.eps),
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long, value_parser = parse_method)]
    method: Method,
    /// Synthetic spectrum; defaults to `exp` when no --matrix is given.
    #[arg(long, value_parser = parse_kind, conflicts_with = "matrix")]
    kind: Option<SpectrumKind>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Matrix Market input.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Product budget; for `prototype`, the probe count.
    #[arg(long)]
    matvecs: Option<usize>,
    /// Sketch width for `prototype`.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock seconds (makes output nondeterministic).
    #[arg(long)]
    wall_time: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
    suite: String,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.01, value_parser = unit_interval)]
    delta: f64,
    /// Tolerance exponents: eps = 2^-p.
    #[arg(long = "p", value_delimiter = ',', default_values_t = [2u32, 3, 4, 5],
          value_parser = clap::value_parser!(u32).range(1..=20))]
    ps: Vec<u32>,
    /// Edge list for the `triangles` suite; an Erdős–Rényi graph otherwise.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    wall_time: bool,
}

#[derive(Args)]
struct TriangleArgs {
    /// Edge list; an Erdős–Rényi graph on --n nodes otherwise.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value = "exact", value_parser = parse_triangle_method)]
    method: TriangleMethod,
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Products with A³ for bekas, diagpp and xdiag.
    #[arg(long)]
    matvecs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.25], value_parser = positive)]
    eps: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01], value_parser = unit_interval)]
    delta: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Off-diagonal Frobenius norms.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0])]
    frob: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<SpectrumKind, String> {
    s.parse()
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

fn parse_triangle_method(s: &str) -> Result<TriangleMethod, String> {
    s.parse()
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(format!("{x} is not in (0, 1)"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{x} is not positive"))
    }
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn synth(a: SynthArgs) -> Result<(), Failure> {
    if a.n < 2 {
        return Err(usage("--n must be at least 2"));
    }
    let s = synth_matrix(SpectrumSpec::new(a.kind, a.n), a.seed).map_err(anyhow::Error::from)?;
    let mut out = output(a.out.as_deref())?;
    mm::write_dense(&mut out, &s.matrix).map_err(anyhow::Error::from)?;
    out.flush()?;
    Ok(())
}

fn estimate(a: EstimateArgs) -> Result<(), Failure> {
    if needs_budget(a.method) && a.matvecs.is_none() {
        return Err(usage(format!("--method {} requires --matvecs", a.method)));
    }
    if a.k.is_some() && a.method != Method::Prototype {
        return Err(usage("--k applies only to --method prototype"));
    }
    let problem = match &a.matrix {
        Some(path) => Problem::from_file(path)?,
        None => {
            if a.n < 2 {
                return Err(usage("--n must be at least 2"));
            }
            Problem::synth(a.kind.unwrap_or(SpectrumKind::Exp), a.n, a.seed)?
        }
    };
    let cfg = MethodConfig {
        matvecs: a.matvecs,
        k: a.k,
        time: a.wall_time,
        ..MethodConfig::new(a.target.tolerance(), a.target.delta)
    };
    let rows = (0..a.trials as usize)
        .map(|t| run_trial(&problem, a.method, &cfg, a.seed, t))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    w.write_record(HEADER)?;
    write_group(&mut w, &[], &rows)?;
    w.flush()?;
    Ok(())
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    if a.n < 2 {
        return Err(usage("--n must be at least 2"));
    }
    if a.graph.is_some() && a.suite != "triangles" {
        return Err(usage("--graph applies only to --suite triangles"));
    }
    let cfg = BenchConfig {
        delta: a.delta,
        ps: a.ps,
        graph: a.graph,
        time: a.wall_time,
        ..BenchConfig::new(a.n, a.trials as usize, a.seed)
    };
    let groups = run_suite(&a.suite, &cfg)?;
    write_suite(&a.suite, &groups, output(a.out.as_deref())?)?;
    Ok(())
}

fn triangles(a: TriangleArgs) -> Result<(), Failure> {
    let fixed = matches!(
        a.method,
        TriangleMethod::Bekas | TriangleMethod::Diagpp | TriangleMethod::Xdiag
    );
    if fixed && a.matvecs.is_none() {
        return Err(usage("this --method requires --matvecs"));
    }
    let bench = BenchConfig {
        graph: a.graph.clone(),
        ..BenchConfig::new(a.n, 1, a.seed)
    };
    let (_, g) = load_graph(&bench)?;
    let n = g.node_count();
    let cfg = TriangleConfig {
        tolerance: a.target.tolerance(),
        delta: a.target.delta,
        budget: a.matvecs.unwrap_or(0),
        limits: Some(Limits::for_dim(n)),
    };
    let mut probes = ProbeStream::gaussian(trial_seed(a.seed, 0), n);
    if a.method == TriangleMethod::Xdiag {
        probes = probes.with_distribution(Distribution::Rademacher);
    }
    let est = triangle_counts(&g, a.method, &cfg, &mut probes).map_err(anyhow::Error::from)?;
    for w in &est.warnings {
        eprintln!("warning: {w}");
    }
    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    w.write_record(["node", "triangles"])?;
    for (id, c) in g.original_ids.iter().zip(&est.counts) {
        let count = if a.method == TriangleMethod::Exact {
            format!("{c:.0}")
        } else {
            float(*c)
        };
        w.write_record([id.to_string(), count])?;
    }
    w.flush()?;
    Ok(())
}

fn bounds(a: BoundsArgs) -> Result<(), Failure> {
    if a.frob.iter().any(|f| !(*f >= 0.0 && f.is_finite())) {
        return Err(usage("--frob values must be finite and non-negative"));
    }
    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    w.write_record(["eps", "delta", "n", "f", "g", "lemma23", "baston"])?;
    for &eps in &a.eps {
        for &delta in &a.delta {
            let b = ErrorBudget::new(eps, delta, a.n).map_err(|e| usage(e.to_string()))?;
            for &f in &a.frob {
                w.write_record([
                    float(eps),
                    float(delta),
                    a.n.to_string(),
                    float(f),
                    g_query_count(&b, f).to_string(),
                    float(lemma23_bound(&b, f)),
                    baston_reference_bound(&b).to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Estimate(a) => estimate(a),
        Command::Bench(a) => bench(a),
        Command::Triangles(a) => triangles(a),
        Command::Bounds(a) => bounds(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
