//! Benchmark suites. Comparisons follow one protocol: for each tolerance
//! `ε = 2^-p` the adaptive estimator runs first, and every comparator is then
//! given exactly the number of products the adaptive run used.

use std::io::Write;
use std::path::PathBuf;

use anyhow::bail;
use diagest::adaptive::Limits;
use diagest::bounds::Tolerance;
use diagest::data::{
    erdos_renyi, load_edge_list, triangle_counts, Graph, SpectrumKind, TriangleConfig,
    TriangleMethod,
};
use diagest::estimators::Method;
use diagest::probes::ProbeStream;
use diagest::vecops::relative_error;

use crate::rows::{write_group, ResultRow, HEADER};
use crate::runner::{even_budget, run_trial, trial_seed, MethodConfig, Problem};

pub const SUITES: [&str; 8] = [
    "table1", "table2", "table3", "table4", "table5", "figure1", "figure2", "triangles",
];

pub const KINDS: [SpectrumKind; 4] = [
    SpectrumKind::Flat,
    SpectrumKind::Poly,
    SpectrumKind::Exp,
    SpectrumKind::STEP,
];

/// Comparators run at the adaptive budget, in output order.
pub const COMPARATORS: [Method; 4] = [Method::Bekas, Method::Diagpp, Method::XdiagR, Method::XdiagG];

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub delta: f64,
    pub ps: Vec<u32>,
    pub graph: Option<PathBuf>,
    pub time: bool,
}

impl BenchConfig {
    pub fn new(n: usize, trials: usize, seed: u64) -> Self {
        Self {
            n,
            trials,
            seed,
            delta: 0.01,
            ps: vec![2, 3, 4, 5],
            graph: None,
            time: false,
        }
    }
}

/// Rows sharing a method and setting, reported with their mean.
#[derive(Debug, Clone)]
pub struct Group {
    pub p: Option<u32>,
    pub rows: Vec<ResultRow>,
}

impl Group {
    pub fn method(&self) -> &str {
        &self.rows[0].method
    }

    pub fn mean_error(&self) -> f64 {
        self.rows.iter().map(|r| r.relative_error).sum::<f64>() / self.rows.len() as f64
    }
}

pub fn tolerance(p: u32) -> Tolerance {
    Tolerance::Relative(2f64.powi(-(p as i32)))
}

fn config(cfg: &BenchConfig, p: u32) -> MethodConfig {
    MethodConfig {
        time: cfg.time,
        ..MethodConfig::new(tolerance(p), cfg.delta)
    }
}

/// Adaptive `k`, `m` and cost for every kind and tolerance.
pub fn table1(cfg: &BenchConfig) -> anyhow::Result<Vec<Group>> {
    let mut groups = Vec::new();
    for kind in KINDS {
        let problem = Problem::synth(kind, cfg.n, cfg.seed)?;
        for &p in &cfg.ps {
            // Flat spectra need tens of thousands of probes beyond p = 5.
            if kind == SpectrumKind::Flat && p > 5 {
                continue;
            }
            let mc = config(cfg, p);
            let rows = (0..cfg.trials)
                .map(|t| run_trial(&problem, Method::Adaptive, &mc, cfg.seed, t))
                .collect::<anyhow::Result<_>>()?;
            groups.push(Group { p: Some(p), rows });
        }
    }
    Ok(groups)
}

/// One trial of the comparison protocol: adaptive, then each comparator at
/// the adaptive product count.
pub fn protocol_trial(
    problem: &Problem,
    mc: &MethodConfig,
    seed: u64,
    trial: usize,
) -> anyhow::Result<Vec<ResultRow>> {
    let ada = run_trial(problem, Method::Adaptive, mc, seed, trial)?;
    let budget = ada.matvecs as usize;
    let mut rows = vec![ada];
    for method in COMPARATORS {
        if method == Method::Diagpp && budget < 3 {
            continue;
        }
        let row = run_trial(problem, method, &mc.with_matvecs(budget), seed, trial)?;
        let expect = match method {
            Method::XdiagG | Method::XdiagR => even_budget(budget),
            _ => budget,
        };
        if row.matvecs as usize != expect {
            eprintln!(
                "warning: {method} trial {trial} used {} products, budget {expect}",
                row.matvecs
            );
        }
        rows.push(row);
    }
    Ok(rows)
}

/// All methods at the adaptive budget on one spectrum kind.
pub fn comparison(cfg: &BenchConfig, kind: SpectrumKind) -> anyhow::Result<Vec<Group>> {
    let problem = Problem::synth(kind, cfg.n, cfg.seed)?;
    let mut groups = Vec::new();
    for &p in &cfg.ps {
        let mc = config(cfg, p);
        let mut by_method: Vec<Vec<ResultRow>> = Vec::new();
        for t in 0..cfg.trials {
            for (i, row) in protocol_trial(&problem, &mc, cfg.seed, t)?.into_iter().enumerate() {
                if by_method.len() <= i {
                    by_method.push(Vec::new());
                }
                by_method[i].push(row);
            }
        }
        groups.extend(by_method.into_iter().map(|rows| Group { p: Some(p), rows }));
    }
    Ok(groups)
}

/// Bekas error against `m` for spectra of shrinking spread.
pub fn figure1(cfg: &BenchConfig) -> anyhow::Result<Vec<Group>> {
    let kinds = [(1800, 2000), (1000, 2000), (0, 2000)];
    let ms = [10usize, 20, 50, 100, 200, 500, 1000];
    let mut groups = Vec::new();
    for (lo, hi) in kinds {
        let problem = Problem::synth(SpectrumKind::Randint { lo, hi }, cfg.n, cfg.seed)?;
        for m in ms {
            let mc = config(cfg, 2).with_matvecs(m);
            let rows = (0..cfg.trials)
                .map(|t| run_trial(&problem, Method::Bekas, &mc, cfg.seed, t))
                .collect::<anyhow::Result<_>>()?;
            groups.push(Group { p: None, rows });
        }
    }
    Ok(groups)
}

/// Fixed-`k` projection followed by `m` probes of the remainder.
pub fn figure2(cfg: &BenchConfig) -> anyhow::Result<Vec<Group>> {
    let ms = [10usize, 30, 100, 300];
    let mut groups = Vec::new();
    for kind in KINDS {
        let problem = Problem::synth(kind, cfg.n, cfg.seed)?;
        for k in [0usize, 20, 40, 60].into_iter().filter(|k| *k < cfg.n) {
            for m in ms {
                let mc = MethodConfig {
                    k: Some(k),
                    ..config(cfg, 2).with_matvecs(m)
                };
                let rows = (0..cfg.trials)
                    .map(|t| run_trial(&problem, Method::Prototype, &mc, cfg.seed, t))
                    .collect::<anyhow::Result<_>>()?;
                groups.push(Group { p: None, rows });
            }
        }
    }
    Ok(groups)
}

pub fn load_graph(cfg: &BenchConfig) -> anyhow::Result<(String, Graph)> {
    Ok(match &cfg.graph {
        Some(path) => {
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "graph".into());
            (label, load_edge_list(path)?)
        }
        None => ("erdos-renyi".into(), erdos_renyi(cfg.n, 0.05, cfg.seed)?),
    })
}

/// Per-vertex triangle counts through `A³`. Costs are products with `A`.
pub fn triangles(cfg: &BenchConfig) -> anyhow::Result<Vec<Group>> {
    let (label, g) = load_graph(cfg)?;
    let n = g.node_count();
    let exact_cfg = TriangleConfig {
        tolerance: tolerance(2),
        delta: cfg.delta,
        budget: 1,
        limits: None,
    };
    let truth = triangle_counts(&g, TriangleMethod::Exact, &exact_cfg, &mut ProbeStream::gaussian(0, n))?;
    let methods = [
        ("adaptive", TriangleMethod::Adaptive),
        ("bekas", TriangleMethod::Bekas),
        ("diagpp", TriangleMethod::Diagpp),
        ("xdiag-r", TriangleMethod::Xdiag),
    ];
    let mut groups = Vec::new();
    for &p in &cfg.ps {
        let mut by_method: Vec<Vec<ResultRow>> = vec![Vec::new(); methods.len()];
        for t in 0..cfg.trials {
            let mut budget = 0usize;
            for (i, (name, method)) in methods.iter().enumerate() {
                let tc = TriangleConfig {
                    tolerance: tolerance(p),
                    delta: cfg.delta,
                    budget: match method {
                        TriangleMethod::Xdiag => even_budget(budget).max(2),
                        TriangleMethod::Diagpp => budget.max(3),
                        _ => budget.max(1),
                    },
                    limits: Some(Limits::for_dim(n)),
                };
                let mut probes = ProbeStream::gaussian(trial_seed(cfg.seed, t), n);
                if *method == TriangleMethod::Xdiag {
                    probes = probes.with_distribution(diagest::probes::Distribution::Rademacher);
                }
                let start = std::time::Instant::now();
                let est = triangle_counts(&g, *method, &tc, &mut probes)?;
                let wall_time = if cfg.time { start.elapsed().as_secs_f64() } else { 0.0 };
                if *method == TriangleMethod::Adaptive {
                    budget = (est.base_matvecs / 3) as usize;
                }
                by_method[i].push(ResultRow {
                    method: (*name).into(),
                    kind: label.clone(),
                    n,
                    tolerance: tc.tolerance,
                    delta: cfg.delta,
                    trial: t,
                    k: 0,
                    m: 0,
                    matvecs: est.base_matvecs,
                    relative_error: relative_error(&truth.counts, &est.counts),
                    wall_time,
                });
            }
        }
        groups.extend(by_method.into_iter().map(|rows| Group { p: Some(p), rows }));
    }
    Ok(groups)
}

pub fn run_suite(name: &str, cfg: &BenchConfig) -> anyhow::Result<Vec<Group>> {
    match name {
        "table1" => table1(cfg),
        "table2" => comparison(cfg, SpectrumKind::Flat),
        "table3" => comparison(cfg, SpectrumKind::Poly),
        "table4" => comparison(cfg, SpectrumKind::Exp),
        "table5" => comparison(cfg, SpectrumKind::STEP),
        "figure1" => figure1(cfg),
        "figure2" => figure2(cfg),
        "triangles" => triangles(cfg),
        other => bail!("unknown suite '{other}'"),
    }
}

pub fn write_suite<W: Write>(suite: &str, groups: &[Group], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["suite", "p"].into_iter().chain(HEADER))?;
    for g in groups {
        let prefix = [suite.to_string(), g.p.map(|p| p.to_string()).unwrap_or_default()];
        write_group(&mut w, &prefix, &g.rows)?;
    }
    w.flush()?;
    Ok(())
}
