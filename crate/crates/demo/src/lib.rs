//! Browser bindings for three interactive views: one adaptive run with its
//! Stage-1 cost curve, a method comparison at the adaptive budget, and the
//! probe-count calculator. Every export returns a JSON string.

use diagest::adaptive::{adaptive_estimate, Limits, TraceRow};
use diagest::bounds::{
    baston_reference_bound, g_query_count, lemma23_bound, ErrorBudget, Tolerance,
};
use diagest::data::{synth_matrix, SpectrumKind, SpectrumSpec, SynthMatrix};
use diagest::estimators::{bekas_estimate, diagpp_estimate, xdiag_estimate};
use diagest::probes::{derive_seed, Distribution, ProbeStream};
use diagest::vecops::relative_error;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Dense synthesis is O(n³); keep the page responsive.
pub const MAX_N: usize = 600;

#[derive(Debug, Serialize)]
pub struct AdaptiveView {
    pub k_chosen: usize,
    pub k_built: usize,
    pub m_used: usize,
    pub matvecs: u64,
    pub relative_error: f64,
    pub trace: Vec<TraceRow>,
    pub truth: Vec<f64>,
    pub estimate: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct MethodScore {
    pub method: &'static str,
    pub mean_matvecs: f64,
    pub mean_error: f64,
}

#[derive(Debug, Serialize)]
pub struct BoundsRow {
    pub f: f64,
    pub g: u64,
    pub lemma23: f64,
    pub baston: u64,
}

fn problem(kind: &str, n: usize, seed: u64) -> Result<SynthMatrix, String> {
    if !(2..=MAX_N).contains(&n) {
        return Err(format!("n must lie in [2, {MAX_N}]"));
    }
    let kind: SpectrumKind = kind.parse()?;
    synth_matrix(SpectrumSpec::new(kind, n), seed).map_err(|e| e.to_string())
}

pub fn adaptive_view(kind: &str, n: usize, eps: f64, delta: f64, seed: u64) -> Result<AdaptiveView, String> {
    let a = problem(kind, n, seed)?;
    let mut probes = ProbeStream::gaussian(derive_seed(seed, 1), n);
    let r = adaptive_estimate(&a.matrix, Tolerance::Relative(eps), delta, &mut probes, Limits::for_dim(n))
        .map_err(|e| e.to_string())?;
    Ok(AdaptiveView {
        k_chosen: r.k_chosen,
        k_built: r.k_built,
        m_used: r.m_used,
        matvecs: r.matvecs_total,
        relative_error: relative_error(&a.diagonal, &r.diagonal),
        trace: r.trace,
        truth: a.diagonal,
        estimate: r.diagonal,
        warnings: r.warnings,
    })
}

/// Adaptive first, then each comparator at the adaptive product count.
pub fn compare(
    kind: &str,
    n: usize,
    eps: f64,
    delta: f64,
    seed: u64,
    trials: usize,
) -> Result<Vec<MethodScore>, String> {
    if trials == 0 {
        return Err("trials must be at least 1".into());
    }
    let a = problem(kind, n, seed)?;
    let names = ["adaptive", "bekas", "diagpp", "xdiag-r", "xdiag-g"];
    let mut sums = [(0.0, 0.0); 5];
    for t in 0..trials {
        let g = ProbeStream::gaussian(derive_seed(seed, 100 + t as u64), n);
        let rad = g.clone().with_distribution(Distribution::Rademacher);
        let ada = adaptive_estimate(&a.matrix, Tolerance::Relative(eps), delta, &mut g.clone(), Limits::for_dim(n))
            .map_err(|e| e.to_string())?;
        let b = ada.matvecs_total as usize;
        let even = (b - b % 2).max(2);
        let runs = [
            (ada.diagonal, ada.matvecs_total),
            bekas_estimate(&a.matrix, &mut g.clone(), b).map(|r| (r.diagonal, r.matvecs_used)).map_err(|e| e.to_string())?,
            diagpp_estimate(&a.matrix, b.max(3), &mut g.clone()).map(|r| (r.diagonal, r.matvecs_used)).map_err(|e| e.to_string())?,
            xdiag_estimate(&a.matrix, even, &mut rad.clone()).map(|r| (r.diagonal, r.matvecs_used)).map_err(|e| e.to_string())?,
            xdiag_estimate(&a.matrix, even, &mut g.clone()).map(|r| (r.diagonal, r.matvecs_used)).map_err(|e| e.to_string())?,
        ];
        for (sum, (d, mv)) in sums.iter_mut().zip(runs) {
            sum.0 += mv as f64;
            sum.1 += relative_error(&a.diagonal, &d);
        }
    }
    let c = trials as f64;
    Ok(names
        .into_iter()
        .zip(sums)
        .map(|(method, (mv, err))| MethodScore {
            method,
            mean_matvecs: mv / c,
            mean_error: err / c,
        })
        .collect())
}

pub fn bounds_rows(eps: f64, delta: f64, n: usize, frobs: &[f64]) -> Result<Vec<BoundsRow>, String> {
    let b = ErrorBudget::new(eps, delta, n).map_err(|e| e.to_string())?;
    Ok(frobs
        .iter()
        .map(|&f| BoundsRow {
            f,
            g: g_query_count(&b, f),
            lemma23: lemma23_bound(&b, f),
            baston: baston_reference_bound(&b),
        })
        .collect())
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = adaptiveRun)]
pub fn adaptive_run(kind: &str, n: usize, eps: f64, delta: f64, seed: u32) -> Result<String, JsValue> {
    to_js(adaptive_view(kind, n, eps, delta, seed as u64))
}

#[wasm_bindgen(js_name = compareMethods)]
pub fn compare_methods(kind: &str, n: usize, eps: f64, delta: f64, seed: u32, trials: usize) -> Result<String, JsValue> {
    to_js(compare(kind, n, eps, delta, seed as u64, trials))
}

#[wasm_bindgen(js_name = boundsTable)]
pub fn bounds_table(eps: f64, delta: f64, n: usize, frobs: Vec<f64>) -> Result<String, JsValue> {
    to_js(bounds_rows(eps, delta, n, &frobs))
}
