//! Browser bindings for the static demo page in `www/`.
//!
//! Every export takes plain values and returns a JSON string, so the page
//! needs no bundler. The `*_json` functions hold the logic and also run
//! natively in tests.

use fractau::assembly::{OperatorCache, SolverOptions};
use fractau::basis::BasisConfig;
use fractau::fractional::{distributed_matrix, integer_derivative_matrix, singular_kernel_matrix};
use fractau::problem::{builtin_example, validate_source, weight_from_expr, ExampleParams, ProblemConfig};
use fractau::report::{solve, Sample, SolveReport, DEFAULT_GRID};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn sample_json(s: &Sample) -> Value {
    json!({ "coords": s.coords, "exact": s.exact, "approx": s.approx, "abs_error": s.abs_error() })
}

/// Solves a built-in example and returns its diagonal table, the profile
/// at the evaluation time and the error metrics.
pub fn solve_example_json(name: &str, lambda: usize, points: usize) -> Result<String, String> {
    let def = builtin_example(name, ExampleParams::default()).map_err(err)?;
    let opts = SolverOptions::new(lambda, points);
    let sol = solve(&def.problem, &opts, &OperatorCache::new()).map_err(err)?;
    let report = SolveReport::build(&def.problem, &sol, def.t_eval, DEFAULT_GRID).map_err(err)?;
    let metrics = report.metrics.map(|m| {
        json!({ "l2_paper": m.l2_paper, "l2_rms": m.l2_rms, "linf": m.linf, "mean": m.mean })
    });
    Ok(json!({
        "name": name,
        "dimension": report.dimension,
        "lambda": lambda,
        "points": points,
        "t_eval": report.t_eval,
        "coordinates": report.coordinate_names(),
        "table": report.table.iter().map(sample_json).collect::<Vec<_>>(),
        "profile": report.profile.iter().map(sample_json).collect::<Vec<_>>(),
        "metrics": metrics,
        "condition": report.condition,
        "residual_norm": report.residual_norm,
    })
    .to_string())
}

/// An operational matrix on Λ shifted Legendre polynomials.
///
/// `kind` is one of `d1`, `d2`, `kernel` (μ = `param`), `distributed-time`
/// or `distributed-space` (weight expression `weight`, `points` Gauss nodes).
pub fn operational_matrix_json(
    kind: &str,
    lambda: usize,
    weight: &str,
    points: usize,
    param: f64,
) -> Result<String, String> {
    if !(1..=24).contains(&lambda) {
        return Err(format!("Λ must lie in 1..=24, got {lambda}"));
    }
    let cfg = BasisConfig::global(lambda);
    let m = match kind {
        "d1" => integer_derivative_matrix(&cfg, 1),
        "d2" => integer_derivative_matrix(&cfg, 2),
        "kernel" => singular_kernel_matrix(&cfg, param),
        "distributed-time" => {
            weight_from_expr(weight, [0.0, 1.0]).and_then(|w| distributed_matrix(&cfg, &w, points))
        }
        "distributed-space" => {
            weight_from_expr(weight, [1.0, 2.0]).and_then(|w| distributed_matrix(&cfg, &w, points))
        }
        other => return Err(format!("unknown operator {other:?}")),
    }
    .map_err(err)?;
    let rows: Vec<Vec<f64>> = (0..lambda).map(|i| m.data.row(i).iter().copied().collect()).collect();
    Ok(json!({ "kind": kind, "lambda": lambda, "rows": rows }).to_string())
}

/// Parses a JSON problem file and checks its source against its exact
/// solution at `samples` interior points.
pub fn validate_problem_json(problem: &str, samples: usize) -> Result<String, String> {
    let p = ProblemConfig::from_json(problem).and_then(|c| c.build()).map_err(err)?;
    let r = validate_source(&p, samples).map_err(err)?;
    let points: Vec<Value> = r
        .samples
        .iter()
        .map(|s| json!({ "point": s.point, "registered": s.registered, "rederived": s.rederived }))
        .collect();
    Ok(json!({
        "passed": r.passed(),
        "max_error": r.max_error,
        "tolerance": r.tolerance,
        "samples": points,
    })
    .to_string())
}

/// JSON text of a built-in problem, to seed the page's editor.
pub fn example_config_json(name: &str) -> Result<String, String> {
    fractau::problem::builtin_config(name, ExampleParams::default())
        .map(|c| c.to_json())
        .map_err(err)
}

#[wasm_bindgen(js_name = solveExample)]
pub fn solve_example(name: &str, lambda: usize, points: usize) -> Result<String, JsValue> {
    solve_example_json(name, lambda, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = operationalMatrix)]
pub fn operational_matrix(kind: &str, lambda: usize, weight: &str, points: usize, param: f64) -> Result<String, JsValue> {
    operational_matrix_json(kind, lambda, weight, points, param).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = validateProblem)]
pub fn validate_problem(problem: &str, samples: usize) -> Result<String, JsValue> {
    validate_problem_json(problem, samples).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = exampleConfig)]
pub fn example_config(name: &str) -> Result<String, JsValue> {
    example_config_json(name).map_err(|e| JsValue::from_str(&e))
}
