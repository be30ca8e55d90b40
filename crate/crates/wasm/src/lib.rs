//! Browser bindings. Every export takes plain strings and returns a JSON
//! string, either `{"ok": ...}` or `{"error": "..."}`, so the same
//! functions run natively in tests.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use quantalg::distributions::{kantorovich_with_certificate, lk_distance};
use quantalg::parse::{parse_dist, parse_ground_term, parse_space, parse_theory_file};
use quantalg::unit::format_rational;
use quantalg::{saturate, MetricKind, SaturationConfig};

#[derive(Serialize)]
#[serde(rename_all = "lowercase")]
enum Reply<T> {
    Ok(T),
    Error(String),
}

fn reply<T: Serialize>(r: Result<T, String>) -> String {
    let r = match r {
        Ok(v) => Reply::Ok(v),
        Err(e) => Reply::Error(e),
    };
    serde_json::to_string(&r).expect("plain data serializes")
}

#[derive(Serialize)]
pub struct Distances {
    pub lk: String,
    pub kantorovich: String,
    /// Optimal coupling, rows along the support of the first distribution.
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub coupling: Vec<Vec<String>>,
}

/// ŁK and Kantorovich distances between two distributions such as
/// `{a: 1/2, b: 1/2}` over a space block of the given kind.
pub fn distances_of(kind: &str, space: &str, mu: &str, nu: &str) -> Result<Distances, String> {
    let kind: MetricKind = kind.parse().map_err(|e| format!("kind: {e}"))?;
    let space = parse_space(space, kind).map_err(|e| format!("space: {e}"))?;
    let report = space.validate();
    if let Some(v) = report.violations.first() {
        return Err(format!("space: {v}"));
    }
    let mu = parse_dist(mu).map_err(|e| format!("first distribution: {e}"))?;
    let nu = parse_dist(nu).map_err(|e| format!("second distribution: {e}"))?;
    let lk = lk_distance(&space, &mu, &nu).map_err(|e| e.to_string())?;
    let (k, sol) = kantorovich_with_certificate(&space, &mu, &nu).map_err(|e| e.to_string())?;
    Ok(Distances {
        lk: lk.to_string(),
        kantorovich: k.to_string(),
        rows: mu.support().map(|(a, _)| a.clone()).collect(),
        cols: nu.support().map(|(a, _)| a.clone()).collect(),
        coupling: sol
            .flow
            .iter()
            .map(|row| row.iter().map(format_rational).collect())
            .collect(),
    })
}

#[derive(Serialize)]
pub struct Saturation {
    pub classes: Vec<String>,
    pub matrix: Vec<Vec<String>>,
    pub fixpoint: bool,
    pub warnings: Vec<String>,
    /// Derived distance of the queried pair, when one was given.
    pub query: Option<String>,
}

/// Saturates a theory file at `depth`; when `lhs` and `rhs` are both
/// non-empty their derived distance is reported too.
pub fn saturation_of(
    theory: &str,
    depth: usize,
    lhs: &str,
    rhs: &str,
) -> Result<Saturation, String> {
    let file = parse_theory_file(theory).map_err(|e| e.to_string())?;
    let th = file.extended().map_err(|e| e.to_string())?;
    let cfg = SaturationConfig {
        param_closure: file.options.closure.unwrap_or(0),
        ..SaturationConfig::with_depth(depth)
    };
    let r = saturate(&th, &cfg).map_err(|e| e.to_string())?;
    let query = if lhs.trim().is_empty() || rhs.trim().is_empty() {
        None
    } else {
        let term = |s: &str| parse_ground_term(s, &th.sig).map_err(|e| format!("`{s}`: {e}"));
        let d = r
            .derived_distance(&term(lhs)?, &term(rhs)?)
            .map_err(|e| e.to_string())?;
        Some(d.to_string())
    };
    Ok(Saturation {
        classes: r
            .representatives()
            .iter()
            .map(ToString::to_string)
            .collect(),
        matrix: r
            .matrix()
            .iter()
            .map(|row| row.iter().map(ToString::to_string).collect())
            .collect(),
        fixpoint: r.fixpoint_reached,
        warnings: r.warnings.clone(),
        query,
    })
}

#[derive(Serialize)]
pub struct Validation {
    pub valid: bool,
    pub kind: String,
    pub violations: Vec<String>,
}

pub fn validation_of(kind: &str, space: &str) -> Result<Validation, String> {
    let kind: MetricKind = kind.parse().map_err(|e| format!("kind: {e}"))?;
    let space = parse_space(space, kind).map_err(|e| format!("space: {e}"))?;
    let report = space.validate();
    Ok(Validation {
        valid: report.is_valid(),
        kind: kind.to_string(),
        violations: report.violations.iter().map(ToString::to_string).collect(),
    })
}

#[wasm_bindgen]
pub fn distances(kind: &str, space: &str, mu: &str, nu: &str) -> String {
    reply(distances_of(kind, space, mu, nu))
}

#[wasm_bindgen]
pub fn saturation(theory: &str, depth: usize, lhs: &str, rhs: &str) -> String {
    // keep the page responsive
    reply(if depth > 2 {
        Err("depth is limited to 2 here".to_string())
    } else {
        saturation_of(theory, depth, lhs, rhs)
    })
}

#[wasm_bindgen]
pub fn validate(kind: &str, space: &str) -> String {
    reply(validation_of(kind, space))
}

/// A bundled theory by name, for the examples menu; empty if unknown.
#[wasm_bindgen]
pub fn fixture(name: &str) -> String {
    quantalg::fixtures::source(name).unwrap_or("").to_string()
}
