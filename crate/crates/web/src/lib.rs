//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export returns a JSON string; errors surface as JavaScript exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use semicircle::ensembles::EnsembleSpec;
use semicircle::spectra::{histogram, ks_distance, pooled_spectrum, HistogramBin};
use semicircle::tree_integrals::moment_table;
use semicircle::weights::{is_phi_constant, midpoints, WeightFn};

/// Upper limits that keep a single call responsive in the browser.
const MAX_DEMO_GRID: usize = 4096;
const MAX_DEMO_N: usize = 400;
const MAX_DEMO_TRIALS: usize = 16;

#[derive(Serialize)]
struct PhiCurve {
    weight: String,
    x: Vec<f64>,
    phi: Vec<f64>,
    phi0: f64,
    max_deviation: f64,
    constant: bool,
}

#[derive(Serialize)]
struct Moments {
    weight: String,
    phi0: f64,
    normalized: bool,
    k: Vec<usize>,
    mu: Vec<f64>,
    catalan: Vec<f64>,
}

#[derive(Serialize)]
struct Spectrum {
    ensemble: String,
    eigenvalue_count: usize,
    ks_distance: f64,
    bins: Vec<HistogramBin>,
}

fn limit(what: &str, value: usize, max: usize) -> Result<(), String> {
    if value > max {
        Err(format!("{what} = {value} exceeds the demo limit {max}"))
    } else {
        Ok(())
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

pub fn phi_curve_json(weight: &str, grid: usize, tol: f64) -> Result<String, String> {
    limit("grid", grid, MAX_DEMO_GRID)?;
    let w = WeightFn::parse(weight).map_err(|e| e.to_string())?;
    let r = is_phi_constant(&w, tol, grid).map_err(|e| e.to_string())?;
    to_json(&PhiCurve {
        weight: w.to_string(),
        x: midpoints(grid).collect(),
        phi0: r.phi0,
        max_deviation: r.max_deviation,
        constant: r.constant_verdict,
        phi: r.phi_values,
    })
}

pub fn theory_moments_json(weight: &str, k_max: usize, grid: usize, normalized: bool) -> Result<String, String> {
    limit("grid", grid, MAX_DEMO_GRID)?;
    let w = WeightFn::parse(weight).map_err(|e| e.to_string())?;
    let t = moment_table(k_max, &w, grid, normalized).map_err(|e| e.to_string())?;
    let even: Vec<_> = t.entries.iter().filter(|e| e.k % 2 == 0).collect();
    to_json(&Moments {
        weight: w.to_string(),
        phi0: t.phi0,
        normalized,
        k: even.iter().map(|e| e.k).collect(),
        mu: even.iter().map(|e| e.mu).collect(),
        catalan: even.iter().map(|e| e.catalan).collect(),
    })
}

pub fn spectrum_json(
    ensemble: &str,
    n: usize,
    trials: usize,
    bins: usize,
    normalized: bool,
    seed: u64,
) -> Result<String, String> {
    limit("n", n, MAX_DEMO_N)?;
    limit("trials", trials, MAX_DEMO_TRIALS)?;
    let spec = EnsembleSpec::from_shorthand(ensemble, n, seed).map_err(|e| e.to_string())?;
    let eigs = pooled_spectrum(&spec, trials, normalized).map_err(|e| e.to_string())?;
    let hist = histogram(&eigs, bins, (-2.5, 2.5)).map_err(|e| e.to_string())?;
    to_json(&Spectrum {
        ensemble: spec.to_string(),
        eigenvalue_count: eigs.len(),
        ks_distance: ks_distance(&eigs).map_err(|e| e.to_string())?,
        bins: hist,
    })
}

#[wasm_bindgen]
pub fn phi_curve(weight: &str, grid: usize, tol: f64) -> Result<String, JsError> {
    phi_curve_json(weight, grid, tol).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn theory_moments(weight: &str, k_max: usize, grid: usize, normalized: bool) -> Result<String, JsError> {
    theory_moments_json(weight, k_max, grid, normalized).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn spectrum(
    ensemble: &str,
    n: usize,
    trials: usize,
    bins: usize,
    normalized: bool,
    seed: u32,
) -> Result<String, JsError> {
    spectrum_json(ensemble, n, trials, bins, normalized, u64::from(seed)).map_err(|e| JsError::new(&e))
}
