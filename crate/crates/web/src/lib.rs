//! Browser bindings: simulate a 2-d pattern, estimate its γ̂ curve, and
//! tabulate kernel shapes. The exported functions are thin wrappers over
//! plain ones that return `Result<_, String>`.

use pairpot::estimators::{estimate_phi, linear_grid, EstimatorInput, EstimatorSettings};
use pairpot::sampler::{run_birth_death, ChainConfig};
use pairpot::{Kernel, KernelKind, Model, Point, PointPattern, Window};
use wasm_bindgen::prelude::*;

/// Builds a model from the demo's controls. `param` is φ for Strauss and
/// Triplets and θ for Lennard-Jones; ignored for Poisson.
pub fn build_model(kind: &str, beta: f64, range: f64, param: f64) -> Result<Model, String> {
    let m = match kind {
        "poisson" => Model::poisson(beta, range),
        "strauss" => Model::strauss(beta, range, param),
        "triplets" => Model::triplets(beta, range, param),
        "lennard_jones" => Model::lennard_jones(beta, range, param),
        other => return Err(format!("unknown model {other:?}")),
    };
    m.map_err(|e| e.to_string())
}

/// Final state of a birth–death chain on `[0, side]²`, as interleaved
/// `x, y` coordinates.
pub fn simulate(kind: &str, beta: f64, range: f64, param: f64, side: f64, seed: u64) -> Result<Vec<f64>, String> {
    let model = build_model(kind, beta, range, param)?;
    let window = Window::new(2, side).map_err(|e| e.to_string())?;
    if beta * window.volume() > 20_000.0 {
        return Err("expected point count above 20000; reduce β or the side".into());
    }
    let cfg = ChainConfig::for_model(&model, &window, seed);
    let x = run_birth_death(&model, &window, &cfg).map_err(|e| e.to_string())?;
    Ok(x.points().iter().flat_map(|p| [p.0[0], p.0[1]]).collect())
}

/// γ̂ on `n` evenly spaced radii in `[0.1R, R]`, as interleaved
/// `r, γ̂, γ` triples, where `γ` is the true potential of the model
/// (NaN when the model is not pairwise).
#[allow(clippy::too_many_arguments)]
pub fn estimate(
    coords: &[f64],
    side: f64,
    kind: &str,
    beta: f64,
    range: f64,
    param: f64,
    kernel: &str,
    bandwidth: f64,
    n: usize,
) -> Result<Vec<f64>, String> {
    if !coords.len().is_multiple_of(2) {
        return Err("coordinates must come in x, y pairs".into());
    }
    let model = build_model(kind, beta, range, param)?;
    let window = Window::new(2, side).map_err(|e| e.to_string())?;
    let pts = coords.chunks(2).map(Point::new).collect();
    let x = PointPattern::new(window, pts, range).map_err(|e| e.to_string())?;
    let kernel = Kernel::new(kernel.parse::<KernelKind>().map_err(|e| e.to_string())?);
    let grid = linear_grid(0.1 * range, range, n.max(2));
    let input = EstimatorInput::new(&x, EstimatorSettings::new(range, kernel, bandwidth, grid)).map_err(|e| e.to_string())?;
    let report = estimate_phi(&input).map_err(|e| e.to_string())?;
    Ok(report
        .rows
        .iter()
        .flat_map(|row| [row.r, row.gamma_hat, model.pair_potential(row.r).unwrap_or(f64::NAN)])
        .collect())
}

/// `K(u)` on `n` points of `[−1.2, 1.2]`, interleaved `u, K(u)`.
pub fn kernel_curve(kind: &str, n: usize) -> Result<Vec<f64>, String> {
    let k = Kernel::new(kind.parse::<KernelKind>().map_err(|e| e.to_string())?);
    Ok(linear_grid(-1.2, 1.2, n.max(2)).into_iter().flat_map(|u| [u, k.eval(u)]).collect())
}

#[wasm_bindgen(js_name = simulate)]
pub fn simulate_js(kind: &str, beta: f64, range: f64, param: f64, side: f64, seed: u32) -> Result<Vec<f64>, JsError> {
    simulate(kind, beta, range, param, side, seed.into()).map_err(|e| JsError::new(&e))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = estimate)]
pub fn estimate_js(
    coords: &[f64],
    side: f64,
    kind: &str,
    beta: f64,
    range: f64,
    param: f64,
    kernel: &str,
    bandwidth: f64,
    n: usize,
) -> Result<Vec<f64>, JsError> {
    estimate(coords, side, kind, beta, range, param, kernel, bandwidth, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = kernelCurve)]
pub fn kernel_curve_js(kind: &str, n: usize) -> Result<Vec<f64>, JsError> {
    kernel_curve(kind, n).map_err(|e| JsError::new(&e))
}
