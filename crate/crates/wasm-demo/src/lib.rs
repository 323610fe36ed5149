//! Browser bindings. Each export returns a flat `Float64Array` of
//! fixed-width records so the page can plot it without extra glue.

use blockspt_core::deviation_bounds::{rate_lower, rate_upper};
use blockspt_core::integral_geometry::cap_bound_grid;
use blockspt_core::phase_transition::pt_curve;
use blockspt_core::BlockShape;
use wasm_bindgen::prelude::*;

/// `[beta, alpha_w]` pairs on `points` evenly spaced beta values in (0, 1).
pub fn threshold_curve(d: usize, points: usize) -> Result<Vec<f64>, String> {
    if d == 0 || points == 0 {
        return Err("need d >= 1 and at least one point".into());
    }
    let grid: Vec<f64> = (1..=points).map(|i| i as f64 / (points + 1) as f64).collect();
    let (curve, _) = pt_curve(d, &grid);
    Ok(curve.iter().flat_map(|p| [p.beta_w, p.alpha_w]).collect())
}

/// `[eps, bound]` pairs for the cap measure bound with `k` of `n` blocks
/// of length `d` nonzero.
pub fn cap_curve(d: usize, k: usize, n: usize, eps_lo: f64, eps_hi: f64, points: usize) -> Result<Vec<f64>, String> {
    if points < 2 || !(0.0 < eps_lo && eps_lo < eps_hi && eps_hi < std::f64::consts::FRAC_PI_2) {
        return Err("need 0 < eps_lo < eps_hi < pi/2 and at least two points".into());
    }
    let shape = BlockShape::new(d, k, n, d * n).map_err(|e| e.to_string())?;
    let step = (eps_hi - eps_lo) / (points - 1) as f64;
    let eps: Vec<f64> = (0..points).map(|i| eps_lo + step * i as f64).collect();
    let caps = cap_bound_grid(&shape, &eps).map_err(|e| e.to_string())?;
    Ok(caps.iter().flat_map(|c| [c.eps, c.bound]).collect())
}

/// `[alpha, upper, lower]` triples. An exponent that cannot be evaluated at
/// a point (e.g. `alpha <= beta`) is `NaN`.
pub fn exponent_curves(d: usize, beta: f64, alpha_lo: f64, alpha_hi: f64, points: usize) -> Result<Vec<f64>, String> {
    if d == 0 || points < 2 || !(0.0 < beta && beta < 1.0 && alpha_lo < alpha_hi && alpha_hi < 1.0) {
        return Err("need d >= 1, 0 < beta < 1, alpha_lo < alpha_hi < 1 and at least two points".into());
    }
    let step = (alpha_hi - alpha_lo) / (points - 1) as f64;
    Ok((0..points)
        .flat_map(|i| {
            let a = alpha_lo + step * i as f64;
            let up = rate_upper(a, beta, d).map_or(f64::NAN, |r| r.exponent);
            let lo = rate_lower(a, beta, d).map_or(f64::NAN, |r| r.exponent);
            [a, up, lo]
        })
        .collect())
}

#[wasm_bindgen(js_name = ptCurve)]
pub fn pt_curve_js(d: usize, points: usize) -> Result<Vec<f64>, JsValue> {
    threshold_curve(d, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = capBound)]
pub fn cap_bound_js(d: usize, k: usize, n: usize, eps_lo: f64, eps_hi: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    cap_curve(d, k, n, eps_lo, eps_hi, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = rateCurves)]
pub fn rate_curves_js(d: usize, beta: f64, alpha_lo: f64, alpha_hi: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    exponent_curves(d, beta, alpha_lo, alpha_hi, points).map_err(|e| JsValue::from_str(&e))
}
