//! Finite-dimensional upper bound on the probability of failure obtained by
//! comparing the Gaussian width with the norm of an `M`-dimensional Gaussian.

use std::cell::Cell;
use std::sync::Mutex;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::integral_geometry::{chi_ray_integral, i_lambda1, i_lambda2, i_lambda3};
use crate::shape::BlockShape;
use crate::special_math::{
    gauss_tail, gil_pelaez_cdf, minimize_nd_with, reg_lower_gamma, Bounds, CharacteristicFunction, NdOptions,
    QuadratureSpec,
};

const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

/// Allowance for the absolute error of the inverted probability. It is added
/// to every numerator, so far shifts `t1`, where the numerator drops to the
/// quadrature noise, are never rewarded.
pub const INVERSION_ALLOWANCE: f64 = 1e-8;

/// Result of the joint search over the shift `t1` and `λ`;
/// `p_ub_ag = (inner_integral + tail_term + INVERSION_ALLOWANCE) / P(g >= t1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgBoundResult {
    pub p_ub_ag: f64,
    pub t1: f64,
    pub lambda: f64,
    /// Inverted part of the event probability at the optimum.
    pub inner_integral: f64,
    /// `P(‖g‖ < max(-t1, 0))`, where the event holds automatically.
    pub tail_term: f64,
}

/// `E[exp(-j w (t1 + ‖g‖)^2); ‖g‖ >= max(-t1, 0)]` for `g ~ N(0, I_M)`.
pub fn i_lambda4(w: f64, t1: f64, m: usize, spec: &QuadratureSpec) -> Result<Complex64> {
    if m == 0 {
        return Err(domain("i_lambda4", "M must be positive"));
    }
    chi_ray_integral(m, (-t1).max(0.0), t1.max(0.0), w, spec)
}

/// `P(w_λ(h) - ‖g‖ - t1 >= 0)`.
pub fn p_lambda_ub(shape: &BlockShape, lambda: f64, t1: f64) -> Result<f64> {
    Ok(p_lambda_parts(shape, lambda, t1, &QuadratureSpec::default())?.0)
}

// (probability, inverted part, tail part)
fn p_lambda_parts(shape: &BlockShape, lambda: f64, t1: f64, spec: &QuadratureSpec) -> Result<(f64, f64, f64)> {
    shape.validate()?;
    if shape.k == 0 {
        return Err(domain("p_lambda_ub", "k must be positive"));
    }
    if !(lambda >= 0.0) || !t1.is_finite() {
        return Err(domain("p_lambda_ub", format!("lambda={lambda} t1={t1}")));
    }
    let m = shape.m;
    let s = (-t1).max(0.0);
    let tail = if s > 0.0 { reg_lower_gamma(0.5 * m as f64, 0.5 * s * s)? } else { 0.0 };
    let mass = 1.0 - tail;
    if mass <= 0.0 {
        return Ok((1.0, 0.0, tail));
    }
    let inner = QuadratureSpec::coarse();
    let first_err: Mutex<Option<Error>> = Mutex::new(None);
    // transform of X = w_λ^2 - (t1 + ‖g‖)^2 restricted to t1 + ‖g‖ >= 0
    let phi = CharacteristicFunction::new(|w: f64| {
        let terms = i_lambda1(-w, HALF_PI, lambda, shape, &inner).and_then(|a| Ok(a * i_lambda4(w, t1, m, &inner)?));
        match terms {
            Ok(v) => v * i_lambda2(-w, HALF_PI, lambda, shape) * i_lambda3(-w, HALF_PI, shape),
            Err(e) => {
                first_err.lock().unwrap().get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        }
    })
    .with_decay_bound(|w: f64| (i_lambda2(-w, HALF_PI, lambda, shape) * i_lambda3(-w, HALF_PI, shape)).norm());
    let below = gil_pelaez_cdf(&phi, 0.0, spec)?;
    drop(phi);
    if let Some(e) = first_err.into_inner().unwrap() {
        return Err(e);
    }
    let upper = (mass - below).clamp(0.0, mass);
    Ok(((upper + tail).clamp(0.0, 1.0), upper, tail))
}

/// `min_{t1, λ} P(w_λ(h) - ‖g‖ - t1 >= 0) / P(g >= t1)`, clipped to `[0, 1]`.
/// Each numerator carries [`INVERSION_ALLOWANCE`].
pub fn p_ub_ag(shape: &BlockShape) -> Result<AgBoundResult> {
    p_ub_ag_from(shape, None)
}

/// [`p_ub_ag`] with an extra starting point `(t1, λ)` for the search, such as
/// the optimum at a neighbouring `M`.
pub fn p_ub_ag_from(shape: &BlockShape, start: Option<(f64, f64)>) -> Result<AgBoundResult> {
    shape.validate()?;
    if shape.k == 0 {
        return Err(domain("p_ub_ag", "k must be positive"));
    }
    let spec = QuadratureSpec::coarse();
    let t_max = 3.0 * (shape.m as f64).sqrt();
    let l_max = 3.0 * (shape.d as f64).sqrt();
    let bounds = Bounds::new(vec![-t_max, 0.0], vec![t_max, l_max]);
    let err = Cell::new(None);
    let objective = |p: &[f64]| -> f64 {
        let q = gauss_tail(p[0]);
        match p_lambda_parts(shape, p[1], p[0], &spec) {
            Ok((prob, _, _)) if q > 0.0 => ((prob + INVERSION_ALLOWANCE) / q).min(1e3),
            Ok(_) => 1e3,
            Err(e) => {
                err.set(Some(e));
                f64::INFINITY
            }
        }
    };
    let mut extra = vec![vec![0.0, 1.0_f64.min(l_max)]];
    if let Some((t, l)) = start {
        extra.insert(0, vec![t.clamp(-t_max, t_max), l.clamp(0.0, l_max)]);
    }
    let opts = NdOptions {
        starts: 3,
        max_evals: 600,
        ftol: 1e-7,
        extra_starts: extra[1..].to_vec(),
        ..NdOptions::default()
    };
    let best = minimize_nd_with(objective, &extra[0], &bounds, &opts);
    if !best.value.is_finite() {
        return Err(err.into_inner().unwrap_or_else(|| domain("p_ub_ag", "no finite objective value")));
    }
    let (t1, lambda) = (best.x[0], best.x[1]);
    let (_, inner_integral, tail_term) = p_lambda_parts(shape, lambda, t1, &spec)?;
    Ok(AgBoundResult {
        p_ub_ag: best.value.clamp(0.0, 1.0),
        t1,
        lambda,
        inner_integral,
        tail_term,
    })
}
