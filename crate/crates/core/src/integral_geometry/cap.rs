//! Cap-neighbourhood bounds through characteristic functions of
//! `Y = w_λ(h)^2 - cos^2(ε) ‖h‖^2`.

use std::cell::Cell;
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::shape::BlockShape;
use crate::special_math::expectation::{chi_square_truncation, Density};
use crate::special_math::{
    expectation_integral, expectation_integral_with_breaks, gil_pelaez_cdf, integrate_panels, ln_gamma, minimize_1d,
    neg_power, reg_lower_gamma, CharacteristicFunction, QuadratureSpec,
};

const J: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Single-block factor of `I_{λ,1}`:
/// `E exp(-j w (max(U - λ, 0)^2 - cos^2(ε) U^2))`, `U ~ chi(d)`.
fn block_factor(w: f64, eps: f64, lambda: f64, d: usize, spec: &QuadratureSpec) -> Result<Complex64> {
    let c2 = eps.cos().powi(2);
    if eps >= FRAC_PI_2 || c2 == 0.0 {
        return block_factor_orthogonal(w, lambda, d, spec);
    }
    expectation_integral_with_breaks(
        Density::ChiSquare(d as f64),
        |x: f64| {
            let u = x.sqrt();
            let t = (u - lambda).max(0.0);
            Complex64::from_polar(1.0, -w * (t * t - c2 * x))
        },
        &[lambda * lambda],
        spec,
    )
}

// At ε = π/2 the part above λ is a Gaussian-type integral whose path can be
// turned onto the steepest-descent ray, which removes the oscillation.
fn block_factor_orthogonal(w: f64, lambda: f64, d: usize, spec: &QuadratureSpec) -> Result<Complex64> {
    let below = reg_lower_gamma(0.5 * d as f64, 0.5 * lambda * lambda)?;
    let above = chi_ray_integral(d, lambda, 0.0, w, spec)?;
    Ok(Complex64::new(below, 0.0) + above)
}

/// `∫_s^∞ chi_dof(u) exp(-j w (u - s + b)^2) du` with `b >= 0`, evaluated on
/// the ray through `s` where the quadratic part of the exponent is real.
pub(crate) fn chi_ray_integral(dof: usize, s: f64, b: f64, w: f64, spec: &QuadratureSpec) -> Result<Complex64> {
    let a = Complex64::new(0.5, w);
    let theta = a.arg();
    let dir = Complex64::from_polar(1.0, -0.5 * theta);
    let h = 0.5 * dof as f64;
    let log_norm = (h - 1.0) * std::f64::consts::LN_2 + ln_gamma(h);
    let power = (dof - 1) as f64;
    let integrand = |r: f64| -> Complex64 {
        let v = dir * r;
        let u = v + s;
        let poly = if power == 0.0 {
            Complex64::new(0.0, 0.0)
        } else if u.norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        } else {
            u.ln() * power
        };
        let t = v + b;
        (poly - u * u * 0.5 - J * w * t * t - log_norm).exp() * dir
    };
    let r_max = chi_square_truncation(dof as f64, spec.tail_mass_cutoff)?.sqrt();
    let scale = 1.0 / a.norm().sqrt();
    let mut pts = vec![0.0];
    let mut p = 0.125 * scale;
    while p < r_max {
        pts.push(p);
        p *= 2.0;
    }
    pts.push(r_max);
    Ok(integrate_panels(integrand, &pts, spec)?.value)
}

/// `I_{λ,1}(w, ε)`: the off-support factor, raised to the power `n - k`.
pub fn i_lambda1(w: f64, eps: f64, lambda: f64, shape: &BlockShape, spec: &QuadratureSpec) -> Result<Complex64> {
    Ok(block_factor(w, eps, lambda, shape.d, spec)?.powi((shape.n - shape.k) as i32))
}

/// `I_{λ,2}(w, ε)`: the on-support first coordinates, in closed form.
pub fn i_lambda2(w: f64, eps: f64, lambda: f64, shape: &BlockShape) -> Complex64 {
    log_i2(w, eps, lambda, shape.k).exp()
}

/// `I_{λ,3}(w, ε)`: the remaining `d - 1` coordinates of each support block.
pub fn i_lambda3(w: f64, eps: f64, shape: &BlockShape) -> Complex64 {
    neg_power(z_of(w, eps), 0.5 * ((shape.d - 1) * shape.k) as f64)
}

fn z_of(w: f64, eps: f64) -> Complex64 {
    let c2 = if eps >= FRAC_PI_2 { 0.0 } else { eps.cos().powi(2) };
    Complex64::new(1.0, -2.0 * w * (c2 - 1.0))
}

fn log_i2(w: f64, eps: f64, lambda: f64, k: usize) -> Complex64 {
    let z = z_of(w, eps);
    let lw = J * (2.0 * lambda * w);
    (-J * w * lambda * lambda + lw * lw / (2.0 * z) - 0.5 * z.ln()) * k as f64
}

/// `P(Y <= 0)` for `Y = w_λ^2 - cos^2(ε) ‖h‖^2`.
pub fn cap_prob_at(shape: &BlockShape, eps: f64, lambda: f64, spec: &QuadratureSpec) -> Result<f64> {
    check_cap_args(shape, eps)?;
    let inner = QuadratureSpec::coarse();
    let first_err: std::sync::Mutex<Option<Error>> = std::sync::Mutex::new(None);
    let phi = CharacteristicFunction::new(|w: f64| {
        // E e^{jwY} is the conjugate of the product of the I terms
        let psi = match i_lambda1(w, eps, lambda, shape, &inner) {
            Ok(v) => v,
            Err(e) => {
                first_err.lock().unwrap().get_or_insert(e);
                return Complex64::new(0.0, 0.0);
            }
        };
        (psi * log_i2(w, eps, lambda, shape.k).exp() * i_lambda3(w, eps, shape)).conj()
    })
    .with_decay_bound(|w: f64| (log_i2(w, eps, lambda, shape.k).exp() * i_lambda3(w, eps, shape)).norm());
    let p = gil_pelaez_cdf(&phi, 0.0, spec)?;
    drop(phi);
    if let Some(e) = first_err.into_inner().unwrap() {
        return Err(e);
    }
    Ok(p)
}

fn check_cap_args(shape: &BlockShape, eps: f64) -> Result<()> {
    shape.validate()?;
    if shape.k == 0 {
        return Err(domain("cap_bound", "k must be positive"));
    }
    if !(eps > 0.0 && eps < FRAC_PI_2) {
        return Err(domain("cap_bound", format!("eps={eps} outside (0, pi/2)")));
    }
    Ok(())
}

/// Upper bound on the relative measure of the `ε`-neighbourhood of the
/// failure cone, with the minimizing `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapBound {
    pub eps: f64,
    pub bound: f64,
    pub lambda: f64,
}

/// `1 - max_{λ >= 0} P(Y_λ <= 0)`.
pub fn cap_bound(shape: &BlockShape, eps: f64) -> Result<CapBound> {
    check_cap_args(shape, eps)?;
    let spec = QuadratureSpec::coarse();
    let mut hi = 3.0 * (shape.d as f64).sqrt();
    for _ in 0..4 {
        let err = Cell::new(None);
        let best = minimize_1d(
            |l| match cap_prob_at(shape, eps, l, &spec) {
                Ok(p) => -p,
                Err(e) => {
                    err.set(Some(e));
                    f64::INFINITY
                }
            },
            0.0,
            hi,
            1e-5,
        );
        if !best.value.is_finite() {
            return Err(err.into_inner().unwrap_or_else(|| domain("cap_bound", "no finite objective value")));
        }
        if best.x < 0.98 * hi {
            return Ok(CapBound {
                eps,
                bound: (1.0 + best.value).clamp(0.0, 1.0),
                lambda: best.x,
            });
        }
        hi *= 2.0;
    }
    Err(domain("cap_bound", "maximizing lambda keeps hitting the search boundary"))
}

/// [`cap_bound`] over a grid, in parallel.
pub fn cap_bound_grid(shape: &BlockShape, eps: &[f64]) -> Result<Vec<CapBound>> {
    eps.par_iter().map(|&e| cap_bound(shape, e)).collect()
}

/// `v_{N-1}`, the relative measure of the failure cone itself:
/// `P(Σ_off ‖h_i‖ + Σ_on h_{i,1} <= 0)`.
pub fn v_last(shape: &BlockShape) -> Result<f64> {
    shape.validate()?;
    if shape.k == 0 {
        return Ok(0.0);
    }
    let spec = QuadratureSpec::default();
    let first_err: std::sync::Mutex<Option<Error>> = std::sync::Mutex::new(None);
    let (d, off, k) = (shape.d as f64, (shape.n - shape.k) as i32, shape.k as f64);
    let phi = CharacteristicFunction::new(|w: f64| {
        let chi = expectation_integral(Density::ChiSquare(d), |x: f64| Complex64::from_polar(1.0, w * x.sqrt()), &spec);
        match chi {
            Ok(c) => c.powi(off) * (-0.5 * k * w * w).exp(),
            Err(e) => {
                first_err.lock().unwrap().get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        }
    })
    .with_decay_bound(move |w: f64| (-0.5 * k * w * w).exp());
    let p = gil_pelaez_cdf(&phi, 0.0, &spec)?;
    drop(phi);
    if let Some(e) = first_err.into_inner().unwrap() {
        return Err(e);
    }
    Ok(p)
}

/// Relative measure of the complementary cone, `1 - v_{N-1}`; equal to 1
/// when there is no support.
pub fn success_cone_fraction(shape: &BlockShape) -> Result<f64> {
    Ok(1.0 - v_last(shape)?)
}
