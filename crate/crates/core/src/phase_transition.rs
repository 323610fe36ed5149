//! Asymptotic weak phase transition of l2/l1 recovery for block length `d`.
//!
//! For sparsity ratio `beta` the auxiliary root `theta` solves
//! `(1-beta) c1 Q((d+1)/2, q)/theta = sqrt(2 q)` with
//! `q = P^{-1}(d/2, (1-theta)/(1-beta))`, `c1 = sqrt(2) Γ((d+1)/2)/Γ(d/2)`,
//! and the measurement ratio `alpha = m/(d n)` follows in closed form.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::special_math::{inv_reg_lower_gamma, ln_gamma, reg_upper_gamma};

/// A point on the weak threshold curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PTPoint {
    pub d: usize,
    pub beta_w: f64,
    pub theta_hat: f64,
    pub alpha_w: f64,
}

const EDGE: f64 = 1e-12;
const SCAN_POINTS: usize = 1000;

fn check(beta: f64, d: usize) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(domain("phase_transition", format!("beta={beta} outside (0,1)")));
    }
    if d == 0 {
        return Err(domain("phase_transition", "block length must be positive"));
    }
    Ok(())
}

struct Terms {
    /// (1-beta) sqrt(2) Γ((d+1)/2)/Γ(d/2) Q((d+1)/2, q)
    first: f64,
    /// (1-beta) 2 Γ((d+2)/2)/Γ(d/2) Q((d+2)/2, q)
    second: f64,
    q: f64,
}

fn terms(theta: f64, beta: f64, d: usize) -> Result<Terms> {
    terms_p((1.0 - theta) / (1.0 - beta), beta, d)
}

fn terms_p(p: f64, beta: f64, d: usize) -> Result<Terms> {
    let h = 0.5 * d as f64;
    let p = p.clamp(0.0, 1.0);
    let q = inv_reg_lower_gamma(h, p.min(1.0 - f64::EPSILON))?;
    let c1 = std::f64::consts::SQRT_2 * (ln_gamma(h + 0.5) - ln_gamma(h)).exp();
    let c2 = 2.0 * (ln_gamma(h + 1.0) - ln_gamma(h)).exp();
    Ok(Terms {
        first: (1.0 - beta) * c1 * reg_upper_gamma(h + 0.5, q)?,
        second: (1.0 - beta) * c2 * reg_upper_gamma(h + 1.0, q)?,
        q,
    })
}

/// The root function whose zero defines `theta_hat`.
pub fn theta_residual(theta: f64, beta: f64, d: usize) -> Result<f64> {
    let t = terms(theta, beta, d)?;
    Ok(t.first / theta - (2.0 * t.q).sqrt())
}

/// Root `theta_hat` in `[beta, 1]` of [`theta_residual`].
pub fn solve_theta_hat(beta: f64, d: usize) -> Result<f64> {
    Ok(1.0 - (1.0 - beta) * solve_p(beta, d)?)
}

// The root in p = (1-theta)/(1-beta), which keeps full relative accuracy
// when theta_hat rounds to 1.
fn solve_p(beta: f64, d: usize) -> Result<f64> {
    check(beta, d)?;
    let lo = beta + EDGE;
    let hi = 1.0 - EDGE;
    if hi <= lo {
        return Ok(0.5);
    }
    let f = |t: f64| theta_residual(t, beta, d);
    let mut a = lo;
    let mut fa = f(a)?;
    for i in 1..=SCAN_POINTS {
        // the final probe sits at theta = 1, where the residual is positive;
        // for beta near 1 the root can lie beyond the clamped interior
        let b = if i == SCAN_POINTS { 1.0 } else { lo + (hi - lo) * i as f64 / SCAN_POINTS as f64 };
        let fb = f(b)?;
        if fa == 0.0 {
            return Ok((1.0 - a) / (1.0 - beta));
        }
        if fa.signum() != fb.signum() {
            return bisect(beta, d, a, b, fa);
        }
        a = b;
        fa = fb;
    }
    Err(Error::NoRoot { op: "solve_theta_hat", lo, hi })
}

// Bisection carried out in p = (1-theta)/(1-beta), where the root can sit
// within 1e-7 of theta = 1 and needs relative rather than absolute accuracy.
fn bisect(beta: f64, d: usize, theta_a: f64, theta_b: f64, f_a: f64) -> Result<f64> {
    let to_p = |t: f64| (1.0 - t) / (1.0 - beta);
    let to_theta = |p: f64| 1.0 - (1.0 - beta) * p;
    let f = |p: f64| -> Result<f64> {
        let t = terms_p(p, beta, d)?;
        Ok(t.first / to_theta(p) - (2.0 * t.q).sqrt())
    };
    let (mut a, mut b) = (to_p(theta_b), to_p(theta_a));
    let fb = f_a;
    for _ in 0..2000 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fb.signum() {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Threshold measurement ratio `alpha_w = m/(d n)` at sparsity `beta`.
pub fn alpha_weak(beta: f64, d: usize) -> Result<PTPoint> {
    let p = solve_p(beta, d)?;
    let theta = 1.0 - (1.0 - beta) * p;
    let t = terms_p(p, beta, d)?;
    let dd = d as f64;
    let alpha = (t.second + beta * dd - t.first * t.first / theta) / dd;
    Ok(PTPoint {
        d,
        beta_w: beta,
        theta_hat: theta,
        alpha_w: alpha.clamp(f64::MIN_POSITIVE, 1.0),
    })
}

/// Curve points for each `beta` in `grid`; failures are reported alongside
/// instead of aborting the sweep.
pub fn pt_curve(d: usize, beta_grid: &[f64]) -> (Vec<PTPoint>, Vec<(f64, Error)>) {
    let results: Vec<_> = beta_grid.par_iter().map(|&b| (b, alpha_weak(b, d))).collect();
    let mut points = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (b, r) in results {
        match r {
            Ok(p) => points.push(p),
            Err(e) => failures.push((b, e)),
        }
    }
    (points, failures)
}

/// Inverse of [`alpha_weak`] in `beta`; returns 0 when `alpha` lies below
/// the curve's smallest resolvable value.
pub fn beta_weak_of_alpha(alpha: f64, d: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(domain("beta_weak_of_alpha", format!("alpha={alpha} outside (0,1]")));
    }
    let g = |b: f64| -> Result<f64> { Ok(alpha_weak(b, d)?.alpha_w - alpha) };
    let (mut lo, mut hi) = (1e-9, 1.0 - 1e-9);
    if g(lo)? >= 0.0 {
        return Ok(0.0);
    }
    if g(hi)? <= 0.0 {
        return Ok(hi);
    }
    while hi - lo > 1e-13 {
        let m = 0.5 * (lo + hi);
        if g(m)? < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Ok(0.5 * (lo + hi))
}
