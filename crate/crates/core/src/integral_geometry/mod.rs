//! Spherical Steiner and Crofton machinery for the cone of failing
//! directions: cap-neighbourhood measures, intrinsic volumes recovered by
//! regression, and the resulting probability of failure.

mod cap;
mod pipeline;
mod qp;
mod regression;

pub(crate) use cap::chi_ray_integral;
pub use cap::{cap_bound, cap_bound_grid, cap_prob_at, i_lambda1, i_lambda2, i_lambda3, success_cone_fraction, v_last, CapBound};
pub use pipeline::{isotonic_nonincreasing, perr_pipeline, CapInput, PerrCurve, PerrPoint, MONOTONE_FLAG};
pub use qp::{solve_qp, QpProblem, QpSolution};
pub use regression::{regress_volumes, RegressionObjective, RegressionParams};

use crate::error::{domain, Result};
use crate::special_math::{integrate_panels, ln_gamma, QuadratureSpec};

/// Surface measure of the unit sphere in `R^n`, `2 π^{n/2} / Γ(n/2)`.
pub fn sphere_surface(n: usize) -> f64 {
    ln_sphere_surface(n).exp()
}

fn ln_sphere_surface(n: usize) -> f64 {
    let h = 0.5 * n as f64;
    std::f64::consts::LN_2 + h * std::f64::consts::PI.ln() - ln_gamma(h)
}

/// Coefficient of `v_i` in the Steiner expansion of the measure of the
/// `eps`-neighbourhood of a cone in `R^{n_st}`:
/// `σ(S^i) σ(S^{n-i-2}) ∫_0^eps cos^i φ sin^{n-i-2} φ dφ`.
pub fn steiner_coeff(n_st: usize, i_st: usize, eps: f64) -> Result<f64> {
    Ok(ln_steiner_parts(n_st, i_st, eps)?.map_or(0.0, |(c, integral)| (c + integral.ln()).exp()))
}

/// [`steiner_coeff`] divided by the full sphere measure `σ(S^{n_st-1})`.
pub fn steiner_ratio(n_st: usize, i_st: usize, eps: f64) -> Result<f64> {
    Ok(ln_steiner_parts(n_st, i_st, eps)?
        .map_or(0.0, |(c, integral)| (c + integral.ln() - ln_sphere_surface(n_st)).exp())
        .min(1.0))
}

// Log of the sphere-measure prefactor (with the integrand's peak folded in)
// and the peak-scaled integral, or None for an empty integral.
fn ln_steiner_parts(n_st: usize, i_st: usize, eps: f64) -> Result<Option<(f64, f64)>> {
    if n_st < 2 || i_st > n_st - 2 {
        return Err(domain("steiner_coeff", format!("need 0 <= i <= n-2, got n={n_st} i={i_st}")));
    }
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&eps) {
        return Err(domain("steiner_coeff", format!("eps={eps} outside [0, pi/2]")));
    }
    if eps == 0.0 {
        return Ok(None);
    }
    let p = i_st as f64;
    let q = (n_st - i_st - 2) as f64;
    let log_f = |phi: f64| {
        let a = if p == 0.0 { 0.0 } else { p * phi.cos().ln() };
        let b = if q == 0.0 { 0.0 } else { q * phi.sin().ln() };
        a + b
    };
    // the integrand peaks where tan^2 φ = q/p
    let peak = if p == 0.0 {
        eps
    } else {
        (q / p).sqrt().atan().min(eps)
    };
    let log_peak = log_f(peak);
    let mut pts = vec![0.0];
    if peak > 0.0 && peak < eps {
        pts.push(peak);
    }
    pts.push(eps);
    let spec = QuadratureSpec {
        abs_tol: 1e-15,
        rel_tol: 1e-12,
        ..QuadratureSpec::default()
    };
    let integral = integrate_panels(|phi: f64| if phi <= 0.0 && q > 0.0 { 0.0 } else { (log_f(phi) - log_peak).exp() }, &pts, &spec)?.value;
    if integral <= 0.0 {
        return Ok(None);
    }
    let c = ln_sphere_surface(i_st + 1) + ln_sphere_surface(n_st - i_st - 1) + log_peak;
    Ok(Some((c, integral)))
}

/// Cap-neighbourhood measures on an ε grid, relative to the whole sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct CapGrid {
    pub eps_values: Vec<f64>,
    pub sigma_ratios: Vec<f64>,
    pub source: CapSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapSource {
    AnalyticBound,
    Simulated,
}

impl CapGrid {
    pub fn new(eps_values: Vec<f64>, sigma_ratios: Vec<f64>, source: CapSource) -> Result<Self> {
        check_eps_grid(&eps_values)?;
        if sigma_ratios.len() != eps_values.len() {
            return Err(domain("CapGrid", "one ratio per grid point"));
        }
        if sigma_ratios.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(domain("CapGrid", "ratios must lie in [0, 1]"));
        }
        Ok(Self { eps_values, sigma_ratios, source })
    }
}

/// The default grid `start + Δ i`, `i = 1, 2, ...`, up to `end`.
pub fn eps_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let count = ((end - start) / step + 1e-9).floor() as usize;
    (1..=count).map(|i| start + step * i as f64).collect()
}

fn check_eps_grid(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(domain("eps grid", "empty"));
    }
    if eps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("eps grid", "must be strictly increasing"));
    }
    if eps.iter().any(|&e| !(e > 0.0 && e < std::f64::consts::FRAC_PI_2)) {
        return Err(domain("eps grid", "values must lie in (0, pi/2)"));
    }
    Ok(())
}

/// Spherical intrinsic volumes `v_0 .. v_{N-1}` of the failure cone.
#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicVolumeVector {
    pub v: Vec<f64>,
    /// `v_{N-1}`, fixed before the regression.
    pub v_last_fixed: f64,
}

impl IntrinsicVolumeVector {
    /// Largest violation among nonnegativity, `Σ v = 1` and `Σ (-1)^i v_i = 0`.
    pub fn constraint_violation(&self) -> f64 {
        let neg = self.v.iter().fold(0.0f64, |m, &x| m.max(-x));
        let total: f64 = self.v.iter().sum();
        let alt: f64 = self.v.iter().enumerate().map(|(i, x)| if i % 2 == 0 { *x } else { -x }).sum();
        neg.max((total - 1.0).abs()).max(alt.abs())
    }
}

/// Matrix of normalized Steiner coefficients, one row per ε, columns
/// `i = 0 .. N-2`.
pub fn build_steiner_system(dim: usize, eps_grid: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
    check_eps_grid(eps_grid)?;
    if dim < 2 {
        return Err(domain("build_steiner_system", "dimension must be at least 2"));
    }
    let mut g = nalgebra::DMatrix::zeros(eps_grid.len(), dim - 1);
    for (r, &e) in eps_grid.iter().enumerate() {
        for i in 0..dim - 1 {
            g[(r, i)] = steiner_ratio(dim, i, e)?;
        }
    }
    Ok(g)
}

/// Probability that a uniformly random subspace of codimension `m` meets the
/// cone nontrivially: `2 (v_m + v_{m+2} + ...)`, clipped to `[0, 1]`.
/// The constraints force the value 1 at `m = 0` and 0 at `m = N`; those are
/// returned exactly.
pub fn crofton_perr(v: &IntrinsicVolumeVector, m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if m >= v.v.len() {
        return 0.0;
    }
    crofton_raw(v, m).clamp(0.0, 1.0)
}

/// [`crofton_perr`] without clipping; linear in `v`.
pub fn crofton_raw(v: &IntrinsicVolumeVector, m: usize) -> f64 {
    2.0 * v.v.iter().skip(m).step_by(2).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_surface_small() {
        assert!((sphere_surface(1) - 2.0).abs() < 1e-14);
        assert!((sphere_surface(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_surface(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn steiner_trig_integral() {
        let g = steiner_coeff(3, 0, PI / 2.0 - 1e-9).unwrap();
        assert!((g - 4.0 * PI).abs() < 1e-7);
        assert_eq!(steiner_coeff(5, 1, 0.0).unwrap(), 0.0);
        assert!(steiner_coeff(5, 4, 0.3).is_err());
    }

    #[test]
    fn crofton_forced_values() {
        let v = IntrinsicVolumeVector {
            v: vec![0.1, 0.2, 0.3, 0.3, 0.1],
            v_last_fixed: 0.1,
        };
        assert_eq!(crofton_perr(&v, 5), 0.0);
        assert!((crofton_perr(&v, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_helper() {
        let g = eps_grid(0.4, 1.0, 0.01);
        assert_eq!(g.len(), 60);
        assert!((g[0] - 0.41).abs() < 1e-15 && (g[59] - 1.0).abs() < 1e-12);
    }
}
