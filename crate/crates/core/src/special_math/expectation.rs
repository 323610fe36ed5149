//! Expectations against the chi-square and normal laws by truncated
//! adaptive quadrature.

use super::gamma::{inv_reg_upper_gamma, ln_gamma};
use super::normal::inv_gauss_tail;
use super::quadrature::{integrate_panels, QuadValue};
use super::QuadratureSpec;
use crate::error::{domain, Result};

/// Reference law for [`expectation_integral`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    /// Chi-square with the given (positive, possibly fractional) degrees of freedom.
    ChiSquare(f64),
    /// Standard normal.
    Normal,
}

/// Chi-square density at `x`.
pub fn chi_square_pdf(dof: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return if x == 0.0 && dof == 2.0 { 0.5 } else { 0.0 };
    }
    let h = 0.5 * dof;
    ((h - 1.0) * x.ln() - 0.5 * x - h * std::f64::consts::LN_2 - ln_gamma(h)).exp()
}

/// Chi density (law of the norm of a `dof`-dimensional standard Gaussian).
pub fn chi_pdf(dof: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return if u == 0.0 && dof == 1.0 { (2.0 / std::f64::consts::PI).sqrt() } else { 0.0 };
    }
    let h = 0.5 * dof;
    ((dof - 1.0) * u.ln() - 0.5 * u * u - (h - 1.0) * std::f64::consts::LN_2 - ln_gamma(h)).exp()
}

/// Upper truncation point `x` with `P(X > x) = tail` for a chi-square law.
pub fn chi_square_truncation(dof: f64, tail: f64) -> Result<f64> {
    Ok(2.0 * inv_reg_upper_gamma(0.5 * dof, tail)?)
}

/// `E[g(X)]` for `X` drawn from `density`.
pub fn expectation_integral<T, F>(density: Density, g: F, spec: &QuadratureSpec) -> Result<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    expectation_integral_with_breaks(density, g, &[], spec)
}

/// Like [`expectation_integral`], with known kinks of `g` (in the variable of
/// the law, i.e. in chi-square units for [`Density::ChiSquare`]) used as
/// panel boundaries.
pub fn expectation_integral_with_breaks<T, F>(
    density: Density,
    g: F,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    spec.validate()?;
    match density {
        Density::ChiSquare(dof) => {
            if !(dof > 0.0) {
                return Err(domain("expectation_integral", format!("chi-square dof={dof} must be positive")));
            }
            // Integrate in u = sqrt(x), where the chi density is smooth at the origin.
            let u_max = chi_square_truncation(dof, spec.tail_mass_cutoff)?.sqrt();
            let mut pts = panel_points(0.0, u_max, 8);
            pts.extend(breaks.iter().filter(|&&b| b > 0.0).map(|b| b.sqrt()).filter(|&u| u < u_max));
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            let h = 0.5 * dof;
            let log_norm = (h - 1.0) * std::f64::consts::LN_2 + ln_gamma(h);
            let integrand = |u: f64| {
                if u <= 0.0 {
                    return T::default();
                }
                let w = ((dof - 1.0) * u.ln() - 0.5 * u * u - log_norm).exp();
                g(u * u) * w
            };
            Ok(integrate_panels(integrand, &pts, spec)?.value)
        }
        Density::Normal => {
            let t = inv_gauss_tail(0.5 * spec.tail_mass_cutoff);
            let mut pts = panel_points(-t, t, 8);
            pts.extend(breaks.iter().copied().filter(|b| b.abs() < t));
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            let c = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
            let integrand = |x: f64| g(x) * (c * (-0.5 * x * x).exp());
            Ok(integrate_panels(integrand, &pts, spec)?.value)
        }
    }
}

fn panel_points(a: f64, b: f64, panels: usize) -> Vec<f64> {
    (0..=panels).map(|i| a + (b - a) * i as f64 / panels as f64).collect()
}
