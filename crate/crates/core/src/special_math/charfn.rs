//! Characteristic functions and their inversion to distribution functions.

use num_complex::Complex64;

use super::quadrature::integrate_panels;
use super::QuadratureSpec;
use crate::error::{Error, Result};

/// Frequencies beyond this are never integrated directly.
pub const FREQUENCY_CAP: f64 = 1e4;
/// Truncation threshold on `|phi(w)| / w`.
pub const FREQUENCY_TAIL_TOL: f64 = 1e-12;

type Evaluator<'a> = Box<dyn Fn(f64) -> Complex64 + Send + Sync + 'a>;
type Bound<'a> = Box<dyn Fn(f64) -> f64 + Send + Sync + 'a>;

/// `w ↦ E[e^{j w X}]`, optionally with an upper bound on its modulus used to
/// pick the frequency cutoff.
///
/// The evaluator may describe a sub-probability measure (`phi(0) < 1`); the
/// inversion then returns the measure of `(-∞, x]` rather than a probability.
pub struct CharacteristicFunction<'a> {
    evaluator: Evaluator<'a>,
    decay_bound: Option<Bound<'a>>,
}

impl<'a> CharacteristicFunction<'a> {
    pub fn new(evaluator: impl Fn(f64) -> Complex64 + Send + Sync + 'a) -> Self {
        Self {
            evaluator: Box::new(evaluator),
            decay_bound: None,
        }
    }

    pub fn with_decay_bound(mut self, bound: impl Fn(f64) -> f64 + Send + Sync + 'a) -> Self {
        self.decay_bound = Some(Box::new(bound));
        self
    }

    pub fn eval(&self, w: f64) -> Complex64 {
        (self.evaluator)(w)
    }

    fn modulus_bound(&self, w: f64) -> f64 {
        match &self.decay_bound {
            Some(b) => b(w),
            None => self.eval(w).norm(),
        }
    }

    /// Standard normal.
    pub fn standard_normal() -> CharacteristicFunction<'static> {
        CharacteristicFunction::new(|w| Complex64::new((-0.5 * w * w).exp(), 0.0))
    }

    /// Chi-square with `dof` degrees of freedom: `(1 - 2jw)^{-dof/2}`.
    pub fn chi_square(dof: f64) -> CharacteristicFunction<'static> {
        CharacteristicFunction::new(move |w| neg_power(Complex64::new(1.0, -2.0 * w), 0.5 * dof))
    }
}

/// `z^{-nu}` through the principal logarithm. Callers keep `Re z > 0`, where
/// the principal branch is the continuous one along any frequency path.
pub fn neg_power(z: Complex64, nu: f64) -> Complex64 {
    (-nu * z.ln()).exp()
}

/// `P(X <= x)` by Gil-Pelaez inversion,
/// `F(x) = m/2 - (1/π) ∫_0^∞ Im[e^{-jwx} φ(w)] / w dw`, with `m = φ(0)`.
///
/// The frequency integral is truncated once `|φ(w)|/w` falls below
/// [`FREQUENCY_TAIL_TOL`]; if that has not happened by [`FREQUENCY_CAP`], the
/// oscillatory remainder is summed period by period and extrapolated, which
/// requires `x != 0`.
pub fn gil_pelaez_cdf(phi: &CharacteristicFunction<'_>, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    let mass = phi.eval(0.0).re;
    let integrand = |w: f64| -> f64 {
        if w <= 0.0 {
            return 0.0;
        }
        (Complex64::new(0.0, -w * x).exp() * phi.eval(w)).im / w
    };

    let cutoff = frequency_cutoff(phi);
    let decayed = phi.modulus_bound(cutoff) / cutoff < FREQUENCY_TAIL_TOL;
    if !decayed && x == 0.0 {
        let residual = phi.modulus_bound(cutoff) / cutoff;
        return Err(Error::NotDecayed { cutoff, residual });
    }
    // Away from x = 0 a slowly decaying transform is integrated directly only
    // up to a moderate frequency; the rest is summed by half periods.
    let summed = x != 0.0 && cutoff > TAIL_SWITCH;
    let direct_end = if summed { TAIL_SWITCH } else { cutoff };
    let pts = frequency_panels(direct_end, x);
    let mut integral = integrate_panels(integrand, &pts, spec)?.value;
    if summed {
        integral += oscillatory_tail(&integrand, direct_end, x.abs(), spec).ok_or_else(|| Error::NotDecayed {
            cutoff: direct_end,
            residual: phi.modulus_bound(direct_end) / direct_end,
        })?;
    }

    let f = 0.5 * mass - integral / std::f64::consts::PI;
    Ok(f.clamp(0.0, mass.max(0.0)))
}

const TAIL_SWITCH: f64 = 256.0;

// Panels on [0, end]: geometric near the origin, and no wider than a few
// periods of e^{-jwx} so each panel is cheap for the adaptive rule.
fn frequency_panels(end: f64, x: f64) -> Vec<f64> {
    let mut pts = vec![0.0, 0.25, 0.5];
    let mut p = 1.0;
    while p < end {
        pts.push(p);
        p *= 2.0;
    }
    pts.push(end);
    if x != 0.0 {
        let max_width = 8.0 * std::f64::consts::TAU / x.abs();
        let mut fine = vec![0.0];
        for w in pts.windows(2) {
            let pieces = ((w[1] - w[0]) / max_width).ceil().max(1.0) as usize;
            for i in 1..=pieces {
                fine.push(w[0] + (w[1] - w[0]) * i as f64 / pieces as f64);
            }
        }
        pts = fine;
    }
    pts
}

fn frequency_cutoff(phi: &CharacteristicFunction<'_>) -> f64 {
    let decayed = |w: f64| phi.modulus_bound(w) / w < FREQUENCY_TAIL_TOL;
    let mut w = 1.0;
    while w < FREQUENCY_CAP {
        // two probes guard against a single zero of an oscillating modulus
        if decayed(w) && decayed(1.37 * w) {
            return w;
        }
        w *= 2.0;
    }
    FREQUENCY_CAP
}

// Sum of the integral over [start, ∞) taken half-period by half-period of
// e^{-jwx}, accelerated with Wynn's epsilon algorithm.
fn oscillatory_tail<F: Fn(f64) -> f64>(f: &F, start: f64, freq: f64, spec: &QuadratureSpec) -> Option<f64> {
    let half_period = std::f64::consts::PI / freq;
    let mut partial = Vec::with_capacity(64);
    let mut sum = 0.0;
    let mut a = start;
    let mut last_est = f64::NAN;
    for i in 0..200 {
        let b = a + half_period;
        sum += integrate_panels(f, &[a, b], spec).ok()?.value;
        partial.push(sum);
        a = b;
        if i >= 8 && i % 2 == 0 {
            let est = wynn_epsilon(&partial);
            if (est - last_est).abs() < spec.abs_tol.max(1e-13) {
                return Some(est);
            }
            last_est = est;
        }
    }
    if last_est.is_finite() {
        Some(last_est)
    } else {
        None
    }
}

/// Wynn's epsilon acceleration of a sequence of partial sums.
pub fn wynn_epsilon(s: &[f64]) -> f64 {
    let n = s.len();
    if n < 3 {
        return *s.last().unwrap_or(&0.0);
    }
    // e[k] holds column k of the epsilon table along the current diagonal.
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = s.to_vec();
    let mut best = s[n - 1];
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let diff = cur[i + 1] - cur[i];
            let base = if col == 0 { 0.0 } else { prev[i + 1] };
            if diff == 0.0 {
                next.push(f64::INFINITY);
            } else {
                next.push(base + 1.0 / diff);
            }
        }
        prev = cur;
        cur = next;
        col += 1;
        if col % 2 == 0 {
            if let Some(&v) = cur.last() {
                if v.is_finite() {
                    best = v;
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_math::reg_lower_gamma;

    #[test]
    fn normal_median() {
        let spec = QuadratureSpec::default();
        let f = gil_pelaez_cdf(&CharacteristicFunction::standard_normal(), 0.0, &spec).unwrap();
        assert!((f - 0.5).abs() < 1e-8);
    }

    #[test]
    fn normal_cdf_grid() {
        let spec = QuadratureSpec::default();
        let phi = CharacteristicFunction::standard_normal();
        for i in -6..=6 {
            let x = i as f64 * 0.5;
            let f = gil_pelaez_cdf(&phi, x, &spec).unwrap();
            let oracle = crate::special_math::normal::std_normal_cdf(x);
            assert!((f - oracle).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn chi_square_five_median() {
        let spec = QuadratureSpec::default();
        let f = gil_pelaez_cdf(&CharacteristicFunction::chi_square(5.0), 4.3515, &spec).unwrap();
        let oracle = reg_lower_gamma(2.5, 4.3515 / 2.0).unwrap();
        assert!((oracle - 0.5).abs() < 1e-4);
        assert!((f - oracle).abs() < 1e-6);
    }

    #[test]
    fn chi_square_three_grid() {
        let spec = QuadratureSpec::default();
        let phi = CharacteristicFunction::chi_square(3.0);
        for x in 1..=10 {
            let x = x as f64;
            let f = gil_pelaez_cdf(&phi, x, &spec).unwrap();
            assert!((f - reg_lower_gamma(1.5, x / 2.0).unwrap()).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn slowly_decaying_needs_nonzero_point() {
        let spec = QuadratureSpec::default();
        let phi = CharacteristicFunction::chi_square(1.0);
        assert!(matches!(gil_pelaez_cdf(&phi, 0.0, &spec), Err(Error::NotDecayed { .. })));
        let f = gil_pelaez_cdf(&phi, 2.0, &spec).unwrap();
        assert!((f - reg_lower_gamma(0.5, 1.0).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn sub_probability_measure() {
        // half the mass of a standard normal
        let spec = QuadratureSpec::default();
        let phi = CharacteristicFunction::new(|w| Complex64::new(0.5 * (-0.5 * w * w).exp(), 0.0));
        let f = gil_pelaez_cdf(&phi, 1.0, &spec).unwrap();
        assert!((f - 0.5 * crate::special_math::normal::std_normal_cdf(1.0)).abs() < 1e-9);
    }

    #[test]
    fn neg_power_is_continuous_along_frequency_path() {
        // (1 - 2jw)^{-nu} for large nu: the phase winds many times, the
        // principal-log form must not jump between adjacent samples.
        let nu = 37.5;
        let mut prev = neg_power(Complex64::new(1.0, 0.0), nu);
        let dw = 1e-4;
        for i in 1..20_000 {
            let w = i as f64 * dw;
            let v = neg_power(Complex64::new(1.0, -2.0 * w), nu);
            // |d/dw (1-2jw)^{-nu}| <= 2 nu |.|, so steps are bounded
            assert!((v - prev).norm() <= 2.0 * nu * dw * 1.01 + 1e-12, "jump at w={w}");
            prev = v;
        }
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // ln 2 = 1 - 1/2 + 1/3 - ...
        let mut s = 0.0;
        let partial: Vec<f64> = (1..=15)
            .map(|k| {
                s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
                s
            })
            .collect();
        assert!((wynn_epsilon(&partial) - 2f64.ln()).abs() < 1e-9);
    }
}
