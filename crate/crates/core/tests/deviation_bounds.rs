mod common;

use blockspt_core::deviation_bounds::{
    finite_pcor_upper, finite_perr_upper, gamma_hat, i_sph, rate_lower, rate_lower_at, rate_objective, rate_upper,
    w_terms, ChernoffParams, Tail,
};
use blockspt_core::monte_carlo::estimate_perr;
use blockspt_core::BlockShape;
use common::{BETA, LOWER_COLUMNS, UPPER_COLUMNS};

// (1/n) log E exp(s c sqrt(n) ‖g‖), g in R^m, by a trapezoid rule on the
// log chi density. Independent of the library's quadrature and gamma code.
fn log_moment_per_n(c: f64, s: f64, m: usize, n: f64) -> f64 {
    let m = m as f64;
    let t = s * c * n.sqrt();
    let log_norm = (0.5 * m - 1.0) * std::f64::consts::LN_2 + statrs::function::gamma::ln_gamma(0.5 * m);
    let log_f = |u: f64| (m - 1.0) * u.ln() - 0.5 * u * u + t * u - log_norm;
    let mode = 0.5 * (t + (t * t + 4.0 * (m - 1.0)).sqrt());
    let peak = log_f(mode);
    let (lo, hi, steps) = ((mode - 40.0).max(1e-9), mode + 40.0, 400_000);
    let h = (hi - lo) / steps as f64;
    let sum: f64 = (0..=steps)
        .map(|i| {
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            w * (log_f(lo + i as f64 * h) - peak).exp()
        })
        .sum();
    (peak + (sum * h).ln()) / n
}

#[test]
fn tabulated_parameters_reproduce_exponents() {
    for &(d, alpha, c, g, l, want) in &UPPER_COLUMNS {
        let v = rate_objective(&ChernoffParams::new(c, g, l), alpha, BETA, d, Tail::Upper).unwrap();
        assert!((v - want).abs() < 5e-3, "upper d={d} α={alpha}: {v} vs {want}");
    }
    for &(d, alpha, c, g, l, want) in &LOWER_COLUMNS {
        let v = rate_objective(&ChernoffParams::new(c, g, l), alpha, BETA, d, Tail::Lower).unwrap();
        assert!((v - want).abs() < 5e-3, "lower d={d} α={alpha}: {v} vs {want}");
    }
}

#[test]
fn optimizer_never_worse_than_tabulated_parameters() {
    for &(d, alpha, c, g, l, _) in &UPPER_COLUMNS {
        let table = rate_objective(&ChernoffParams::new(c, g, l), alpha, BETA, d, Tail::Upper).unwrap();
        let ours = rate_upper(alpha, BETA, d).unwrap().exponent;
        assert!(ours <= table + 1e-6, "upper d={d} α={alpha}: {ours} vs {table}");
    }
    // the lower tail maximizes over (γ, λ) at fixed c3s
    for &(d, alpha, c, g, l, _) in &LOWER_COLUMNS {
        let table = rate_objective(&ChernoffParams::new(c, g, l), alpha, BETA, d, Tail::Lower).unwrap();
        let (ours, _) = rate_lower_at(c, alpha, BETA, d).unwrap();
        assert!(ours >= table - 1e-6, "lower d={d} α={alpha}: {ours} vs {table}");
    }
}

#[test]
fn optimized_exponents_match_tables() {
    for &(d, alpha, .., want) in &UPPER_COLUMNS {
        let r = rate_upper(alpha, BETA, d).unwrap();
        assert!((r.exponent - want).abs() < 5e-3, "d={d} α={alpha}: {}", r.exponent);
    }
    for &(d, alpha, .., want) in &LOWER_COLUMNS {
        let r = rate_lower(alpha, BETA, d).unwrap();
        assert!((r.exponent - want).abs() < 5e-3, "d={d} α={alpha}: {}", r.exponent);
    }
}

#[test]
fn exponents_decrease_away_from_transition() {
    for d in [2, 10] {
        let up: Vec<f64> = UPPER_COLUMNS.iter().filter(|c| c.0 == d).map(|c| rate_upper(c.1, BETA, d).unwrap().exponent).collect();
        assert!(up.windows(2).all(|w| w[1] < w[0]), "{up:?}");
        let lo: Vec<f64> = LOWER_COLUMNS.iter().filter(|c| c.0 == d).map(|c| rate_lower(c.1, BETA, d).unwrap().exponent).collect();
        assert!(lo.windows(2).all(|w| w[1] < w[0]), "{lo:?}");
    }
}

#[test]
fn gamma_hat_at_zero() {
    for (alpha, d) in [(0.5, 2), (0.7, 10)] {
        let r = (alpha * d as f64).sqrt() / 2.0;
        assert!((gamma_hat(0.0, alpha, d, Tail::Upper) + r).abs() < 1e-15);
        assert!((gamma_hat(0.0, alpha, d, Tail::Lower) - r).abs() < 1e-15);
        for c in [0.1, 1.0, 10.0] {
            assert!(gamma_hat(c, alpha, d, Tail::Upper) < 0.0);
        }
    }
}

#[test]
fn i_sph_signs_and_zero() {
    assert_eq!(i_sph(0.0, 0.6, 2, Tail::Upper).unwrap(), 0.0);
    assert_eq!(i_sph(0.0, 0.6, 2, Tail::Lower).unwrap(), 0.0);
    let v = i_sph(0.1263, 0.65, 2, Tail::Upper).unwrap();
    assert!(v.is_finite() && v < 0.0);
    for c in [0.3, 1.5, 4.0] {
        assert!(i_sph(c, 0.5, 10, Tail::Upper).unwrap() <= 0.0);
        assert!(i_sph(c, 0.5, 10, Tail::Lower).unwrap() >= 0.0);
    }
}

#[test]
fn i_sph_matches_finite_log_moment() {
    let n = 1e4;
    for (c, alpha, d) in [(0.1263, 0.65, 2), (1.3534, 0.77, 2), (2.0377, 0.69, 10), (1.5715, 0.49, 2)] {
        let m = (alpha * d as f64 * n).round() as usize;
        let up = log_moment_per_n(c, -1.0, m, n);
        let lo = log_moment_per_n(c, 1.0, m, n);
        let iu = i_sph(c, alpha, d, Tail::Upper).unwrap();
        let il = i_sph(c, alpha, d, Tail::Lower).unwrap();
        assert!((up - iu).abs() < 2e-3, "c={c}: {up} vs {iu}");
        assert!((lo - il).abs() < 2e-3, "c={c}: {lo} vs {il}");
    }
}

#[test]
fn w_terms_trivial_limits() {
    let p = ChernoffParams::new(0.0, 1.0, 0.7);
    for tail in [Tail::Upper, Tail::Lower] {
        let (w1, w2, w3) = w_terms(&p, 2, tail).unwrap();
        assert!((w1 - 1.0).abs() < 1e-10 && (w2 - 1.0).abs() < 1e-12 && (w3 - 1.0).abs() < 1e-12);
    }
    let (w1, _, _) = w_terms(&ChernoffParams::new(0.5, 1.0, 40.0), 2, Tail::Upper).unwrap();
    assert!((w1 - 1.0).abs() < 1e-10, "{w1}");
}

#[test]
fn finite_upper_matches_rate_at_large_n() {
    let s = BlockShape::new(2, 333, 1000, 1540).unwrap();
    let f = finite_perr_upper(&s).unwrap();
    let r = rate_upper(0.77, 0.333, 2).unwrap();
    assert!((f.log_bound / 1000.0 - r.exponent).abs() < 1e-3, "{} vs {}", f.log_bound / 1000.0, r.exponent);
}

#[test]
fn finite_perr_bound_nonincreasing_in_m() {
    let base = BlockShape::new(2, 6, 18, 12).unwrap();
    let b: Vec<f64> = (13..=35).map(|m| finite_perr_upper(&base.with_m(m).unwrap()).unwrap().bound).collect();
    assert!(b.iter().all(|&x| (0.0..=1.0).contains(&x)));
    assert!(b.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{b:?}");
    assert!(b[0] == 1.0 && b[b.len() - 1] < 0.01);
}

#[test]
fn finite_bounds_dominate_simulation() {
    let base = BlockShape::new(2, 6, 18, 12).unwrap();
    let low = finite_pcor_upper(&base.with_m(13).unwrap()).unwrap();
    assert!(low.bound < 0.5, "{}", low.bound);
    for m in [14, 18, 22, 26, 30] {
        let s = base.with_m(m).unwrap();
        let sim = estimate_perr(&s, 300, 11).unwrap();
        let up = finite_perr_upper(&s).unwrap().bound;
        let cor = finite_pcor_upper(&s).unwrap().bound;
        assert!(up >= sim.ci_low, "M={m}: P_err bound {up} vs {}", sim.p_hat);
        assert!(cor >= 1.0 - sim.ci_high, "M={m}: P_cor bound {cor} vs {}", 1.0 - sim.p_hat);
    }
}
