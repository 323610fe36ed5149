#![allow(dead_code)]

use blockspt_core::deviation_bounds::WidthProfile;
use blockspt_core::integral_geometry::{build_steiner_system, eps_grid, regress_volumes, CapGrid, CapSource, RegressionParams};
use blockspt_core::monte_carlo::{gen_instance, l2l1_objective, solve_l2l1, SolverOptions};
use blockspt_core::special_math::{gil_pelaez_cdf, reg_lower_gamma, CharacteristicFunction, QuadratureSpec};
use blockspt_core::BlockShape;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn normals(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn value_of(d: usize, k: usize, w: &[f64]) -> f64 {
    let n = w.len() / d;
    let off: f64 = w.chunks(d).take(n - k).map(|b| b.iter().map(|x| x * x).sum::<f64>().sqrt()).sum();
    let on: f64 = w.chunks(d).skip(n - k).map(|b| b[0]).sum();
    off + on
}

/// Euclidean projection onto the failure cone
/// `{w : Σ_off ‖w_i‖ + Σ_on w_{i,1} <= 0}`, by bisection on the multiplier.
pub fn project_cone(v: &[f64], d: usize, k: usize) -> Vec<f64> {
    if value_of(d, k, v) <= 0.0 {
        return v.to_vec();
    }
    let n = v.len() / d;
    let prox = |nu: f64| -> Vec<f64> {
        let mut w = v.to_vec();
        for (i, b) in w.chunks_mut(d).enumerate() {
            if i < n - k {
                let nrm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                let s = if nrm > nu { 1.0 - nu / nrm } else { 0.0 };
                b.iter_mut().for_each(|x| *x *= s);
            } else {
                b[0] -= nu;
            }
        }
        w
    };
    let mut lo = 0.0;
    let mut hi = v.iter().map(|x| x.abs()).sum::<f64>() + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if value_of(d, k, &prox(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    prox(hi)
}

/// `max h·w` over unit vectors of the cone by projected ascent.
pub fn width_by_ascent(h: &[f64], d: usize, k: usize) -> f64 {
    let mut w = vec![0.0; h.len()];
    for _ in 0..500 {
        let step: Vec<f64> = w.iter().zip(h).map(|(a, b)| a + b).collect();
        let mut p = project_cone(&step, d, k);
        let nrm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 1.0 {
            p.iter_mut().for_each(|x| *x /= nrm);
        }
        w = p;
    }
    w.iter().zip(h).map(|(a, b)| a * b).sum::<f64>().max(0.0)
}

/// Worst relative error of the closed-form width against projected ascent
/// over `count` random instances with `n <= 6`.
pub fn width_oracle_max_rel_err(count: u64) -> f64 {
    let mut worst = 0.0f64;
    for seed in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(1..=4);
        let n = rng.random_range(2..=6);
        let k = rng.random_range(1..n);
        let h = normals(&mut rng, d * n);
        let closed = WidthProfile::from_vector(&h, d, k).unwrap().width().unwrap();
        let ascent = width_by_ascent(&h, d, k);
        worst = worst.max((closed - ascent).abs() / closed.max(1e-12));
    }
    worst
}

/// Worst `|F_GP - P(a, x/2)|` for chi-square laws with 1..=20 degrees of
/// freedom on a grid of points.
pub fn gp_chi_square_max_err() -> f64 {
    let spec = QuadratureSpec::default();
    let mut worst = 0.0f64;
    for dof in 1..=20 {
        let phi = CharacteristicFunction::chi_square(dof as f64);
        for frac in [0.1, 0.5, 1.0, 1.5, 2.5] {
            let x = frac * dof as f64;
            let gp = gil_pelaez_cdf(&phi, x, &spec).unwrap();
            let exact = reg_lower_gamma(0.5 * dof as f64, 0.5 * x).unwrap();
            worst = worst.max((gp - exact).abs());
        }
    }
    worst
}

/// Objective minimum along the one-dimensional feasible line of an
/// instance with `dn - M = 1`, by golden-section search.
pub fn null_space_minimum(a: &nalgebra::DMatrix<f64>, x0: &DVector<f64>, d: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = DVector::from_vec(normals(&mut rng, a.ncols()));
    let aat = a * a.transpose();
    let z = &r - a.transpose() * aat.lu().solve(&(a * &r)).unwrap();
    let f = |t: f64| l2l1_objective((x0 + &z * t).as_slice(), d);
    let f0 = f(0.0);
    let span = (f0 + x0.norm()) / z.norm();
    let (mut lo, mut hi) = (-span, span);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..300 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.5 * (lo + hi)).min(f0)
}

/// Largest `f(solver) - f(oracle)` over instances with one free direction.
pub fn solver_null_space_gap(count: u64) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..count {
        let (d, k, n) = [(2, 2, 5), (3, 1, 4), (2, 3, 6)][(seed % 3) as usize];
        let shape = BlockShape::new(d, k, n, d * n - 1).unwrap();
        let inst = gen_instance(&shape, 1000 + seed).unwrap();
        let out = solve_l2l1(&inst.a, &inst.y, d, &SolverOptions::default());
        let f_solver = l2l1_objective(out.x.as_slice(), d);
        let f_oracle = null_space_minimum(&inst.a, &inst.x, d, seed);
        worst = worst.max(f_solver - f_oracle);
    }
    worst
}

/// Random intrinsic-volume vector of length `dim` meeting both sum constraints.
pub fn synthetic_volumes(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() + 0.05).collect();
    let even: f64 = v.iter().step_by(2).sum();
    let odd: f64 = v.iter().skip(1).step_by(2).sum();
    for (i, x) in v.iter_mut().enumerate() {
        *x *= if i % 2 == 0 { 0.5 / even } else { 0.5 / odd };
    }
    v
}

/// Worst sup error recovering synthetic volumes from exact cap measures on
/// well-conditioned dimensions.
pub fn synthetic_recovery_err(trials: u64) -> f64 {
    let eps = eps_grid(0.0, 1.54, 0.02);
    let mut worst = 0.0f64;
    for dim in [6usize, 8, 10] {
        let g = build_steiner_system(dim, &eps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(dim as u64);
        for _ in 0..trials {
            let v = synthetic_volumes(dim, &mut rng);
            let last = v[dim - 1];
            let sigma: Vec<f64> =
                (0..eps.len()).map(|r| ((0..dim - 1).map(|i| g[(r, i)] * v[i]).sum::<f64>() + last).min(1.0)).collect();
            let cap = CapGrid::new(eps.clone(), sigma, CapSource::Simulated).unwrap();
            let params = RegressionParams { lambda_reg: 1e-8, ..Default::default() };
            let fit = regress_volumes(&cap, &g, last, &params).unwrap();
            let err = fit.v.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst = worst.max(err);
        }
    }
    worst
}

/// Binomial standard error.
pub fn std_err(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// One tabulated rate column: `(d, α, c3s, γ, λ, exponent)`.
pub type RateColumn = (usize, f64, f64, f64, f64, f64);

pub const UPPER_COLUMNS: [RateColumn; 10] = [
    (2, 0.65, 0.1263, 0.6026, 0.8973, -0.0007),
    (2, 0.71, 0.7007, 0.7963, 0.7932, -0.0215),
    (2, 0.77, 1.3534, 1.0451, 0.6965, -0.0701),
    (2, 0.83, 2.2095, 1.4010, 0.5883, -0.1475),
    (2, 0.89, 3.4521, 1.9539, 0.4701, -0.2565),
    (10, 0.59, 0.2334, 1.2743, 2.0307, -0.0032),
    (10, 0.64, 1.1136, 1.5736, 1.8998, -0.0702),
    (10, 0.69, 2.0377, 1.9182, 1.7647, -0.2199),
    (10, 0.74, 3.0881, 2.3361, 1.6125, -0.4498),
    (10, 0.79, 4.3441, 2.8622, 1.4488, -0.7622),
];

pub const LOWER_COLUMNS: [RateColumn; 10] = [
    (2, 0.57, 0.6198, 0.4005, 1.0187, -0.0185),
    (2, 0.53, 1.0547, 0.3128, 1.0810, -0.0495),
    (2, 0.49, 1.5715, 0.2391, 1.1474, -0.0978),
    (2, 0.45, 2.3026, 0.1703, 1.2214, -0.1674),
    (2, 0.41, 3.5891, 0.1078, 1.3014, -0.2649),
    (10, 0.55, 0.4789, 1.0590, 2.1338, -0.0132),
    (10, 0.51, 1.2466, 0.8598, 2.2412, -0.0872),
    (10, 0.47, 2.1555, 0.6717, 2.3487, -0.2361),
    (10, 0.43, 3.4129, 0.4896, 2.4591, -0.4791),
    (10, 0.39, 5.7283, 0.3075, 2.5873, -0.8549),
];

/// Tabulated cap rows: `(d, ε, bound, λ, simulated)`.
pub const CAP_ROWS: [(usize, f64, f64, f64, f64); 10] = [
    (2, 0.5, 0.1465, 0.7152, 0.1388),
    (2, 0.6, 0.3538, 0.8441, 0.3410),
    (2, 0.7, 0.6145, 0.9613, 0.5980),
    (2, 0.8, 0.8325, 1.0858, 0.8261),
    (2, 0.9, 0.9505, 1.2015, 0.9471),
    (10, 0.6, 0.0619, 1.8045, 0.0482),
    (10, 0.65, 0.1877, 1.9119, 0.1727),
    (10, 0.7, 0.4391, 2.0291, 0.4346),
    (10, 0.75, 0.7254, 2.1878, 0.7168),
    (10, 0.8, 0.9122, 2.2659, 0.9085),
];

pub const BETA: f64 = 1.0 / 3.0;
