//! Derivative-free minimizers: scan + Brent in one dimension, multi-start
//! Nelder–Mead inside a box otherwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<X> {
    pub x: X,
    pub value: f64,
}

/// Axis-aligned box `lo[i] <= x[i] <= hi[i]`; infinite sides allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        Self { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lo[i], self.hi[i]);
        }
    }
}

/// Minimize `f` on `[lo, hi]`.
///
/// A uniform scan locates the best cell; Brent's method refines inside the
/// two neighbouring cells. For unimodal `f` the result is within `tol` of the
/// minimizer; otherwise it is the best local minimum near the best scan point.
pub fn minimize_1d<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Minimum<f64> {
    assert!(hi >= lo);
    if hi == lo {
        return Minimum { x: lo, value: f(lo) };
    }
    const SCAN: usize = 32;
    let step = (hi - lo) / SCAN as f64;
    let mut best = (lo, f(lo));
    let mut best_i = 0;
    for i in 1..=SCAN {
        let x = if i == SCAN { hi } else { lo + step * i as f64 };
        let v = f(x);
        if v < best.1 {
            best = (x, v);
            best_i = i;
        }
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    let refined = brent(&mut f, a, b, tol.max(1e-15));
    if refined.value <= best.1 {
        refined
    } else {
        Minimum { x: best.0, value: best.1 }
    }
}

fn brent<F: FnMut(f64) -> f64>(f: &mut F, mut a: f64, mut b: f64, tol: f64) -> Minimum<f64> {
    const GOLD: f64 = 0.381_966_011_250_105_1;
    let mut x = a + GOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let tol1 = 1e-10 * x.abs() + tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if m >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= m { a - x } else { b - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Minimum { x, value: fx }
}

/// Settings for [`minimize_nd_with`].
#[derive(Debug, Clone)]
pub struct NdOptions {
    /// Total number of starts, including the caller's; at least 5 are used.
    pub starts: usize,
    pub max_evals: usize,
    /// Stop when the simplex's value spread falls below this.
    pub ftol: f64,
    pub seed: u64,
    /// Additional caller-chosen starting points.
    pub extra_starts: Vec<Vec<f64>>,
}

impl Default for NdOptions {
    fn default() -> Self {
        Self {
            starts: 6,
            max_evals: 4000,
            ftol: 1e-12,
            seed: 0x5eed,
            extra_starts: Vec::new(),
        }
    }
}

/// Minimize `f` over `bounds` from `start` and further deterministic random
/// starts. The best value never increases across restarts, and a constant
/// `f` returns `start` unchanged.
pub fn minimize_nd<F: FnMut(&[f64]) -> f64>(f: F, start: &[f64], bounds: &Bounds) -> Minimum<Vec<f64>> {
    minimize_nd_with(f, start, bounds, &NdOptions::default())
}

pub fn minimize_nd_with<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    bounds: &Bounds,
    opts: &NdOptions,
) -> Minimum<Vec<f64>> {
    let n = bounds.dim();
    assert_eq!(start.len(), n);
    let mut x0 = start.to_vec();
    bounds.clamp(&mut x0);
    let mut best = Minimum { value: nan_to_inf(f(&x0)), x: x0.clone() };

    let mut starts = vec![x0];
    starts.extend(opts.extra_starts.iter().cloned());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n_starts = opts.starts.max(5);
    while starts.len() < n_starts {
        starts.push(random_point(&mut rng, bounds, start));
    }

    for s in starts {
        let mut s = s;
        bounds.clamp(&mut s);
        let m = nelder_mead(&mut f, &s, bounds, opts);
        if m.value < best.value {
            best = m;
        }
    }
    best
}

fn nan_to_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn random_point(rng: &mut ChaCha8Rng, bounds: &Bounds, around: &[f64]) -> Vec<f64> {
    (0..bounds.dim())
        .map(|i| {
            let (lo, hi) = (bounds.lo[i], bounds.hi[i]);
            if lo.is_finite() && hi.is_finite() {
                rng.random_range(lo..=hi)
            } else {
                // unbounded side: perturb the start on its own scale
                let scale = around[i].abs().max(1.0);
                (around[i] + scale * rng.random_range(-1.0..=1.0)).clamp(lo, hi)
            }
        })
        .collect()
}

fn initial_step(x: f64, lo: f64, hi: f64) -> f64 {
    let span = if lo.is_finite() && hi.is_finite() { 0.1 * (hi - lo) } else { 0.1 * x.abs().max(1.0) };
    // step towards the roomier side of the box
    if hi - x >= x - lo {
        span
    } else {
        -span
    }
}

fn nelder_mead<F: FnMut(&[f64]) -> f64>(f: &mut F, start: &[f64], bounds: &Bounds, opts: &NdOptions) -> Minimum<Vec<f64>> {
    let n = start.len();
    let mut eval = |x: &mut Vec<f64>| {
        bounds.clamp(x);
        nan_to_inf(f(x))
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut p = start.to_vec();
    let v = eval(&mut p);
    simplex.push((p, v));
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += initial_step(start[i], bounds.lo[i], bounds.hi[i]);
        let v = eval(&mut p);
        simplex.push((p, v));
    }
    let mut evals = n + 1;
    let restarts_left = &mut 2usize;
    loop {
        // stable sort keeps the start ahead of equal-valued vertices
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if evals >= opts.max_evals || (spread.abs() <= opts.ftol * (1.0 + simplex[0].1.abs()) && spread.is_finite()) {
            if *restarts_left > 0 && evals < opts.max_evals {
                // re-expand around the best vertex to escape collapsed simplices
                *restarts_left -= 1;
                let base = simplex[0].0.clone();
                let bv = simplex[0].1;
                let mut fresh = vec![(base.clone(), bv)];
                let mut moved = false;
                for i in 0..n {
                    let mut p = base.clone();
                    p[i] += 0.25 * initial_step(base[i], bounds.lo[i], bounds.hi[i]);
                    let v = eval(&mut p);
                    evals += 1;
                    moved |= v < bv;
                    fresh.push((p, v));
                }
                simplex = fresh;
                if moved {
                    continue;
                }
            }
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let (x, value) = simplex.swap_remove(0);
            return Minimum { x, value };
        }
        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|s| s.0[j]).sum::<f64>() / n as f64).collect();
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (worst.0[j] - centroid[j])).collect() };

        let mut xr = along(-1.0);
        let fr = eval(&mut xr);
        evals += 1;
        if fr < simplex[0].1 {
            let mut xe = along(-2.0);
            let fe = eval(&mut xe);
            evals += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (mut xc, t) = if fr < worst.1 { (along(-0.5), fr) } else { (along(0.5), worst.1) };
            let fc = eval(&mut xc);
            evals += 1;
            if fc < t {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    let mut p: Vec<f64> = (0..n).map(|j| best[j] + 0.5 * (s.0[j] - best[j])).collect();
                    let v = eval(&mut p);
                    *s = (p, v);
                }
                evals += n;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola() {
        let m = minimize_1d(|x| (x - 2.0) * (x - 2.0), 0.0, 5.0, 1e-10);
        assert!((m.x - 2.0).abs() < 1e-8);
    }

    #[test]
    fn absolute_value_kink() {
        let m = minimize_1d(f64::abs, -1.0, 3.0, 1e-10);
        assert!(m.x.abs() < 1e-8, "{}", m.x);
    }

    #[test]
    fn boundary_minimum() {
        let m = minimize_1d(|x| x, 1.0, 4.0, 1e-10);
        assert_eq!(m.x, 1.0);
        let m = minimize_1d(|x| -x, 1.0, 4.0, 1e-10);
        assert_eq!(m.x, 4.0);
    }

    #[test]
    fn quadratic_bowl() {
        let c = [1.5, -0.3, 2.0];
        let b = Bounds::new(vec![-5.0; 3], vec![5.0; 3]);
        let m = minimize_nd(|x| x.iter().zip(c).map(|(a, b)| (a - b) * (a - b) * 3.0).sum(), &[0.0; 3], &b);
        for (x, c) in m.x.iter().zip(c) {
            assert!((x - c).abs() < 1e-5);
        }
    }

    #[test]
    fn constant_returns_start() {
        let b = Bounds::new(vec![-1.0, -1.0], vec![1.0, 1.0]);
        let m = minimize_nd(|_| 4.0, &[0.25, -0.5], &b);
        assert_eq!(m.x, vec![0.25, -0.5]);
        assert_eq!(m.value, 4.0);
    }

    #[test]
    fn respects_box() {
        let b = Bounds::new(vec![1.0, 0.0], vec![2.0, f64::INFINITY]);
        let m = minimize_nd(|x| x[0] * x[0] + (x[1] + 3.0).powi(2), &[1.5, 1.0], &b);
        assert!((m.x[0] - 1.0).abs() < 1e-6 && m.x[1].abs() < 1e-6);
    }

    #[test]
    fn multistart_never_worse_than_start() {
        // two wells; the start sits in the shallow one
        let f = |x: &[f64]| ((x[0] - 1.0).powi(2) - 0.1).min((x[0] + 2.0).powi(2) - 1.0);
        let b = Bounds::new(vec![-4.0], vec![4.0]);
        let m = minimize_nd(f, &[1.0], &b);
        assert!(m.value <= f(&[1.0]));
        assert!((m.x[0] + 2.0).abs() < 1e-4);
    }

    #[test]
    fn rosenbrock() {
        let b = Bounds::new(vec![-3.0, -3.0], vec![3.0, 3.0]);
        let m = minimize_nd(|x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2), &[-1.2, 1.0], &b);
        assert!((m.x[0] - 1.0).abs() < 1e-3 && (m.x[1] - 1.0).abs() < 1e-3, "{:?}", m.x);
    }
}
