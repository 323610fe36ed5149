use nalgebra::{DMatrix, DVector};

/// Settings for [`solve_l2l1`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on both the primal residual `‖x - z‖` and the dual residual.
    pub tol: f64,
    pub max_iter: usize,
    pub rho: f64,
    pub relaxation: f64,
    /// Rebalance `rho` every this many iterations (0 disables).
    pub rebalance_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 5000,
            rho: 1.0,
            relaxation: 1.6,
            rebalance_every: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    /// The last affine-projected iterate; always satisfies `A x = y` to
    /// rounding.
    pub x: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Sum of Euclidean norms of consecutive length-`d` blocks.
pub fn l2l1_objective(x: &[f64], d: usize) -> f64 {
    x.chunks(d).map(|b| b.iter().map(|v| v * v).sum::<f64>().sqrt()).sum()
}

/// `min Σ_i ‖x_i‖_2  s.t.  A x = y` by ADMM: an exact projection onto the
/// affine set alternates with block soft-thresholding.
///
/// The projection does not involve `rho`, so rebalancing it between primal
/// and dual residuals costs nothing.
pub fn solve_l2l1(a: &DMatrix<f64>, y: &DVector<f64>, d: usize, opts: &SolverOptions) -> SolveOutcome {
    let big_n = a.ncols();
    let aat = a * a.transpose();
    let Some(chol) = aat.cholesky() else {
        // rank deficient: fall back to the pseudo-inverse projection
        let pinv = a.clone().pseudo_inverse(1e-12).expect("svd of a finite matrix");
        let proj = DMatrix::identity(big_n, big_n) - &pinv * a;
        let xp = &pinv * y;
        return iterate(&proj, &xp, d, opts);
    };
    let k = chol.solve(a);
    let proj = DMatrix::identity(big_n, big_n) - a.transpose() * k;
    let xp = a.transpose() * chol.solve(y);
    iterate(&proj, &xp, d, opts)
}

fn iterate(proj: &DMatrix<f64>, xp: &DVector<f64>, d: usize, opts: &SolverOptions) -> SolveOutcome {
    let big_n = xp.len();
    let mut rho = opts.rho;
    let mut x = xp.clone();
    let mut z = x.clone();
    let mut u = DVector::zeros(big_n);
    let mut v = DVector::zeros(big_n);
    let mut z_old = DVector::zeros(big_n);
    for it in 0..opts.max_iter {
        // x = P (z - u) + xp
        v.copy_from(&z);
        v -= &u;
        x.gemv(1.0, proj, &v, 0.0);
        x += xp;

        let alpha = opts.relaxation;
        z_old.copy_from(&z);
        // v = alpha x + (1 - alpha) z + u, then block shrinkage into z
        for i in 0..big_n {
            v[i] = alpha * x[i] + (1.0 - alpha) * z_old[i] + u[i];
        }
        let thr = 1.0 / rho;
        for (zb, vb) in z.as_mut_slice().chunks_mut(d).zip(v.as_slice().chunks(d)) {
            let nrm = vb.iter().map(|t| t * t).sum::<f64>().sqrt();
            let scale = if nrm > thr { 1.0 - thr / nrm } else { 0.0 };
            for (zi, vi) in zb.iter_mut().zip(vb) {
                *zi = scale * vi;
            }
        }
        for i in 0..big_n {
            u[i] += alpha * x[i] + (1.0 - alpha) * z_old[i] - z[i];
        }

        let r = (&x - &z).norm();
        let s = rho * (&z - &z_old).norm();
        if r < opts.tol && s < opts.tol {
            return SolveOutcome { x, iterations: it + 1, converged: true };
        }
        if opts.rebalance_every > 0 && (it + 1) % opts.rebalance_every == 0 {
            if r > 10.0 * s {
                rho *= 2.0;
                u /= 2.0;
            } else if s > 10.0 * r {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }
    SolveOutcome { x, iterations: opts.max_iter, converged: false }
}

#[cfg(test)]
mod tests {
    use super::super::gen_instance;
    use super::*;
    use crate::shape::BlockShape;

    #[test]
    fn zero_measurements_give_zero() {
        let s = BlockShape::new(2, 1, 6, 5).unwrap();
        let inst = gen_instance(&s, 4).unwrap();
        let out = solve_l2l1(&inst.a, &DVector::zeros(5), 2, &SolverOptions::default());
        assert!(out.converged);
        assert!(out.x.norm() < 1e-12);
    }

    #[test]
    fn square_system_is_exact() {
        let s = BlockShape::new(2, 2, 5, 10).unwrap();
        let inst = gen_instance(&s, 9).unwrap();
        let out = solve_l2l1(&inst.a, &inst.y, 2, &SolverOptions::default());
        assert!((&out.x - &inst.x).norm() < 1e-8);
    }

    #[test]
    fn feasible_and_no_worse_than_planted() {
        let s = BlockShape::new(2, 4, 12, 16).unwrap();
        for seed in 0..20 {
            let inst = gen_instance(&s, seed).unwrap();
            let out = solve_l2l1(&inst.a, &inst.y, 2, &SolverOptions::default());
            let res = (&inst.a * &out.x - &inst.y).norm() / inst.y.norm();
            assert!(res <= 1e-8);
            if out.converged {
                let f = l2l1_objective(out.x.as_slice(), 2);
                assert!(f <= l2l1_objective(inst.x.as_slice(), 2) + 1e-7);
            }
        }
    }
}
