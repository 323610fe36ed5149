//! Dense convex quadratic programs `min ½ xᵀPx + qᵀx  s.t.  l <= Ax <= u`
//! by operator splitting, finished with an active-set polish.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub a: DMatrix<f64>,
    pub l: DVector<f64>,
    pub u: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Constraint multipliers, negative on active lower bounds.
    pub y: DVector<f64>,
    pub iterations: usize,
    pub polished: bool,
    /// Largest of the primal, dual and complementarity residuals.
    pub kkt_residual: f64,
}

const SIGMA: f64 = 1e-6;
const ALPHA: f64 = 1.6;
const EQ_SCALE: f64 = 1e3;

impl QpProblem {
    fn check(&self) -> Result<()> {
        let n = self.p.nrows();
        let m = self.a.nrows();
        if self.p.ncols() != n || self.q.len() != n || self.a.ncols() != n || self.l.len() != m || self.u.len() != m {
            return Err(Error::Shape("inconsistent QP dimensions".into()));
        }
        if self.l.iter().zip(self.u.iter()).any(|(l, u)| l > u) {
            return Err(Error::Infeasible("a lower bound exceeds its upper bound".into()));
        }
        Ok(())
    }

    /// Primal, dual and complementarity residuals at `(x, y)`.
    pub fn kkt_residual(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let ax = &self.a * x;
        let mut prim = 0.0f64;
        let mut comp = 0.0f64;
        for i in 0..ax.len() {
            prim = prim.max(self.l[i] - ax[i]).max(ax[i] - self.u[i]);
            // a positive multiplier needs the upper bound active, a negative one the lower
            if y[i] > 0.0 && self.u[i].is_finite() {
                comp = comp.max(y[i] * (self.u[i] - ax[i]).abs());
            } else if y[i] < 0.0 && self.l[i].is_finite() {
                comp = comp.max(-y[i] * (ax[i] - self.l[i]).abs());
            } else if y[i] != 0.0 {
                comp = comp.max(y[i].abs());
            }
        }
        let dual = (&self.p * x + &self.q + self.a.transpose() * y).amax();
        prim.max(dual).max(comp)
    }
}

fn factor(p: &DMatrix<f64>, a: &DMatrix<f64>, rho: &DVector<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let n = p.nrows();
    let mut k = p + DMatrix::identity(n, n) * SIGMA;
    let scaled = DMatrix::from_fn(a.nrows(), n, |i, j| a[(i, j)] * rho[i]);
    k += a.transpose() * scaled;
    k.cholesky().ok_or_else(|| Error::Infeasible("QP matrix is not positive definite".into()))
}

/// Solve to residual `tol`; the polish step usually lands within rounding.
pub fn solve_qp(prob: &QpProblem, tol: f64, max_iter: usize) -> Result<QpSolution> {
    prob.check()?;
    let n = prob.p.nrows();
    let m = prob.a.nrows();
    let is_eq: Vec<bool> = (0..m).map(|i| prob.u[i] - prob.l[i] < 1e-12).collect();
    let mut rho_bar = 0.1;
    let rho_vec = |rb: f64| DVector::from_fn(m, |i, _| if is_eq[i] { rb * EQ_SCALE } else { rb });
    let mut rho = rho_vec(rho_bar);
    let mut chol = factor(&prob.p, &prob.a, &rho)?;

    let mut x = DVector::zeros(n);
    let mut z = DVector::zeros(m);
    let mut y = DVector::zeros(m);
    let mut iterations = 0;
    let mut best: Option<QpSolution> = None;
    for it in 0..max_iter {
        iterations = it + 1;
        let rhs = &x * SIGMA - &prob.q + prob.a.transpose() * (rho.component_mul(&z) - &y);
        let xt = chol.solve(&rhs);
        let zt = &prob.a * &xt;
        let x_new = &xt * ALPHA + &x * (1.0 - ALPHA);
        let z_relax = &zt * ALPHA + &z * (1.0 - ALPHA);
        let z_new = DVector::from_fn(m, |i, _| (z_relax[i] + y[i] / rho[i]).clamp(prob.l[i], prob.u[i]));
        y += rho.component_mul(&(z_relax - &z_new));
        x = x_new;
        z = z_new;

        if (it + 1) % 25 == 0 || it + 1 == max_iter {
            let ax = &prob.a * &x;
            let px = &prob.p * &x;
            let aty = prob.a.transpose() * &y;
            let prim = (&ax - &z).amax();
            let dual = (&px + &prob.q + &aty).amax();
            let prim_scale = ax.amax().max(z.amax()).max(1e-30);
            let dual_scale = px.amax().max(aty.amax()).max(prob.q.amax()).max(1e-30);
            if prim < 1e-6 * prim_scale.max(1.0) && dual < 1e-6 * dual_scale.max(1.0) || it + 1 == max_iter {
                if let Some(sol) = polish(prob, &x, &z, &y, &is_eq) {
                    if sol.kkt_residual <= tol {
                        return Ok(QpSolution { iterations, ..sol });
                    }
                    if best.as_ref().is_none_or(|b| sol.kkt_residual < b.kkt_residual) {
                        best = Some(QpSolution { iterations, ..sol });
                    }
                }
                let r = prob.kkt_residual(&x, &y);
                if r <= tol {
                    return Ok(QpSolution { x, y, iterations, polished: false, kkt_residual: r });
                }
            }
            // rebalance the penalty between primal and dual progress
            let ratio = ((prim / prim_scale) / (dual / dual_scale).max(1e-30)).sqrt();
            if ratio.is_finite() && !(0.2..=5.0).contains(&ratio) {
                rho_bar = (rho_bar * ratio).clamp(1e-6, 1e6);
                rho = rho_vec(rho_bar);
                chol = factor(&prob.p, &prob.a, &rho)?;
            }
        }
    }
    let r = prob.kkt_residual(&x, &y);
    match best {
        Some(b) if b.kkt_residual < r => Ok(b),
        _ => Ok(QpSolution { x, y, iterations, polished: false, kkt_residual: r }),
    }
}

// Treat the constraints the splitting iterate says are active as equalities
// and solve the resulting KKT system with a few refinement steps.
fn polish(prob: &QpProblem, x: &DVector<f64>, z: &DVector<f64>, y: &DVector<f64>, is_eq: &[bool]) -> Option<QpSolution> {
    let n = x.len();
    let m = z.len();
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for i in 0..m {
        if is_eq[i] {
            rows.push(i);
            targets.push(prob.l[i]);
        } else if z[i] - prob.l[i] < -y[i] {
            rows.push(i);
            targets.push(prob.l[i]);
        } else if prob.u[i] - z[i] < y[i] {
            rows.push(i);
            targets.push(prob.u[i]);
        }
    }
    let na = rows.len();
    let delta = 1e-9;
    let mut k = DMatrix::zeros(n + na, n + na);
    k.view_mut((0, 0), (n, n)).copy_from(&prob.p);
    for (r, &i) in rows.iter().enumerate() {
        for j in 0..n {
            k[(n + r, j)] = prob.a[(i, j)];
            k[(j, n + r)] = prob.a[(i, j)];
        }
    }
    let mut kreg = k.clone();
    for i in 0..n {
        kreg[(i, i)] += delta;
    }
    for i in n..n + na {
        kreg[(i, i)] -= delta;
    }
    let lu = kreg.lu();
    let mut rhs = DVector::zeros(n + na);
    for i in 0..n {
        rhs[i] = -prob.q[i];
    }
    for (r, t) in targets.iter().enumerate() {
        rhs[n + r] = *t;
    }
    let mut sol = lu.solve(&rhs)?;
    for _ in 0..5 {
        let res = &rhs - &k * &sol;
        sol += lu.solve(&res)?;
    }
    let xp = sol.rows(0, n).into_owned();
    let mut yp = DVector::zeros(m);
    for (r, &i) in rows.iter().enumerate() {
        yp[i] = sol[n + r];
    }
    if !xp.iter().all(|v| v.is_finite()) {
        return None;
    }
    let kkt = prob.kkt_residual(&xp, &yp);
    // a multiplier with the wrong sign means the guessed active set is wrong
    let wrong_sign = rows.iter().enumerate().any(|(r, &i)| {
        !is_eq[i] && ((targets[r] == prob.l[i] && yp[i] > 1e-9) || (targets[r] == prob.u[i] && yp[i] < -1e-9))
    });
    if wrong_sign {
        return None;
    }
    Some(QpSolution { x: xp, y: yp, iterations: 0, polished: true, kkt_residual: kkt })
}
