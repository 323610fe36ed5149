use nalgebra::{DMatrix, DVector};

use super::qp::{solve_qp, QpProblem};
use super::{CapGrid, IntrinsicVolumeVector};
use crate::error::{domain, Error, Result};

/// How residual and volume norms enter the regression objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressionObjective {
    /// `‖σ - Gv‖₂ + λ‖v‖₂`.
    Norms,
    /// `‖σ - Gv‖₂² + λ‖v‖₂²`.
    SquaredNorms,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionParams {
    pub lambda_reg: f64,
    pub objective: RegressionObjective,
    /// Bound on the KKT residual of the final quadratic program.
    pub kkt_tol: f64,
}

impl Default for RegressionParams {
    fn default() -> Self {
        Self {
            lambda_reg: 1.0,
            objective: RegressionObjective::Norms,
            kkt_tol: 1e-8,
        }
    }
}

/// Intrinsic volumes `v_0 .. v_{N-2}` from cap measures `σ(ε) = Σ g_i(ε) v_i + v_{N-1}`.
///
/// Constraints: `v >= 0`, `Gv <= σ - v_{N-1}`, `Σ v = 1` and
/// `Σ (-1)^i v_i = 0`, with `v_{N-1}` fixed to `v_last_val` in both sums.
pub fn regress_volumes(
    sigma: &CapGrid,
    g: &DMatrix<f64>,
    v_last_val: f64,
    params: &RegressionParams,
) -> Result<IntrinsicVolumeVector> {
    let rows = sigma.eps_values.len();
    if g.nrows() != rows {
        return Err(domain("regress_volumes", format!("{} grid points but {} Steiner rows", rows, g.nrows())));
    }
    if !(0.0..=1.0).contains(&v_last_val) {
        return Err(domain("regress_volumes", format!("v_last={v_last_val} outside [0, 1]")));
    }
    if !(params.lambda_reg > 0.0) {
        return Err(domain("regress_volumes", "lambda_reg must be positive"));
    }
    let nv = g.ncols();
    let dim = nv + 1;
    let mut v_full = vec![0.0; dim];
    v_full[dim - 1] = v_last_val;
    if v_last_val >= 1.0 {
        // nonnegativity and the mass constraint leave only the zero vector
        return Ok(IntrinsicVolumeVector { v: v_full, v_last_fixed: v_last_val });
    }
    let target = DVector::from_iterator(rows, sigma.sigma_ratios.iter().map(|s| s - v_last_val));
    let problem = Problem::new(g, &target, v_last_val, dim);

    let v = match params.objective {
        RegressionObjective::SquaredNorms => problem.solve(params.lambda_reg, params.kkt_tol)?,
        RegressionObjective::Norms => solve_norms(&problem, params)?,
    };
    for (dst, &x) in v_full.iter_mut().zip(v.iter()) {
        *dst = x.max(0.0);
    }
    Ok(IntrinsicVolumeVector { v: v_full, v_last_fixed: v_last_val })
}

struct Problem<'a> {
    g: &'a DMatrix<f64>,
    target: &'a DVector<f64>,
    gtg: DMatrix<f64>,
    gtt: DVector<f64>,
    a: DMatrix<f64>,
    l: DVector<f64>,
    u: DVector<f64>,
}

impl<'a> Problem<'a> {
    fn new(g: &'a DMatrix<f64>, target: &'a DVector<f64>, v_last: f64, dim: usize) -> Self {
        let nv = g.ncols();
        let rows = g.nrows();
        let m = 2 + rows + nv;
        let mut a = DMatrix::zeros(m, nv);
        let mut l = DVector::zeros(m);
        let mut u = DVector::zeros(m);
        for j in 0..nv {
            a[(0, j)] = 1.0;
            a[(1, j)] = if j % 2 == 0 { 1.0 } else { -1.0 };
        }
        l[0] = 1.0 - v_last;
        u[0] = l[0];
        let last_sign = if (dim - 1) % 2 == 0 { 1.0 } else { -1.0 };
        l[1] = -last_sign * v_last;
        u[1] = l[1];
        a.view_mut((2, 0), (rows, nv)).copy_from(g);
        for r in 0..rows {
            l[2 + r] = f64::NEG_INFINITY;
            u[2 + r] = target[r];
        }
        for j in 0..nv {
            a[(2 + rows + j, j)] = 1.0;
            l[2 + rows + j] = 0.0;
            u[2 + rows + j] = f64::INFINITY;
        }
        Self { g, target, gtg: g.transpose() * g, gtt: g.transpose() * target, a, l, u }
    }

    /// Minimizer of `‖target - Gv‖² + mu ‖v‖²` over the constraint set.
    fn solve(&self, mu: f64, tol: f64) -> Result<DVector<f64>> {
        let nv = self.gtg.nrows();
        // same minimizer, objective kept at unit scale for large mu
        let scale = 2.0 / (1.0 + mu);
        let prob = QpProblem {
            p: (&self.gtg + DMatrix::identity(nv, nv) * mu) * scale,
            q: &self.gtt * -scale,
            a: self.a.clone(),
            l: self.l.clone(),
            u: self.u.clone(),
        };
        let sol = solve_qp(&prob, tol, 20_000)?;
        let ax = &self.a * &sol.x;
        let infeas = (0..ax.len()).fold(0.0f64, |m, i| m.max(self.l[i] - ax[i]).max(ax[i] - self.u[i]));
        if infeas > 1e-6 {
            return Err(Error::Infeasible(format!(
                "constraint violation {infeas:.2e}; the cap measures are inconsistent with v_last"
            )));
        }
        Ok(sol.x)
    }

    fn norms(&self, v: &DVector<f64>) -> (f64, f64) {
        ((self.target - self.g * v).norm(), v.norm())
    }
}

// The minimizer of ‖r‖ + λ‖v‖ is the ridge solution with weight
// μ = λ‖r‖/‖v‖ evaluated at that solution; solve for the fixed point in log μ.
fn solve_norms(problem: &Problem<'_>, params: &RegressionParams) -> Result<DVector<f64>> {
    let lam = params.lambda_reg;
    let eval = |t: f64| -> Result<(f64, DVector<f64>)> {
        let v = problem.solve(t.exp(), params.kkt_tol)?;
        let (r, vn) = problem.norms(&v);
        let h = (lam * r / vn.max(f64::MIN_POSITIVE)).max(f64::MIN_POSITIVE);
        Ok((h.ln() - t, v))
    };
    // bracket the root by stepping out from mu = 1 in factors of 10
    let step = 10f64.ln();
    let (t_min, t_max) = ((1e-12f64).ln(), (1e8f64).ln());
    let (g0, v0) = eval(0.0)?;
    let (mut lo, mut hi, mut g_lo, mut g_hi, mut v_best);
    if g0 > 0.0 {
        (lo, g_lo) = (0.0, g0);
        hi = step;
        loop {
            let (g, v) = eval(hi)?;
            v_best = v;
            if g < 0.0 || hi >= t_max - 1e-9 {
                g_hi = g;
                break;
            }
            (lo, g_lo) = (hi, g);
            hi += step;
        }
        if g_hi >= 0.0 {
            return Ok(v_best);
        }
    } else {
        (hi, g_hi, v_best) = (0.0, g0, v0);
        if g0 == 0.0 {
            return Ok(v_best);
        }
        lo = -step;
        loop {
            let (g, v) = eval(lo)?;
            if g > 0.0 {
                g_lo = g;
                break;
            }
            if lo <= t_min + 1e-9 {
                return Ok(v);
            }
            (hi, g_hi, v_best) = (lo, g, v);
            lo -= step;
        }
    }
    // Illinois regula falsi
    let mut side = 0;
    for _ in 0..100 {
        let t = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        let (gt, v) = eval(t)?;
        v_best = v;
        if gt.abs() < 1e-10 || (hi - lo) < 1e-10 {
            break;
        }
        if gt > 0.0 {
            lo = t;
            g_lo = gt;
            if side == 1 {
                g_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = t;
            g_hi = gt;
            if side == -1 {
                g_lo *= 0.5;
            }
            side = -1;
        }
    }
    Ok(v_best)
}

#[cfg(test)]
mod tests {
    use super::super::{build_steiner_system, eps_grid, CapSource};
    use super::*;

    #[test]
    fn zero_measures_with_full_cone() {
        let eps = eps_grid(0.4, 1.0, 0.1);
        let g = build_steiner_system(8, &eps).unwrap();
        let cap = CapGrid::new(eps.clone(), vec![0.0; eps.len()], CapSource::Simulated).unwrap();
        let v = regress_volumes(&cap, &g, 1.0, &RegressionParams::default()).unwrap();
        assert!(v.v[..7].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn inconsistent_measures_are_reported() {
        let eps = eps_grid(0.4, 1.0, 0.1);
        let g = build_steiner_system(8, &eps).unwrap();
        let cap = CapGrid::new(eps.clone(), vec![0.0; eps.len()], CapSource::Simulated).unwrap();
        let r = regress_volumes(&cap, &g, 0.01, &RegressionParams::default());
        assert!(matches!(r, Err(Error::Infeasible(_))), "{r:?}");
    }
}
