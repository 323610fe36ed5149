//! Monte Carlo ground truth: random instances, an l2/l1 solver, recovery
//! trials, width samples and cap-measure estimates.
//!
//! Trial `i` of a run with seed `s` draws from ChaCha8 seeded with `s` on
//! stream `i`, so every report is independent of scheduling and thread count.

mod instance;
mod sampling;
mod solver;

pub use instance::{gen_instance, Instance};
pub use sampling::{cap_measure_sim, cap_measure_sim_grid, sample_profile, width_eval};
pub use solver::{solve_l2l1, l2l1_objective, SolveOutcome, SolverOptions};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::shape::BlockShape;

/// Binomial estimate with a 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimReport {
    /// Trials that produced a decision (requested minus indeterminate).
    pub trials: u64,
    /// Trials in which the event occurred (a recovery failure, or the
    /// sample landing in the cap).
    pub failures: u64,
    /// Solver runs that hit the iteration cap without a decision.
    pub indeterminate: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

const Z95: f64 = 1.959_963_984_540_054;

impl SimReport {
    pub fn new(trials: u64, failures: u64, indeterminate: u64, seed: u64) -> Self {
        let (p_hat, ci_low, ci_high) = wilson(failures, trials);
        Self { trials, failures, indeterminate, p_hat, ci_low, ci_high, seed }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// Point estimate and 95% Wilson interval for `k` events in `n` trials.
pub fn wilson(k: u64, n: u64) -> (f64, f64, f64) {
    if n == 0 {
        return (f64::NAN, 0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // the interval always contains p; guard the rounding at p = 0 or 1
    (p, (center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// Generator for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Outcome of one recovery experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialOutcome {
    Success,
    Failure,
    Indeterminate,
}

/// Relative error below which the planted signal counts as recovered.
pub const SUCCESS_TOL: f64 = 1e-4;

/// Draw an instance, solve it, and classify the result.
///
/// A solve that hits the iteration cap still yields a failure when its
/// feasible iterate beats the planted signal's objective, since the planted
/// signal is then certainly not the minimizer.
pub fn recovery_trial(shape: &BlockShape, seed: u64, opts: &SolverOptions) -> Result<TrialOutcome> {
    let inst = gen_instance(shape, seed)?;
    Ok(classify(&inst, shape, opts))
}

fn classify(inst: &Instance, shape: &BlockShape, opts: &SolverOptions) -> TrialOutcome {
    let out = solve_l2l1(&inst.a, &inst.y, shape.d, opts);
    let err = (&out.x - &inst.x).norm() / inst.x.norm().max(f64::MIN_POSITIVE);
    if out.converged {
        if err <= SUCCESS_TOL {
            TrialOutcome::Success
        } else {
            TrialOutcome::Failure
        }
    } else {
        let f_hat = l2l1_objective(out.x.as_slice(), shape.d);
        let f_true = l2l1_objective(inst.x.as_slice(), shape.d);
        if f_hat < f_true - 1e-7 {
            TrialOutcome::Failure
        } else {
            TrialOutcome::Indeterminate
        }
    }
}

/// Estimate `P_err` from `trials` independent instances.
pub fn estimate_perr(shape: &BlockShape, trials: u64, seed: u64) -> Result<SimReport> {
    estimate_perr_with(shape, trials, seed, &SolverOptions::default())
}

pub fn estimate_perr_with(shape: &BlockShape, trials: u64, seed: u64, opts: &SolverOptions) -> Result<SimReport> {
    shape.validate()?;
    if trials == 0 {
        return Err(domain("estimate_perr", "trials must be at least 1"));
    }
    let (fail, indet) = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let inst = instance::gen_instance_from(shape, &mut rng, seed);
            match classify(&inst, shape, opts) {
                TrialOutcome::Success => (0u64, 0u64),
                TrialOutcome::Failure => (1, 0),
                TrialOutcome::Indeterminate => (0, 1),
            }
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(SimReport::new(trials - indet, fail, indet, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_estimate() {
        for (k, n) in [(0, 10), (10, 10), (3, 7), (500, 1000)] {
            let (p, lo, hi) = wilson(k, n);
            assert!(lo <= p && p <= hi);
            assert!(lo >= 0.0 && hi <= 1.0);
        }
        let (_, lo, hi) = wilson(0, 100);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.036_994).abs() < 1e-5);
    }

    #[test]
    fn streams_differ() {
        use rand::Rng;
        let a: u64 = trial_rng(7, 0).random();
        let b: u64 = trial_rng(7, 1).random();
        let c: u64 = trial_rng(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
