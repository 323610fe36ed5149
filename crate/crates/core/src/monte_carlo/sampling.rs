use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{trial_rng, SimReport};
use crate::deviation_bounds::WidthProfile;
use crate::error::{domain, Result};
use crate::shape::BlockShape;

fn normal_vector<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Profile `h̄` of a fresh Gaussian vector for trial `seed`.
pub fn sample_profile(shape: &BlockShape, seed: u64) -> Result<WidthProfile> {
    let h = normal_vector(&mut trial_rng(seed, 0), shape.dim());
    WidthProfile::from_vector(&h, shape.d, shape.k)
}

/// Gaussian width `w(h, S_w)` of one sampled `h`.
pub fn width_eval(shape: &BlockShape, seed: u64) -> Result<f64> {
    if shape.k == 0 {
        return Err(domain("width_eval", "k = 0 is outside the closed form's domain"));
    }
    sample_profile(shape, seed)?.width()
}

/// Fraction of the sphere within angle `eps` of the cone,
/// `P(w(h, S_w)^2 >= cos^2(eps) ‖h‖^2)`.
pub fn cap_measure_sim(shape: &BlockShape, eps: f64, trials: u64, seed: u64) -> Result<SimReport> {
    Ok(cap_measure_sim_grid(shape, &[eps], trials, seed)?.remove(0))
}

/// [`cap_measure_sim`] for every `eps` in the grid from one set of samples.
pub fn cap_measure_sim_grid(shape: &BlockShape, eps: &[f64], trials: u64, seed: u64) -> Result<Vec<SimReport>> {
    if shape.k == 0 {
        return Err(domain("cap_measure_sim", "k must be positive"));
    }
    if trials == 0 {
        return Err(domain("cap_measure_sim", "trials must be at least 1"));
    }
    if let Some(e) = eps.iter().find(|&&e| !(e > 0.0 && e < std::f64::consts::FRAC_PI_2)) {
        return Err(domain("cap_measure_sim", format!("eps={e} outside (0, pi/2)")));
    }
    let cos2: Vec<f64> = eps.iter().map(|e| e.cos().powi(2)).collect();
    let counts = (0..trials)
        .into_par_iter()
        .map(|i| {
            let h = normal_vector(&mut trial_rng(seed, i), shape.dim());
            let p = WidthProfile::from_vector(&h, shape.d, shape.k).expect("shape checked");
            let w2 = p.width_sq_at(p.optimal_lambda().expect("k > 0"));
            let h2: f64 = h.iter().map(|v| v * v).sum();
            cos2.iter().map(|&c| u64::from(w2 >= c * h2)).collect::<Vec<u64>>()
        })
        .reduce(
            || vec![0u64; cos2.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(counts.into_iter().map(|c| SimReport::new(trials, c, 0, seed)).collect())
}
