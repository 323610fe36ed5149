use std::ops::RangeInclusive;

use super::cap::{cap_bound_grid, v_last};
use super::regression::{regress_volumes, RegressionParams};
use super::{build_steiner_system, crofton_raw, CapGrid, CapSource, IntrinsicVolumeVector};
use crate::error::{domain, Result};
use crate::monte_carlo::cap_measure_sim_grid;
use crate::shape::BlockShape;

/// Raw violations of monotonicity above this are flagged.
pub const MONOTONE_FLAG: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerrPoint {
    pub m: usize,
    /// Crofton value, clipped to `[0, 1]`.
    pub raw: f64,
    /// After the nonincreasing least-squares fit.
    pub monotone: f64,
}

#[derive(Debug, Clone)]
pub struct PerrCurve {
    pub points: Vec<PerrPoint>,
    pub caps: CapGrid,
    pub volumes: IntrinsicVolumeVector,
    /// Largest increase of the raw curve between consecutive `M`.
    pub max_raw_violation: f64,
}

impl PerrCurve {
    pub fn flagged(&self) -> bool {
        self.max_raw_violation > MONOTONE_FLAG
    }
}

/// Where the cap measures come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CapInput {
    /// The characteristic-function upper bound.
    Analytic,
    Simulated { trials: u64, seed: u64 },
}

/// Cap measures on `eps_grid`, the fixed `v_{N-1}`, regression and the
/// Crofton sum over `m_range`.
pub fn perr_pipeline(
    shape: &BlockShape,
    eps_grid: &[f64],
    input: CapInput,
    m_range: RangeInclusive<usize>,
    params: &RegressionParams,
) -> Result<PerrCurve> {
    shape.validate()?;
    let dim = shape.dim();
    if *m_range.end() > dim || m_range.is_empty() {
        return Err(domain("perr_pipeline", format!("M range {m_range:?} outside 0..={dim}")));
    }
    let caps = match input {
        CapInput::Analytic => {
            let bounds = cap_bound_grid(shape, eps_grid)?;
            // remove optimizer noise so the grid is nondecreasing
            let mut run = 0.0f64;
            let ratios = bounds
                .iter()
                .map(|b| {
                    run = run.max(b.bound);
                    run
                })
                .collect();
            CapGrid::new(eps_grid.to_vec(), ratios, CapSource::AnalyticBound)?
        }
        CapInput::Simulated { trials, seed } => {
            let reports = cap_measure_sim_grid(shape, eps_grid, trials, seed)?;
            CapGrid::new(eps_grid.to_vec(), reports.iter().map(|r| r.p_hat).collect(), CapSource::Simulated)?
        }
    };
    let g = build_steiner_system(dim, eps_grid)?;
    let vl = v_last(shape)?;
    let volumes = regress_volumes(&caps, &g, vl, params)?;

    let raw: Vec<f64> = m_range.clone().map(|m| crofton_raw(&volumes, m).clamp(0.0, 1.0)).collect();
    let mono = isotonic_nonincreasing(&raw);
    let max_raw_violation = raw.windows(2).fold(0.0f64, |m, w| m.max(w[1] - w[0]));
    let points = m_range
        .zip(raw.iter().zip(&mono))
        .map(|(m, (&r, &s))| PerrPoint { m, raw: r, monotone: s })
        .collect();
    Ok(PerrCurve { points, caps, volumes, max_raw_violation })
}

/// Least-squares nonincreasing fit (pool adjacent violators).
pub fn isotonic_nonincreasing(y: &[f64]) -> Vec<f64> {
    // blocks of (mean, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, c2) = blocks[blocks.len() - 1];
            let (m1, c1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.pop();
            let last = blocks.last_mut().unwrap();
            *last = ((m1 * c1 as f64 + m2 * c2 as f64) / (c1 + c2) as f64, c1 + c2);
        }
    }
    blocks.into_iter().flat_map(|(m, c)| std::iter::repeat_n(m, c)).collect()
}
