use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::trial_rng;
use crate::error::Result;
use crate::shape::BlockShape;

/// A random measurement matrix with a planted block-sparse signal.
///
/// The last `k` blocks are nonzero, each equal to `e_1`; recovery depends only
/// on the support and the block directions, so magnitudes are fixed to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub a: DMatrix<f64>,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub seed: u64,
}

/// Deterministic instance for `seed`.
pub fn gen_instance(shape: &BlockShape, seed: u64) -> Result<Instance> {
    shape.validate()?;
    let mut rng = trial_rng(seed, 0);
    Ok(gen_instance_from(shape, &mut rng, seed))
}

pub(crate) fn gen_instance_from<R: Rng>(shape: &BlockShape, rng: &mut R, seed: u64) -> Instance {
    let (m, big_n) = (shape.m, shape.dim());
    let a = DMatrix::from_fn(m, big_n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut x = DVector::zeros(big_n);
    for i in shape.n - shape.k..shape.n {
        x[i * shape.d] = 1.0;
    }
    let y = &a * &x;
    Instance { a, x, y, seed }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let s = BlockShape::new(2, 3, 8, 10).unwrap();
        assert_eq!(gen_instance(&s, 11).unwrap(), gen_instance(&s, 11).unwrap());
        assert_ne!(gen_instance(&s, 11).unwrap().a, gen_instance(&s, 12).unwrap().a);
    }

    #[test]
    fn planted_support_and_exact_measurements() {
        let s = BlockShape::new(3, 2, 5, 9).unwrap();
        let inst = gen_instance(&s, 1).unwrap();
        let nz: Vec<usize> = (0..15).filter(|&i| inst.x[i] != 0.0).collect();
        assert_eq!(nz, vec![9, 12]);
        assert_eq!(&inst.y - &inst.a * &inst.x, DVector::zeros(9));
    }

    #[test]
    fn column_variance_near_one() {
        let s = BlockShape::new(2, 1, 50, 100).unwrap();
        let inst = gen_instance(&s, 3).unwrap();
        let m = s.m as f64;
        for c in inst.a.column_iter() {
            let var = c.iter().map(|v| v * v).sum::<f64>() / m;
            assert!((var - 1.0).abs() < 5.0 / m.sqrt());
        }
    }
}
