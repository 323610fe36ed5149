use crate::error::{Error, Result};

/// Dimensions of a block-sparse recovery problem.
///
/// `n` blocks of length `d`, `k` of them nonzero, observed through `m`
/// Gaussian measurements. The ambient dimension is `d * n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockShape {
    pub d: usize,
    pub k: usize,
    pub n: usize,
    pub m: usize,
}

impl BlockShape {
    pub fn new(d: usize, k: usize, n: usize, m: usize) -> Result<Self> {
        let shape = Self { d, k, n, m };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 1 || self.n < 1 {
            return Err(Error::Shape(format!("d={} n={} must be positive", self.d, self.n)));
        }
        if self.k > self.n {
            return Err(Error::Shape(format!("k={} exceeds n={}", self.k, self.n)));
        }
        if self.d * self.k > self.m || self.m > self.d * self.n {
            return Err(Error::Shape(format!(
                "need d*k <= M <= d*n, got d*k={} M={} d*n={}",
                self.d * self.k,
                self.m,
                self.d * self.n
            )));
        }
        Ok(())
    }

    /// Same problem with a different number of measurements.
    pub fn with_m(&self, m: usize) -> Result<Self> {
        Self::new(self.d, self.k, self.n, m)
    }

    /// Ambient dimension `N = d * n`.
    pub fn dim(&self) -> usize {
        self.d * self.n
    }

    pub fn alpha(&self) -> f64 {
        self.m as f64 / self.dim() as f64
    }

    pub fn beta(&self) -> f64 {
        self.k as f64 / self.n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios() {
        let s = BlockShape::new(2, 6, 18, 24).unwrap();
        assert_eq!(s.dim(), 36);
        assert!((s.alpha() - 24.0 / 36.0).abs() < 1e-15);
        assert!((s.beta() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_measurement_counts() {
        assert!(BlockShape::new(2, 6, 18, 11).is_err());
        assert!(BlockShape::new(2, 6, 18, 37).is_err());
        assert!(BlockShape::new(2, 19, 18, 36).is_err());
        assert!(BlockShape::new(2, 6, 18, 12).is_ok());
        assert!(BlockShape::new(2, 6, 18, 36).is_ok());
    }
}
