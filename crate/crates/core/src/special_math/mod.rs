//! Special functions, quadrature, characteristic-function inversion and
//! derivative-free minimizers.

pub mod charfn;
pub mod expectation;
pub mod gamma;
pub mod normal;
pub mod optimize;
pub mod quadrature;

pub use charfn::{gil_pelaez_cdf, neg_power, CharacteristicFunction};
pub use expectation::{expectation_integral, expectation_integral_with_breaks, Density};
pub use gamma::{gamma, inv_reg_lower_gamma, inv_reg_upper_gamma, ln_gamma, reg_lower_gamma, reg_upper_gamma};
pub use normal::{gauss_tail, inv_gauss_tail, std_normal_cdf};
pub use optimize::{minimize_1d, minimize_nd, minimize_nd_with, Bounds, Minimum, NdOptions};
pub use quadrature::{integrate, integrate_panels, QuadResult};

use crate::error::{domain, Result};

/// Tolerances shared by every quadrature-backed routine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Probability mass dropped when truncating a semi-infinite support.
    pub tail_mass_cutoff: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
            tail_mass_cutoff: 1e-12,
        }
    }
}

impl QuadratureSpec {
    /// Looser settings for inner integrals evaluated inside optimizer loops.
    pub fn coarse() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(domain("QuadratureSpec", "tolerances must be positive"));
        }
        if !(self.tail_mass_cutoff > 0.0 && self.tail_mass_cutoff <= 1e-8) {
            return Err(domain(
                "QuadratureSpec",
                format!("tail_mass_cutoff={} outside (0, 1e-8]", self.tail_mass_cutoff),
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(domain("QuadratureSpec", "max_subdivisions must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        QuadratureSpec::default().validate().unwrap();
        QuadratureSpec::coarse().validate().unwrap();
    }

    #[test]
    fn rejects_large_tail() {
        let s = QuadratureSpec { tail_mass_cutoff: 1e-6, ..Default::default() };
        assert!(s.validate().is_err());
        let s = QuadratureSpec { abs_tol: 0.0, ..Default::default() };
        assert!(s.validate().is_err());
    }
}
