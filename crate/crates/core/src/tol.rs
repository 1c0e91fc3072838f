use crate::error::{Error, Result};

/// Numerical thresholds shared by every operation.
///
/// `rank_tol`, `sep_tol` and `fd_step` are the primary knobs; the remaining
/// fields are the floors used by individual precondition checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative singular-value cutoff `σ₂/σ₁` for the rank-1 test.
    pub rank_tol: f64,
    /// Minimum relative eigenvalue separation for the Wilson chart.
    pub sep_tol: f64,
    /// Radius of the finite-difference circle used for derivatives.
    pub fd_step: f64,
    /// Floor on `|det G| / ‖G‖ⁿ` for conjugators.
    pub det_floor: f64,
    /// Allowed `|det A − 1|` for `SL₂` steps.
    pub unimodular_tol: f64,
    /// Relative tolerance of the polynomial fit along a base flow.
    pub flow_fit_tol: f64,
    /// Relative tolerance for comparing invariants and canonical forms.
    pub equiv_tol: f64,
    /// Relative residual allowed for the `𝒞₂` constraint in floating point.
    pub variety_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: 1e-8,
            sep_tol: 1e-6,
            fd_step: 1e-6,
            det_floor: 1e-12,
            unimodular_tol: 1e-10,
            flow_fit_tol: 1e-7,
            equiv_tol: 1e-6,
            variety_tol: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rank_tol", self.rank_tol),
            ("sep_tol", self.sep_tol),
            ("fd_step", self.fd_step),
            ("det_floor", self.det_floor),
            ("unimodular_tol", self.unimodular_tol),
            ("flow_fit_tol", self.flow_fit_tol),
            ("equiv_tol", self.equiv_tol),
            ("variety_tol", self.variety_tol),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidTolerance { name, value });
            }
        }
        Ok(())
    }
}
