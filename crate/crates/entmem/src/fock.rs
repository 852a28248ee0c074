//! Two-mode Fock space truncated at two total excitations.
//!
//! The two rails of the dual-rail qubit are bosonic modes L and R. Everything
//! downstream of the source carries at most two photons in total, so states
//! live on the six-dimensional span of |n_L m_R> with n + m <= 2, ordered
//!
//! ```text
//! index:  0     1     2     3     4     5
//! state: |00> |01>  |10>  |11>  |02>  |20>
//! ```
//!
//! Passive linear optics conserves total photon number and loss only lowers
//! it, so every operation in this crate maps the truncated space into itself
//! with no leakage into discarded sectors.

use nalgebra::SMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const DIM: usize = 6;

/// Occupations (n_L, m_R) in basis order.
pub const BASIS: [(u8, u8); DIM] = [(0, 0), (0, 1), (1, 0), (1, 1), (0, 2), (2, 0)];

pub const I00: usize = 0;
pub const I01: usize = 1;
pub const I10: usize = 2;
pub const I11: usize = 3;
pub const I02: usize = 4;
pub const I20: usize = 5;

pub type Mat2 = SMatrix<C64, 2, 2>;
pub type Mat6 = SMatrix<C64, DIM, DIM>;

/// Tolerance used when validating trace, Hermiticity and positivity.
pub const STATE_TOL: f64 = 1e-9;

/// Basis index for occupations (n photons in L, m photons in R).
pub fn basis_index(n: u8, m: u8) -> Option<usize> {
    BASIS.iter().position(|&(bn, bm)| bn == n && bm == m)
}

/// Density matrix on the truncated two-mode space.
///
/// Invariants, enforced on construction and preserved by every channel in
/// this crate: Hermitian, unit trace, positive semidefinite (all within
/// `STATE_TOL`).
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeFockState {
    rho: Mat6,
}

impl TwoModeFockState {
    pub fn vacuum() -> Self {
        let mut rho = Mat6::zeros();
        rho[(I00, I00)] = C64::new(1.0, 0.0);
        Self { rho }
    }

    /// Builds a state from an explicit matrix, validating the invariants.
    pub fn from_matrix(rho: Mat6) -> Result<Self> {
        let state = Self { rho };
        state.validate()?;
        Ok(state)
    }

    /// For internal use by channels that preserve the invariants by
    /// construction.
    pub(crate) fn from_matrix_unchecked(rho: Mat6) -> Self {
        Self { rho }
    }

    /// Diagonal state with the given occupation probabilities, in basis order.
    pub fn from_occupancies(probs: [f64; DIM]) -> Result<Self> {
        let mut rho = Mat6::zeros();
        for (i, &p) in probs.iter().enumerate() {
            rho[(i, i)] = C64::new(p, 0.0);
        }
        Self::from_matrix(rho)
    }

    pub fn matrix(&self) -> &Mat6 {
        &self.rho
    }

    /// Probability of exactly n photons in L and m in R.
    pub fn occupancy(&self, n: u8, m: u8) -> f64 {
        basis_index(n, m).map_or(0.0, |i| self.rho[(i, i)].re)
    }

    /// Diagonal element by basis position (the order of [`BASIS`]).
    pub fn occupancy_by_index(&self, i: usize) -> f64 {
        self.rho[(i, i)].re
    }

    pub fn p00(&self) -> f64 {
        self.rho[(I00, I00)].re
    }

    pub fn p01(&self) -> f64 {
        self.rho[(I01, I01)].re
    }

    pub fn p10(&self) -> f64 {
        self.rho[(I10, I10)].re
    }

    pub fn p11(&self) -> f64 {
        self.rho[(I11, I11)].re
    }

    pub fn p02(&self) -> f64 {
        self.rho[(I02, I02)].re
    }

    pub fn p20(&self) -> f64 {
        self.rho[(I20, I20)].re
    }

    /// The rail coherence d = <01|rho|10>. Real and positive for the ideal
    /// split state at zero relative phase.
    pub fn coherence(&self) -> C64 {
        self.rho[(I01, I10)]
    }

    pub fn trace(&self) -> f64 {
        (0..DIM).map(|i| self.rho[(i, i)].re).sum()
    }

    /// Largest absolute element of rho - rho^dagger.
    pub fn hermiticity_defect(&self) -> f64 {
        let diff = self.rho - self.rho.adjoint();
        diff.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (self.rho + self.rho.adjoint()).scale(0.5);
        let eig = herm.symmetric_eigen();
        eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (defect {defect:.3e})"
            )));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr:.12} is not 1")));
        }
        let lambda = self.min_eigenvalue();
        if lambda < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {lambda:.3e})"
            )));
        }
        Ok(())
    }

    /// rho -> U rho U^dagger.
    pub fn apply_unitary(&self, u: &Mat6) -> Self {
        Self {
            rho: u * self.rho * u.adjoint(),
        }
    }

    /// rho -> sum_k K_k rho K_k^dagger. Callers guarantee the Kraus set is
    /// trace preserving.
    pub fn apply_kraus(&self, kraus: &[Mat6]) -> Self {
        let mut out = Mat6::zeros();
        for k in kraus {
            out += k * self.rho * k.adjoint();
        }
        Self { rho: out }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_is_valid() {
        let v = TwoModeFockState::vacuum();
        v.validate().unwrap();
        assert_eq!(v.p00(), 1.0);
        assert_eq!(v.trace(), 1.0);
    }

    #[test]
    fn basis_index_round_trips() {
        for (i, &(n, m)) in BASIS.iter().enumerate() {
            assert_eq!(basis_index(n, m), Some(i));
        }
        assert_eq!(basis_index(1, 2), None);
        assert_eq!(basis_index(3, 0), None);
    }

    #[test]
    fn rejects_non_unit_trace() {
        let mut rho = Mat6::zeros();
        rho[(I00, I00)] = C64::new(0.7, 0.0);
        assert!(TwoModeFockState::from_matrix(rho).is_err());
    }

    #[test]
    fn rejects_negative_eigenvalue() {
        let mut rho = Mat6::zeros();
        rho[(I00, I00)] = C64::new(1.1, 0.0);
        rho[(I01, I01)] = C64::new(-0.1, 0.0);
        assert!(TwoModeFockState::from_matrix(rho).is_err());
    }

    #[test]
    fn rejects_overlarge_coherence() {
        // |d| > sqrt(p01 p10) breaks positivity.
        let mut rho = Mat6::zeros();
        rho[(I00, I00)] = C64::new(0.8, 0.0);
        rho[(I01, I01)] = C64::new(0.1, 0.0);
        rho[(I10, I10)] = C64::new(0.1, 0.0);
        rho[(I01, I10)] = C64::new(0.11, 0.0);
        rho[(I10, I01)] = C64::new(0.11, 0.0);
        assert!(TwoModeFockState::from_matrix(rho).is_err());
    }

    #[test]
    fn min_eigenvalue_of_bell_like_state() {
        // (|01> + |10>)/sqrt2 has eigenvalues {1, 0, ...}.
        let mut rho = Mat6::zeros();
        let h = C64::new(0.5, 0.0);
        rho[(I01, I01)] = h;
        rho[(I10, I10)] = h;
        rho[(I01, I10)] = h;
        rho[(I10, I01)] = h;
        let s = TwoModeFockState::from_matrix(rho).unwrap();
        assert!(s.min_eigenvalue().abs() < 1e-12);
        assert!((s.coherence().re - 0.5).abs() < 1e-15);
    }
}
