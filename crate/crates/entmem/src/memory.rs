//! The storage medium reduced to a per-rail efficiency channel.
//!
//! Field-level storage and retrieval live in [`crate::eit`]; at the state
//! level the memory acts on each rail as beam-splitter loss with the
//! storage-time-dependent retrieval efficiency. The rail coherence then
//! scales by the geometric mean of the two transmissions, which is what
//! preserves the fringe visibility through a balanced memory.

use serde::{Deserialize, Serialize};

use crate::dualrail::{apply_loss, Rail};
use crate::error::{Error, Result};
use crate::fock::TwoModeFockState;

/// Retrieval-efficiency decay law over the storage time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayForm {
    /// eta(tau) = eta_r0 exp(-tau / tau_m)
    Exponential,
    /// eta(tau) = eta_r0 exp(-(tau / tau_m)^2)
    Gaussian,
}

impl DecayForm {
    fn factor(self, tau_over_tau_m: f64) -> f64 {
        match self {
            DecayForm::Exponential => (-tau_over_tau_m).exp(),
            DecayForm::Gaussian => (-tau_over_tau_m * tau_over_tau_m).exp(),
        }
    }
}

/// Memory channel parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MemoryChannelParams {
    /// Retrieval efficiency extrapolated to zero storage time.
    pub eta_r0: f64,
    /// Memory lifetime, seconds.
    pub tau_m: f64,
    /// Storage duration, seconds.
    pub tau: f64,
    pub decay: DecayForm,
    /// Per-rail multipliers on the common efficiency, default 1.
    pub rail_l_factor: f64,
    pub rail_r_factor: f64,
}

impl MemoryChannelParams {
    pub fn balanced(eta_r0: f64, tau_m: f64, tau: f64, decay: DecayForm) -> Self {
        Self {
            eta_r0,
            tau_m,
            tau,
            decay,
            rail_l_factor: 1.0,
            rail_r_factor: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta_r0) {
            return Err(Error::InvalidParameter(format!(
                "eta_r0 = {} is outside [0, 1]",
                self.eta_r0
            )));
        }
        if !self.tau_m.is_finite() || self.tau_m <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tau_m = {} must be positive",
                self.tau_m
            )));
        }
        if self.tau < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tau = {} must be nonnegative",
                self.tau
            )));
        }
        let (el, er) = self.rail_transmissions();
        for (name, eta) in [("L", el), ("R", er)] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::InvalidParameter(format!(
                    "rail {name} transmission {eta} is outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    /// Common retrieval efficiency at the configured storage time.
    pub fn efficiency_at(&self) -> f64 {
        self.eta_r0 * self.decay.factor(self.tau / self.tau_m)
    }

    /// Per-rail transmissions including the asymmetry factors.
    pub fn rail_transmissions(&self) -> (f64, f64) {
        let eta = self.efficiency_at();
        (eta * self.rail_l_factor, eta * self.rail_r_factor)
    }
}

/// Zero-time efficiency that reproduces `target` at storage time `tau`.
pub fn eta_r0_for(target: f64, tau: f64, tau_m: f64, decay: DecayForm) -> Result<f64> {
    if tau_m <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tau_m = {tau_m} must be positive"
        )));
    }
    let eta_r0 = target / decay.factor(tau / tau_m);
    if !(0.0..=1.0).contains(&eta_r0) {
        return Err(Error::InvalidParameter(format!(
            "target {target} at tau {tau} needs eta_r0 = {eta_r0}, outside [0, 1]"
        )));
    }
    Ok(eta_r0)
}

/// Stores and retrieves the two-rail state: independent loss per rail.
pub fn apply_memory(
    state: &TwoModeFockState,
    params: &MemoryChannelParams,
) -> Result<TwoModeFockState> {
    params.validate()?;
    let (el, er) = params.rail_transmissions();
    let s = apply_loss(state, Rail::Left, el)?;
    apply_loss(&s, Rail::Right, er)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dualrail::{dephase, split_single_photon, SingleModePhotonStats};
    use crate::fock::{Mat6, I00, I01, I10};
    use crate::testkit::random_subspace_state;
    use crate::tomography::{assemble_rho, concurrence, OccupancyEstimate, VisibilityFit};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64 as C64;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn params(eta_r0: f64, tau: f64) -> MemoryChannelParams {
        MemoryChannelParams::balanced(eta_r0, 8e-6, tau, DecayForm::Exponential)
    }

    #[test]
    fn exponential_decay_values() {
        assert_abs_diff_eq!(params(0.2, 0.0).efficiency_at(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(
            params(0.2, 8e-6).efficiency_at(),
            0.2 / std::f64::consts::E,
            epsilon = 1e-15
        );
        // zero-time efficiency about 0.195 reproduces 0.17 at 1.1 us
        let eta_r0 = eta_r0_for(0.17, 1.1e-6, 8e-6, DecayForm::Exponential).unwrap();
        assert_abs_diff_eq!(eta_r0, 0.195, epsilon = 1e-3);
        assert_abs_diff_eq!(params(eta_r0, 1.1e-6).efficiency_at(), 0.17, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_decay_values() {
        let p = MemoryChannelParams::balanced(0.2, 8e-6, 8e-6, DecayForm::Gaussian);
        assert_abs_diff_eq!(p.efficiency_at(), 0.2 / std::f64::consts::E, epsilon = 1e-15);
        let p = MemoryChannelParams::balanced(0.2, 8e-6, 1.1e-6, DecayForm::Gaussian);
        assert_abs_diff_eq!(
            p.efficiency_at(),
            0.2 * (-(1.1f64 / 8.0).powi(2)).exp(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn unit_efficiency_is_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let s = random_subspace_state(&mut rng, &[0, 1, 2, 3, 4, 5]);
        let out = apply_memory(&s, &params(1.0, 0.0)).unwrap();
        for r in 0..6 {
            for c in 0..6 {
                assert!((out.matrix()[(r, c)] - s.matrix()[(r, c)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn balanced_channel_scales_populations_and_coherence() {
        // p01 = p10 = 0.075, |d| = 0.0698 through eta = 0.17:
        // populations scale by eta, the coherence by sqrt(eta_L eta_R) = eta
        let mut m = Mat6::zeros();
        m[(I00, I00)] = C64::new(0.85, 0.0);
        m[(I01, I01)] = C64::new(0.075, 0.0);
        m[(I10, I10)] = C64::new(0.075, 0.0);
        m[(I01, I10)] = C64::new(0.0698, 0.0);
        m[(I10, I01)] = C64::new(0.0698, 0.0);
        let s = crate::fock::TwoModeFockState::from_matrix(m).unwrap();
        let out = apply_memory(&s, &params(0.195058, 1.1e-6)).unwrap();
        let eta = params(0.195058, 1.1e-6).efficiency_at();
        assert_abs_diff_eq!(eta, 0.17, epsilon = 1e-6);
        assert_abs_diff_eq!(out.p01(), 0.01275, epsilon = 1e-6);
        assert_abs_diff_eq!(out.p10(), 0.01275, epsilon = 1e-6);
        assert_abs_diff_eq!(out.coherence().norm(), 0.011866, epsilon = 1e-6);
    }

    #[test]
    fn dead_rail_empties_and_kills_coherence() {
        let stats = SingleModePhotonStats::new(0.85, 0.15, 0.0).unwrap();
        let s = split_single_photon(&stats, 0.0);
        let p = MemoryChannelParams {
            eta_r0: 1.0,
            tau_m: 8e-6,
            tau: 0.0,
            decay: DecayForm::Exponential,
            rail_l_factor: 1.0,
            rail_r_factor: 0.0,
        };
        let out = apply_memory(&s, &p).unwrap();
        assert_abs_diff_eq!(out.p01(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.p10(), 0.075, epsilon = 1e-12);
        assert_abs_diff_eq!(out.coherence().norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.p00(), 0.925, epsilon = 1e-12);
    }

    #[test]
    fn balanced_channel_preserves_visibility_ratio() {
        let stats = SingleModePhotonStats::new(0.8488, 0.15, 0.0012).unwrap();
        let s = dephase(&split_single_photon(&stats, 0.0), 0.93).unwrap();
        let ratio = |s: &crate::fock::TwoModeFockState| {
            2.0 * s.coherence().norm() / (s.p01() + s.p10())
        };
        let before = ratio(&s);
        let out = apply_memory(&s, &params(0.195058, 1.1e-6)).unwrap();
        assert_abs_diff_eq!(ratio(&out), before, epsilon = 1e-12);
    }

    #[test]
    fn concurrence_transfer_equals_efficiency_without_coincidences() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for _ in 0..20 {
            let p1: f64 = rng.gen_range(0.05..0.5);
            let v: f64 = rng.gen_range(0.5..1.0);
            let stats = SingleModePhotonStats::new(1.0 - p1, p1, 0.0).unwrap();
            let s = dephase(&split_single_photon(&stats, 0.0), v).unwrap();
            let eta: f64 = rng.gen_range(0.05..1.0);
            let out = apply_memory(&s, &params(eta, 0.0)).unwrap();
            let est = |s: &crate::fock::TwoModeFockState| {
                let occ = OccupancyEstimate {
                    p00: s.p00(),
                    p01: s.p01(),
                    p10: s.p10(),
                    p11: s.p11(),
                    sigma: [0.0; 4],
                    clamped: false,
                    corrected: false,
                };
                let vfit = VisibilityFit {
                    visibility: 2.0 * s.coherence().norm() / (s.p01() + s.p10()),
                    sigma: 0.0,
                    mean_level: 0.5 * (s.p01() + s.p10()),
                    amplitude: s.coherence().norm(),
                    phase_offset: 0.0,
                    n_points: 0,
                };
                concurrence(&assemble_rho(&occ, &vfit).unwrap())
            };
            let (c_in, c_out) = (est(&s), est(&out));
            assert_abs_diff_eq!(c_out, eta * c_in, epsilon = 1e-9);
        }
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(params(1.2, 0.0).validate().is_err());
        assert!(params(-0.1, 0.0).validate().is_err());
        assert!(MemoryChannelParams::balanced(0.2, 0.0, 0.0, DecayForm::Exponential)
            .validate()
            .is_err());
        let p = MemoryChannelParams {
            eta_r0: 0.9,
            tau_m: 8e-6,
            tau: 0.0,
            decay: DecayForm::Exponential,
            rail_l_factor: 1.2,
            rail_r_factor: 1.0,
        };
        assert!(p.validate().is_err(), "rail transmission above 1");
        assert!(eta_r0_for(0.9, 8e-6, 8e-6, DecayForm::Exponential).is_err());
    }
}
