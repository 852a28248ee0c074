//! Click statistics behind the verification stage.
//!
//! A measurement setting is a phase plate in rail L followed by the
//! verification waveplate; after the waveplate the first mode slot is the
//! detector 1 mode and the second the detector 2 mode. Detector chains are
//! beam-splitter losses on those modes, dark counts OR onto the real
//! clicks, and every trial ends in one of four patterns: no click, D1 only,
//! D2 only, or a coincidence.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::dualrail::{apply_loss, apply_phase, apply_waveplate, Rail};
use crate::error::{Error, Result};
use crate::fock::{TwoModeFockState, BASIS, DIM};
use crate::seed::rng_from_path;

/// Detection-chain parameters. Efficiencies are the full chain (fiber
/// coupling, filters, quantum efficiency); dark rates are per trial window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorParams {
    pub eta_d1: f64,
    pub eta_d2: f64,
    pub dark_d1: f64,
    pub dark_d2: f64,
}

impl DetectorParams {
    pub fn ideal() -> Self {
        Self {
            eta_d1: 1.0,
            eta_d2: 1.0,
            dark_d1: 0.0,
            dark_d2: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta_d1", self.eta_d1), ("eta_d2", self.eta_d2)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} is outside [0, 1]"
                )));
            }
        }
        for (name, v) in [("dark_d1", self.dark_d1), ("dark_d2", self.dark_d2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} is outside [0, 1)"
                )));
            }
        }
        Ok(())
    }
}

/// One analyzer setting: phase plate in rail L, then the waveplate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementSetting {
    /// Waveplate angle in radians. 0 reads the rail populations,
    /// pi/8 interferes the rails symmetrically.
    pub waveplate_theta: f64,
    /// Phase plate value in radians; advances the rail coherence by e^{i phi}.
    pub phase: f64,
}

/// Probabilities of the four click patterns for one setting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClickProbabilities {
    pub none: f64,
    pub d1_only: f64,
    pub d2_only: f64,
    pub both: f64,
}

impl ClickProbabilities {
    pub fn as_array(&self) -> [f64; 4] {
        [self.none, self.d1_only, self.d2_only, self.both]
    }

    /// Probability that detector 1 fires, alone or in coincidence.
    pub fn d1_marginal(&self) -> f64 {
        self.d1_only + self.both
    }

    pub fn d2_marginal(&self) -> f64 {
        self.d2_only + self.both
    }
}

/// Exact pattern probabilities for a state at one setting.
pub fn click_probabilities(
    state: &TwoModeFockState,
    setting: &MeasurementSetting,
    det: &DetectorParams,
) -> Result<ClickProbabilities> {
    det.validate()?;
    let s = apply_phase(state, Rail::Left, setting.phase);
    let s = apply_waveplate(&s, setting.waveplate_theta);
    // post-waveplate slots are the detector modes
    let s = apply_loss(&s, Rail::Left, det.eta_d1)?;
    let s = apply_loss(&s, Rail::Right, det.eta_d2)?;

    let (mut none, mut d1, mut d2, mut both) = (0.0, 0.0, 0.0, 0.0);
    for (i, &(n1, n2)) in BASIS.iter().enumerate() {
        let p = s.occupancy_by_index(i);
        match (n1 > 0, n2 > 0) {
            (false, false) => none += p,
            (true, false) => d1 += p,
            (false, true) => d2 += p,
            (true, true) => both += p,
        }
    }

    // dark counts OR onto the detected pattern
    let (k1, k2) = (det.dark_d1, det.dark_d2);
    Ok(ClickProbabilities {
        none: none * (1.0 - k1) * (1.0 - k2),
        d1_only: d1 * (1.0 - k2) + none * k1 * (1.0 - k2),
        d2_only: d2 * (1.0 - k1) + none * (1.0 - k1) * k2,
        both: both + d1 * k2 + d2 * k1 + none * k1 * k2,
    })
}

/// Observed counts for one setting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountsRow {
    pub setting_id: u32,
    /// Phase plate value of the setting, radians.
    pub phase_radians: f64,
    pub n_trials: u64,
    pub n_none: u64,
    pub n_d1: u64,
    pub n_d2: u64,
    pub n_both: u64,
}

impl CountsRow {
    pub fn counts(&self) -> [u64; 4] {
        [self.n_none, self.n_d1, self.n_d2, self.n_both]
    }

    /// Fraction of trials in which detector 1 fired.
    pub fn d1_fraction(&self) -> f64 {
        (self.n_d1 + self.n_both) as f64 / self.n_trials as f64
    }
}

/// One multinomial draw over the four patterns, as a chain of binomials.
pub fn sample_counts(
    probs: &ClickProbabilities,
    n_trials: u64,
    rng: &mut impl Rng,
) -> [u64; 4] {
    let p = probs.as_array();
    let mut out = [0u64; 4];
    let mut remaining = n_trials;
    let mut tail = 1.0;
    for i in 0..3 {
        if remaining == 0 || tail <= 0.0 {
            break;
        }
        let cond = (p[i] / tail).clamp(0.0, 1.0);
        let k = Binomial::new(remaining, cond)
            .expect("conditional probability is clamped to [0, 1]")
            .sample(rng);
        out[i] = k;
        remaining -= k;
        tail -= p[i];
    }
    out[3] = remaining;
    out
}

/// Simulated counts for one setting.
pub fn measure_counts(
    state: &TwoModeFockState,
    setting: &MeasurementSetting,
    det: &DetectorParams,
    setting_id: u32,
    n_trials: u64,
    rng: &mut impl Rng,
) -> Result<CountsRow> {
    let probs = click_probabilities(state, setting, det)?;
    let [n_none, n_d1, n_d2, n_both] = sample_counts(&probs, n_trials, rng);
    Ok(CountsRow {
        setting_id,
        phase_radians: setting.phase,
        n_trials,
        n_none,
        n_d1,
        n_d2,
        n_both,
    })
}

/// Exact pattern probabilities over a phase scan at fixed waveplate angle.
pub fn fringe_probabilities(
    state: &TwoModeFockState,
    det: &DetectorParams,
    waveplate_theta: f64,
    phases: &[f64],
) -> Result<Vec<(f64, ClickProbabilities)>> {
    phases
        .iter()
        .map(|&phase| {
            let setting = MeasurementSetting {
                waveplate_theta,
                phase,
            };
            Ok((phase, click_probabilities(state, &setting, det)?))
        })
        .collect()
}

/// Simulated counts over a phase scan. Each point draws from its own
/// derived stream, so rows do not depend on scan length or order.
#[allow(clippy::too_many_arguments)]
pub fn fringe_scan(
    state: &TwoModeFockState,
    det: &DetectorParams,
    waveplate_theta: f64,
    phases: &[f64],
    n_per_point: u64,
    master_seed: u64,
    stream: u64,
) -> Result<Vec<CountsRow>> {
    phases
        .iter()
        .enumerate()
        .map(|(i, &phase)| {
            let setting = MeasurementSetting {
                waveplate_theta,
                phase,
            };
            let mut rng = rng_from_path(master_seed, &[stream, i as u64]);
            measure_counts(state, &setting, det, i as u32, n_per_point, &mut rng)
        })
        .collect()
}

/// Marker for dimension checks in callers that index patterns by position.
pub const N_PATTERNS: usize = 4;

#[allow(dead_code)]
fn assert_basis_covers_patterns() {
    // compile-time shape reminder: every basis state falls in one pattern
    let _ = [0u8; DIM];
}
