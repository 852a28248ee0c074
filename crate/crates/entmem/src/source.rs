//! Heralded single-photon source statistics.
//!
//! The source is characterized by the single-photon probability at the face
//! of the storage medium and by the normalized two-photon suppression
//! w = 2 p0 p2 / p1^2 (w = 1 for Poissonian light, w = 0 for an ideal
//! single-photon source). Given (p1, w) the remaining occupancies follow
//! from the quadratic w p1^2 = 2 p2 (1 - p1 - p2), taking the small root.

use crate::dualrail::SingleModePhotonStats;
use crate::error::{Error, Result};

/// Measured source parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceParams {
    /// Probability of one photon at the face of the storage medium.
    pub p1_at_face: f64,
    /// Two-photon suppression w = 2 p0 p2 / p1^2.
    pub w: f64,
    /// Transmission from the source to the entangler. Carried as metadata;
    /// p1_at_face already includes it.
    pub alpha: f64,
}

impl SourceParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p1_at_face) {
            return Err(Error::InvalidParameter(format!(
                "p1_at_face = {} is outside [0, 1]",
                self.p1_at_face
            )));
        }
        if self.w < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "w = {} is negative",
                self.w
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {} is outside [0, 1]",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Occupancies (p0, p1, p2) consistent with the measured (p1, w).
pub fn build_heralded_state(params: &SourceParams) -> Result<SingleModePhotonStats> {
    params.validate()?;
    let p1 = params.p1_at_face;
    let disc = (1.0 - p1).powi(2) - 2.0 * params.w * p1 * p1;
    if disc < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "no occupancy solution for p1 = {p1}, w = {}",
            params.w
        )));
    }
    // small root: the two-photon weight, not the vacuum weight
    let p2 = 0.5 * ((1.0 - p1) - disc.sqrt());
    let p0 = 1.0 - p1 - p2;
    SingleModePhotonStats::new(p0, p1, p2)
}

/// Binomial thinning of the occupancies by a transmission alpha.
pub fn attenuate(stats: &SingleModePhotonStats, alpha: f64) -> Result<SingleModePhotonStats> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha} is outside [0, 1]"
        )));
    }
    let p2 = stats.p2() * alpha * alpha;
    let p1 = stats.p1() * alpha + stats.p2() * 2.0 * alpha * (1.0 - alpha);
    SingleModePhotonStats::new(1.0 - p1 - p2, p1, p2)
}

/// Two-photon suppression of a measured occupancy triple.
pub fn estimate_w(stats: &SingleModePhotonStats) -> Result<f64> {
    if stats.p1() <= 0.0 {
        return Err(Error::InvalidParameter(
            "w is undefined for p1 = 0".into(),
        ));
    }
    Ok(2.0 * stats.p0() * stats.p2() / (stats.p1() * stats.p1()))
}
