//! State reconstruction from click statistics.
//!
//! The reconstructed object is the dual-rail density matrix constrained to
//! at most one excitation per mode and no coherence between different total
//! photon numbers: diagonals (p00, p01, p10, p11), one coherence
//! d = V (p01 + p10) / 2 between |01> and |10>, and normalization
//! P = p00 + p01 + p10 + p11. Entanglement is quantified by the concurrence
//! C = max(0, 2|d| - 2 sqrt(p00 p11)) / P.
//!
//! Estimation runs in two modes everywhere: `raw` keeps detected pattern
//! frequencies as they are, `corrected` inverts the detection-chain
//! thinning within the one-excitation subspace. Errors come either from
//! linearized binomial propagation or from multinomial bootstrap.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::counting::{sample_counts, ClickProbabilities, CountsRow, DetectorParams};
use crate::error::{Error, Result};
use crate::seed::rng_from_path;

type Mat3 = SMatrix<f64, 3, 3>;
type Vec3 = SVector<f64, 3>;
pub type Mat4 = SMatrix<C64, 4, 4>;

/// Occupancies of the one-excitation subspace with standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OccupancyEstimate {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
    /// Linearized standard errors, same order as the probabilities.
    pub sigma: [f64; 4],
    /// True when a negative corrected probability was clamped to zero.
    pub clamped: bool,
    /// True when detection losses were inverted.
    pub corrected: bool,
}

impl OccupancyEstimate {
    pub fn as_array(&self) -> [f64; 4] {
        [self.p00, self.p01, self.p10, self.p11]
    }
}

/// Sinusoid fit f(phi) = A + B cos(phi - phi0) to a fringe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VisibilityFit {
    /// V = B / A of the fitted sinusoid.
    pub visibility: f64,
    /// Standard error of V from the fit covariance.
    pub sigma: f64,
    /// Mean level A.
    pub mean_level: f64,
    /// Amplitude B >= 0.
    pub amplitude: f64,
    /// Phase of the fringe maximum, radians.
    pub phase_offset: f64,
    pub n_points: usize,
}

/// The constrained density matrix with statistical errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrixEstimate {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
    pub sigma_p: [f64; 4],
    /// Coherence between |01> and |10>.
    pub d: C64,
    pub sigma_d: f64,
    pub visibility: f64,
    pub sigma_v: f64,
}

impl DensityMatrixEstimate {
    /// Normalization P of the one-excitation subspace.
    pub fn normalization(&self) -> f64 {
        self.p00 + self.p01 + self.p10 + self.p11
    }

    /// The 4x4 matrix on (|00>, |01>, |10>, |11>), trace normalized.
    pub fn matrix4(&self) -> Mat4 {
        let p = self.normalization();
        let mut m = Mat4::zeros();
        m[(0, 0)] = C64::new(self.p00 / p, 0.0);
        m[(1, 1)] = C64::new(self.p01 / p, 0.0);
        m[(2, 2)] = C64::new(self.p10 / p, 0.0);
        m[(3, 3)] = C64::new(self.p11 / p, 0.0);
        m[(1, 2)] = self.d / C64::new(p, 0.0);
        m[(2, 1)] = self.d.conj() / C64::new(p, 0.0);
        m
    }

    pub fn concurrence(&self) -> f64 {
        concurrence(self)
    }

    /// Linearized standard error of the concurrence, treating
    /// (V, p00, p01, p10, p11) as independent. Uses the unclamped statistic,
    /// so it remains informative when C sits at the clamp.
    pub fn concurrence_sigma(&self) -> f64 {
        let p = self.normalization();
        let v = self.visibility;
        let geo = (self.p00 * self.p11).sqrt();
        let c_lin = (2.0 * self.d.norm() - 2.0 * geo) / p;
        // d(2 sqrt(p00 p11))/dp00 = p11 / geo, and symmetrically for p11
        let (g00, g11) = if geo > 0.0 {
            (self.p11 / geo, self.p00 / geo)
        } else {
            (0.0, 0.0)
        };
        let dv = (self.p01 + self.p10) / p;
        let d00 = -g00 / p - c_lin / p;
        let d01 = v / p - c_lin / p;
        let d10 = v / p - c_lin / p;
        let d11 = -g11 / p - c_lin / p;
        ((dv * self.sigma_v).powi(2)
            + (d00 * self.sigma_p[0]).powi(2)
            + (d01 * self.sigma_p[1]).powi(2)
            + (d10 * self.sigma_p[2]).powi(2)
            + (d11 * self.sigma_p[3]).powi(2))
        .sqrt()
    }
}

fn pattern_frequencies(row: &CountsRow) -> Result<([f64; 4], u64)> {
    if row.n_trials == 0 {
        return Err(Error::InsufficientData(
            "counts row has no trials".into(),
        ));
    }
    let n = row.n_trials as f64;
    let q = row.counts().map(|k| k as f64 / n);
    Ok((q, row.n_trials))
}

fn binomial_sigma(q: f64, n: u64) -> f64 {
    (q.clamp(0.0, 1.0) * (1.0 - q.clamp(0.0, 1.0)) / n as f64).sqrt()
}

/// Occupancy estimate from one counts row taken at waveplate angle zero.
pub fn estimate_pij(
    row: &CountsRow,
    det: &DetectorParams,
    correct_losses: bool,
) -> Result<OccupancyEstimate> {
    let (q, n) = pattern_frequencies(row)?;
    let sigma_q = [
        binomial_sigma(q[0], n),
        binomial_sigma(q[1], n),
        binomial_sigma(q[2], n),
        binomial_sigma(q[3], n),
    ];
    invert_patterns(q, sigma_q, det, correct_losses)
}

/// Occupancy estimate from exact pattern probabilities (zero errors).
pub fn estimate_pij_exact(
    probs: &ClickProbabilities,
    det: &DetectorParams,
    correct_losses: bool,
) -> Result<OccupancyEstimate> {
    invert_patterns(probs.as_array(), [0.0; 4], det, correct_losses)
}

/// Inverts the one-excitation thinning map. With detector 1 seeing the
/// single-excitation pattern 01 and detector 2 the pattern 10:
///   q11 = p11 e1 e2,  q01 = p01 e1 + p11 e1 (1 - e2),
///   q10 = p10 e2 + p11 (1 - e1) e2,  q00 = the rest.
fn invert_patterns(
    q: [f64; 4],
    sigma_q: [f64; 4],
    det: &DetectorParams,
    correct_losses: bool,
) -> Result<OccupancyEstimate> {
    det.validate()?;
    if !correct_losses {
        let p00 = 1.0 - q[1] - q[2] - q[3];
        return Ok(OccupancyEstimate {
            p00,
            p01: q[1],
            p10: q[2],
            p11: q[3],
            sigma: sigma_q,
            clamped: false,
            corrected: false,
        });
    }
    let (e1, e2) = (det.eta_d1, det.eta_d2);
    if e1 <= 0.0 || e2 <= 0.0 {
        return Err(Error::InvalidParameter(
            "loss correction requires nonzero detector efficiencies".into(),
        ));
    }
    let p11 = q[3] / (e1 * e2);
    let p01 = q[1] / e1 - p11 * (1.0 - e2);
    let p10 = q[2] / e2 - p11 * (1.0 - e1);
    let s11 = sigma_q[3] / (e1 * e2);
    let s01 = ((sigma_q[1] / e1).powi(2) + ((1.0 - e2) * s11).powi(2)).sqrt();
    let s10 = ((sigma_q[2] / e2).powi(2) + ((1.0 - e1) * s11).powi(2)).sqrt();
    let s00 = (s01 * s01 + s10 * s10 + s11 * s11).sqrt();

    let mut clamped = false;
    let mut clamp = |x: f64| {
        if x < 0.0 {
            clamped = true;
            0.0
        } else {
            x
        }
    };
    let (p01, p10, p11) = (clamp(p01), clamp(p10), clamp(p11));
    let p00 = clamp(1.0 - p01 - p10 - p11);
    Ok(OccupancyEstimate {
        p00,
        p01,
        p10,
        p11,
        sigma: [s00, s01, s10, s11],
        clamped,
        corrected: true,
    })
}

/// Fraction of trials with a detector 1 click and its binomial error.
pub fn d1_fraction_sigma(row: &CountsRow) -> (f64, f64) {
    let f = row.d1_fraction();
    (f, binomial_sigma(f, row.n_trials))
}

fn check_fringe_geometry(phases: &[f64]) -> Result<()> {
    if phases.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "fringe fit needs at least 4 phase points, got {}",
            phases.len()
        )));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &p in phases {
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if hi - lo <= std::f64::consts::PI {
        return Err(Error::InsufficientData(format!(
            "fringe phases span {:.3} rad, need more than pi",
            hi - lo
        )));
    }
    Ok(())
}

/// Weighted least squares of y = a + b cos(phi) + c sin(phi).
/// Returns the coefficients and the 3x3 covariance of (a, b, c).
fn solve_sinusoid(phases: &[f64], y: &[f64], w: &[f64]) -> Result<(Vec3, Mat3)> {
    let mut m = Mat3::zeros();
    let mut rhs = Vec3::zeros();
    for ((&phi, &yi), &wi) in phases.iter().zip(y).zip(w) {
        let x = Vec3::new(1.0, phi.cos(), phi.sin());
        m += x * x.transpose() * wi;
        rhs += x * yi * wi;
    }
    let minv = m
        .try_inverse()
        .ok_or_else(|| Error::Fit("degenerate fringe design matrix".into()))?;
    Ok((minv * rhs, minv))
}

fn fit_from_cov(coef: Vec3, cov: Mat3, n_points: usize) -> Result<VisibilityFit> {
    let (a, b, c) = (coef[0], coef[1], coef[2]);
    if a <= 0.0 {
        return Err(Error::Fit(format!(
            "fitted fringe mean level {a:.3e} is not positive"
        )));
    }
    let amp = b.hypot(c);
    let v = amp / a;
    // delta method on V = sqrt(b^2 + c^2) / a
    let g = if amp > 0.0 {
        Vec3::new(-v / a, b / (a * amp), c / (a * amp))
    } else {
        Vec3::new(0.0, 1.0 / a, 1.0 / a)
    };
    let var = (g.transpose() * cov * g)[(0, 0)].max(0.0);
    Ok(VisibilityFit {
        visibility: v,
        sigma: var.sqrt(),
        mean_level: a,
        amplitude: amp,
        phase_offset: c.atan2(b),
        n_points,
    })
}

/// Visibility from exact per-phase detector 1 fractions, unweighted.
/// The covariance is scaled by the residual variance, so exact sinusoidal
/// input reports zero error.
pub fn fit_visibility_points(points: &[(f64, f64)]) -> Result<VisibilityFit> {
    let phases: Vec<f64> = points.iter().map(|p| p.0).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    check_fringe_geometry(&phases)?;
    let w = vec![1.0; y.len()];
    let (coef, cov) = solve_sinusoid(&phases, &y, &w)?;
    let mut ss = 0.0;
    for (&phi, &yi) in phases.iter().zip(&y) {
        let f = coef[0] + coef[1] * phi.cos() + coef[2] * phi.sin();
        ss += (yi - f) * (yi - f);
    }
    let dof = (y.len() - 3).max(1) as f64;
    fit_from_cov(coef, cov * (ss / dof), y.len())
}

/// Visibility of a counted fringe: iteratively reweighted least squares
/// with binomial variances taken from the model of the previous pass.
pub fn fit_visibility(rows: &[CountsRow]) -> Result<VisibilityFit> {
    let phases: Vec<f64> = rows.iter().map(|r| r.phase_radians).collect();
    check_fringe_geometry(&phases)?;
    let mut y = Vec::with_capacity(rows.len());
    let mut n = Vec::with_capacity(rows.len());
    for row in rows {
        if row.n_trials == 0 {
            return Err(Error::InsufficientData(
                "fringe row has no trials".into(),
            ));
        }
        y.push(row.d1_fraction());
        n.push(row.n_trials as f64);
    }

    // pass 0 unweighted, then two reweighted passes; weights from the model
    // rather than the raw fractions so empty bins cannot grab infinite weight
    let mut w = vec![1.0; y.len()];
    let (mut coef, mut cov) = solve_sinusoid(&phases, &y, &w)?;
    for _ in 0..2 {
        for (i, &phi) in phases.iter().enumerate() {
            let f = (coef[0] + coef[1] * phi.cos() + coef[2] * phi.sin())
                .clamp(1e-9, 1.0 - 1e-9);
            w[i] = n[i] / (f * (1.0 - f));
        }
        (coef, cov) = solve_sinusoid(&phases, &y, &w)?;
    }
    fit_from_cov(coef, cov, y.len())
}

/// Fills the constrained matrix with d = V (p01 + p10) / 2.
pub fn assemble_rho(occ: &OccupancyEstimate, vis: &VisibilityFit) -> Result<DensityMatrixEstimate> {
    for (name, p) in [
        ("p00", occ.p00),
        ("p01", occ.p01),
        ("p10", occ.p10),
        ("p11", occ.p11),
    ] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidState(format!(
                "{name} = {p} is outside [0, 1]"
            )));
        }
    }
    let v = vis.visibility;
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidState(format!(
            "visibility {v} is outside [0, 1]"
        )));
    }
    let half_sum = 0.5 * (occ.p01 + occ.p10);
    let d = C64::new(v * half_sum, 0.0);
    let sigma_d = ((half_sum * vis.sigma).powi(2)
        + (0.5 * v * occ.sigma[1]).powi(2)
        + (0.5 * v * occ.sigma[2]).powi(2))
    .sqrt();
    Ok(DensityMatrixEstimate {
        p00: occ.p00,
        p01: occ.p01,
        p10: occ.p10,
        p11: occ.p11,
        sigma_p: occ.sigma,
        d,
        sigma_d,
        visibility: v,
        sigma_v: vis.sigma,
    })
}

/// C = max(0, 2|d| - 2 sqrt(p00 p11)) / P.
pub fn concurrence(est: &DensityMatrixEstimate) -> f64 {
    let p = est.normalization();
    let n = 2.0 * est.d.norm() - 2.0 * (est.p00 * est.p11).sqrt();
    (n.max(0.0) / p).clamp(0.0, 1.0)
}

/// lambda = C_out / C_in with errors combined in quadrature.
pub fn transfer_ratio(
    c_out: f64,
    sigma_out: f64,
    c_in: f64,
    sigma_in: f64,
) -> Result<(f64, f64)> {
    if c_in <= 0.0 {
        return Err(Error::InvalidParameter(
            "transfer ratio is undefined for C_in = 0".into(),
        ));
    }
    let lambda = c_out / c_in;
    let sigma = ((sigma_out / c_in).powi(2) + (c_out * sigma_in / (c_in * c_in)).powi(2)).sqrt();
    Ok((lambda, sigma))
}

/// Multinomial resample of one counts row at its observed frequencies.
pub fn resample_counts(row: &CountsRow, rng: &mut impl Rng) -> CountsRow {
    let n = row.n_trials as f64;
    let q = row.counts().map(|k| k as f64 / n);
    let probs = ClickProbabilities {
        none: q[0],
        d1_only: q[1],
        d2_only: q[2],
        both: q[3],
    };
    let [n_none, n_d1, n_d2, n_both] = sample_counts(&probs, row.n_trials, rng);
    CountsRow {
        n_none,
        n_d1,
        n_d2,
        n_both,
        ..*row
    }
}

/// Standard deviation of an estimator over multinomial resamples of the
/// count rows. Each resample uses its own derived stream.
pub fn bootstrap_errors<F>(
    rows: &[CountsRow],
    estimator: F,
    n_resamples: u32,
    seed: u64,
) -> Result<f64>
where
    F: Fn(&[CountsRow]) -> Result<f64>,
{
    if n_resamples < 2 {
        return Err(Error::InsufficientData(format!(
            "bootstrap needs at least 2 resamples, got {n_resamples}"
        )));
    }
    let mut values = Vec::with_capacity(n_resamples as usize);
    for r in 0..n_resamples {
        let mut rng = rng_from_path(seed, &[r as u64]);
        let resampled: Vec<CountsRow> = rows
            .iter()
            .map(|row| resample_counts(row, &mut rng))
            .collect();
        values.push(estimator(&resampled)?);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(var.sqrt())
}
