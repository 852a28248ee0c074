//! Dual-rail encoding and the passive optics acting on it.
//!
//! A heralded photon is split by a beam displacer into rails L and R, and the
//! verification stage recombines the rails with a phase plate and a
//! half-waveplate in front of two detectors. All of those elements are
//! passive two-mode transformations; this module lifts their 2x2 mode
//! matrices to the truncated Fock space and also provides the two
//! non-unitary channels of the chain, beam-splitter loss and relative-phase
//! dephasing.
//!
//! Conventions, fixed once here and relied on everywhere else:
//!
//! * mode matrices act on annihilation operators, a'_i = sum_j M_ij a_j,
//!   so creation operators substitute by columns;
//! * the splitter prepares (|01> + e^{i phi_rel} |10>)/sqrt2 from one photon,
//!   making d = <01|rho|10> real positive at phi_rel = 0;
//! * the verification waveplate at angle theta has matrix
//!   [[sin 2t, cos 2t], [cos 2t, -sin 2t]]: theta = 0 sends rail R to
//!   detector 1 and rail L to detector 2, theta = 22.5 deg makes detector 1
//!   the symmetric combination of the rails;
//! * a phase plate on rail L advances d by e^{+i phi}, on rail R by e^{-i phi}.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{Mat2, Mat6, TwoModeFockState, DIM, I00, I01, I02, I10, I11, I20};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Photon-number statistics of a single heralded mode, truncated at n = 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleModePhotonStats {
    p0: f64,
    p1: f64,
    p2: f64,
}

impl SingleModePhotonStats {
    /// Probabilities must be nonnegative and sum to 1 within 1e-12.
    pub fn new(p0: f64, p1: f64, p2: f64) -> Result<Self> {
        for (name, p) in [("p0", p0), ("p1", p1), ("p2", p2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {p} is outside [0, 1]"
                )));
            }
        }
        let sum = p0 + p1 + p2;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "occupancies sum to {sum:.15}, not 1"
            )));
        }
        Ok(Self { p0, p1, p2 })
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rail {
    Left,
    Right,
}

/// A passive element of the optical chain, characterized by its unitary 2x2
/// mode matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OpticalElement {
    /// Half-waveplate at angle theta (radians); mixes the rails by 2 theta.
    Waveplate { theta: f64 },
    /// Phase plate on one rail.
    PhaseShift { rail: Rail, phi: f64 },
    /// Beam displacer splitting one input mode (fed on rail R, vacuum on L)
    /// into the two rails with relative phase phi_rel.
    DisplacerSplit { phi_rel: f64 },
    /// Inverse of the splitter with the same phi_rel.
    DisplacerCombine { phi_rel: f64 },
}

impl OpticalElement {
    /// The 2x2 annihilation-operator matrix. Unitary for every setting.
    pub fn mode_matrix(&self) -> Mat2 {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        match *self {
            OpticalElement::Waveplate { theta } => {
                let (s, c) = (2.0 * theta).sin_cos();
                Mat2::new(
                    C64::new(s, 0.0),
                    C64::new(c, 0.0),
                    C64::new(c, 0.0),
                    C64::new(-s, 0.0),
                )
            }
            OpticalElement::PhaseShift { rail, phi } => {
                let ph = C64::from_polar(1.0, -phi);
                match rail {
                    Rail::Left => Mat2::new(ph, zero, zero, one),
                    Rail::Right => Mat2::new(one, zero, zero, ph),
                }
            }
            OpticalElement::DisplacerSplit { phi_rel } => {
                let f = C64::new(1.0 / SQRT2, 0.0);
                let e = C64::from_polar(1.0 / SQRT2, phi_rel);
                // columns are the images of adag_L, adag_R
                Mat2::new(f, e, -e.conj(), f)
            }
            OpticalElement::DisplacerCombine { phi_rel } => {
                OpticalElement::DisplacerSplit { phi_rel }
                    .mode_matrix()
                    .adjoint()
            }
        }
    }

    /// The induced unitary on the truncated Fock basis.
    pub fn fock_matrix(&self) -> Mat6 {
        fock_unitary(&self.mode_matrix())
    }

    pub fn apply(&self, state: &TwoModeFockState) -> TwoModeFockState {
        state.apply_unitary(&self.fock_matrix())
    }
}

/// Lifts a unitary mode matrix to the six-dimensional Fock representation.
///
/// The one-photon block is the matrix itself; the two-photon block is its
/// symmetric square, written out per basis state. Total photon number is
/// conserved, so the result is block diagonal and unitary whenever the input
/// is.
pub fn fock_unitary(m: &Mat2) -> Mat6 {
    let m00 = m[(0, 0)];
    let m01 = m[(0, 1)];
    let m10 = m[(1, 0)];
    let m11 = m[(1, 1)];
    let rt2 = C64::new(SQRT2, 0.0);

    let mut u = Mat6::zeros();
    u[(I00, I00)] = C64::new(1.0, 0.0);

    // adag_R -> m01 adag_L' + m11 adag_R'
    u[(I10, I01)] = m01;
    u[(I01, I01)] = m11;
    // adag_L -> m00 adag_L' + m10 adag_R'
    u[(I10, I10)] = m00;
    u[(I01, I10)] = m10;

    // |11> = adag_L adag_R |0>
    u[(I20, I11)] = rt2 * m00 * m01;
    u[(I11, I11)] = m00 * m11 + m10 * m01;
    u[(I02, I11)] = rt2 * m10 * m11;

    // |02> = (adag_R)^2 / sqrt2 |0>
    u[(I20, I02)] = m01 * m01;
    u[(I11, I02)] = rt2 * m01 * m11;
    u[(I02, I02)] = m11 * m11;

    // |20> = (adag_L)^2 / sqrt2 |0>
    u[(I20, I20)] = m00 * m00;
    u[(I11, I20)] = rt2 * m00 * m10;
    u[(I02, I20)] = m10 * m10;

    u
}

/// Splits a single input mode into the two rails.
///
/// The input statistics occupy rail R with vacuum on L; the displacer then
/// produces (|01> + e^{i phi_rel}|10>)/sqrt2 from one photon, and the
/// two-photon component goes to |11> with weight 1/2 and to |02>, |20> with
/// weight 1/4 each.
pub fn split_single_photon(stats: &SingleModePhotonStats, phi_rel: f64) -> TwoModeFockState {
    let mut rho = Mat6::zeros();
    rho[(I00, I00)] = C64::new(stats.p0(), 0.0);
    rho[(I01, I01)] = C64::new(stats.p1(), 0.0);
    rho[(I02, I02)] = C64::new(stats.p2(), 0.0);
    let embedded = TwoModeFockState::from_matrix_unchecked(rho);
    OpticalElement::DisplacerSplit { phi_rel }.apply(&embedded)
}

/// Undoes a split with the same relative phase, returning the single-mode
/// state on rail R (vacuum on L for lossless chains).
pub fn displacer_combine(state: &TwoModeFockState, phi_rel: f64) -> TwoModeFockState {
    OpticalElement::DisplacerCombine { phi_rel }.apply(state)
}

pub fn apply_waveplate(state: &TwoModeFockState, theta: f64) -> TwoModeFockState {
    OpticalElement::Waveplate { theta }.apply(state)
}

pub fn apply_phase(state: &TwoModeFockState, rail: Rail, phi: f64) -> TwoModeFockState {
    OpticalElement::PhaseShift { rail, phi }.apply(state)
}

/// Kraus operators of beam-splitter loss with transmission eta on one rail.
///
/// K_k removes k photons: K_k |n> = sqrt(C(n,k) eta^{n-k} (1-eta)^k) |n-k>
/// on the lossy rail, identity on the other. The set is trace preserving,
/// and because loss only lowers occupation the truncated space is closed
/// under it.
pub fn loss_kraus(rail: Rail, eta: f64) -> [Mat6; 3] {
    let rt_eta = eta.sqrt();
    let rt_loss = (1.0 - eta).sqrt();
    let rt_mixed = (2.0 * eta * (1.0 - eta)).sqrt();

    let mut k0 = Mat6::zeros();
    let mut k1 = Mat6::zeros();
    let mut k2 = Mat6::zeros();

    let amp = |x: f64| C64::new(x, 0.0);
    match rail {
        Rail::Left => {
            for (i, f) in [(I00, 1.0), (I01, 1.0), (I02, 1.0)] {
                k0[(i, i)] = amp(f);
            }
            k0[(I10, I10)] = amp(rt_eta);
            k0[(I11, I11)] = amp(rt_eta);
            k0[(I20, I20)] = amp(eta);

            k1[(I00, I10)] = amp(rt_loss);
            k1[(I01, I11)] = amp(rt_loss);
            k1[(I10, I20)] = amp(rt_mixed);

            k2[(I00, I20)] = amp(1.0 - eta);
        }
        Rail::Right => {
            for (i, f) in [(I00, 1.0), (I10, 1.0), (I20, 1.0)] {
                k0[(i, i)] = amp(f);
            }
            k0[(I01, I01)] = amp(rt_eta);
            k0[(I11, I11)] = amp(rt_eta);
            k0[(I02, I02)] = amp(eta);

            k1[(I00, I01)] = amp(rt_loss);
            k1[(I10, I11)] = amp(rt_loss);
            k1[(I01, I02)] = amp(rt_mixed);

            k2[(I00, I02)] = amp(1.0 - eta);
        }
    }
    [k0, k1, k2]
}

/// Beam-splitter loss channel on one rail.
///
/// Populations thin binomially; the rail coherence d picks up sqrt(eta) per
/// lossy rail, so balanced loss on both rails scales d by eta itself. The
/// two-photon sector feeds down into the one-photon sector with the exact
/// beam-splitter weights.
pub fn apply_loss(state: &TwoModeFockState, rail: Rail, eta: f64) -> Result<TwoModeFockState> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!(
            "transmission eta = {eta} is outside [0, 1]"
        )));
    }
    Ok(state.apply_kraus(&loss_kraus(rail, eta)))
}

/// Gaussian relative-phase dephasing between the rails.
///
/// Models a random phase delta with <e^{i delta}> = visibility applied as
/// e^{i delta (n_L - n_R)/2}; the matrix element between (n,m) and (n',m')
/// scales by visibility^{k^2} with k = ((n - n') - (m - m'))/2. Being a
/// mixture of unitaries it preserves positivity. The |01><10| coherence
/// scales by exactly the visibility, which is how the measured fringe
/// contrast enters the model.
pub fn dephase(state: &TwoModeFockState, visibility: f64) -> Result<TwoModeFockState> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::InvalidParameter(format!(
            "visibility = {visibility} is outside [0, 1]"
        )));
    }
    let mut rho = *state.matrix();
    for r in 0..DIM {
        for c in 0..DIM {
            let (n, m) = crate::fock::BASIS[r];
            let (np, mp) = crate::fock::BASIS[c];
            let k = ((n as f64 - np as f64) - (m as f64 - mp as f64)) / 2.0;
            if k != 0.0 {
                rho[(r, c)] *= C64::new(visibility.powf(k * k), 0.0);
            }
        }
    }
    Ok(TwoModeFockState::from_matrix_unchecked(rho))
}
