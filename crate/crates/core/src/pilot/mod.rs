//! Pilot sequences, phase-shift assignments, received pilot signals, and the
//! shift-equivalence and overlap diagnostics that drive scheduling.
//!
//! Each UT modulates shared Zadoff-Chu basic sequences with a frequency phase
//! shift `phi` (over the K valid subcarriers) and a time phase shift `varphi`
//! (over the N_p pilot segments). Acting on the beam matrices, those phase
//! shifts turn into cyclic shifts of the TB channel tensor along the delay
//! and Doppler axes, which is what makes two-dimensional pilot scheduling
//! possible.

mod mse;

pub use mse::mse_theoretical;

use crate::channel::{sft_direct_offgrid, SftWindow, SystemConfig, TbGrid, UserChannel};
use crate::error::{Error, Result};
use crate::tensor::{CyclicShiftSpec, DenseTensor};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Zadoff-Chu sequence of length `n` with root `root`:
/// entry `i` is `exp(j 2 pi root i (i + (n mod 2)) / n)`. The root must be
/// coprime to the length for the constant-amplitude correlation properties.
pub fn zc_sequence(n: usize, root: u64) -> Result<Vec<Complex64>> {
    if gcd(root, n as u64) != 1 {
        return Err(Error::NonCoprimeRoot { root, len: n });
    }
    let parity = (n % 2) as u64;
    Ok((0..n as u64)
        .map(|i| {
            // Reduce the quadratic index modulo n before the float division.
            let q = (root % n as u64) * i % n as u64 * ((i + parity) % n as u64) % n as u64;
            Complex64::from_polar(1.0, TAU * q as f64 / n as f64)
        })
        .collect())
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Smallest root >= 1 coprime to `n` (always 1; kept as a named rule).
pub fn default_zc_root(n: usize) -> u64 {
    (1..).find(|&r| gcd(r, n as u64) == 1).unwrap()
}

/// The shared basic pilot sequences.
#[derive(Debug, Clone)]
pub struct BasicSequences {
    /// Length-K frequency basic pilot.
    pub x_f: Vec<Complex64>,
    /// Length-N_p time basic pilot (one entry per pilot segment).
    pub x_t: Vec<Complex64>,
    pub root_f: u64,
    pub root_t: u64,
}

impl BasicSequences {
    pub fn new(cfg: &SystemConfig) -> Result<Self> {
        let root_f = default_zc_root(cfg.valid_subcarriers);
        let root_t = default_zc_root(cfg.slots_per_frame);
        Ok(BasicSequences {
            x_f: zc_sequence(cfg.valid_subcarriers, root_f)?,
            x_t: zc_sequence(cfg.slots_per_frame, root_t)?,
            root_f,
            root_t,
        })
    }
}

/// Per-UT phase-shift pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseShiftPair {
    /// Frequency phase shift phi in {0..K-1}.
    pub freq: usize,
    /// Time phase shift varphi in {0..N_p-1}.
    pub time: usize,
}

pub const ASSIGNMENT_SCHEMA: &str = "tbacq-assignment-v1";

/// Phase-shift pairs for every UT, in UT order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PilotAssignment {
    pub schema: String,
    pub pairs: Vec<PhaseShiftPair>,
}

impl PilotAssignment {
    pub fn new(pairs: Vec<PhaseShiftPair>) -> Self {
        PilotAssignment {
            schema: ASSIGNMENT_SCHEMA.to_string(),
            pairs,
        }
    }

    /// All-zero phases for `users` UTs.
    pub fn all_zero(users: usize) -> Self {
        Self::new(vec![PhaseShiftPair { freq: 0, time: 0 }; users])
    }

    pub fn validate_against(&self, cfg: &SystemConfig) -> Result<()> {
        if self.schema != ASSIGNMENT_SCHEMA {
            return Err(Error::InvalidConfig(format!(
                "unsupported assignment schema {:?}",
                self.schema
            )));
        }
        if self.pairs.len() != cfg.users {
            return Err(Error::InvalidConfig(format!(
                "assignment covers {} UTs, config has {}",
                self.pairs.len(),
                cfg.users
            )));
        }
        for (u, p) in self.pairs.iter().enumerate() {
            if p.freq >= cfg.valid_subcarriers || p.time >= cfg.slots_per_frame {
                return Err(Error::InvalidConfig(format!(
                    "UT {u}: phase pair ({}, {}) out of range",
                    p.freq, p.time
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let a: PilotAssignment = serde_json::from_str(text)?;
        if a.schema != ASSIGNMENT_SCHEMA {
            return Err(Error::InvalidConfig(format!(
                "unsupported assignment schema {:?}",
                a.schema
            )));
        }
        Ok(a)
    }
}

/// Frequency phase-shift ramp `f_phi[k] = e^{-j 2 pi (k0+k) phi / K}`.
/// Negative phases are allowed for relative (pairwise) shifts.
pub fn freq_phase_ramp(phi: i64, cfg: &SystemConfig) -> Vec<Complex64> {
    let k_count = cfg.valid_subcarriers as f64;
    (0..cfg.valid_subcarriers)
        .map(|k| {
            Complex64::from_polar(
                1.0,
                -TAU * (cfg.first_subcarrier + k) as f64 * phi as f64 / k_count,
            )
        })
        .collect()
}

/// Time phase-shift column `f_varphi[n] = e^{-j 2 pi n varphi / N_p}`.
pub fn time_phase_ramp(varphi: i64, cfg: &SystemConfig) -> Vec<Complex64> {
    let n_p = cfg.slots_per_frame as f64;
    (0..cfg.slots_per_frame)
        .map(|n| Complex64::from_polar(1.0, -TAU * n as f64 * varphi as f64 / n_p))
        .collect()
}

/// Per-UT frequency pilot `x_u^f = f_phi ⊙ x^f`.
pub fn freq_pilot(phi: usize, basic: &BasicSequences, cfg: &SystemConfig) -> Vec<Complex64> {
    freq_phase_ramp(phi as i64, cfg)
        .into_iter()
        .zip(&basic.x_f)
        .map(|(r, x)| r * x)
        .collect()
}

/// Per-UT time pilot over the current frame's pilot segments:
/// the periodic sequence `f_varphi ⊙ x^t` rotated by the frame anchor, i.e.
/// entry `n` is `(f_varphi ⊙ x^t)[(n + n_T) mod N_p]`.
pub fn time_pilot_window(
    varphi: usize,
    basic: &BasicSequences,
    cfg: &SystemConfig,
) -> Vec<Complex64> {
    let n_p = cfg.slots_per_frame;
    let ramp = time_phase_ramp(varphi as i64, cfg);
    (0..n_p)
        .map(|n| {
            let src = (n + cfg.frame_start_slot) % n_p;
            ramp[src] * basic.x_t[src]
        })
        .collect()
}

/// Result of the phase-shift orthogonality scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsopCheck {
    /// True when the largest cross-trace magnitude is <= K * 1e-9.
    pub orthogonal: bool,
    /// max |tr{X_u^f Diag(f_phi) X_u'^f^H}| over pairs and |phi| < N_f.
    pub max_trace: f64,
    /// True when every pair satisfies the circular distance bound
    /// |phi_u' - phi_u| >= N_f.
    pub sufficient_condition: bool,
}

/// Scan the cross-traces of all ordered UT pairs over the delay-overlap lags
/// `|phi| < N_f`. CP-limited channels occupy N_f delay cells, so two UTs
/// interfere exactly when their phase difference lands inside that window.
pub fn psop_orthogonality_check(
    assignment: &PilotAssignment,
    basic: &BasicSequences,
    cfg: &SystemConfig,
) -> PsopCheck {
    let n_f = cfg.delay_bins() as i64;
    let k_count = cfg.valid_subcarriers;
    let pilots: Vec<Vec<Complex64>> = assignment
        .pairs
        .iter()
        .map(|p| freq_pilot(p.freq, basic, cfg))
        .collect();
    let mut max_trace = 0.0f64;
    let mut sufficient = true;
    for (u, xu) in pilots.iter().enumerate() {
        for (v, xv) in pilots.iter().enumerate() {
            if u == v {
                continue;
            }
            for phi in -(n_f - 1)..n_f {
                let ramp = freq_phase_ramp(phi, cfg);
                let mut tr = Complex64::ZERO;
                for k in 0..k_count {
                    tr += xu[k] * ramp[k] * xv[k].conj();
                }
                max_trace = max_trace.max(tr.norm());
            }
            let d = assignment.pairs[u].freq as i64 - assignment.pairs[v].freq as i64;
            let dist = d.rem_euclid(k_count as i64).min((-d).rem_euclid(k_count as i64));
            if dist < n_f {
                sufficient = false;
            }
        }
    }
    PsopCheck {
        orthogonal: max_trace <= k_count as f64 * 1e-9,
        max_trace,
        sufficient_condition: sufficient,
    }
}

/// Received uplink pilot tensor.
#[derive(Debug, Clone)]
pub struct ReceivedPilot {
    /// M x K x N_p observation.
    pub y: DenseTensor,
    pub sigma_p: f64,
    pub sigma_z: f64,
    pub frame_start_slot: usize,
}

/// Superpose every UT's pilot-modulated SFT channel and add white noise:
/// `Y = sqrt(sigma_p) sum_u X_u,T^t x_3 (X_u^f x_2 H_u^{SFT,p}) + Z`.
///
/// The per-UT channels are synthesized exactly from the path parameters, so
/// this is the ground-truth observation for both on- and off-grid scenarios.
/// Forcing every time shift to zero reproduces the frequency-only baseline.
pub fn tfpsp_received_signal(
    channels: &[UserChannel],
    assignment: &PilotAssignment,
    basic: &BasicSequences,
    cfg: &SystemConfig,
    noise_seed: u64,
) -> Result<ReceivedPilot> {
    if channels.len() != assignment.pairs.len() {
        return Err(Error::InvalidConfig(format!(
            "{} channels vs {} assignment pairs",
            channels.len(),
            assignment.pairs.len()
        )));
    }
    let shape = vec![
        cfg.antennas,
        cfg.valid_subcarriers,
        cfg.slots_per_frame,
    ];
    let mut y = DenseTensor::zeros(shape);
    for (ch, pair) in channels.iter().zip(&assignment.pairs) {
        let h = sft_direct_offgrid(&ch.paths, cfg, SftWindow::Pilot);
        let xf = freq_pilot(pair.freq, basic, cfg);
        let xt = time_pilot_window(pair.time, basic, cfg);
        let modulated = h.scale_axis(1, &xf)?.scale_axis(2, &xt)?;
        y = y.add(&modulated)?;
    }
    y = y.scale(Complex64::new(cfg.pilot_power.sqrt(), 0.0));
    if cfg.noise_var > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        let s = (cfg.noise_var / 2.0).sqrt();
        for v in y.data_mut() {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *v += Complex64::new(re * s, im * s);
        }
    }
    Ok(ReceivedPilot {
        y,
        sigma_p: cfg.pilot_power,
        sigma_z: cfg.noise_var,
        frame_start_slot: cfg.frame_start_slot,
    })
}

/// Cyclic-shift action of a (relative) phase pair on a TB-domain tensor:
/// shift length `-phi * F_tau` on the delay axis and `+varphi * F_nu` on the
/// Doppler axis. Applies to channel tensors and power distributions alike.
pub fn equivalent_shift(
    tensor: &DenseTensor,
    phi: i64,
    varphi: i64,
    grid: &TbGrid,
) -> Result<DenseTensor> {
    tensor
        .cyclic_shift(CyclicShiftSpec {
            axis: 1,
            shift: -phi * grid.f_tau as i64,
        })?
        .cyclic_shift(CyclicShiftSpec {
            axis: 2,
            shift: varphi * grid.f_nu as i64,
        })
}

/// Overlap degree of two non-negative power tensors: their normalized inner
/// product, in [0, 1]. Zero iff the supports are disjoint, one iff one tensor
/// is a positive scalar multiple of the other.
pub fn overlap_eta(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            op: "overlap_eta",
            detail: format!("{:?} vs {:?}", a.shape(), b.shape()),
        });
    }
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.data().iter().zip(b.data()) {
        debug_assert!(x.im == 0.0 && y.im == 0.0 && x.re >= 0.0 && y.re >= 0.0);
        dot += x.re * y.re;
        na += x.re * x.re;
        nb += y.re * y.re;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroPowerOverlap);
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

/// Shifted per-UT power distributions under an assignment.
pub fn shifted_powers(
    channels: &[UserChannel],
    assignment: &PilotAssignment,
    grid: &TbGrid,
) -> Result<Vec<DenseTensor>> {
    channels
        .iter()
        .zip(&assignment.pairs)
        .map(|(ch, p)| equivalent_shift(&ch.w, p.freq as i64, p.time as i64, grid))
        .collect()
}

/// Check the zero-interference condition: every pair of shifted power
/// distributions must have disjoint support. Returns the verdict and the
/// largest pairwise overlap degree encountered.
pub fn theorem1_condition(
    channels: &[UserChannel],
    assignment: &PilotAssignment,
    grid: &TbGrid,
) -> Result<(bool, f64)> {
    let shifted = shifted_powers(channels, assignment, grid)?;
    let mut max_eta = 0.0f64;
    for u in 0..shifted.len() {
        for v in u + 1..shifted.len() {
            let prod = shifted[u].hadamard(&shifted[v])?;
            if prod.data().iter().any(|z| *z != Complex64::ZERO) {
                max_eta = max_eta.max(overlap_eta(&shifted[u], &shifted[v])?);
            }
        }
    }
    Ok((max_eta == 0.0, max_eta))
}

#[cfg(test)]
mod tests;
