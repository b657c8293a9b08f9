//! Beam matrices: sampled steering vectors over the TB grids.
//!
//! Columns are unit-modulus steering vectors. With the grid sizes tied to the
//! system dimensions (N_theta = F_theta*M and so on), every beam matrix is a
//! partial, shifted, or conjugated DFT matrix; `from_dft` builds them that
//! way and must agree with the sampled steering formulas of `from_steering`.

use super::{SystemConfig, TbGrid};
use crate::error::{Error, Result};
use crate::tensor::DenseTensor;
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Spatial, frequency, and time beam matrices for one frame anchor.
#[derive(Debug, Clone)]
pub struct BeamOperators {
    /// M x N_theta spatial beam matrix.
    pub v_s: DenseTensor,
    /// K x N_tau frequency beam matrix.
    pub v_f: DenseTensor,
    /// N_s x N_nu time beam matrix over the whole frame.
    pub v_t_full: DenseTensor,
    /// N_p x N_nu time beam matrix restricted to the pilot symbols
    /// (rows 0, N_b, 2*N_b, ... of `v_t_full`).
    pub v_t_pilot: DenseTensor,
}

fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// Spatial steering vector [e^{-j 2 pi m theta}]_{m=0..count-1}.
pub fn steer_space(count: usize, theta: f64) -> Vec<Complex64> {
    (0..count).map(|m| cis(-TAU * m as f64 * theta)).collect()
}

/// Frequency steering vector [e^{-j 2 pi (k0+k) df tau}]_{k=0..count-1}.
pub fn steer_freq(count: usize, k0: usize, df: f64, tau: f64) -> Vec<Complex64> {
    (0..count)
        .map(|k| cis(-TAU * (k0 + k) as f64 * df * tau))
        .collect()
}

/// Time steering entry e^{j 2 pi nu n_abs T_sym} at one absolute symbol index.
pub fn steer_time_at(nu: f64, t_sym: f64, n_abs: usize) -> Complex64 {
    cis(TAU * nu * n_abs as f64 * t_sym)
}

impl BeamOperators {
    /// Build all four matrices by sampling the steering formulas on the grid.
    pub fn from_steering(cfg: &SystemConfig, grid: &TbGrid) -> Result<Self> {
        check_even(grid)?;
        let m_count = cfg.antennas;
        let k_count = cfg.valid_subcarriers;
        let n_s = cfg.frame_symbols();
        let t_sym = cfg.symbol_duration();
        let base_symbol = cfg.frame_start_slot * cfg.symbols_per_slot;

        let v_s = DenseTensor::from_fn(vec![m_count, grid.n_theta], |i| {
            cis(-TAU * i[0] as f64 * grid.theta_set()[i[1]])
        });
        let v_f = DenseTensor::from_fn(vec![k_count, grid.n_tau], |i| {
            cis(-TAU * (cfg.first_subcarrier + i[0]) as f64
                * cfg.subcarrier_spacing_hz
                * grid.tau_set()[i[1]])
        });
        let v_t_full = DenseTensor::from_fn(vec![n_s, grid.n_nu], |i| {
            steer_time_at(grid.nu_set()[i[1]], t_sym, base_symbol + i[0])
        });
        let mut v_t_pilot = DenseTensor::zeros(vec![cfg.slots_per_frame, grid.n_nu]);
        for nv in 0..grid.n_nu {
            for n in 0..cfg.slots_per_frame {
                v_t_pilot.set(&[n, nv], v_t_full.get(&[n * cfg.symbols_per_slot, nv]));
            }
        }
        Ok(BeamOperators {
            v_s,
            v_f,
            v_t_full,
            v_t_pilot,
        })
    }

    /// Build the matrices from DFT entries:
    /// `V_s[m, n] = F_{N_theta}[m, <n - N_theta/2>]`,
    /// `V_f[k, n] = F_{N_tau}[k0 + k, n]`,
    /// `V_t_pilot[n, v] = conj(F_{N_nu}[<n + n_T>, <v - N_nu/2>])`,
    /// with `F_N[a, b] = e^{-j 2 pi a b / N}`.
    pub fn from_dft(cfg: &SystemConfig, grid: &TbGrid) -> Result<Self> {
        check_even(grid)?;
        let dft = |n: usize, a: usize, b: usize| cis(-TAU * (a * b % n) as f64 / n as f64);
        let nt = grid.n_theta;
        let v_s = DenseTensor::from_fn(vec![cfg.antennas, nt], |i| {
            dft(nt, i[0], (i[1] + nt / 2) % nt)
        });
        let ntau = grid.n_tau;
        let v_f = DenseTensor::from_fn(vec![cfg.valid_subcarriers, ntau], |i| {
            dft(ntau, cfg.first_subcarrier + i[0], i[1])
        });
        let nnu = grid.n_nu;
        let v_t_pilot = DenseTensor::from_fn(vec![cfg.slots_per_frame, nnu], |i| {
            dft(
                nnu,
                (i[0] + cfg.frame_start_slot) % nnu,
                (i[1] + nnu / 2) % nnu,
            )
            .conj()
        });
        // The full-frame time matrix has no pure DFT form; keep the sampled one.
        let v_t_full = Self::from_steering(cfg, grid)?.v_t_full;
        Ok(BeamOperators {
            v_s,
            v_f,
            v_t_pilot,
            v_t_full,
        })
    }
}

fn check_even(grid: &TbGrid) -> Result<()> {
    if grid.n_theta % 2 != 0 || grid.n_nu % 2 != 0 {
        return Err(Error::InvalidConfig(format!(
            "beam matrices need even N_theta and N_nu, got {} and {}",
            grid.n_theta, grid.n_nu
        )));
    }
    Ok(())
}

/// Default construction, sampling the steering formulas.
pub fn build_beam_operators(cfg: &SystemConfig, grid: &TbGrid) -> Result<BeamOperators> {
    BeamOperators::from_steering(cfg, grid)
}
