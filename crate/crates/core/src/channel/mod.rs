//! System configuration, triple-beam grids, and per-user channel tensors.
//!
//! A channel between the base station array and one user terminal is a sum of
//! discrete propagation paths, each with a complex gain, a directional cosine,
//! a delay, and a Doppler frequency. Snapping those parameters onto sampled
//! angle/delay/Doppler grids yields a sparse triple-beam (TB) tensor; the
//! space-frequency-time (SFT) response is recovered from it through the beam
//! matrices in [`beams`].

pub mod beams;
mod synth;

pub use beams::{build_beam_operators, BeamOperators};
pub use synth::{
    covariance_from_power, empirical_power, sft_direct_offgrid, synthesize_scenario, tb_to_sft,
    triple_beam_vector, GeneratorSettings, SftWindow,
};

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Scenario scalars: array geometry, OFDM numerology, frame layout, power
/// levels, and the frame anchor slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// BS antenna count M (uniform linear array, half-wavelength spacing).
    pub antennas: usize,
    /// User terminal count U.
    pub users: usize,
    /// Carrier frequency f_c in Hz.
    pub carrier_hz: f64,
    /// OFDM subcarrier count N_c.
    pub subcarriers: usize,
    /// Cyclic prefix length N_g in samples.
    pub cp_len: usize,
    /// Valid (used) subcarrier count K.
    pub valid_subcarriers: usize,
    /// Index k0 of the first valid subcarrier.
    pub first_subcarrier: usize,
    /// Subcarrier spacing in Hz.
    pub subcarrier_spacing_hz: f64,
    /// OFDM symbols per slot N_b (first symbol of each slot carries pilots).
    pub symbols_per_slot: usize,
    /// Slots per frame N_p.
    pub slots_per_frame: usize,
    /// Maximum UT speed in m/s.
    pub max_speed_mps: f64,
    /// Pilot transmit power sigma_p.
    pub pilot_power: f64,
    /// Noise variance sigma_z.
    pub noise_var: f64,
    /// First slot index n_T of the current frame.
    pub frame_start_slot: usize,
}

impl SystemConfig {
    /// Sample interval T_s = 1 / (N_c * delta_f).
    pub fn sample_interval(&self) -> f64 {
        1.0 / (self.subcarriers as f64 * self.subcarrier_spacing_hz)
    }

    /// OFDM symbol duration T_sym = (N_c + N_g) * T_s.
    pub fn symbol_duration(&self) -> f64 {
        (self.subcarriers + self.cp_len) as f64 * self.sample_interval()
    }

    /// Symbols per frame N_s = N_b * N_p.
    pub fn frame_symbols(&self) -> usize {
        self.symbols_per_slot * self.slots_per_frame
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Maximum two-sided Doppler spread nu_max = 2 * v / lambda.
    pub fn nu_max(&self) -> f64 {
        2.0 * self.max_speed_mps / self.wavelength()
    }

    /// Delay bin count N_f = ceil(N_g * K / N_c): the number of base-grid
    /// delay cells a CP-limited channel can occupy. Always recomputed.
    pub fn delay_bins(&self) -> usize {
        (self.cp_len * self.valid_subcarriers).div_ceil(self.subcarriers)
    }

    /// Doppler bin count N_d = ceil(nu_max * T_sym * N_s), at least 1 so the
    /// zero-Doppler cell is always in range.
    pub fn doppler_bins(&self) -> usize {
        let x = self.nu_max() * self.symbol_duration() * self.frame_symbols() as f64;
        (x.ceil() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.antennas == 0
            || self.users == 0
            || self.subcarriers == 0
            || self.valid_subcarriers == 0
            || self.symbols_per_slot == 0
            || self.slots_per_frame == 0
            || self.cp_len == 0
        {
            return fail("all counts must be positive".into());
        }
        if self.first_subcarrier + self.valid_subcarriers > self.subcarriers {
            return fail(format!(
                "k0 + K = {} exceeds N_c = {}",
                self.first_subcarrier + self.valid_subcarriers,
                self.subcarriers
            ));
        }
        if !(self.carrier_hz > 0.0) || !(self.subcarrier_spacing_hz > 0.0) {
            return fail("carrier and subcarrier spacing must be positive".into());
        }
        if !(self.pilot_power > 0.0) || !(self.noise_var >= 0.0) || !(self.max_speed_mps >= 0.0) {
            return fail("powers must be positive and speed non-negative".into());
        }
        // Slot length must stay well inside the channel coherence time.
        let budget = self.symbols_per_slot as f64 * self.symbol_duration() * self.nu_max();
        if budget >= 1.0 {
            return fail(format!(
                "N_b * T_sym * nu_max = {budget:.4} must be < 1",
            ));
        }
        Ok(())
    }

    /// Desk-scale profile used by the default experiments: small enough for
    /// dense oracles to stay tractable while keeping N_f = 3.
    pub fn desk_scale() -> Self {
        SystemConfig {
            antennas: 16,
            users: 24,
            carrier_hz: 5.8e9,
            subcarriers: 256,
            cp_len: 16,
            valid_subcarriers: 48,
            first_subcarrier: 104,
            subcarrier_spacing_hz: 15e3,
            symbols_per_slot: 4,
            slots_per_frame: 4,
            max_speed_mps: 30.0 / 3.6,
            pilot_power: 1.0,
            noise_var: 0.01,
            frame_start_slot: 0,
        }
    }

    /// Full-scale profile. Long-running: the dense MMSE oracle is far beyond
    /// its size cap here, only the iterative estimator path is practical.
    pub fn full_scale() -> Self {
        SystemConfig {
            antennas: 128,
            users: 48,
            carrier_hz: 5.8e9,
            subcarriers: 2048,
            cp_len: 144,
            valid_subcarriers: 360,
            first_subcarrier: 844,
            subcarrier_spacing_hz: 15e3,
            symbols_per_slot: 14,
            slots_per_frame: 8,
            max_speed_mps: 3.0 / 3.6,
            pilot_power: 1.0,
            noise_var: 0.01,
            frame_start_slot: 0,
        }
    }
}

/// Sampled triple-beam grids.
///
/// Grid points: theta_n = (n - N_theta/2) / N_theta, tau_n = n / (N_tau * df),
/// nu_n = (n - N_nu/2) / (N_nu * N_b * T_sym). The angle grid therefore
/// includes -0.5 and excludes +0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct TbGrid {
    pub f_theta: usize,
    pub f_tau: usize,
    pub f_nu: usize,
    pub n_theta: usize,
    pub n_tau: usize,
    pub n_nu: usize,
    theta_set: Vec<f64>,
    tau_set: Vec<f64>,
    nu_set: Vec<f64>,
    tau_step: f64,
    nu_step: f64,
}

impl TbGrid {
    pub fn new(cfg: &SystemConfig, f_theta: usize, f_tau: usize, f_nu: usize) -> Result<Self> {
        if f_theta == 0 || f_tau == 0 || f_nu == 0 {
            return Err(Error::InvalidConfig("fine factors must be >= 1".into()));
        }
        let n_theta = f_theta * cfg.antennas;
        let n_tau = f_tau * cfg.valid_subcarriers;
        let n_nu = f_nu * cfg.slots_per_frame;
        if n_theta % 2 != 0 || n_nu % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "N_theta = {n_theta} and N_nu = {n_nu} must be even",
            )));
        }
        let tau_step = 1.0 / (n_tau as f64 * cfg.subcarrier_spacing_hz);
        let nu_step = 1.0 / (n_nu as f64 * cfg.symbols_per_slot as f64 * cfg.symbol_duration());
        let theta_set = (0..n_theta)
            .map(|n| (n as f64 - n_theta as f64 / 2.0) / n_theta as f64)
            .collect();
        let tau_set = (0..n_tau).map(|n| n as f64 * tau_step).collect();
        let nu_set = (0..n_nu)
            .map(|n| (n as f64 - n_nu as f64 / 2.0) * nu_step)
            .collect();
        Ok(TbGrid {
            f_theta,
            f_tau,
            f_nu,
            n_theta,
            n_tau,
            n_nu,
            theta_set,
            tau_set,
            nu_set,
            tau_step,
            nu_step,
        })
    }

    pub fn tb_shape(&self) -> Vec<usize> {
        vec![self.n_theta, self.n_tau, self.n_nu]
    }

    pub fn cell_count(&self) -> usize {
        self.n_theta * self.n_tau * self.n_nu
    }

    pub fn theta_set(&self) -> &[f64] {
        &self.theta_set
    }

    pub fn tau_set(&self) -> &[f64] {
        &self.tau_set
    }

    pub fn nu_set(&self) -> &[f64] {
        &self.nu_set
    }

    pub fn theta_step(&self) -> f64 {
        1.0 / self.n_theta as f64
    }

    pub fn tau_step(&self) -> f64 {
        self.tau_step
    }

    pub fn nu_step(&self) -> f64 {
        self.nu_step
    }

    /// Nearest index on a uniform grid `origin + i*step`, breaking exact
    /// midpoints toward the lower index, clamped to `[0, count)`.
    fn snap_uniform(value: f64, origin: f64, step: f64, count: usize) -> usize {
        let t = ((value - origin) / step).clamp(0.0, (count - 1) as f64);
        let k = t.floor();
        let idx = if t - k > 0.5 { k + 1.0 } else { k };
        idx as usize
    }

    pub fn snap_theta(&self, theta: f64) -> usize {
        Self::snap_uniform(theta, -0.5, self.theta_step(), self.n_theta)
    }

    pub fn snap_tau(&self, tau: f64) -> usize {
        Self::snap_uniform(tau, 0.0, self.tau_step, self.n_tau)
    }

    pub fn snap_nu(&self, nu: f64) -> usize {
        Self::snap_uniform(
            nu,
            -(self.n_nu as f64 / 2.0) * self.nu_step,
            self.nu_step,
            self.n_nu,
        )
    }
}

/// One propagation path.
///
/// `power` is the ensemble gain power E|gain|^2 assigned by the scenario
/// generator; it feeds the beam-domain power distribution, while `gain` is
/// the realized coefficient of this draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub gain: Complex64,
    /// Directional cosine in [-0.5, 0.5].
    pub theta: f64,
    /// Delay in seconds, within the cyclic prefix.
    pub delay_s: f64,
    /// Doppler frequency in Hz, within [-nu_max/2, nu_max/2].
    pub doppler_hz: f64,
    pub power: f64,
}

/// Snap a path onto the three grids: (angle index, delay index, Doppler index).
pub fn snap_path_to_grid(path: &Path, grid: &TbGrid) -> (usize, usize, usize) {
    (
        grid.snap_theta(path.theta),
        grid.snap_tau(path.delay_s),
        grid.snap_nu(path.doppler_hz),
    )
}

/// A user terminal's path list together with its on-grid TB tensor, TB power
/// distribution, and support set.
#[derive(Debug, Clone)]
pub struct UserChannel {
    pub paths: Vec<Path>,
    /// Sparse TB channel tensor (N_theta, N_tau, N_nu).
    pub h_tb: DenseTensor,
    /// Per-cell power distribution; real non-negative, same support as h_tb.
    pub w: DenseTensor,
    /// Sorted linear indices of the non-zero cells of `w`.
    pub support: Vec<usize>,
}

/// Accumulate paths into the TB tensor and its power distribution: gains of
/// paths snapping to the same cell add coherently in `h_tb`, their ensemble
/// powers add in `w`.
pub fn build_tb_channel(paths: &[Path], grid: &TbGrid) -> UserChannel {
    let shape = grid.tb_shape();
    let mut h_tb = DenseTensor::zeros(shape.clone());
    let mut w = DenseTensor::zeros(shape);
    for path in paths {
        let (a, d, v) = snap_path_to_grid(path, grid);
        let idx = [a, d, v];
        h_tb.set(&idx, h_tb.get(&idx) + path.gain);
        w.set(&idx, w.get(&idx) + Complex64::new(path.power, 0.0));
    }
    let support = w.support();
    UserChannel {
        paths: paths.to_vec(),
        h_tb,
        w,
        support,
    }
}

/// On-disk scenario document: configuration, grid factors, and per-UT paths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub schema: String,
    pub config: SystemConfig,
    pub grid: GridFactors,
    pub users: Vec<UserPaths>,
}

pub const SCENARIO_SCHEMA: &str = "tbacq-scenario-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridFactors {
    pub f_theta: usize,
    pub f_tau: usize,
    pub f_nu: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserPaths {
    pub paths: Vec<Path>,
}

impl Scenario {
    pub fn new(cfg: &SystemConfig, grid: &TbGrid, channels: &[UserChannel]) -> Self {
        Scenario {
            schema: SCENARIO_SCHEMA.to_string(),
            config: cfg.clone(),
            grid: GridFactors {
                f_theta: grid.f_theta,
                f_tau: grid.f_tau,
                f_nu: grid.f_nu,
            },
            users: channels
                .iter()
                .map(|c| UserPaths {
                    paths: c.paths.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text)?;
        if sc.schema != SCENARIO_SCHEMA {
            return Err(Error::InvalidConfig(format!(
                "unsupported scenario schema {:?}",
                sc.schema
            )));
        }
        sc.config.validate()?;
        Ok(sc)
    }

    /// Rebuild grid and per-UT channels from the stored paths.
    pub fn instantiate(&self) -> Result<(TbGrid, Vec<UserChannel>)> {
        let grid = TbGrid::new(
            &self.config,
            self.grid.f_theta,
            self.grid.f_tau,
            self.grid.f_nu,
        )?;
        let channels = self
            .users
            .iter()
            .map(|u| build_tb_channel(&u.paths, &grid))
            .collect();
        Ok((grid, channels))
    }
}
