//! SFT-domain synthesis and the synthetic multipath scenario generator.

use super::beams::{steer_freq, steer_space, steer_time_at, BeamOperators};
use super::{build_tb_channel, snap_path_to_grid, Path, SystemConfig, TbGrid, UserChannel};
use crate::error::{Error, Result};
use crate::tensor::DenseTensor;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::TAU;

/// Which OFDM symbols of the frame an SFT tensor covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SftWindow {
    /// All N_s symbols.
    Full,
    /// The N_p pilot symbols (first symbol of each slot).
    Pilot,
}

/// Map a TB tensor to the SFT domain through the beam-matrix chain
/// (spatial mode, then frequency, then time).
pub fn tb_to_sft(h_tb: &DenseTensor, ops: &BeamOperators, which: SftWindow) -> Result<DenseTensor> {
    let v_t = match which {
        SftWindow::Full => &ops.v_t_full,
        SftWindow::Pilot => &ops.v_t_pilot,
    };
    h_tb.m_mode_product(&ops.v_s, 0)?
        .m_mode_product(&ops.v_f, 1)?
        .m_mode_product(v_t, 2)
}

/// Absolute OFDM symbol indices covered by a window.
fn window_symbols(cfg: &SystemConfig, which: SftWindow) -> Vec<usize> {
    let base = cfg.frame_start_slot * cfg.symbols_per_slot;
    match which {
        SftWindow::Full => (0..cfg.frame_symbols()).map(|n| base + n).collect(),
        SftWindow::Pilot => (0..cfg.slots_per_frame)
            .map(|n| base + n * cfg.symbols_per_slot)
            .collect(),
    }
}

/// Exact continuous-parameter SFT channel, with no grid snapping:
/// `H[m,k,n] = sum_p gain_p e^{-j2pi m theta_p} e^{-j2pi (k0+k) df tau_p}
/// e^{j2pi nu_p t_n}`. Serves as ground truth for off-grid experiments.
pub fn sft_direct_offgrid(paths: &[Path], cfg: &SystemConfig, which: SftWindow) -> DenseTensor {
    let symbols = window_symbols(cfg, which);
    let m_count = cfg.antennas;
    let k_count = cfg.valid_subcarriers;
    let t_sym = cfg.symbol_duration();
    let mut out = DenseTensor::zeros(vec![m_count, k_count, symbols.len()]);
    for path in paths {
        let vs = steer_space(m_count, path.theta);
        let vf = steer_freq(
            k_count,
            cfg.first_subcarrier,
            cfg.subcarrier_spacing_hz,
            path.delay_s,
        );
        let vt: Vec<Complex64> = symbols
            .iter()
            .map(|&n| steer_time_at(path.doppler_hz, t_sym, n))
            .collect();
        let data = out.data_mut();
        let mut off = 0;
        for tn in &vt {
            let g_t = path.gain * tn;
            for fk in &vf {
                let g_tf = g_t * fk;
                for sm in &vs {
                    data[off] += g_tf * sm;
                    off += 1;
                }
            }
        }
    }
    out
}

/// Column of the triple-beam tensor at one grid cell, flattened to length
/// M*K*N_x in canonical order: `v[m + M(k + K n)] = V_s[m,a] V_f[k,d] V_t[n,v]`.
pub fn triple_beam_vector(
    ops: &BeamOperators,
    which: SftWindow,
    cell: (usize, usize, usize),
) -> Vec<Complex64> {
    let v_t = match which {
        SftWindow::Full => &ops.v_t_full,
        SftWindow::Pilot => &ops.v_t_pilot,
    };
    let (a, d, v) = cell;
    let m_count = ops.v_s.shape()[0];
    let k_count = ops.v_f.shape()[0];
    let n_count = v_t.shape()[0];
    let mut out = Vec::with_capacity(m_count * k_count * n_count);
    for n in 0..n_count {
        let tn = v_t.get(&[n, v]);
        for k in 0..k_count {
            let tf = tn * ops.v_f.get(&[k, d]);
            for m in 0..m_count {
                out.push(tf * ops.v_s.get(&[m, a]));
            }
        }
    }
    out
}

/// Dense SFT covariance from a TB power distribution:
/// `R[a1, a2] = sum_b W_b v_b[a1] conj(v_b[a2])` over the support of `w`,
/// a square 6-mode tensor. Refused above `cap` observation entries.
pub fn covariance_from_power(
    w: &DenseTensor,
    ops: &BeamOperators,
    which: SftWindow,
    cap: usize,
) -> Result<DenseTensor> {
    let n_count = match which {
        SftWindow::Full => ops.v_t_full.shape()[0],
        SftWindow::Pilot => ops.v_t_pilot.shape()[0],
    };
    let m_count = ops.v_s.shape()[0];
    let k_count = ops.v_f.shape()[0];
    let a_total = m_count * k_count * n_count;
    if a_total > cap {
        return Err(Error::SizeCapExceeded {
            size: a_total,
            cap,
        });
    }
    let shape = vec![
        m_count, k_count, n_count, m_count, k_count, n_count,
    ];
    let mut out = DenseTensor::zeros(shape);
    let grid_shape = w.shape().to_vec();
    for idx in w.support() {
        let cell = crate::tensor::unravel_index(&grid_shape, idx);
        let weight = w.data()[idx].re;
        let v = triple_beam_vector(ops, which, (cell[0], cell[1], cell[2]));
        let data = out.data_mut();
        for a2 in 0..a_total {
            let scaled = weight * v[a2].conj();
            let col = &mut data[a_total * a2..a_total * (a2 + 1)];
            for (dst, &va) in col.iter_mut().zip(&v) {
                *dst += va * scaled;
            }
        }
    }
    Ok(out)
}

/// Scenario generator settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GeneratorSettings {
    pub paths_per_ut: usize,
    /// Snap drawn path parameters onto the grid before synthesis.
    pub on_grid: bool,
    /// Exponential decay rate of the per-path power profile.
    pub decay: f64,
    /// Fraction of the directional-cosine range the angles are drawn from,
    /// in (0, 1]. Values below 1 crowd every UT into a narrow angular
    /// sector, which is what exhausts one-dimensional pilot scheduling.
    #[serde(default = "full_angle_spread")]
    pub angle_spread: f64,
}

fn full_angle_spread() -> f64 {
    1.0
}

impl Default for GeneratorSettings {
    fn default() -> Self {
        GeneratorSettings {
            paths_per_ut: 4,
            on_grid: false,
            decay: 0.7,
            angle_spread: 1.0,
        }
    }
}

/// Largest delay the generator draws: inside the CP, and far enough from the
/// delay-window edge that snapping stays below F_tau*N_f cells for every fine
/// factor (tau * K * df <= N_f - 1/2 suffices for all F_tau >= 1).
fn delay_draw_limit(cfg: &SystemConfig) -> f64 {
    let cp = cfg.cp_len as f64 * cfg.sample_interval();
    let safe = (cfg.delay_bins() as f64 - 0.5)
        / (cfg.valid_subcarriers as f64 * cfg.subcarrier_spacing_hz);
    cp.min(safe)
}

/// Largest |Doppler| the generator draws: keeps the snapped cell inside the
/// centered N_d*F_nu window for every fine factor up to 8.
fn doppler_draw_limit(cfg: &SystemConfig) -> f64 {
    let n_d = cfg.doppler_bins() as f64;
    let frame = cfg.frame_symbols() as f64 * cfg.symbol_duration();
    let mut bound = f64::INFINITY;
    for f in 1..=8 {
        let ff = f as f64;
        let b = ((n_d * ff / 2.0).ceil() - 0.5) / (ff * frame);
        bound = bound.min(b);
    }
    (cfg.nu_max() / 2.0).min(bound * (1.0 - 1e-9))
}

/// Draw a deterministic multipath scenario: per-path powers decay
/// exponentially and normalize to unit total per UT, gains are circular
/// complex Gaussians, angles are uniform in the cosine domain, delays uniform
/// within the CP, and Dopplers follow nu_max/2 * cos(uniform angle).
pub fn synthesize_scenario(
    cfg: &SystemConfig,
    grid: &TbGrid,
    gen: &GeneratorSettings,
    seed: u64,
) -> Vec<UserChannel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau_lim = delay_draw_limit(cfg);
    let nu_lim = doppler_draw_limit(cfg);
    let p_count = gen.paths_per_ut.max(1);

    // Normalized exponential power profile, shared by every UT.
    let mut profile: Vec<f64> = (0..p_count).map(|p| (-gen.decay * p as f64).exp()).collect();
    let total: f64 = profile.iter().sum();
    for p in &mut profile {
        *p /= total;
    }

    (0..cfg.users)
        .map(|_| {
            let paths: Vec<Path> = profile
                .iter()
                .map(|&power| {
                    let mut theta = (rng.random::<f64>() - 0.5) * gen.angle_spread.clamp(0.0, 1.0);
                    let mut delay_s = rng.random::<f64>() * tau_lim;
                    let psi = rng.random::<f64>() * TAU;
                    let mut doppler_hz =
                        (cfg.nu_max() / 2.0 * psi.cos()).clamp(-nu_lim, nu_lim);
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    let gain = Complex64::new(re, im) * (power / 2.0).sqrt();
                    if gen.on_grid {
                        theta = grid.theta_set()[grid.snap_theta(theta)];
                        delay_s = grid.tau_set()[grid.snap_tau(delay_s)];
                        doppler_hz = grid.nu_set()[grid.snap_nu(doppler_hz)];
                    }
                    Path {
                        gain,
                        theta,
                        delay_s,
                        doppler_hz,
                        power,
                    }
                })
                .collect();
            build_tb_channel(&paths, grid)
        })
        .collect()
}

/// Empirical TB power distribution: redraw the path gains `draws` times at
/// fixed snapped cells and average the per-cell energies. Test aid for the
/// analytic `w` of [`build_tb_channel`].
pub fn empirical_power(
    paths: &[Path],
    grid: &TbGrid,
    draws: usize,
    seed: u64,
) -> DenseTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = grid.tb_shape();
    let cells: Vec<[usize; 3]> = paths
        .iter()
        .map(|p| {
            let (a, d, v) = snap_path_to_grid(p, grid);
            [a, d, v]
        })
        .collect();
    let mut acc = DenseTensor::zeros(shape.clone());
    for _ in 0..draws {
        let mut h = DenseTensor::zeros(shape.clone());
        for (path, cell) in paths.iter().zip(&cells) {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let gain = Complex64::new(re, im) * (path.power / 2.0).sqrt();
            h.set(cell, h.get(cell) + gain);
        }
        for (a, v) in acc.data_mut().iter_mut().zip(h.data()) {
            *a += Complex64::new(v.norm_sqr(), 0.0);
        }
    }
    let scale = Complex64::new(1.0 / draws as f64, 0.0);
    acc.scale(scale)
}
