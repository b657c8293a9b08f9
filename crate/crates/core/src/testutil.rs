//! Shared fixtures for unit tests.

use crate::channel::SystemConfig;
use crate::tensor::DenseTensor;

/// Small configuration whose dense oracles run in microseconds:
/// M=4, K=8, N_p=4, N_b=2, N_f = 1.
pub fn tiny_cfg() -> SystemConfig {
    SystemConfig {
        antennas: 4,
        users: 2,
        carrier_hz: 5.8e9,
        subcarriers: 32,
        cp_len: 4,
        valid_subcarriers: 8,
        first_subcarrier: 4,
        subcarrier_spacing_hz: 15e3,
        symbols_per_slot: 2,
        slots_per_frame: 4,
        max_speed_mps: 2.0,
        pilot_power: 1.0,
        noise_var: 0.01,
        frame_start_slot: 0,
    }
}

pub fn max_abs_diff(a: &DenseTensor, b: &DenseTensor) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
