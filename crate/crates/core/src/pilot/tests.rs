use super::*;
use crate::channel::{
    build_beam_operators, build_tb_channel, synthesize_scenario, tb_to_sft, GeneratorSettings,
    Path, SftWindow, SystemConfig, TbGrid,
};
use crate::testutil::{max_abs_diff, tiny_cfg};
use num_complex::Complex64;
use std::f64::consts::TAU;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn zc_sequence_small_example() {
    let seq = zc_sequence(3, 1).unwrap();
    assert!((seq[0] - c(1.0, 0.0)).norm() < 1e-15);
    let want = Complex64::from_polar(1.0, TAU * 2.0 / 3.0);
    assert!((seq[1] - want).norm() < 1e-15);
    assert!((seq[2] - c(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn zc_sequence_unit_modulus_and_periodicity() {
    for (n, root) in [(8usize, 1u64), (4, 3), (360, 7)] {
        let seq = zc_sequence(n, root).unwrap();
        let parity = (n % 2) as f64;
        for (i, z) in seq.iter().enumerate() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
            // Periodic extension: evaluating the raw formula at i + n gives
            // the same entry.
            let ext = i as f64 + n as f64;
            let want = Complex64::from_polar(1.0, TAU * root as f64 * ext * (ext + parity) / n as f64);
            assert!((z - want).norm() < 1e-9, "n={n} root={root} i={i}");
        }
    }
}

#[test]
fn zc_sequence_rejects_non_coprime_root() {
    assert!(matches!(
        zc_sequence(4, 2),
        Err(crate::error::Error::NonCoprimeRoot { .. })
    ));
    assert_eq!(default_zc_root(8), 1);
}

#[test]
fn freq_pilot_phase_arithmetic() {
    let cfg = tiny_cfg();
    let basic = BasicSequences::new(&cfg).unwrap();

    let zero = freq_pilot(0, &basic, &cfg);
    for (a, b) in zero.iter().zip(&basic.x_f) {
        assert!((a - b).norm() < 1e-15);
    }
    let x3 = freq_pilot(3, &basic, &cfg);
    let x5 = freq_pilot(5, &basic, &cfg);
    let ramp = freq_phase_ramp(2, &cfg);
    for k in 0..cfg.valid_subcarriers {
        assert!((x3[k].norm() - 1.0).abs() < 1e-12);
        // conj(x_u) ⊙ x_u' equals the ramp at the phase difference.
        assert!((x3[k].conj() * x5[k] - ramp[k]).norm() < 1e-12);
    }
}

#[test]
fn time_pilot_window_rotation() {
    let mut cfg = tiny_cfg();
    let basic = BasicSequences::new(&cfg).unwrap();

    let plain = time_pilot_window(0, &basic, &cfg);
    for (a, b) in plain.iter().zip(&basic.x_t) {
        assert!((a - b).norm() < 1e-15);
    }

    // Anchoring one full period later changes nothing.
    cfg.frame_start_slot = cfg.slots_per_frame;
    let wrapped = time_pilot_window(2, &basic, &cfg);
    cfg.frame_start_slot = 0;
    let base = time_pilot_window(2, &basic, &cfg);
    for (a, b) in wrapped.iter().zip(&base) {
        assert!((a - b).norm() < 1e-15);
    }

    // Pairwise product: conj(x_u,T) ⊙ x_u',T is the rotated difference ramp.
    cfg.frame_start_slot = 3;
    let xu = time_pilot_window(1, &basic, &cfg);
    let xv = time_pilot_window(3, &basic, &cfg);
    let ramp = time_phase_ramp(2, &cfg);
    for n in 0..cfg.slots_per_frame {
        let want = ramp[(n + cfg.frame_start_slot) % cfg.slots_per_frame];
        assert!((xu[n].conj() * xv[n] - want).norm() < 1e-12);
    }
}

#[test]
fn psop_check_orthogonal_and_colliding() {
    let cfg = SystemConfig::desk_scale();
    let basic = BasicSequences::new(&cfg).unwrap();
    let n_f = cfg.delay_bins();
    let slots = cfg.valid_subcarriers / n_f;

    let pairs: Vec<PhaseShiftPair> = (0..slots)
        .map(|u| PhaseShiftPair {
            freq: u * n_f,
            time: 0,
        })
        .collect();
    let mut cfg_n = cfg.clone();
    cfg_n.users = pairs.len();
    let check = psop_orthogonality_check(&PilotAssignment::new(pairs), &basic, &cfg_n);
    assert!(check.orthogonal, "max trace {}", check.max_trace);
    assert!(check.sufficient_condition);

    // Two UTs sharing a phase shift collide at lag zero.
    let mut cfg2 = cfg.clone();
    cfg2.users = 2;
    let shared = PilotAssignment::new(vec![
        PhaseShiftPair { freq: 5, time: 0 },
        PhaseShiftPair { freq: 5, time: 0 },
    ]);
    let check = psop_orthogonality_check(&shared, &basic, &cfg2);
    assert!(!check.orthogonal);
    assert!(!check.sufficient_condition);
    assert!(check.max_trace > cfg.valid_subcarriers as f64 * 0.99);
}

#[test]
fn received_signal_single_ut_noiseless_recovers_channel() {
    let mut cfg = tiny_cfg();
    cfg.users = 1;
    cfg.noise_var = 0.0;
    cfg.pilot_power = 2.25;
    let grid = TbGrid::new(&cfg, 1, 1, 1).unwrap();
    let basic = BasicSequences::new(&cfg).unwrap();
    let gen = GeneratorSettings {
        paths_per_ut: 3,
        on_grid: false,
        decay: 0.5,
        angle_spread: 1.0,
    };
    let channels = synthesize_scenario(&cfg, &grid, &gen, 17);
    let assignment = PilotAssignment::all_zero(1);
    let rx = tfpsp_received_signal(&channels, &assignment, &basic, &cfg, 0).unwrap();

    // Removing the known unit-modulus pilots recovers sqrt(sigma_p) * H.
    let xf: Vec<Complex64> = freq_pilot(0, &basic, &cfg).iter().map(|z| z.conj()).collect();
    let xt: Vec<Complex64> = time_pilot_window(0, &basic, &cfg)
        .iter()
        .map(|z| z.conj())
        .collect();
    let cleaned = rx
        .y
        .scale_axis(1, &xf)
        .unwrap()
        .scale_axis(2, &xt)
        .unwrap()
        .scale(c(1.0 / cfg.pilot_power.sqrt(), 0.0));
    let truth = crate::channel::sft_direct_offgrid(&channels[0].paths, &cfg, SftWindow::Pilot);
    assert!(max_abs_diff(&cleaned, &truth) < 1e-12);
}

#[test]
fn received_signal_noise_variance_and_superposition() {
    let mut cfg = tiny_cfg();
    cfg.users = 0;
    cfg.noise_var = 0.34;
    let basic = BasicSequences::new(&cfg).unwrap();
    let empty = PilotAssignment::new(vec![]);
    let mut acc = 0.0;
    let mut count = 0usize;
    for seed in 0..100 {
        let rx = tfpsp_received_signal(&[], &empty, &basic, &cfg, seed).unwrap();
        acc += rx.y.norm_sq();
        count += rx.y.len();
    }
    let var = acc / count as f64;
    assert!(
        (var - cfg.noise_var).abs() / cfg.noise_var < 0.05,
        "empirical noise variance {var}"
    );

    // Linearity: the two-UT signal is the sum of the single-UT signals.
    let mut cfg2 = tiny_cfg();
    cfg2.noise_var = 0.0;
    let grid = TbGrid::new(&cfg2, 1, 1, 1).unwrap();
    let basic2 = BasicSequences::new(&cfg2).unwrap();
    let gen = GeneratorSettings::default();
    let channels = synthesize_scenario(&cfg2, &grid, &gen, 9);
    let assignment = PilotAssignment::new(vec![
        PhaseShiftPair { freq: 1, time: 2 },
        PhaseShiftPair { freq: 4, time: 1 },
    ]);
    let both = tfpsp_received_signal(&channels, &assignment, &basic2, &cfg2, 0).unwrap();
    let mut cfg_single = cfg2.clone();
    cfg_single.users = 1;
    let a = tfpsp_received_signal(
        &channels[..1],
        &PilotAssignment::new(vec![assignment.pairs[0]]),
        &basic2,
        &cfg_single,
        0,
    )
    .unwrap();
    let b = tfpsp_received_signal(
        &channels[1..],
        &PilotAssignment::new(vec![assignment.pairs[1]]),
        &basic2,
        &cfg_single,
        0,
    )
    .unwrap();
    let sum = a.y.add(&b.y).unwrap();
    assert!(max_abs_diff(&both.y, &sum) < 1e-12);
}

#[test]
fn forcing_time_shifts_to_zero_is_the_frequency_only_signal() {
    let mut cfg = tiny_cfg();
    cfg.noise_var = 0.0;
    let grid = TbGrid::new(&cfg, 1, 1, 1).unwrap();
    let basic = BasicSequences::new(&cfg).unwrap();
    let channels = synthesize_scenario(&cfg, &grid, &GeneratorSettings::default(), 3);
    let assignment = PilotAssignment::new(vec![
        PhaseShiftPair { freq: 2, time: 0 },
        PhaseShiftPair { freq: 6, time: 0 },
    ]);
    let tf = tfpsp_received_signal(&channels, &assignment, &basic, &cfg, 0).unwrap();

    // Frequency-only transmission (identity time modulation) followed by the
    // known basic time sequence gives the same observation.
    let mut freq_only = crate::tensor::DenseTensor::zeros(vec![
        cfg.antennas,
        cfg.valid_subcarriers,
        cfg.slots_per_frame,
    ]);
    for (ch, pair) in channels.iter().zip(&assignment.pairs) {
        let h = crate::channel::sft_direct_offgrid(&ch.paths, &cfg, SftWindow::Pilot);
        let xf = freq_pilot(pair.freq, &basic, &cfg);
        freq_only = freq_only.add(&h.scale_axis(1, &xf).unwrap()).unwrap();
    }
    let rhs = freq_only
        .scale_axis(2, &basic.x_t)
        .unwrap()
        .scale(c(cfg.pilot_power.sqrt(), 0.0));
    assert!(max_abs_diff(&tf.y, &rhs) < 1e-12);
}

#[test]
fn equivalent_shift_identities() {
    let cfg = tiny_cfg();
    let grid = TbGrid::new(&cfg, 2, 2, 1).unwrap();
    let channels = synthesize_scenario(&cfg, &grid, &GeneratorSettings::default(), 5);
    let w = &channels[0].w;

    let same = equivalent_shift(w, 0, 0, &grid).unwrap();
    assert_eq!(same.data(), w.data());

    let shifted = equivalent_shift(w, 3, 2, &grid).unwrap();
    let back = equivalent_shift(&shifted, -3, -2, &grid).unwrap();
    assert_eq!(back.data(), w.data());
}

#[test]
fn pilot_modulation_acts_as_tb_cyclic_shift() {
    // Cross-modulating the SFT channel of UT v by UT u's conjugate pilots
    // equals synthesizing v's TB tensor shifted by the phase differences.
    let mut cfg = tiny_cfg();
    cfg.frame_start_slot = 2;
    for f in [1usize, 2] {
        let grid = TbGrid::new(&cfg, f, f, f).unwrap();
        let ops = build_beam_operators(&cfg, &grid).unwrap();
        let basic = BasicSequences::new(&cfg).unwrap();
        let gen = GeneratorSettings {
            paths_per_ut: 3,
            on_grid: true,
            decay: 0.4,
            angle_spread: 1.0,
        };
        let ch = &synthesize_scenario(&cfg, &grid, &gen, 23)[0];
        let h_sft = tb_to_sft(&ch.h_tb, &ops, SftWindow::Pilot).unwrap();

        for (phi_u, var_u, phi_v, var_v) in [(0usize, 0usize, 3usize, 1usize), (5, 2, 1, 3)] {
            let xf_u = freq_pilot(phi_u, &basic, &cfg);
            let xf_v = freq_pilot(phi_v, &basic, &cfg);
            let xt_u = time_pilot_window(var_u, &basic, &cfg);
            let xt_v = time_pilot_window(var_v, &basic, &cfg);
            let xf_cross: Vec<Complex64> =
                xf_u.iter().zip(&xf_v).map(|(a, b)| a.conj() * b).collect();
            let xt_cross: Vec<Complex64> =
                xt_u.iter().zip(&xt_v).map(|(a, b)| a.conj() * b).collect();
            let lhs = h_sft
                .scale_axis(1, &xf_cross)
                .unwrap()
                .scale_axis(2, &xt_cross)
                .unwrap();

            let shifted = equivalent_shift(
                &ch.h_tb,
                phi_v as i64 - phi_u as i64,
                var_v as i64 - var_u as i64,
                &grid,
            )
            .unwrap();
            let rhs = tb_to_sft(&shifted, &ops, SftWindow::Pilot).unwrap();
            assert!(
                max_abs_diff(&lhs, &rhs) < 1e-10,
                "F={f} pair ({phi_u},{var_u})->({phi_v},{var_v})"
            );
        }
    }
}

#[test]
fn overlap_eta_examples_and_properties() {
    let t = |v: &[f64]| {
        crate::tensor::DenseTensor::new(
            vec![v.len()],
            v.iter().map(|&x| c(x, 0.0)).collect(),
        )
        .unwrap()
    };

    assert_eq!(overlap_eta(&t(&[1.0, 0.0]), &t(&[0.0, 2.0])).unwrap(), 0.0);

    let a = t(&[0.5, 1.5, 0.0, 2.0]);
    let b = a.scale(c(3.0, 0.0));
    assert!((overlap_eta(&a, &b).unwrap() - 1.0).abs() < 1e-12);

    let eta = overlap_eta(&t(&[1.0, 1.0, 0.0]), &t(&[0.0, 1.0, 1.0])).unwrap();
    assert!((eta - 0.5).abs() < 1e-12);

    // Symmetry, scale invariance, bounds.
    let p = t(&[0.2, 0.0, 1.0, 0.4]);
    let q = t(&[0.1, 0.7, 0.3, 0.0]);
    let e1 = overlap_eta(&p, &q).unwrap();
    let e2 = overlap_eta(&q, &p).unwrap();
    assert!((e1 - e2).abs() < 1e-15);
    let e3 = overlap_eta(&p.scale(c(7.0, 0.0)), &q).unwrap();
    assert!((e1 - e3).abs() < 1e-12);
    assert!(e1 > 0.0 && e1 < 1.0);

    assert!(matches!(
        overlap_eta(&t(&[0.0, 0.0]), &t(&[1.0, 0.0])),
        Err(crate::error::Error::ZeroPowerOverlap)
    ));
}

#[test]
fn theorem1_condition_cases() {
    let mut cfg = tiny_cfg();
    cfg.users = 1;
    let grid = TbGrid::new(&cfg, 1, 1, 1).unwrap();
    let channels = synthesize_scenario(&cfg, &grid, &GeneratorSettings::default(), 2);
    let (ok, eta) = theorem1_condition(&channels, &PilotAssignment::all_zero(1), &grid).unwrap();
    assert!(ok);
    assert_eq!(eta, 0.0);

    // Identical power distributions with identical phases overlap fully.
    let two = vec![channels[0].clone(), channels[0].clone()];
    let (ok, eta) = theorem1_condition(&two, &PilotAssignment::all_zero(2), &grid).unwrap();
    assert!(!ok);
    assert!((eta - 1.0).abs() < 1e-12);

    // A single-cell power distribution separates under a unit time shift.
    let path = Path {
        gain: c(1.0, 0.0),
        theta: 0.0,
        delay_s: 0.0,
        doppler_hz: 0.0,
        power: 1.0,
    };
    let ch = build_tb_channel(&[path], &grid);
    let pair = vec![ch.clone(), ch];
    let sep = PilotAssignment::new(vec![
        PhaseShiftPair { freq: 0, time: 0 },
        PhaseShiftPair { freq: 0, time: 1 },
    ]);
    let (ok, eta) = theorem1_condition(&pair, &sep, &grid).unwrap();
    assert!(ok, "eta = {eta}");
}

#[test]
fn mse_single_ut_meets_lower_bound() {
    let mut cfg = tiny_cfg();
    cfg.users = 1;
    let grid = TbGrid::new(&cfg, 1, 1, 1).unwrap();
    let ops = build_beam_operators(&cfg, &grid).unwrap();
    let channels = synthesize_scenario(&cfg, &grid, &GeneratorSettings::default(), 8);
    let (eps, eps_min) = mse_theoretical(
        &channels,
        &PilotAssignment::all_zero(1),
        &cfg,
        &ops,
        &grid,
        4096,
    )
    .unwrap();
    assert!(eps > 0.0);
    assert!((eps - eps_min).abs() / eps_min < 1e-10);
}

#[test]
fn mse_interference_strictly_exceeds_bound() {
    let cfg = tiny_cfg();
    let grid = TbGrid::new(&cfg, 1, 1, 1).unwrap();
    let ops = build_beam_operators(&cfg, &grid).unwrap();
    let channels = synthesize_scenario(&cfg, &grid, &GeneratorSettings::default(), 8);
    let two = vec![channels[0].clone(), channels[0].clone()];
    let (eps, eps_min) =
        mse_theoretical(&two, &PilotAssignment::all_zero(2), &cfg, &ops, &grid, 4096).unwrap();
    assert!(eps > eps_min * 1.01, "eps {eps} vs bound {eps_min}");

    assert!(matches!(
        mse_theoretical(&two, &PilotAssignment::all_zero(2), &cfg, &ops, &grid, 10),
        Err(crate::error::Error::SizeCapExceeded { .. })
    ));
}

#[test]
fn assignment_round_trip_and_validation() {
    let mut cfg = tiny_cfg();
    cfg.users = 3;
    let a = PilotAssignment::new(vec![
        PhaseShiftPair { freq: 0, time: 0 },
        PhaseShiftPair { freq: 3, time: 1 },
        PhaseShiftPair { freq: 6, time: 2 },
    ]);
    assert!(a.validate_against(&cfg).is_ok());
    let text = a.to_json().unwrap();
    let back = PilotAssignment::from_json(&text).unwrap();
    assert_eq!(a, back);

    let bad = PilotAssignment::new(vec![PhaseShiftPair { freq: 99, time: 0 }; 3]);
    assert!(bad.validate_against(&cfg).is_err());
}
