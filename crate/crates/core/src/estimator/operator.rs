//! Forward and adjoint observation operators.
//!
//! The forward map takes a TB tensor B to `sqrt(sigma_p) * X_T applied to
//! (V_t,p x_3 (V_f x_2 (V_s x_1 B)))` where `X_T` is the basic-pilot
//! diagonal. Every beam matrix is a (partial, shifted, possibly conjugated)
//! DFT matrix, so each mode product is one FFT per line with a rotation and
//! a row selection:
//!
//! * spatial: rotate by N_theta/2, forward FFT, keep the first M rows;
//! * frequency: forward FFT, keep rows k0..k0+K;
//! * time: rotate by N_nu/2, inverse FFT, gather rows (n + n_T) mod N_nu.
//!
//! The adjoint runs the conjugate steps in reverse (scatter instead of
//! gather, opposite transform direction, same rotations).

use super::{AggregateModel, OperatorMode};
use crate::error::{Error, Result};
use crate::tensor::DenseTensor;
use num_complex::Complex64;
use rustfft::Fft;
use std::sync::Arc;

/// Apply the observation operator to a TB tensor: output is M x K x N_p.
pub fn forward_operator(
    b: &DenseTensor,
    model: &AggregateModel,
    mode: OperatorMode,
) -> Result<DenseTensor> {
    if b.shape() != model.grid.tb_shape() {
        return Err(Error::ShapeMismatch {
            op: "forward_operator",
            detail: format!("{:?} vs grid {:?}", b.shape(), model.grid.tb_shape()),
        });
    }
    let out = match mode {
        OperatorMode::Naive => b
            .m_mode_product(&model.ops.v_s, 0)?
            .m_mode_product(&model.ops.v_f, 1)?
            .m_mode_product(&model.ops.v_t_pilot, 2)?,
        OperatorMode::Fft => {
            let grid = &model.grid;
            let cfg = &model.cfg;
            // Spatial: rotate, FFT, truncate to M.
            let s = fft_axis(
                b,
                0,
                cfg.antennas,
                &model.fft.fwd_theta,
                Some(grid.n_theta / 2),
                Gather { offset: 0 },
            );
            // Frequency: FFT, keep the valid-subcarrier rows.
            let f = fft_axis(
                &s,
                1,
                cfg.valid_subcarriers,
                &model.fft.fwd_tau,
                None,
                Gather { offset: cfg.first_subcarrier },
            );
            // Time: rotate, inverse FFT, gather the anchored pilot rows.
            fft_axis(
                &f,
                2,
                cfg.slots_per_frame,
                &model.fft.inv_nu,
                Some(grid.n_nu / 2),
                Gather { offset: cfg.frame_start_slot },
            )
        }
    };
    let scale = Complex64::new(model.sigma_p.sqrt(), 0.0);
    Ok(out
        .scale_axis(1, &model.basic.x_f)?
        .scale_axis(2, &model.x_t_rot)?
        .scale(scale))
}

/// Apply the adjoint of [`forward_operator`] to an observation tensor:
/// output lives on the TB grid.
pub fn adjoint_operator(
    c: &DenseTensor,
    model: &AggregateModel,
    mode: OperatorMode,
) -> Result<DenseTensor> {
    let want = model.observation_shape();
    if c.shape() != want {
        return Err(Error::ShapeMismatch {
            op: "adjoint_operator",
            detail: format!("{:?} vs observation {:?}", c.shape(), want),
        });
    }
    let scale = Complex64::new(model.sigma_p.sqrt(), 0.0);
    let xf_conj: Vec<Complex64> = model.basic.x_f.iter().map(|z| z.conj()).collect();
    let xt_conj: Vec<Complex64> = model.x_t_rot.iter().map(|z| z.conj()).collect();
    let pre = c
        .scale_axis(1, &xf_conj)?
        .scale_axis(2, &xt_conj)?
        .scale(scale);

    match mode {
        OperatorMode::Naive => {
            let vs_h = model.ops.v_s.m_hermitian(1)?;
            let vf_h = model.ops.v_f.m_hermitian(1)?;
            let vt_h = model.ops.v_t_pilot.m_hermitian(1)?;
            pre.m_mode_product(&vs_h, 0)?
                .m_mode_product(&vf_h, 1)?
                .m_mode_product(&vt_h, 2)
        }
        OperatorMode::Fft => {
            let grid = &model.grid;
            let cfg = &model.cfg;
            // Time: scatter to anchored rows, forward FFT, rotate output.
            let t = ifft_axis(
                &pre,
                2,
                grid.n_nu,
                &model.fft.fwd_nu,
                Some(grid.n_nu / 2),
                Gather { offset: cfg.frame_start_slot },
            );
            // Frequency: scatter to the valid rows, inverse FFT.
            let f = ifft_axis(
                &t,
                1,
                grid.n_tau,
                &model.fft.inv_tau,
                None,
                Gather { offset: cfg.first_subcarrier },
            );
            // Spatial: zero-pad, inverse FFT, rotate output.
            Ok(ifft_axis(
                &f,
                0,
                grid.n_theta,
                &model.fft.inv_theta,
                Some(grid.n_theta / 2),
                Gather { offset: 0 },
            ))
        }
    }
}

/// Row selection tying a short axis to its full-length transform: logical
/// row `n` maps to transform row `(n + offset) mod full_len`. DFT rows are
/// periodic, so the valid-subcarrier offset and the frame anchor both reduce
/// modularly.
#[derive(Clone, Copy)]
struct Gather {
    offset: usize,
}

impl Gather {
    fn row(self, n: usize, full_len: usize) -> usize {
        (n + self.offset) % full_len
    }
}

/// Forward direction: lines of length `full` along `axis` are (optionally)
/// rotated, transformed, and reduced to `out_len` selected rows.
fn fft_axis(
    input: &DenseTensor,
    axis: usize,
    out_len: usize,
    plan: &Arc<dyn Fft<f64>>,
    rotate_input: Option<usize>,
    gather: Gather,
) -> DenseTensor {
    let shape = input.shape();
    let full = shape[axis];
    let pre: usize = shape[..axis].iter().product();
    let post: usize = shape[axis + 1..].iter().product();
    let mut out_shape = shape.to_vec();
    out_shape[axis] = out_len;
    let mut out = vec![Complex64::ZERO; pre * out_len * post];
    let mut line = vec![Complex64::ZERO; full];
    let mut scratch = vec![Complex64::ZERO; plan.get_inplace_scratch_len()];
    let rot = rotate_input.unwrap_or(0);

    let src = input.data();
    for cpost in 0..post {
        for a in 0..pre {
            for i in 0..full {
                let j = (i + rot) % full;
                line[i] = src[a + pre * (j + full * cpost)];
            }
            plan.process_with_scratch(&mut line, &mut scratch);
            for n in 0..out_len {
                let r = gather.row(n, full);
                out[a + pre * (n + out_len * cpost)] = line[r];
            }
        }
    }
    DenseTensor::new(out_shape, out).expect("consistent shape")
}

/// Adjoint direction: lines of length `in_len` along `axis` are scattered to
/// the selected rows of a zero `full`-length buffer, transformed, and
/// (optionally) rotated on output.
fn ifft_axis(
    input: &DenseTensor,
    axis: usize,
    full: usize,
    plan: &Arc<dyn Fft<f64>>,
    rotate_output: Option<usize>,
    gather: Gather,
) -> DenseTensor {
    let shape = input.shape();
    let in_len = shape[axis];
    let pre: usize = shape[..axis].iter().product();
    let post: usize = shape[axis + 1..].iter().product();
    let mut out_shape = shape.to_vec();
    out_shape[axis] = full;
    let mut out = vec![Complex64::ZERO; pre * full * post];
    let mut line = vec![Complex64::ZERO; full];
    let mut scratch = vec![Complex64::ZERO; plan.get_inplace_scratch_len()];
    let rot = rotate_output.unwrap_or(0);

    let src = input.data();
    for cpost in 0..post {
        for a in 0..pre {
            line.fill(Complex64::ZERO);
            for n in 0..in_len {
                let r = gather.row(n, full);
                line[r] = src[a + pre * (n + in_len * cpost)];
            }
            plan.process_with_scratch(&mut line, &mut scratch);
            for i in 0..full {
                let j = (i + rot) % full;
                out[a + pre * (i + full * cpost)] = line[j];
            }
        }
    }
    DenseTensor::new(out_shape, out).expect("consistent shape")
}
