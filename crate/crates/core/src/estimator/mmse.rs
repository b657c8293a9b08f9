//! Dense MMSE solves on size-capped instances.

use super::AggregateModel;
use crate::channel::{SftWindow, UserChannel};
use crate::error::{Error, Result};
use crate::linalg::{beam_columns, lu_solve, to_vector};
use crate::pilot::{freq_pilot, time_pilot_window, PilotAssignment};
use crate::tensor::DenseTensor;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Default ceiling on the observation dimension for dense A x A solves.
pub const DEFAULT_MMSE_CAP: usize = 4096;

/// Scale observation-row `a = m + M(k + K n)` of a beam-column matrix by
/// `sqrt(sigma_p) * xf[k] * xt[n]`, producing the flattened operator.
fn modulate_rows(
    mut mat: DMatrix<Complex64>,
    m_count: usize,
    k_count: usize,
    xf: &[Complex64],
    xt: &[Complex64],
    sigma_p: f64,
) -> DMatrix<Complex64> {
    let root = Complex64::new(sigma_p.sqrt(), 0.0);
    for a in 0..mat.nrows() {
        let k = (a / m_count) % k_count;
        let n = a / (m_count * k_count);
        let w = root * xf[k] * xt[n];
        for e in mat.row_mut(a).iter_mut() {
            *e *= w;
        }
    }
    mat
}

/// Solve `(A R A^H + sigma_z I) x = y` for the aggregate model and return
/// both `x` and the support-restricted operator `A_S`.
fn whitened_observation(
    y: &DenseTensor,
    model: &AggregateModel,
    cap: usize,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let a_total = model.observation_len();
    if a_total > cap {
        return Err(Error::SizeCapExceeded {
            size: a_total,
            cap,
        });
    }
    let cols = beam_columns(&model.ops, SftWindow::Pilot, model.w.shape(), &model.support);
    let a_s = modulate_rows(
        cols,
        model.cfg.antennas,
        model.cfg.valid_subcarriers,
        &model.basic.x_f,
        &model.x_t_rot,
        model.sigma_p,
    );
    // A diag(w) A^H + sigma_z I
    let mut aw = a_s.clone();
    for (j, &cell) in model.support.iter().enumerate() {
        let w = Complex64::new(model.w.data()[cell].re, 0.0);
        for e in aw.column_mut(j).iter_mut() {
            *e *= w;
        }
    }
    let mut gram = &aw * a_s.adjoint();
    for i in 0..a_total {
        gram[(i, i)] += Complex64::new(model.sigma_z, 0.0);
    }
    let rhs = DMatrix::from_column_slice(a_total, 1, to_vector(y).as_slice());
    let x = lu_solve(gram, &rhs)?;
    Ok((x, a_s))
}

/// Aggregate MMSE estimate `R A^H (A R A^H + sigma_z I)^-1 y`, flattened to
/// matrices in canonical order. Refused above `cap` observation rows.
pub fn mmse_oracle(y: &DenseTensor, model: &AggregateModel, cap: usize) -> Result<DenseTensor> {
    let (x, a_s) = whitened_observation(y, model, cap)?;
    let proj = a_s.adjoint() * &x;
    let mut out = DenseTensor::zeros(model.grid.tb_shape());
    for (j, &cell) in model.support.iter().enumerate() {
        out.data_mut()[cell] = model.w.data()[cell].re * proj[(j, 0)];
    }
    Ok(out)
}

/// Per-UT MMSE estimates through each UT's own pilot-modulated operator:
/// `R_u A_u^H (A R A^H + sigma_z I)^-1 y` with `A_u` built from the UT's
/// phase-shifted pilots on its unshifted support.
pub fn per_ut_mmse_oracle(
    y: &DenseTensor,
    model: &AggregateModel,
    channels: &[UserChannel],
    assignment: &PilotAssignment,
    cap: usize,
) -> Result<Vec<DenseTensor>> {
    let (x, _) = whitened_observation(y, model, cap)?;
    channels
        .iter()
        .zip(&assignment.pairs)
        .map(|(ch, pair)| {
            let cols = beam_columns(&model.ops, SftWindow::Pilot, ch.w.shape(), &ch.support);
            let xf = freq_pilot(pair.freq, &model.basic, &model.cfg);
            let xt = time_pilot_window(pair.time, &model.basic, &model.cfg);
            let a_u = modulate_rows(
                cols,
                model.cfg.antennas,
                model.cfg.valid_subcarriers,
                &xf,
                &xt,
                model.sigma_p,
            );
            let proj = a_u.adjoint() * &x;
            let mut out = DenseTensor::zeros(model.grid.tb_shape());
            for (j, &cell) in ch.support.iter().enumerate() {
                out.data_mut()[cell] = ch.w.data()[cell].re * proj[(j, 0)];
            }
            Ok(out)
        })
        .collect()
}
