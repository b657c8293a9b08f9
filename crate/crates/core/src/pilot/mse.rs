//! Closed-form estimation MSE for a pilot assignment, on size-capped
//! instances.

use super::{equivalent_shift, PilotAssignment};
use crate::channel::{BeamOperators, SftWindow, SystemConfig, TbGrid, UserChannel};
use crate::error::{Error, Result};
use crate::linalg::{lu_solve, observation_len, product_trace, sft_covariance};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Ridge added to the regularizer so near-singular interference covariances
/// stay invertible; orders of magnitude below every tested tolerance.
const DIAG_RIDGE: f64 = 1e-12;

/// Per-assignment channel-estimation MSE and its interference-free lower
/// bound, both summed over UTs:
///
/// `eps     = sum_u tr{R_u - R_u C_u,all^-1 R_u}` with
/// `C_u,all = R_u + sum_{u'!=u} R_{u,u'} + (sigma_z/sigma_p) I`, and
/// `eps_min = sum_u tr{R_u - R_u (R_u + (sigma_z/sigma_p) I)^-1 R_u}`.
///
/// `R_{u,u'}` is the covariance of UT u''s channel seen through UT u's
/// pilot: its TB power distribution cyclically shifted by the phase-shift
/// differences. Dense 6-mode algebra, refused above `cap` observation rows.
pub fn mse_theoretical(
    channels: &[UserChannel],
    assignment: &PilotAssignment,
    cfg: &SystemConfig,
    ops: &BeamOperators,
    grid: &TbGrid,
    cap: usize,
) -> Result<(f64, f64)> {
    let a_total = observation_len(ops, SftWindow::Pilot);
    if a_total > cap {
        return Err(Error::SizeCapExceeded {
            size: a_total,
            cap,
        });
    }
    if channels.len() != assignment.pairs.len() {
        return Err(Error::InvalidConfig(format!(
            "{} channels vs {} assignment pairs",
            channels.len(),
            assignment.pairs.len()
        )));
    }

    let reg = cfg.noise_var / cfg.pilot_power + DIAG_RIDGE;
    let eye = DMatrix::<Complex64>::identity(a_total, a_total);
    let mut eps = 0.0;
    let mut eps_min = 0.0;
    for (u, ch) in channels.iter().enumerate() {
        let r_u = sft_covariance(ops, SftWindow::Pilot, &ch.w);
        let mut c_all = &eye * Complex64::new(reg, 0.0) + &r_u;
        for (v, other) in channels.iter().enumerate() {
            if v == u {
                continue;
            }
            let d_phi = assignment.pairs[v].freq as i64 - assignment.pairs[u].freq as i64;
            let d_var = assignment.pairs[v].time as i64 - assignment.pairs[u].time as i64;
            let w_shifted = equivalent_shift(&other.w, d_phi, d_var, grid)?;
            c_all += sft_covariance(ops, SftWindow::Pilot, &w_shifted);
        }
        let tr_r = r_u.trace();
        let x_all = lu_solve(c_all, &r_u)?;
        eps += (tr_r - product_trace(&r_u, &x_all)).re;

        let c_min = &eye * Complex64::new(reg, 0.0) + &r_u;
        let x_min = lu_solve(c_min, &r_u)?;
        eps_min += (tr_r - product_trace(&r_u, &x_min)).re;
    }
    Ok((eps, eps_min))
}
