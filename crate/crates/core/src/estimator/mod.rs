//! Aggregate-channel estimation.
//!
//! All UTs' shifted TB tensors superpose into one aggregate tensor observed
//! through a single linear operator built from the basic pilots and the beam
//! matrices. This module provides that operator (dense and FFT-backed), a
//! dense MMSE oracle for size-capped instances, an iterative estimator whose
//! fixed point matches the MMSE solution, per-UT recovery from the aggregate
//! estimate, and data-segment channel prediction.

mod iga;
mod mmse;
mod operator;

pub use iga::{iga_run, iga_step, EstimatorConfig, IgaDiagnostics, IgaState, SonpVariant};
#[cfg(test)]
pub(crate) use iga::variances;
pub use mmse::{mmse_oracle, per_ut_mmse_oracle, DEFAULT_MMSE_CAP};
pub use operator::{adjoint_operator, forward_operator};

use crate::channel::{build_beam_operators, BeamOperators, SystemConfig, TbGrid, UserChannel};
use crate::error::{Error, Result};
use crate::pilot::{equivalent_shift, BasicSequences, PilotAssignment};
use crate::tensor::{DenseTensor, PseudoDiagTensor};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// How the forward/adjoint operators are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorMode {
    /// Multi-dimensional FFT fast path.
    Fft,
    /// Materialized beam-matrix mode products.
    Naive,
}

/// FFT plans for the three grid lengths, shared across applications.
#[derive(Clone)]
pub(crate) struct FftSet {
    pub fwd_theta: Arc<dyn Fft<f64>>,
    pub inv_theta: Arc<dyn Fft<f64>>,
    pub fwd_tau: Arc<dyn Fft<f64>>,
    pub inv_tau: Arc<dyn Fft<f64>>,
    pub fwd_nu: Arc<dyn Fft<f64>>,
    pub inv_nu: Arc<dyn Fft<f64>>,
}

impl FftSet {
    fn new(grid: &TbGrid) -> Self {
        let mut planner = FftPlanner::new();
        FftSet {
            fwd_theta: planner.plan_fft_forward(grid.n_theta),
            inv_theta: planner.plan_fft_inverse(grid.n_theta),
            fwd_tau: planner.plan_fft_forward(grid.n_tau),
            inv_tau: planner.plan_fft_inverse(grid.n_tau),
            fwd_nu: planner.plan_fft_forward(grid.n_nu),
            inv_nu: planner.plan_fft_inverse(grid.n_nu),
        }
    }
}

/// The aggregate observation model: beam operators, basic pilot diagonal,
/// aggregate power distribution with its support, and noise/pilot powers.
#[derive(Clone)]
pub struct AggregateModel {
    pub cfg: SystemConfig,
    pub grid: TbGrid,
    pub ops: BeamOperators,
    pub basic: BasicSequences,
    /// Basic time pilot rotated to the frame anchor:
    /// `x_t_rot[n] = x_t[(n + n_T) mod N_p]`.
    pub x_t_rot: Vec<Complex64>,
    /// Aggregate power: sum of the shifted per-UT distributions.
    pub w: DenseTensor,
    /// Sorted linear TB indices of the non-zero cells of `w`.
    pub support: Vec<usize>,
    pub sigma_p: f64,
    pub sigma_z: f64,
    pub(crate) fft: FftSet,
}

impl AggregateModel {
    /// Build the model for a scheduled scenario: the aggregate power is the
    /// sum of every UT's power distribution shifted by its phase pair.
    pub fn new(
        cfg: &SystemConfig,
        grid: &TbGrid,
        channels: &[UserChannel],
        assignment: &PilotAssignment,
    ) -> Result<Self> {
        if channels.len() != assignment.pairs.len() {
            return Err(Error::InvalidConfig(format!(
                "{} channels vs {} assignment pairs",
                channels.len(),
                assignment.pairs.len()
            )));
        }
        let mut w = DenseTensor::zeros(grid.tb_shape());
        for (ch, pair) in channels.iter().zip(&assignment.pairs) {
            let shifted = equivalent_shift(&ch.w, pair.freq as i64, pair.time as i64, grid)?;
            w = w.add(&shifted)?;
        }
        Self::from_power(cfg, grid, w)
    }

    /// Build the model from an explicit aggregate power distribution.
    pub fn from_power(cfg: &SystemConfig, grid: &TbGrid, w: DenseTensor) -> Result<Self> {
        if w.shape() != grid.tb_shape() {
            return Err(Error::ShapeMismatch {
                op: "aggregate model",
                detail: format!("power shape {:?} vs grid {:?}", w.shape(), grid.tb_shape()),
            });
        }
        if cfg.antennas * cfg.valid_subcarriers * cfg.slots_per_frame < 2 {
            return Err(Error::InvalidConfig(
                "observation dimension must be at least 2".into(),
            ));
        }
        let ops = build_beam_operators(cfg, grid)?;
        let basic = BasicSequences::new(cfg)?;
        let n_p = cfg.slots_per_frame;
        let x_t_rot = (0..n_p)
            .map(|n| basic.x_t[(n + cfg.frame_start_slot) % n_p])
            .collect();
        let support = w.support();
        Ok(AggregateModel {
            cfg: cfg.clone(),
            grid: grid.clone(),
            ops,
            basic,
            x_t_rot,
            support,
            sigma_p: cfg.pilot_power,
            sigma_z: cfg.noise_var,
            w,
            fft: FftSet::new(grid),
        })
    }

    /// Observation dimension A = M * K * N_p.
    pub fn observation_len(&self) -> usize {
        self.cfg.antennas * self.cfg.valid_subcarriers * self.cfg.slots_per_frame
    }

    pub fn observation_shape(&self) -> Vec<usize> {
        vec![
            self.cfg.antennas,
            self.cfg.valid_subcarriers,
            self.cfg.slots_per_frame,
        ]
    }

    /// Pseudo-diagonal of the aggregate prior, restricted to the support.
    pub fn prior(&self) -> PseudoDiagTensor {
        PseudoDiagTensor::with_support(self.w.clone())
    }
}

/// Per-UT estimates from the aggregate estimate: normalize by the aggregate
/// power, undo each UT's cyclic shift, and re-weight by the UT's own power
/// (the proportional-split solution of the aggregate MMSE problem).
pub fn recover_per_ut(
    estimate: &DenseTensor,
    model: &AggregateModel,
    channels: &[UserChannel],
    assignment: &PilotAssignment,
) -> Result<Vec<DenseTensor>> {
    if channels.len() != assignment.pairs.len() {
        return Err(Error::InvalidConfig(format!(
            "{} channels vs {} assignment pairs",
            channels.len(),
            assignment.pairs.len()
        )));
    }
    let normalized = model.prior().pseudo_inverse().left_apply(estimate)?;
    channels
        .iter()
        .zip(&assignment.pairs)
        .map(|(ch, pair)| {
            let unshifted = equivalent_shift(
                &normalized,
                -(pair.freq as i64),
                -(pair.time as i64),
                &model.grid,
            )?;
            unshifted.hadamard(&ch.w)
        })
        .collect()
}

/// Synthesize the SFT channel of the current slot (the last N_b symbols of
/// the frame) from a TB estimate.
pub fn predict_data_segment(
    h_tb: &DenseTensor,
    ops: &BeamOperators,
    cfg: &SystemConfig,
) -> Result<DenseTensor> {
    let n_s = cfg.frame_symbols();
    let n_b = cfg.symbols_per_slot;
    let rows = ops.v_t_full.slice_axis(0, n_s - n_b, n_b)?;
    h_tb.m_mode_product(&ops.v_s, 0)?
        .m_mode_product(&ops.v_f, 1)?
        .m_mode_product(&rows, 2)
}

pub const ESTIMATE_SCHEMA: &str = "tbacq-estimate-v1";

/// Serialized estimate: a text header plus the tensor payload split into
/// real and imaginary arrays (canonical element order).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateDump {
    pub schema: String,
    pub shape: Vec<usize>,
    pub support_size: usize,
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl EstimateDump {
    pub fn new(estimate: &DenseTensor, support_size: usize, diag: &IgaDiagnostics) -> Self {
        EstimateDump {
            schema: ESTIMATE_SCHEMA.to_string(),
            shape: estimate.shape().to_vec(),
            support_size,
            iterations: diag.iterations,
            final_residual: diag.final_residual,
            converged: diag.converged,
            re: estimate.data().iter().map(|z| z.re).collect(),
            im: estimate.data().iter().map(|z| z.im).collect(),
        }
    }

    pub fn tensor(&self) -> Result<DenseTensor> {
        if self.re.len() != self.im.len() {
            return Err(Error::InvalidConfig(
                "estimate payload length mismatch".into(),
            ));
        }
        DenseTensor::new(
            self.shape.clone(),
            self.re
                .iter()
                .zip(&self.im)
                .map(|(&r, &i)| Complex64::new(r, i))
                .collect(),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: EstimateDump = serde_json::from_str(text)?;
        if d.schema != ESTIMATE_SCHEMA {
            return Err(Error::InvalidConfig(format!(
                "unsupported estimate schema {:?}",
                d.schema
            )));
        }
        Ok(d)
    }
}
