//! Experiment driver: scenario specs, Monte-Carlo trials, NMSE metrics, SNR
//! sweeps, and CSV emission.

use crate::channel::{
    sft_direct_offgrid, synthesize_scenario, tb_to_sft, GeneratorSettings, GridFactors, Scenario,
    SftWindow, SystemConfig, TbGrid, UserChannel,
};
use crate::error::{Error, Result};
use crate::estimator::{
    iga_run, mmse_oracle, predict_data_segment, recover_per_ut, AggregateModel, EstimatorConfig,
    IgaDiagnostics, DEFAULT_MMSE_CAP,
};
use crate::pilot::{tfpsp_received_signal, BasicSequences, PilotAssignment};
use crate::scheduler::{schedule, ScheduleOptions, ScheduleReport};
use crate::tensor::DenseTensor;
use serde::{Deserialize, Serialize};
use std::time::Instant;

pub const SPEC_SCHEMA: &str = "tbacq-spec-v1";

/// Pilot scheme under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotScheme {
    /// Two-dimensional time-frequency phase shifts.
    Tfpsp,
    /// Frequency-only phase shifts (every time shift forced to zero).
    FpspFreqOnly,
}

impl PilotScheme {
    pub fn label(self) -> &'static str {
        match self {
            PilotScheme::Tfpsp => "tfpsp",
            PilotScheme::FpspFreqOnly => "fpsp_freq_only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Iga,
    Mmse,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Iga => "iga",
            EstimatorKind::Mmse => "mmse",
        }
    }
}

/// Complete experiment description, serializable as a versioned JSON spec.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub schema: String,
    pub config: SystemConfig,
    pub grid: GridFactors,
    #[serde(default)]
    pub generator: GeneratorSettings,
    pub scheme: PilotScheme,
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub estimator_cfg: EstimatorConfig,
    #[serde(default)]
    pub schedule: ScheduleOptions,
    /// SNR points in dB; SNR = sigma_p / sigma_z with sigma_p fixed.
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    /// Also evaluate data-segment prediction against the stale-pilot baseline.
    #[serde(default)]
    pub predict: bool,
    #[serde(default = "default_mmse_cap")]
    pub mmse_cap: usize,
}

fn default_mmse_cap() -> usize {
    DEFAULT_MMSE_CAP
}

impl ScenarioSpec {
    pub fn new(config: SystemConfig, grid: GridFactors) -> Self {
        ScenarioSpec {
            schema: SPEC_SCHEMA.to_string(),
            config,
            grid,
            generator: GeneratorSettings::default(),
            scheme: PilotScheme::Tfpsp,
            estimator: EstimatorKind::Iga,
            estimator_cfg: EstimatorConfig::default(),
            schedule: ScheduleOptions::default(),
            snr_db: vec![20.0],
            trials: 1,
            master_seed: 1,
            predict: false,
            mmse_cap: DEFAULT_MMSE_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SPEC_SCHEMA {
            return Err(Error::InvalidConfig(format!(
                "unsupported spec schema {:?}",
                self.schema
            )));
        }
        self.config.validate()?;
        TbGrid::new(&self.config, self.grid.f_theta, self.grid.f_tau, self.grid.f_nu)?;
        if self.generator.paths_per_ut == 0 {
            return Err(Error::InvalidConfig("paths_per_ut must be >= 1".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ScenarioSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Configuration with the noise variance implied by one SNR point.
    pub fn config_at_snr(&self, snr_db: f64) -> SystemConfig {
        let mut cfg = self.config.clone();
        cfg.noise_var = cfg.pilot_power / 10f64.powf(snr_db / 10.0);
        cfg
    }
}

/// splitmix64 step; the standard 64-bit mixing constant and shifts.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed derivation: two mixing rounds over (master, stream, index)
/// keep every (stream, index) pair statistically independent while staying
/// reproducible across runs.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ stream.wrapping_mul(0xA076_1D64_78BD_642F)).wrapping_add(index))
}

/// Mean normalized squared error over (estimate, truth) pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmseStats {
    /// Mean of per-pair energy ratios; NaN when every pair was excluded.
    pub mean_linear: f64,
    /// Pairs skipped because the truth carried no energy.
    pub excluded: usize,
}

/// Average of ||est - truth||^2 / ||truth||^2 over pairs, excluding
/// zero-energy truths.
pub fn nmse(pairs: &[(&DenseTensor, &DenseTensor)]) -> Result<NmseStats> {
    let mut acc = 0.0;
    let mut used = 0usize;
    let mut excluded = 0usize;
    for (est, truth) in pairs {
        if est.shape() != truth.shape() {
            return Err(Error::ShapeMismatch {
                op: "nmse",
                detail: format!("{:?} vs {:?}", est.shape(), truth.shape()),
            });
        }
        let energy = truth.norm_sq();
        if energy == 0.0 {
            excluded += 1;
            continue;
        }
        acc += est.sub(truth)?.norm_sq() / energy;
        used += 1;
    }
    Ok(NmseStats {
        mean_linear: if used == 0 { f64::NAN } else { acc / used as f64 },
        excluded,
    })
}

/// Decibel conversion with a -200 dB floor for exact zeros.
pub fn nmse_db(linear: f64) -> f64 {
    if linear <= 1e-20 {
        -200.0
    } else {
        10.0 * linear.log10()
    }
}

/// One Monte-Carlo trial's outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub snr_db: f64,
    pub trial: usize,
    pub scheme: String,
    pub estimator: String,
    pub nmse_linear: f64,
    pub nmse_db: f64,
    pub pred_nmse_db: Option<f64>,
    pub stale_nmse_db: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub group_count: usize,
    pub max_residual_eta: f64,
    pub objective: f64,
    pub excluded_uts: usize,
    pub wall_ms: f64,
    pub error: Option<String>,
}

/// Synthesize, schedule, transmit, estimate, recover, and score one trial.
/// The channel realization depends only on (master seed, trial), so paired
/// comparisons across schemes and grids see identical channels and noise.
pub fn run_trial(spec: &ScenarioSpec, snr_index: usize, trial: usize) -> RunResult {
    let started = Instant::now();
    let snr_db = spec.snr_db[snr_index];
    let mut result = RunResult {
        snr_db,
        trial,
        scheme: spec.scheme.label().to_string(),
        estimator: spec.estimator.label().to_string(),
        nmse_linear: f64::NAN,
        nmse_db: f64::NAN,
        pred_nmse_db: None,
        stale_nmse_db: None,
        iterations: 0,
        converged: false,
        group_count: 0,
        max_residual_eta: f64::NAN,
        objective: f64::NAN,
        excluded_uts: 0,
        wall_ms: 0.0,
        error: None,
    };
    match execute_trial(spec, snr_index, trial, &mut result) {
        Ok(()) => {}
        Err(e) => result.error = Some(e.to_string()),
    }
    result.wall_ms = started.elapsed().as_secs_f64() * 1e3;
    result
}

fn execute_trial(
    spec: &ScenarioSpec,
    snr_index: usize,
    trial: usize,
    out: &mut RunResult,
) -> Result<()> {
    let cfg = spec.config_at_snr(spec.snr_db[snr_index]);
    let grid = TbGrid::new(&cfg, spec.grid.f_theta, spec.grid.f_tau, spec.grid.f_nu)?;
    let channel_seed = derive_seed(spec.master_seed, 0, trial as u64);
    let noise_seed = derive_seed(spec.master_seed, 1 + snr_index as u64, trial as u64);
    let channels = synthesize_scenario(&cfg, &grid, &spec.generator, channel_seed);

    let mut opts = spec.schedule;
    opts.freq_only = matches!(spec.scheme, PilotScheme::FpspFreqOnly);
    let (assignment, report) = schedule(&channels, &cfg, &grid, &opts)?;
    out.group_count = report.group_count;
    out.max_residual_eta = report.max_residual_eta;
    out.objective = report.objective;

    let basic = BasicSequences::new(&cfg)?;
    let rx = tfpsp_received_signal(&channels, &assignment, &basic, &cfg, noise_seed)?;
    let model = AggregateModel::new(&cfg, &grid, &channels, &assignment)?;

    let (aggregate, diag) = match spec.estimator {
        EstimatorKind::Iga => iga_run(&rx.y, &model, &spec.estimator_cfg)?,
        EstimatorKind::Mmse => {
            let est = mmse_oracle(&rx.y, &model, spec.mmse_cap)?;
            (
                est,
                IgaDiagnostics {
                    iterations: 0,
                    converged: true,
                    final_residual: 0.0,
                    residual_history: vec![],
                },
            )
        }
    };
    out.iterations = diag.iterations;
    out.converged = diag.converged;

    let per_ut = recover_per_ut(&aggregate, &model, &channels, &assignment)?;

    // Pilot-segment NMSE against the exact (possibly off-grid) channels.
    let est_sft: Vec<DenseTensor> = per_ut
        .iter()
        .map(|h| tb_to_sft(h, &model.ops, SftWindow::Pilot))
        .collect::<Result<_>>()?;
    let truth_sft: Vec<DenseTensor> = channels
        .iter()
        .map(|ch| sft_direct_offgrid(&ch.paths, &cfg, SftWindow::Pilot))
        .collect();
    let pairs: Vec<(&DenseTensor, &DenseTensor)> =
        est_sft.iter().zip(&truth_sft).collect();
    let stats = nmse(&pairs)?;
    out.nmse_linear = stats.mean_linear;
    out.nmse_db = nmse_db(stats.mean_linear);
    out.excluded_uts = stats.excluded;

    if spec.predict && cfg.symbols_per_slot > 1 {
        let (pred, stale) = prediction_nmse(&cfg, &model, &channels, &per_ut, &est_sft)?;
        out.pred_nmse_db = Some(nmse_db(pred));
        out.stale_nmse_db = Some(nmse_db(stale));
    }
    Ok(())
}

/// Data-segment NMSE of the synthesized prediction and of the stale-pilot
/// baseline (the last estimated pilot-segment channel held constant). The
/// data segment is the current slot without its pilot symbol.
fn prediction_nmse(
    cfg: &SystemConfig,
    model: &AggregateModel,
    channels: &[UserChannel],
    per_ut_tb: &[DenseTensor],
    est_sft_pilot: &[DenseTensor],
) -> Result<(f64, f64)> {
    let n_b = cfg.symbols_per_slot;
    let n_s = cfg.frame_symbols();
    let n_p = cfg.slots_per_frame;
    let mut pred_pairs = Vec::new();
    let mut stale_pairs = Vec::new();
    let mut truths = Vec::new();
    let mut preds = Vec::new();
    let mut stales = Vec::new();
    for ((ch, h_tb), est_pilot) in channels.iter().zip(per_ut_tb).zip(est_sft_pilot) {
        let truth_full = sft_direct_offgrid(&ch.paths, cfg, SftWindow::Full);
        let truth = truth_full.slice_axis(2, n_s - n_b + 1, n_b - 1)?;
        let pred = predict_data_segment(h_tb, &model.ops, cfg)?.slice_axis(2, 1, n_b - 1)?;
        // Hold the last pilot-segment estimate across the data symbols.
        let last = est_pilot.slice_axis(2, n_p - 1, 1)?;
        let mut stale = DenseTensor::zeros(truth.shape().to_vec());
        let cols = last.len();
        for j in 0..n_b - 1 {
            stale.data_mut()[j * cols..(j + 1) * cols].copy_from_slice(last.data());
        }
        truths.push(truth);
        preds.push(pred);
        stales.push(stale);
    }
    for i in 0..truths.len() {
        pred_pairs.push((&preds[i], &truths[i]));
        stale_pairs.push((&stales[i], &truths[i]));
    }
    let p = nmse(&pred_pairs)?;
    let s = nmse(&stale_pairs)?;
    Ok((p.mean_linear, s.mean_linear))
}

/// Aggregated row of a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub snr_db: f64,
    pub scheme: String,
    pub estimator: String,
    pub mean_nmse_db: f64,
    pub std_nmse_db: f64,
    pub mean_iters: f64,
    pub trials: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<RunResult>,
    pub summary: Vec<SummaryRow>,
}

/// Run the Cartesian product of SNR points and trials, then aggregate.
/// Failed trials keep their error strings and are excluded from aggregation.
pub fn sweep(spec: &ScenarioSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.snr_db.len() * spec.trials);
    for snr_index in 0..spec.snr_db.len() {
        for trial in 0..spec.trials {
            rows.push(run_trial(spec, snr_index, trial));
        }
    }
    let summary = summarize(spec, &rows);
    Ok(SweepResult { rows, summary })
}

fn summarize(spec: &ScenarioSpec, rows: &[RunResult]) -> Vec<SummaryRow> {
    let mut summary: Vec<SummaryRow> = Vec::new();
    for (snr_index, &snr_db) in spec.snr_db.iter().enumerate() {
        let ok: Vec<&RunResult> = rows
            .iter()
            .filter(|r| {
                r.error.is_none()
                    && r.nmse_linear.is_finite()
                    && r.snr_db == spec.snr_db[snr_index]
            })
            .collect();
        let n = ok.len();
        if n == 0 {
            summary.push(SummaryRow {
                snr_db,
                scheme: spec.scheme.label().to_string(),
                estimator: spec.estimator.label().to_string(),
                mean_nmse_db: f64::NAN,
                std_nmse_db: f64::NAN,
                mean_iters: f64::NAN,
                trials: 0,
            });
            continue;
        }
        let mean_linear = ok.iter().map(|r| r.nmse_linear).sum::<f64>() / n as f64;
        let mean_db_of_rows = ok.iter().map(|r| r.nmse_db).sum::<f64>() / n as f64;
        let var_db = ok
            .iter()
            .map(|r| (r.nmse_db - mean_db_of_rows).powi(2))
            .sum::<f64>()
            / n as f64;
        let mean_iters = ok.iter().map(|r| r.iterations as f64).sum::<f64>() / n as f64;
        summary.push(SummaryRow {
            snr_db,
            scheme: spec.scheme.label().to_string(),
            estimator: spec.estimator.label().to_string(),
            mean_nmse_db: nmse_db(mean_linear),
            std_nmse_db: var_db.sqrt(),
            mean_iters,
            trials: n,
        });
    }
    // Order-independent emission.
    summary.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    summary
}

/// Canonical float formatting shared by the CSV writer and reader, so a
/// parse/re-emit cycle is byte-identical.
fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.6}")
    }
}

pub fn summary_to_csv(summary: &[SummaryRow]) -> String {
    let mut out = String::from("snr_db,scheme,estimator,mean_nmse_db,std_nmse_db,mean_iters,trials\n");
    for r in summary {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_f64(r.snr_db),
            r.scheme,
            r.estimator,
            fmt_f64(r.mean_nmse_db),
            fmt_f64(r.std_nmse_db),
            fmt_f64(r.mean_iters),
            r.trials
        ));
    }
    out
}

pub fn summary_from_csv(text: &str) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidConfig("empty CSV".into()))?;
    if header != "snr_db,scheme,estimator,mean_nmse_db,std_nmse_db,mean_iters,trials" {
        return Err(Error::InvalidConfig(format!("unexpected CSV header {header:?}")));
    }
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 7 {
            return Err(Error::InvalidConfig(format!("malformed CSV row {line:?}")));
        }
        let parse = |s: &str| -> Result<f64> {
            if s == "nan" {
                return Ok(f64::NAN);
            }
            s.parse::<f64>()
                .map_err(|e| Error::InvalidConfig(format!("bad float {s:?}: {e}")))
        };
        rows.push(SummaryRow {
            snr_db: parse(parts[0])?,
            scheme: parts[1].to_string(),
            estimator: parts[2].to_string(),
            mean_nmse_db: parse(parts[3])?,
            std_nmse_db: parse(parts[4])?,
            mean_iters: parse(parts[5])?,
            trials: parts[6]
                .parse()
                .map_err(|e| Error::InvalidConfig(format!("bad count: {e}")))?,
        });
    }
    Ok(rows)
}

pub fn trials_to_csv(rows: &[RunResult]) -> String {
    let mut out = String::from(
        "snr_db,trial,scheme,estimator,nmse_db,pred_nmse_db,stale_nmse_db,iterations,converged,group_count,max_residual_eta,objective,error\n",
    );
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(r.snr_db),
            r.trial,
            r.scheme,
            r.estimator,
            fmt_f64(r.nmse_db),
            opt(r.pred_nmse_db),
            opt(r.stale_nmse_db),
            r.iterations,
            r.converged,
            r.group_count,
            fmt_f64(r.max_residual_eta),
            fmt_f64(r.objective),
            r.error.clone().unwrap_or_default()
        ));
    }
    out
}

/// Bundle for one realized scenario, reusable across CLI commands.
pub fn scenario_from_spec(spec: &ScenarioSpec, snr_index: usize, trial: usize) -> Result<Scenario> {
    let cfg = spec.config_at_snr(
        *spec
            .snr_db
            .get(snr_index)
            .ok_or_else(|| Error::InvalidConfig("snr index out of range".into()))?,
    );
    let grid = TbGrid::new(&cfg, spec.grid.f_theta, spec.grid.f_tau, spec.grid.f_nu)?;
    let channel_seed = derive_seed(spec.master_seed, 0, trial as u64);
    let channels = synthesize_scenario(&cfg, &grid, &spec.generator, channel_seed);
    Ok(Scenario::new(&cfg, &grid, &channels))
}

/// Convenience wrapper returning the assignment and report for a scenario
/// file, used by the `schedule` CLI command.
pub fn schedule_scenario(
    scenario: &Scenario,
    opts: &ScheduleOptions,
) -> Result<(PilotAssignment, ScheduleReport)> {
    let (grid, channels) = scenario.instantiate()?;
    schedule(&channels, &scenario.config, &grid, opts)
}

#[cfg(test)]
mod tests;
