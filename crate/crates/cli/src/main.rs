//! Command-line driver: simulate, schedule, estimate, and sweep.
//!
//! Exit codes: 0 on success, 2 on spec/input validation failure, 3 on
//! numerical divergence.

use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tbacq::channel::Scenario;
use tbacq::error::Error;
use tbacq::estimator::{
    iga_run, mmse_oracle, recover_per_ut, AggregateModel, EstimateDump, EstimatorConfig,
    IgaDiagnostics, DEFAULT_MMSE_CAP,
};
use tbacq::harness::{
    nmse, nmse_db, run_trial, scenario_from_spec, schedule_scenario, summary_to_csv, sweep,
    trials_to_csv, ScenarioSpec,
};
use tbacq::pilot::{tfpsp_received_signal, BasicSequences, PilotAssignment};
use tbacq::scheduler::ScheduleOptions;

#[derive(Parser)]
#[command(name = "tbacq", version, about = "Triple-beam channel acquisition simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pilot-design/scheduling/estimation pipeline for a spec,
    /// writing per-trial and summary CSVs plus trial-0 artifacts.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        /// Output directory for CSVs and artifacts.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Group UTs and assign phase-shift pairs for a realized scenario file.
    Schedule {
        #[arg(long)]
        scenario: PathBuf,
        /// Overlap threshold gamma.
        #[arg(long, default_value_t = 0.05)]
        gamma: f64,
        /// Assignment output path (default: assignment.json next to input).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report output path (default: schedule_report.json next to input).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Estimate the aggregate TB channel for a scenario + assignment.
    Estimate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        assignment: PathBuf,
        #[arg(long, value_enum, default_value_t = EstimatorArg::Iga)]
        estimator: EstimatorArg,
        /// Seed of the observation noise draw.
        #[arg(long, default_value_t = 0)]
        noise_seed: u64,
        /// Estimate dump output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the Monte-Carlo sweep for a spec and write the summary CSV.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Iga,
    Mmse,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Divergence(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn read(path: &Path) -> Result<String, Error> {
    Ok(std::fs::read_to_string(path)?)
}

fn write(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, contents)?;
    Ok(())
}

fn dispatch(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Simulate { spec, out } => simulate(&spec, out.as_deref()),
        Command::Schedule {
            scenario,
            gamma,
            out,
            report,
        } => schedule_cmd(&scenario, gamma, out.as_deref(), report.as_deref()),
        Command::Estimate {
            scenario,
            assignment,
            estimator,
            noise_seed,
            out,
        } => estimate_cmd(&scenario, &assignment, estimator, noise_seed, out.as_deref()),
        Command::Sweep { spec, out } => {
            let spec = ScenarioSpec::from_json(&read(&spec)?)?;
            let result = sweep(&spec)?;
            write(&out, &summary_to_csv(&result.summary))?;
            println!("wrote {} summary rows to {}", result.summary.len(), out.display());
            Ok(())
        }
    }
}

fn simulate(spec_path: &Path, out: Option<&Path>) -> Result<(), Error> {
    let spec = ScenarioSpec::from_json(&read(spec_path)?)?;
    let result = sweep(&spec)?;
    let csv = summary_to_csv(&result.summary);
    print!("{csv}");
    let failures: Vec<&str> = result
        .rows
        .iter()
        .filter_map(|r| r.error.as_deref())
        .collect();
    if !failures.is_empty() {
        eprintln!("{} trial(s) failed; first: {}", failures.len(), failures[0]);
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        write(&dir.join("summary.csv"), &csv)?;
        write(&dir.join("trials.csv"), &trials_to_csv(&result.rows))?;
        if !spec.snr_db.is_empty() && spec.trials > 0 {
            let scenario = scenario_from_spec(&spec, 0, 0)?;
            write(&dir.join("scenario_trial0.json"), &scenario.to_json()?)?;
            let mut opts = spec.schedule;
            opts.freq_only = matches!(spec.scheme, tbacq::harness::PilotScheme::FpspFreqOnly);
            let (assignment, report) = schedule_scenario(&scenario, &opts)?;
            write(&dir.join("assignment_trial0.json"), &assignment.to_json()?)?;
            write(
                &dir.join("schedule_report_trial0.json"),
                &serde_json::to_string_pretty(&report)?,
            )?;
            let r0 = run_trial(&spec, 0, 0);
            write(
                &dir.join("trial0_result.json"),
                &serde_json::to_string_pretty(&r0)?,
            )?;
        }
        println!("artifacts written to {}", dir.display());
    }
    Ok(())
}

fn schedule_cmd(
    scenario_path: &Path,
    gamma: f64,
    out: Option<&Path>,
    report_path: Option<&Path>,
) -> Result<(), Error> {
    let scenario = Scenario::from_json(&read(scenario_path)?)?;
    let opts = ScheduleOptions {
        gamma_thr: gamma,
        ..ScheduleOptions::default()
    };
    let (assignment, report) = schedule_scenario(&scenario, &opts)?;
    let dir = scenario_path.parent().unwrap_or(Path::new("."));
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join("assignment.json"));
    let report_out = report_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join("schedule_report.json"));
    write(&out, &assignment.to_json()?)?;
    write(&report_out, &serde_json::to_string_pretty(&report)?)?;
    println!(
        "groups: {}  max residual eta: {:.6}  objective: {:.6}",
        report.group_count, report.max_residual_eta, report.objective
    );
    println!("assignment written to {}", out.display());
    Ok(())
}

fn estimate_cmd(
    scenario_path: &Path,
    assignment_path: &Path,
    estimator: EstimatorArg,
    noise_seed: u64,
    out: Option<&Path>,
) -> Result<(), Error> {
    let scenario = Scenario::from_json(&read(scenario_path)?)?;
    let assignment = PilotAssignment::from_json(&read(assignment_path)?)?;
    assignment.validate_against(&scenario.config)?;
    let cfg = &scenario.config;
    let (grid, channels) = scenario.instantiate()?;
    let basic = BasicSequences::new(cfg)?;
    let rx = tfpsp_received_signal(&channels, &assignment, &basic, cfg, noise_seed)?;
    let model = AggregateModel::new(cfg, &grid, &channels, &assignment)?;
    let (aggregate, diag) = match estimator {
        EstimatorArg::Iga => iga_run(&rx.y, &model, &EstimatorConfig::default())?,
        EstimatorArg::Mmse => (
            mmse_oracle(&rx.y, &model, DEFAULT_MMSE_CAP)?,
            IgaDiagnostics {
                iterations: 0,
                converged: true,
                final_residual: 0.0,
                residual_history: vec![],
            },
        ),
    };
    let per_ut = recover_per_ut(&aggregate, &model, &channels, &assignment)?;
    let est_sft: Vec<_> = per_ut
        .iter()
        .map(|h| tbacq::channel::tb_to_sft(h, &model.ops, tbacq::channel::SftWindow::Pilot))
        .collect::<Result<_, _>>()?;
    let truth_sft: Vec<_> = channels
        .iter()
        .map(|ch| {
            tbacq::channel::sft_direct_offgrid(&ch.paths, cfg, tbacq::channel::SftWindow::Pilot)
        })
        .collect();
    let pairs: Vec<(&tbacq::tensor::DenseTensor, &tbacq::tensor::DenseTensor)> =
        est_sft.iter().zip(&truth_sft).collect();
    let stats = nmse(&pairs)?;
    println!(
        "iterations: {}  converged: {}  pilot-segment NMSE: {:.3} dB",
        diag.iterations,
        diag.converged,
        nmse_db(stats.mean_linear)
    );
    if stats.excluded > 0 {
        eprintln!("warning: {} UT(s) with zero-energy truth excluded", stats.excluded);
    }
    let dir = scenario_path.parent().unwrap_or(Path::new("."));
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join("estimate.json"));
    let dump = EstimateDump::new(&aggregate, model.support.len(), &diag);
    write(&out, &dump.to_json()?)?;
    println!("estimate written to {}", out.display());
    Ok(())
}
