//! `iontomo`: gate scans, simulated tomography, error budgets and state analysis.

mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use iontomo::entanglement::{analyze, parity_analysis, write_parity_csv};
use iontomo::gate::curves::{detuning_grid, linspace, scan, time_grid, write_scan_csv};
use iontomo::gate::fock::DEFAULT_N_MAX;
use iontomo::gate::khz_to_rad_s;
use iontomo::gate::noise::error_budget;
use iontomo::pipeline::{prepare_output, run_tomography};
use iontomo::state::DensityMatrixJson;
use iontomo::tomography::write_counts_csv;
use iontomo::{Basis, DensityMatrix, Seed};
use serde::Serialize;

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Numerical(iontomo::Error),
}

impl CliError {
    /// Library errors caused by bad inputs count as configuration errors.
    pub fn config(e: iontomo::Error) -> Self {
        use iontomo::Error as E;
        match e {
            E::InvalidParameter { .. } | E::Parse(_) | E::Json(_) | E::Dimension(_) | E::NotHermitian { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numerical(other),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<iontomo::Error> for CliError {
    fn from(e: iontomo::Error) -> Self {
        CliError::config(e)
    }
}

#[derive(Parser, Debug)]
#[command(name = "iontomo", version, about = "Molmer-Sorensen gate simulation and two-qubit tomography")]
struct Cli {
    /// TOML run configuration; defaults apply to anything omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Shots per measurement setting (overrides the config).
    #[arg(long, global = true)]
    shots: Option<u64>,
    /// Computational input state.
    #[arg(long, global = true, default_value = "uu")]
    state: Basis,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Brightness/parity versus detuning or time, or parity versus analysis phase.
    Scan {
        #[arg(value_enum)]
        kind: ScanKind,
    },
    /// Simulated tomography of one gate output.
    Tomo {
        /// Also write linear inversion, control counts and the simulated state.
        #[arg(long)]
        emit_intermediate: bool,
    },
    /// Scattering and Stark-shift error budget.
    Budget,
    /// Entanglement measures of a density-matrix JSON file.
    Analyze { input: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ScanKind {
    Detuning,
    Time,
    Parity,
}

/// Configuration echo written next to every output.
#[derive(Serialize)]
struct Sidecar<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    state: Basis,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<T>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.shots {
        cfg.tomography.shots = s;
    }
    fs::create_dir_all(&cli.out)?;
    match &cli.command {
        Command::Scan { kind } => cmd_scan(cli, &cfg, *kind),
        Command::Tomo { emit_intermediate } => cmd_tomo(cli, &cfg, *emit_intermediate),
        Command::Budget => cmd_budget(cli, &cfg),
        Command::Analyze { input } => cmd_analyze(cli, &cfg, input),
    }
}

fn sidecar<T: Serialize>(cli: &Cli, cfg: &RunConfig, command: &str, summary: Option<T>) -> Result<(), CliError> {
    let doc = Sidecar {
        command,
        seed: cli.seed,
        state: cli.state,
        config: cfg,
        summary,
    };
    write_json(&cli.out.join(format!("{command}.config.json")), &doc)
}

fn cmd_scan(cli: &Cli, cfg: &RunConfig, kind: ScanKind) -> Result<(), CliError> {
    let params = cfg.gate_params()?;
    let n_max = if cfg.gate.n_max == 0 { DEFAULT_N_MAX } else { cfg.gate.n_max };
    let s = &cfg.scan;
    let name = match kind {
        ScanKind::Detuning => "scan_detuning",
        ScanKind::Time => "scan_time",
        ScanKind::Parity => "scan_parity",
    };
    match kind {
        ScanKind::Detuning | ScanKind::Time => {
            let grid = if let ScanKind::Detuning = kind {
                let t = s.t_us.map_or(params.tau_g, |t| t * 1e-6);
                let deltas: Vec<f64> = linspace(s.delta_min_khz, s.delta_max_khz, s.points)
                    .into_iter()
                    .map(khz_to_rad_s)
                    .collect();
                detuning_grid(t, &deltas)
            } else {
                let t_max = s.t_max_us.map_or(4.0 * params.tau_g, |t| t * 1e-6);
                time_grid(params.delta, &linspace(0.0, t_max, s.points))
            };
            let points = scan(&params, &grid, iontomo::gate::curves::default_route(params.nbar), n_max)
                .map_err(CliError::Numerical)?;
            write_scan_csv(create(&cli.out.join(format!("{name}.csv")))?, &points)?;
            sidecar(cli, cfg, name, Some(serde_json::json!({ "gate": params, "points": points.len() })))
        }
        ScanKind::Parity => {
            let tomo = cfg.tomography()?;
            let (rho, target) = prepare_output(cli.state, &tomo)?;
            let phases = linspace(0.0, std::f64::consts::TAU, s.phase_points);
            let analysis = parity_analysis(&rho, &phases).map_err(CliError::Numerical)?;
            write_parity_csv(create(&cli.out.join(format!("{name}.csv")))?, &analysis.curve)?;
            sidecar(
                cli,
                cfg,
                name,
                Some(serde_json::json!({
                    "target": target.name(),
                    "amplitude": analysis.amplitude,
                    "offset": analysis.offset,
                    "phase_offset": analysis.phase_offset,
                    "coherence": analysis.coherence,
                })),
            )
        }
    }
}

fn cmd_tomo(cli: &Cli, cfg: &RunConfig, emit_intermediate: bool) -> Result<(), CliError> {
    let tomo = cfg.tomography()?;
    let run = run_tomography(cli.state, &tomo, Seed(cli.seed)).map_err(|e| match e {
        iontomo::Error::InvalidParameter { .. } => CliError::config(e),
        other => CliError::Numerical(other),
    })?;
    let out = &cli.out;
    write_counts_csv(create(&out.join("counts.csv"))?, &run.records)?;
    write_json(&out.join("rho_mle.json"), &run.mle.to_json())?;
    write_json(&out.join("measures.json"), &run.measures)?;
    if let Some(b) = &run.bootstrap {
        write_json(&out.join("bootstrap.json"), b)?;
    }
    if emit_intermediate {
        write_json(&out.join("rho_linear.json"), &DensityMatrixJson::from_matrix(&run.linear.matrix))?;
        write_json(&out.join("rho_true.json"), &run.truth.to_json())?;
        write_counts_csv(create(&out.join("controls.csv"))?, &run.controls)?;
        write_json(&out.join("calibration.json"), &run.calibration)?;
    }
    let summary = serde_json::json!({
        "target": run.target.name(),
        "fidelity": run.measures.f,
        "negativity": run.measures.n,
        "concurrence": run.measures.c,
        "e_f": run.measures.e_f,
        "linear_inversion_physical": run.linear.is_physical(),
        "calibration_informative": run.calibration.informative,
        "mle_converged": run.mle.converged,
        "fidelity_se": run.bootstrap.as_ref().map(|b| b.standard_error),
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serialises"));
    sidecar(cli, cfg, "tomo", Some(summary))
}

fn cmd_budget(cli: &Cli, cfg: &RunConfig) -> Result<(), CliError> {
    let b = error_budget(cfg.budget_inputs())?;
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{:<28}{:>14}", "quantity", "value")?;
    writeln!(stdout, "{:<28}{:>14.3}", "beta", b.beta)?;
    writeln!(stdout, "{:<28}{:>14.4}", "p_sc (theory)", b.p_sc_theory)?;
    writeln!(stdout, "{:<28}{:>14.4}", "phi_st (theory, rad)", b.phi_st_theory)?;
    if let (Some(phi), Some(p)) = (b.phi_st_measured, b.p_sc_inferred) {
        writeln!(stdout, "{:<28}{:>14.4}", "phi_st (measured, rad)", phi)?;
        writeln!(stdout, "{:<28}{:>14.4}", "phi_st / pi", phi / std::f64::consts::PI)?;
        writeln!(stdout, "{:<28}{:>14.4}", "p_sc (inferred)", p)?;
    }
    writeln!(stdout, "{:<28}{:>14.4}", "scattering rate (1/s)", b.gamma_sc)?;
    writeln!(stdout, "{:<28}{:>14.4}", "predicted infidelity", b.infidelity)?;
    write_json(&cli.out.join("budget.json"), &b)?;
    sidecar(cli, cfg, "budget", None::<()>)
}

fn cmd_analyze(cli: &Cli, cfg: &RunConfig, input: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(input).map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;
    let doc: DensityMatrixJson = serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    let rho = DensityMatrix::from_json(&doc)?;
    let report = analyze(&rho, cli.state).map_err(CliError::Numerical)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
    write_json(&cli.out.join("measures.json"), &report)?;
    sidecar(cli, cfg, "analyze", Some(serde_json::json!({ "input": input })))
}
