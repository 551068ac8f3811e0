use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use preempt_core::harness::{emit_plot_data, run_scenario, run_sweep, summary_csv, Figure, RunSummary, ScenarioSpec};
use preempt_core::{ConfigError, PlotError, SimError};

const EXIT_INVALID: u8 = 2;
const EXIT_FAULT: u8 = 3;

#[derive(Parser)]
#[command(name = "preempt", version, about = "Run preview-NMPC vehicle scenarios and turn their logs into plot tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its CSV log.
    Run {
        scenario: PathBuf,
        /// Log file; defaults to <scenario stem>.csv in the current directory.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run every cell of a sweep scenario and write the logs and a summary.
    Sweep {
        scenario: PathBuf,
        /// Output directory; defaults to <scenario stem>_sweep.
        #[arg(short, long)]
        out_dir: Option<PathBuf>,
    },
    /// Write per-panel CSV tables for one figure from a log.
    Plotdata {
        log: PathBuf,
        #[arg(long)]
        figure: String,
        /// Output directory; defaults to the log's directory.
        #[arg(short, long)]
        out_dir: Option<PathBuf>,
    },
    /// Check a scenario file and everything it references.
    Validate { scenario: PathBuf },
}

enum Failure {
    Invalid(String),
    Fault(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => c.into(),
            other => Failure::Fault(other.to_string()),
        }
    }
}

impl From<PlotError> for Failure {
    fn from(e: PlotError) -> Self {
        match e {
            PlotError::Io { .. } => Failure::Fault(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

fn stem(p: &Path) -> String {
    p.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario").to_string()
}

fn print_summary(s: &RunSummary) {
    println!("steps                 {}", s.steps);
    println!("peak sigma FR         {:.4}", s.peak_sigma_fr);
    println!("peak wheel/body speed {:.3}", s.peak_wheel_speed_ratio);
    println!("max |beta|            {:.3} deg", s.max_abs_beta.to_degrees());
    println!("max |alpha_R|         {:.3} deg", s.max_abs_alpha_r.to_degrees());
    println!("min speed in window   {:.3} m/s", s.min_speed_window);
    println!("max lateral deviation {:.3} m", s.max_lateral);
    println!("cone hit              {}", s.cone_hit);
    if let Some(b) = s.brake_onset_s {
        println!("brake onset station   {b:.2} m");
    }
    if s.controller_calls > 0 {
        println!(
            "controller            {} calls, {} fallbacks, mean {:.2} ms, max {:.2} ms",
            s.controller_calls,
            s.solver_failures,
            s.mean_wall_time * 1e3,
            s.max_wall_time * 1e3
        );
    }
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { scenario, out } => {
            let spec = ScenarioSpec::load(&scenario)?;
            let out = out.unwrap_or_else(|| PathBuf::from(format!("{}.csv", stem(&scenario))));
            let summary = run_scenario(&spec, &out)?;
            println!("wrote {}", out.display());
            print_summary(&summary);
        }
        Command::Sweep { scenario, out_dir } => {
            let spec = ScenarioSpec::load(&scenario)?;
            let dir = out_dir.unwrap_or_else(|| PathBuf::from(format!("{}_sweep", stem(&scenario))));
            let cells = run_sweep(&spec, Some(&dir))?;
            print!("{}", summary_csv(&cells));
            println!("wrote {}", dir.join("sweep_summary.csv").display());
        }
        Command::Plotdata { log, figure, out_dir } => {
            let fig = Figure::parse(&figure)?;
            let dir = out_dir.unwrap_or_else(|| log.parent().map(Path::to_path_buf).unwrap_or_default());
            for p in emit_plot_data(&log, fig, &dir)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Validate { scenario } => {
            let spec = ScenarioSpec::load(&scenario)?;
            println!("{}: ok ({}, controller {})", scenario.display(), spec.kind.as_str(), spec.controller.label());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::Fault(msg)) => {
            eprintln!("fault: {msg}");
            ExitCode::from(EXIT_FAULT)
        }
    }
}
