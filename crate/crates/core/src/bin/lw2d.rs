use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lw2d::harness::{
    self, convergence_study, corner_scan, run_experiment, verification_failures, BlowUpReason,
    ExperimentConfig,
};
use lw2d::spectral::{amplification_factor, max_amplification, Frequency};

const EXIT_BLOWUP: u8 = 2;
const EXIT_ERROR: u8 = 1;
const EXIT_VERIFY_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "lw2d", version, about = "Two-dimensional Lax-Wendroff transport solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment and write the configured outputs.
    Run {
        config: PathBuf,
        /// Overrides `output_csv`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Evaluate the energy identities and inequalities on the initial field.
    Verify { config: PathBuf },
    /// Rerun the experiment for each corner coefficient.
    Scan {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        delta_list: Vec<f64>,
    },
    /// Grid refinement study against the exact translate.
    Converge {
        config: PathBuf,
        #[arg(long, default_value_t = 2)]
        refinements: usize,
    },
    /// Largest amplification factor over a frequency grid.
    Spectrum {
        config: PathBuf,
        #[arg(long, default_value_t = 128)]
        samples: usize,
        /// Overrides `spectrum_csv`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn dispatch(command: Command) -> lw2d::Result<u8> {
    match command {
        Command::Run { config, csv } => {
            let mut config = ExperimentConfig::from_file(&config)?;
            if csv.is_some() {
                config.output_csv = csv;
            }
            let out = run_experiment(&config)?;
            let rows = &out.trace.rows;
            let (first, last) = (rows[0].l2, rows[rows.len() - 1].l2);
            println!("steps = {}", rows.len() - 1);
            println!("l2_initial = {first:e}");
            println!("l2_final = {last:e}");
            println!("nonincreasing = {}", out.trace.is_nonincreasing());
            if let Some(th) = &out.trace.stability {
                println!("stability_max_lhs = {:e}", th.max_lhs());
                println!("stability_bound = {:e}", th.bound);
            }
            if !out.reports.is_empty() {
                let worst = out
                    .reports
                    .iter()
                    .map(|v| v.report.max_identity_residual())
                    .fold(0.0, f64::max);
                let least = out
                    .reports
                    .iter()
                    .map(|v| v.report.min_inequality_slack())
                    .fold(f64::INFINITY, f64::min);
                println!("max_identity_residual = {worst:e}");
                println!("min_inequality_slack = {least:e}");
            }
            match out.trace.blowup {
                None => Ok(0),
                Some(b) => {
                    match b.reason {
                        BlowUpReason::Growth { ratio } => {
                            println!("blowup_step = {} (norm ratio {ratio:e})", b.step)
                        }
                        BlowUpReason::NonFinite { j, k } => {
                            println!("blowup_step = {} (non-finite at ({j}, {k}))", b.step)
                        }
                    }
                    Ok(EXIT_BLOWUP)
                }
            }
        }
        Command::Verify { config } => {
            let config = ExperimentConfig::from_file(&config)?;
            let v = harness::verify_config(&config)?;
            print!("{}", v.to_key_value());
            let failures = verification_failures(&v);
            for f in &failures {
                eprintln!("failed: {f}");
            }
            Ok(if failures.is_empty() { 0 } else { EXIT_VERIFY_FAILED })
        }
        Command::Scan { config, delta_list } => {
            let config = ExperimentConfig::from_file(&config)?;
            let rows = corner_scan(&config, &delta_list)?;
            println!("delta,classification,growth_rate,blowup_step,steps_run");
            let mut any_blowup = false;
            for r in rows {
                any_blowup |= r.blowup.is_some();
                println!(
                    "{},{},{},{},{}",
                    r.delta,
                    r.stability.name(),
                    r.growth_rate.map_or(String::new(), |g| format!("{g:e}")),
                    r.blowup.map_or(String::new(), |b| b.step.to_string()),
                    r.steps_run
                );
            }
            Ok(if any_blowup { EXIT_BLOWUP } else { 0 })
        }
        Command::Converge { config, refinements } => {
            let config = ExperimentConfig::from_file(&config)?;
            let table = convergence_study(&config, refinements)?;
            for w in &table.warnings {
                eprintln!("warning: {w}");
            }
            println!("# final_time = {:e}", table.final_time);
            println!("nx,ny,h,steps,error,order");
            for r in &table.rows {
                println!(
                    "{},{},{:e},{},{:e},{}",
                    r.nx,
                    r.ny,
                    r.h,
                    r.steps,
                    r.error,
                    r.order.map_or(String::new(), |o| format!("{o:.4}"))
                );
            }
            Ok(0)
        }
        Command::Spectrum { config, samples, output } => {
            let config = ExperimentConfig::from_file(&config)?;
            let params = config.params()?;
            let pi = std::f64::consts::PI;
            println!("courant_sq = {:e}", params.courant_sq());
            println!("max_abs_g = {:e}", max_amplification(&params, samples));
            println!("g_pi_pi = {:e}", amplification_factor(&params, Frequency::new(pi, pi)).re);
            if let Some(path) = output.or(config.spectrum_csv) {
                let path = harness::resolve_output(&path);
                std::fs::write(&path, harness::spectrum_csv(&params, samples))
                    .map_err(|e| lw2d::Error::Io { path, source: e })?;
            }
            Ok(0)
        }
    }
}
