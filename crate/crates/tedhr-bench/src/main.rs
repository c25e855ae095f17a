use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tedhr_bench::config::SimConfig;
use tedhr_bench::export;
use tedhr_bench::runner::{monte_carlo, Controller};
use tedhr_bench::HarnessError;
use tedhr_core::scenario::ScenarioId;

#[derive(Parser)]
#[command(name = "tedhr-bench", about = "Tilted-hexarotor trajectory tracking benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    A,
    B,
    C,
}

#[derive(Clone, Copy, ValueEnum)]
enum ControllerArg {
    Fc,
    Hc,
    FcIdeal,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo batch and export CSVs plus the summary.
    Run {
        #[arg(long, value_enum)]
        scenario: ScenarioArg,
        #[arg(long, value_enum)]
        controller: ControllerArg,
        /// Number of Monte-Carlo runs (seeds seed, seed+1, …).
        #[arg(long, default_value_t = 50)]
        runs: u64,
        /// Base seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// JSON config file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Controller tick period, s.
        #[arg(long)]
        dt_ctrl: Option<f64>,
        /// Truth-model integration step, s.
        #[arg(long)]
        dt_sim: Option<f64>,
        /// Exit with status 2 if any run diverged.
        #[arg(long, default_value_t = false)]
        fail_on_divergence: bool,
        /// Skip per-run CSV files (summary only).
        #[arg(long, default_value_t = false)]
        no_csv: bool,
    },
    /// Regenerate the results table from batch summaries in a directory.
    Table {
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Run {
            scenario,
            controller,
            runs,
            seed,
            config,
            out,
            dt_ctrl,
            dt_sim,
            fail_on_divergence,
            no_csv,
        } => {
            let mut cfg = match config {
                Some(path) => SimConfig::load(&path)?,
                None => SimConfig::default(),
            };
            cfg.scenario.scenario = match scenario {
                ScenarioArg::A => ScenarioId::A,
                ScenarioArg::B => ScenarioId::B,
                ScenarioArg::C => ScenarioId::C,
            };
            if let Some(dt) = dt_ctrl {
                cfg.sim.dt_ctrl = dt;
            }
            if let Some(dt) = dt_sim {
                cfg.sim.dt_sim = dt;
            }
            cfg.validate()?;
            let controller = match controller {
                ControllerArg::Fc => Controller::Fc,
                ControllerArg::Hc => Controller::Hc,
                ControllerArg::FcIdeal => Controller::FcIdeal,
            };

            let (summary, records) = monte_carlo(&cfg, controller, runs, seed)?;

            std::fs::create_dir_all(&out).map_err(|e| HarnessError::Io(e.to_string()))?;
            let cfg_json = serde_json::to_string_pretty(&cfg).map_err(|e| HarnessError::Io(e.to_string()))?;
            std::fs::write(out.join("config_used.json"), cfg_json)
                .map_err(|e| HarnessError::Io(e.to_string()))?;
            if no_csv {
                export::write_summary_json(&out, &summary)?;
                let all = export::read_summaries(&out)?;
                std::fs::write(out.join("table.txt"), export::render_table(&all))
                    .map_err(|e| HarnessError::Io(e.to_string()))?;
            } else {
                export::export(&out, &records, &summary)?;
            }

            println!(
                "{}-{}: {} runs, {} diverged | e_p {:.4} m, e_a {:.3} deg, u_n {:.1} Hz, u_e {:.3} Hz",
                summary.controller.label(),
                format!("{:?}", summary.scenario).to_lowercase(),
                summary.runs,
                summary.diverged,
                summary.mean_e_p,
                summary.mean_e_a_deg,
                summary.mean_u_n_hz,
                summary.mean_u_e_hz,
            );
            for rec in records.iter().filter(|r| r.diverged()) {
                if let tedhr_bench::runner::RunStatus::Diverged { t, reason } = &rec.status {
                    println!("  seed {:>5} diverged at t = {t:.2} s ({reason})", rec.seed);
                }
            }

            if fail_on_divergence && summary.diverged > 0 {
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Table { out } => {
            let summaries = export::read_summaries(&out)?;
            let table = export::render_table(&summaries);
            std::fs::write(out.join("table.txt"), &table).map_err(|e| HarnessError::Io(e.to_string()))?;
            print!("{table}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
