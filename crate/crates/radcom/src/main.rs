//! Command-line front end for the experiment harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use radcom::array_model::{beampattern, ideal_pattern};
use radcom::channel::dump_matrix_csv;
use radcom::harness::{
    preset, run, run_sweep, write_run_artifacts, write_sweep_artifacts, ExperimentConfig,
    PRESET_NAMES,
};
use radcom::metrics::write_pattern_csv;
use radcom::radar_covariance::{design_covariance, DesignerConfig};

#[derive(Parser)]
#[command(name = "radcom", version, about = "Joint radar-communication transmit beamforming")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// JSON experiment config.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset bundle.
    #[arg(long, value_parser = PRESET_NAMES)]
    preset: Option<String>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

impl ConfigArgs {
    fn load(&self) -> radcom::error::Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), None) => ExperimentConfig::from_json_file(path)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => ExperimentConfig::default(),
            (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Design the radar covariance only; writes r.csv and pattern.csv.
    DesignRadar(ConfigArgs),
    /// Full Monte Carlo run; writes pattern/sinr/trace CSVs and summary.json.
    Run(ConfigArgs),
    /// One run per weight pair in the config's rho_sweep; writes tradeoff.csv.
    Sweep(ConfigArgs),
    /// Single-trial run emitting only the solver trace.
    Trace(ConfigArgs),
}

fn execute(cli: Cli) -> radcom::error::Result<()> {
    match cli.command {
        Command::DesignRadar(args) => {
            let cfg = args.load()?;
            let grid = cfg.grid()?;
            let ideal = ideal_pattern(&cfg.beams_rad(), &grid);
            let design = design_covariance(
                &ideal,
                &grid,
                cfg.power_mode,
                cfg.p0_lin(),
                None,
                &DesignerConfig::default(),
            )?;
            std::fs::create_dir_all(&args.out_dir)?;
            dump_matrix_csv(&design.r, &args.out_dir.join("r.csv"))?;
            let pattern = beampattern(&design.r, &grid)?;
            write_pattern_csv(&grid, &pattern, &args.out_dir.join("pattern.csv"))?;
            println!(
                "designed {}x{} covariance, objective {:.6e}, alpha {:.6}",
                cfg.n_antennas, cfg.n_antennas, design.objective, design.alpha_scale
            );
        }
        Command::Run(args) => {
            let cfg = args.load()?;
            let out = run(&cfg)?;
            write_run_artifacts(&cfg, &out, &args.out_dir)?;
            println!(
                "ran {} trials: mean SINR {:.2} dB, PSLR {:.2} dB, MSE {:.4e}",
                cfg.trials, out.tradeoff.avg_sinr_db, out.tradeoff.pslr_db, out.tradeoff.mse
            );
        }
        Command::Sweep(args) => {
            let cfg = args.load()?;
            let rho_list = if cfg.rho_sweep.is_empty() {
                vec![cfg.rho]
            } else {
                cfg.rho_sweep.clone()
            };
            let sweep = run_sweep(&cfg, &rho_list)?;
            write_sweep_artifacts(&cfg, &sweep, &args.out_dir)?;
            println!(
                "swept {} weight pairs ({} failed)",
                rho_list.len(),
                sweep.failures.len()
            );
            for (idx, msg) in &sweep.failures {
                eprintln!("  point {idx} failed: {msg}");
            }
        }
        Command::Trace(args) => {
            let mut cfg = args.load()?;
            cfg.trials = 1;
            let out = run(&cfg)?;
            std::fs::create_dir_all(&args.out_dir)?;
            let (n, k) = match cfg.deployment {
                radcom::harness::Deployment::Shared => (cfg.n_antennas, cfg.n_users),
                radcom::harness::Deployment::Separated { n_c, .. } => (n_c, cfg.n_users),
            };
            let flops = radcom::rcg_solver::flops_per_iteration(n, k).total;
            out.report.write_trace_csv(&args.out_dir.join("trace.csv"), flops)?;
            println!(
                "{} iterations, final cost {:.6e}, gradient norm {:.3e}",
                out.report.iterations, out.report.final_cost, out.report.final_grad_norm
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
