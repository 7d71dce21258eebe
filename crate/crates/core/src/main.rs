use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mimo_wnv::config::{load_config, ScenarioConfig, DEFAULT_PRESET};
use mimo_wnv::experiment::{format_bound_report, plan_runs, run_experiment, sweep_preset, RunReport};
use mimo_wnv::metrics::watts_to_dbm;

#[derive(Parser)]
#[command(version, about = "Online multi-cell MIMO precoding for wireless network virtualization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a config file, manifest or preset.
    Run {
        /// TOML config or manifest; defaults to the urban-lte-default preset.
        config: Option<String>,
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// Also run the frequency-division baseline.
        #[arg(long)]
        baseline: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run every configuration of a figure preset (fig2, fig3, fig4, fig5).
    Sweep {
        preset: String,
        /// Base configuration the sweep varies; defaults to urban-lte-default.
        #[arg(long)]
        config: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Pretty-print a bound report (a bounds.txt file or a run directory).
    Report { path: PathBuf },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Write every slot's matrices as CSV (large).
    #[arg(long)]
    dump_matrices: bool,
}

impl Common {
    fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(h) = self.horizon {
            cfg.run.horizon = h;
        }
        if let Some(d) = &self.out_dir {
            cfg.run.out_dir = d.clone();
        }
        cfg.run.dump_matrices |= self.dump_matrices;
    }
}

fn print_report(r: &RunReport) {
    let failing = r.bounds.iter().flat_map(|b| &b.lines).filter(|l| !l.pass()).count();
    println!(
        "{:<40} rho_ss={:.4}% P={:.2} dBm R={:.3} bit/s/Hz bounds_failing={} -> {}",
        r.spec.label,
        100.0 * r.summary.rho_steady,
        watts_to_dbm(r.summary.power_bar),
        r.summary.rate_steady,
        failing,
        r.dir.display()
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            preset,
            baseline,
            common,
        } => (|| {
            let source = config.or(preset).unwrap_or_else(|| DEFAULT_PRESET.to_string());
            let mut cfg = load_config(&source)?;
            common.apply(&mut cfg);
            cfg.run.baseline |= baseline;
            cfg.validate()?;
            for spec in plan_runs(&cfg) {
                print_report(&run_experiment(&spec)?);
            }
            Ok(())
        })(),
        Command::Sweep { preset, config, common } => (|| {
            let mut base = load_config(config.as_deref().unwrap_or(DEFAULT_PRESET))?;
            common.apply(&mut base);
            for spec in sweep_preset(&preset, &base)? {
                print_report(&run_experiment(&spec)?);
            }
            Ok(())
        })(),
        Command::Report { path } => (|| {
            let file = if path.is_dir() { path.join("bounds.txt") } else { path };
            print!("{}", format_bound_report(&std::fs::read_to_string(file)?)?);
            Ok(())
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let e: mimo_wnv::WnvError = e;
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
