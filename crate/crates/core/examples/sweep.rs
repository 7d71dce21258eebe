// Runs a figure preset end to end and writes manifests, traces, summaries
// and bound reports for every configuration.
//
// ```bash
// cargo run --release --example sweep -- fig3 1000 out
// ```

use std::path::PathBuf;

use mimo_wnv::config::ScenarioConfig;
use mimo_wnv::experiment::{run_all, sweep_preset};

fn sweep(preset: &str, horizon: usize, out_dir: PathBuf) -> mimo_wnv::Result<()> {
    let mut base = ScenarioConfig::urban_lte_default();
    base.run.horizon = horizon;
    base.run.out_dir = out_dir;

    for report in run_all(&sweep_preset(preset, &base)?)? {
        println!(
            "{:<32} rho_ss {:>7.3}%  rate {:>6.3}  manifest {}",
            report.spec.label,
            100.0 * report.summary.rho_steady,
            report.summary.rate_steady,
            &report.manifest[..12]
        );
    }
    println!("outputs in {}", base.run.out_dir.display());
    Ok(())
}

pub fn run_example() -> mimo_wnv::Result<()> {
    sweep("fig5", 20, std::env::temp_dir().join("mimo-wnv-sweep"))
}

#[allow(dead_code)]
fn main() {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "fig5".into());
    let horizon = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let out_dir = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("mimo-wnv-sweep"));
    let result = sweep(&preset, horizon, out_dir);
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
