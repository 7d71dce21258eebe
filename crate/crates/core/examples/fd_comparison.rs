// Compares the per-user rate of spatial virtualization with the
// frequency-division baseline, where each SP gets 1/M of the band and power.
//
// ```bash
// cargo run --release --example fd_comparison -- 300
// ```

use mimo_wnv::config::ScenarioConfig;
use mimo_wnv::controller::Simulation;
use mimo_wnv::fd::run_fd;
use mimo_wnv::metrics::Summary;
use mimo_wnv::precoders::Scheme;

fn compare(horizon: usize) -> mimo_wnv::Result<()> {
    for scheme in [Scheme::Mrt, Scheme::Zf] {
        let scenario = ScenarioConfig::urban_lte_default().with_scheme(scheme).to_scenario()?;
        let users = scenario.topology.total_users();
        let fd = run_fd(&scenario, horizon)?;
        let spatial = Simulation::new(scenario)?.run(horizon)?;
        let r_spatial = Summary::new(&spatial.records, users)?.rate_steady;
        let r_fd = fd.rate_steady();
        println!(
            "{scheme:?}: spatial {r_spatial:.3} vs FD {r_fd:.3} bit/s/Hz per user (x{:.2})",
            r_spatial / r_fd
        );
    }
    Ok(())
}

pub fn run_example() -> mimo_wnv::Result<()> {
    compare(60)
}

#[allow(dead_code)]
fn main() {
    let horizon = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(60);
    let result = compare(horizon);
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
