// Runs the online controller on the default scenario and prints the running
// deviation and power, showing the long-term power limit being met.
//
// ```bash
// cargo run --release --example online_controller -- 1000
// ```

use mimo_wnv::config::ScenarioConfig;
use mimo_wnv::controller::Simulation;
use mimo_wnv::metrics::{watts_to_dbm, MetricSeries, Summary};

fn simulate(horizon: usize) -> mimo_wnv::Result<()> {
    let scenario = ScenarioConfig::urban_lte_default().to_scenario()?;
    let users = scenario.topology.total_users();
    let noise = scenario.noise_power;
    let out = Simulation::new(scenario)?.run(horizon)?;
    let series = MetricSeries::from_records(&out.records, users, noise);

    println!("{:>6} {:>10} {:>12} {:>12}", "T", "rho(T) %", "P(T) dBm", "max Z");
    for t in (0..horizon).filter(|t| (t + 1) % (horizon / 10).max(1) == 0) {
        let z = out.records[t].queue.iter().copied().fold(0.0, f64::max);
        println!(
            "{:>6} {:>10.3} {:>12.3} {:>12.3}",
            t + 1,
            100.0 * series.rho_bar[t],
            watts_to_dbm(series.power_bar[t]),
            z
        );
    }
    let s = Summary::new(&out.records, users)?;
    println!(
        "steady state: rho = {:.3}%, rate = {:.3} bit/s/Hz per user",
        100.0 * s.rho_steady,
        s.rate_steady
    );
    Ok(())
}

pub fn run_example() -> mimo_wnv::Result<()> {
    simulate(200)
}

#[allow(dead_code)]
fn main() {
    let horizon = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let result = simulate(horizon);
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
