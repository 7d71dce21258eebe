// Evaluates the analytical guarantees on a finished run: the virtual-queue
// ceiling, per-slot feasibility, the average-power bound at every decade and
// the demand-deviation bounds, all with realized constants.
//
// ```bash
// cargo run --release --example bound_report
// ```

use mimo_wnv::config::ScenarioConfig;
use mimo_wnv::controller::Simulation;
use mimo_wnv::metrics::BoundReport;

pub fn run_example() -> mimo_wnv::Result<()> {
    let mut cfg = ScenarioConfig::urban_lte_default();
    cfg.algorithm.csi_error = 0.05;
    let scenario = cfg.to_scenario()?;
    let out = Simulation::new(scenario.clone())?.run(100)?;
    let report = BoundReport::new(&scenario, &out)?;
    println!(
        "B_real = {:.3e}, delta_hat = {:.3}, eta' = {:.3e}, phi' = {:.3e}",
        report.b_real, report.delta_hat, report.eta_prime, report.phi_prime
    );
    for line in report.lines.iter().filter(|l| l.name.contains("cell0") || !l.name.contains(".cell")) {
        println!(
            "{:<5} {:<28} worst {:>11.4e} <= {:>11.4e}",
            if line.pass() { "ok" } else { "FAIL" },
            line.name,
            line.lhs,
            line.rhs
        );
    }
    println!("all inequalities hold: {}", report.all_pass());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
