// Solves one cell's per-slot problem at increasing queue backlogs and prints
// which branch of the solution was taken, the multiplier and the KKT report.
//
// ```bash
// cargo run --release --example cell_solver
// ```

use mimo_wnv::channel::{channel_bound, Csi, GlobalChannel};
use mimo_wnv::config::ScenarioConfig;
use mimo_wnv::controller::compute_weight;
use mimo_wnv::precoders::sp_demands;
use mimo_wnv::solver::{solve_cell, SolverInput, Tolerances};

pub fn run_example() -> mimo_wnv::Result<()> {
    let scenario = ScenarioConfig::urban_lte_default().to_scenario()?;
    let topo = &scenario.topology;
    let b = channel_bound(topo, &scenario.gains);
    let params = compute_weight(scenario.theta, topo, b, &scenario.sp, &scenario.p_max, &scenario.p_bar)?;
    let channel = GlobalChannel::draw(
        topo,
        &scenario.gains,
        scenario.csi_error,
        b,
        &mut scenario.fading_rng(),
        &mut scenario.csi_rng(),
    );
    let (demand, _) = sp_demands(topo, &channel, Csi::Estimated, &scenario.sp)?;
    let h_hat = channel.bs_channel(topo, Csi::Estimated, 0);
    let g_hat = demand.padded(topo, 0);
    println!("U = {:.3e}, P_max = {:.3} W", params.u, params.p_max[0]);
    println!("{:>10} {:>28} {:>11} {:>11} {:>11}", "Z", "case", "lambda", "power", "objective");
    for z in [0.0, 1.0, 10.0, 100.0, 1000.0] {
        let input = SolverInput {
            h_hat: &h_hat,
            g_hat: &g_hat,
            z,
            u: params.u,
            p_max: params.p_max[0],
            tol: Tolerances::default(),
        };
        let out = solve_cell(&input)?;
        let kkt = out.kkt(&input);
        assert!(kkt.passes(1e-8), "KKT check failed: {kkt:?}");
        println!(
            "{z:>10} {:>28} {:>11.3e} {:>11.4} {:>11.4e}",
            out.case.as_str(),
            out.lambda,
            out.achieved_power,
            input.objective(&out.v)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
