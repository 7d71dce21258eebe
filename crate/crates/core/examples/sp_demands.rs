// Each SP designs MRT or ZF precoders on its own local channel; the InP
// receives the block-diagonal demand. Shows how CSI error perturbs it.
//
// ```bash
// cargo run --release --example sp_demands
// ```

use mimo_wnv::channel::{channel_bound, Csi, GlobalChannel};
use mimo_wnv::config::ScenarioConfig;
use mimo_wnv::linalg::frobenius;
use mimo_wnv::precoders::{demand_deviation, sp_demands, Scheme};

pub fn run_example() -> mimo_wnv::Result<()> {
    for scheme in [Scheme::Mrt, Scheme::Zf] {
        let scenario = ScenarioConfig::urban_lte_default().with_scheme(scheme).to_scenario()?;
        let topo = &scenario.topology;
        let b = channel_bound(topo, &scenario.gains);
        let channel = GlobalChannel::draw(
            topo,
            &scenario.gains,
            scenario.csi_error,
            b,
            &mut scenario.fading_rng(),
            &mut scenario.csi_rng(),
        )
        ;
        let (truth, _) = sp_demands(topo, &channel, Csi::True, &scenario.sp)?;
        let (estimate, fallbacks) = sp_demands(topo, &channel, Csi::Estimated, &scenario.sp)?;
        let block = &estimate.sp_blocks[0][0];
        println!("{scheme:?}: SP 0 in cell 0 asks for");
        for i in 0..block.nrows() {
            let row: Vec<String> = (0..block.ncols()).map(|j| format!("{:9.2e}", block[(i, j)].norm())).collect();
            println!("    |{}|", row.join(" "));
        }
        println!(
            "    ||D'||_F = {:.3e}, ||D' - D_hat'||_F = {:.3e}, ZF fallbacks = {fallbacks}",
            frobenius(&truth.global),
            demand_deviation(&truth, &estimate)?
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
