// Builds the seven-cell urban layout, draws one slot of Rayleigh fading with
// 15% CSI error, and prints the quantities the controller depends on.
//
// ```bash
// cargo run --release --example channel_model
// ```

use mimo_wnv::channel::{channel_bound, linear_to_db, place_users, Csi, GlobalChannel, LargeScaleGains, Topology};
use mimo_wnv::linalg::frobenius;
use mimo_wnv::scenario::{rng_for, stream};

pub fn run_example() -> mimo_wnv::Result<()> {
    let topo = Topology::hexagonal(7, 500.0, 32, 4, 2)?;
    let seed = 7;
    let mut geometry = rng_for(seed, stream::GEOMETRY);
    let positions = place_users(&topo, &mut geometry);
    let gains = LargeScaleGains::generate(&topo, &positions, 8.0, &mut geometry)?;

    println!("{} cells, {} users, {} antennas in total", topo.cell_count(), topo.total_users(), topo.total_antennas());
    for (u, &c) in topo.serving_cells().iter().enumerate().take(4) {
        println!(
            "user {u}: serving cell {c}, {:.0} m away, gain {:.1} dB",
            gains.distance[u][c],
            linear_to_db(gains.beta[u][c])
        );
    }

    let b = channel_bound(&topo, &gains);
    let channel = GlobalChannel::draw(
        &topo,
        &gains,
        0.15,
        b,
        &mut rng_for(seed, stream::FADING),
        &mut rng_for(seed, stream::CSI),
    );
    println!("bound B = {b:.3e}, realized ||H'||_F = {:.3e}", channel.true_norm());
    println!("largest normalized block error this slot: {:.3}", channel.delta_hat);

    let local = channel.block(&topo, Csi::True, 0, 0, 0);
    let error = channel.block(&topo, Csi::Error, 0, 0, 0);
    println!(
        "cell 0 / SP 0: local block {}x{}, relative CSI error {:.3}",
        local.nrows(),
        local.ncols(),
        frobenius(&error) / frobenius(&local)
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
