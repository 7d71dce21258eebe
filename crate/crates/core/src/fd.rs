//! Frequency-division baseline: the band is split equally among the SPs and
//! each SP is served alone on its sub-band by the same online controller.

use crate::controller::{RunOutput, Simulation};
use crate::error::{Result, WnvError};
use crate::metrics::steady_state;
use crate::scenario::Scenario;

/// The single-SP scenario of sub-band `sp`: `1/M` of the bandwidth, `1/M` of
/// every power limit and of the noise, and its own fading streams.
pub fn sub_band_scenario(scenario: &Scenario, sp: usize) -> Result<Scenario> {
    let topo = &scenario.topology;
    let m = topo.sp_count();
    if sp >= m {
        return Err(WnvError::invalid("sp", format!("index {sp} out of range for {m} SPs")));
    }
    let share = m as f64;
    let rows: Vec<usize> = (0..topo.cell_count()).flat_map(|c| topo.sp_rows(c, sp)).collect();
    let sub = Scenario {
        topology: topo.single_sp(sp),
        gains: scenario.gains.select_users(&rows),
        sp: scenario.sp.single_sp(sp),
        p_max: scenario.p_max.iter().map(|p| p / share).collect(),
        p_bar: scenario.p_bar.iter().map(|p| p.map(|p| p / share)).collect(),
        noise_power: scenario.noise_power / share,
        band: sp as u64,
        ..scenario.clone()
    };
    sub.validate()?;
    Ok(sub)
}

/// One controller run per sub-band.
#[derive(Debug, Clone)]
pub struct FdOutput {
    pub bands: Vec<(Scenario, RunOutput)>,
    /// Total number of users across all sub-bands.
    pub users: usize,
}

impl FdOutput {
    /// Per-slot network sum rate normalized by the full bandwidth: each
    /// sub-band's rate is divided by the number of sub-bands.
    pub fn sum_rate(&self) -> Vec<f64> {
        let share = self.bands.len() as f64;
        let horizon = self.bands.first().map_or(0, |(_, r)| r.records.len());
        (0..horizon)
            .map(|t| self.bands.iter().map(|(_, r)| r.records[t].sum_rate).sum::<f64>() / share)
            .collect()
    }

    /// Per-slot mean user rate in bit/s/Hz.
    pub fn user_rate(&self) -> Vec<f64> {
        self.sum_rate().into_iter().map(|r| r / self.users as f64).collect()
    }

    pub fn rate_bar(&self) -> f64 {
        let r = self.user_rate();
        r.iter().sum::<f64>() / r.len() as f64
    }

    pub fn rate_steady(&self) -> f64 {
        steady_state(&self.user_rate())
    }
}

/// Runs the baseline for `horizon` slots.
pub fn run_fd(scenario: &Scenario, horizon: usize) -> Result<FdOutput> {
    let mut bands = Vec::with_capacity(scenario.topology.sp_count());
    for sp in 0..scenario.topology.sp_count() {
        let sub = sub_band_scenario(scenario, sp)?;
        let out = Simulation::new(sub.clone())?.run(horizon)?;
        bands.push((sub, out));
    }
    Ok(FdOutput {
        bands,
        users: scenario.topology.total_users(),
    })
}
