//! A fully-specified simulation scenario: geometry, gains, SP configuration,
//! power limits and algorithm knobs, all in linear units.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{place_users, LargeScaleGains, Topology};
use crate::error::{Result, WnvError};
use crate::precoders::SpConfig;
use crate::solver::Tolerances;

/// Random substreams derived from a scenario seed.
pub mod stream {
    pub const GEOMETRY: u64 = 0;
    /// Fading of sub-band `b` uses `FADING + BAND_STRIDE·b`; the spatial run
    /// is band 0.
    pub const FADING: u64 = 1;
    pub const CSI: u64 = 2;
    pub const BAND_STRIDE: u64 = 16;
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub topology: Topology,
    pub gains: LargeScaleGains,
    pub sp: SpConfig,
    /// Per-slot limit `P_max^c` (W).
    pub p_max: Vec<f64>,
    /// Long-term limit `P̄^c` (W); `None` disables the virtual queue.
    pub p_bar: Vec<Option<f64>>,
    /// Standard deviation `e_H` of the normalized per-entry CSI error.
    pub csi_error: f64,
    pub theta: f64,
    /// Receiver noise power over the simulated band (W).
    pub noise_power: f64,
    pub seed: u64,
    /// Sub-band index selecting the fading/CSI random streams.
    pub band: u64,
    pub tol: Tolerances,
}

impl Scenario {
    /// Places users and draws shadowing from the scenario seed.
    #[allow(clippy::too_many_arguments)]
    pub fn generate(
        topology: Topology,
        shadowing_std_db: f64,
        sp: SpConfig,
        p_max: Vec<f64>,
        p_bar: Vec<Option<f64>>,
        csi_error: f64,
        theta: f64,
        noise_power: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = rng_for(seed, stream::GEOMETRY);
        let positions = place_users(&topology, &mut rng);
        let gains = LargeScaleGains::generate(&topology, &positions, shadowing_std_db, &mut rng)?;
        let s = Scenario {
            topology,
            gains,
            sp,
            p_max,
            p_bar,
            csi_error,
            theta,
            noise_power,
            seed,
            band: 0,
            tol: Tolerances::default(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.topology.cell_count();
        if self.p_max.len() != c || self.p_bar.len() != c {
            return Err(WnvError::DimensionMismatch("power limits must list every cell".into()));
        }
        for (i, (&pm, pb)) in self.p_max.iter().zip(&self.p_bar).enumerate() {
            if !(pm > 0.0) || !pm.is_finite() {
                return Err(WnvError::invalid(format!("p_max[{i}]"), "must be positive and finite"));
            }
            if let Some(pb) = *pb {
                if !(pb > 0.0) {
                    return Err(WnvError::invalid(format!("p_bar[{i}]"), "must be positive"));
                }
                if pb > pm {
                    return Err(WnvError::invalid(format!("p_bar[{i}]"), "must not exceed p_max"));
                }
            }
        }
        if !(self.csi_error >= 0.0) {
            return Err(WnvError::invalid("csi_error", "must be nonnegative"));
        }
        if !(self.theta > 0.0) {
            return Err(WnvError::invalid("theta", "must be positive"));
        }
        if !(self.noise_power > 0.0) {
            return Err(WnvError::invalid("noise_power", "must be positive"));
        }
        if self.gains.beta.len() != self.topology.total_users()
            || self.gains.beta.iter().any(|r| r.len() != c)
        {
            return Err(WnvError::DimensionMismatch("gain table does not match topology".into()));
        }
        self.sp.validate(&self.topology, &self.p_max)
    }

    pub fn fading_rng(&self) -> ChaCha8Rng {
        rng_for(self.seed, stream::FADING + stream::BAND_STRIDE * self.band)
    }

    pub fn csi_rng(&self) -> ChaCha8Rng {
        rng_for(self.seed, stream::CSI + stream::BAND_STRIDE * self.band)
    }
}
