//! SP-side virtual precoders (MRT and ZF) and the virtualization demands the
//! InP receives from them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{Csi, GlobalChannel, Topology};
use crate::error::{Result, WnvError};
use crate::linalg::{block_diag, frobenius, hermitian_eigenvalues, CMatrix};

/// Largest accepted condition number of `HHᴴ` for ZF precoding.
pub const DEFAULT_ZF_CONDITION_CAP: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Mrt,
    Zf,
}

/// What to do when a ZF SP sees an ill-conditioned channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZfFallback {
    #[default]
    Abort,
    /// Substitute MRT for that SP in that slot.
    Mrt,
}

/// `W = √P · Hᴴ / ‖H‖_F`.
pub fn mrt_precoder(h: &CMatrix, power: f64) -> Result<CMatrix> {
    let norm = frobenius(h);
    if norm == 0.0 {
        return Err(WnvError::ZeroChannel { cell: 0, sp: 0 });
    }
    Ok(h.adjoint() * Complex64::from(power.sqrt() / norm))
}

/// `W = √P · Hᴴ(HHᴴ)⁻¹ / sqrt(tr{(HHᴴ)⁻¹})`, which makes `HW` a scaled
/// identity.
pub fn zf_precoder(h: &CMatrix, power: f64, condition_cap: f64) -> Result<CMatrix> {
    let singular = |condition| WnvError::SingularChannel {
        cell: 0,
        sp: 0,
        condition,
    };
    if h.nrows() > h.ncols() {
        return Err(singular(f64::INFINITY));
    }
    let gram = h * h.adjoint();
    let ev = hermitian_eigenvalues(&gram);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if !(lo > 0.0) || hi / lo > condition_cap {
        return Err(singular(if lo > 0.0 { hi / lo } else { f64::INFINITY }));
    }
    let inv = gram
        .cholesky()
        .ok_or_else(|| singular(hi / lo))?
        .inverse();
    let trace: f64 = inv.diagonal().iter().map(|z| z.re).sum();
    Ok(h.adjoint() * inv * Complex64::from((power / trace).sqrt()))
}

/// Scheme and power of every SP in every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SpConfig {
    /// `schemes[c][m]`
    pub schemes: Vec<Vec<Scheme>>,
    /// `power[c][m]` = `P_m^c` in watts.
    pub power: Vec<Vec<f64>>,
    pub zf_condition_cap: f64,
    pub zf_fallback: ZfFallback,
}

impl SpConfig {
    /// Same scheme everywhere, equal split of each cell's `P_max^c`.
    pub fn uniform(topology: &Topology, scheme: Scheme, p_max: &[f64]) -> Self {
        let m = topology.sp_count();
        SpConfig {
            schemes: vec![vec![scheme; m]; topology.cell_count()],
            power: p_max.iter().map(|p| vec![p / m as f64; m]).collect(),
            zf_condition_cap: DEFAULT_ZF_CONDITION_CAP,
            zf_fallback: ZfFallback::Abort,
        }
    }

    pub fn validate(&self, topology: &Topology, p_max: &[f64]) -> Result<()> {
        if self.schemes.len() != topology.cell_count() || self.power.len() != topology.cell_count() {
            return Err(WnvError::DimensionMismatch("SP config must list every cell".into()));
        }
        for c in 0..topology.cell_count() {
            if self.schemes[c].len() != topology.sp_count() || self.power[c].len() != topology.sp_count() {
                return Err(WnvError::DimensionMismatch(format!("cell {c}: SP count mismatch")));
            }
            for m in 0..topology.sp_count() {
                if !(self.power[c][m] > 0.0) {
                    return Err(WnvError::invalid(format!("power[{c}][{m}]"), "must be positive"));
                }
                if self.schemes[c][m] == Scheme::Zf && topology.users[c][m] > topology.antennas[c] {
                    return Err(WnvError::invalid(
                        format!("schemes[{c}][{m}]"),
                        "ZF needs no more users than BS antennas",
                    ));
                }
            }
            let total: f64 = self.power[c].iter().sum();
            if total > p_max[c] * (1.0 + 1e-12) {
                return Err(WnvError::invalid(
                    format!("power[{c}]"),
                    format!("SP powers sum to {total} W, above P_max {} W", p_max[c]),
                ));
            }
        }
        Ok(())
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().flatten().sum()
    }

    /// The configuration of SP `sp` alone, matching [`Topology::single_sp`].
    pub fn single_sp(&self, sp: usize) -> SpConfig {
        SpConfig {
            schemes: self.schemes.iter().map(|row| vec![row[sp]]).collect(),
            power: self.power.iter().map(|row| vec![row[sp]]).collect(),
            ..self.clone()
        }
    }
}

/// Virtualization demand: per-SP blocks `H^{cc}_m W^c_m`, their per-cell
/// block-diagonal `D^c` and the global `D′`.
#[derive(Debug, Clone, PartialEq)]
pub struct Demand {
    pub sp_blocks: Vec<Vec<CMatrix>>,
    pub cell: Vec<CMatrix>,
    pub global: CMatrix,
}

impl Demand {
    /// `G^c`: `D^c` embedded at cell `c`'s user rows of a `K × K^c` zero matrix.
    pub fn padded(&self, topology: &Topology, cell: usize) -> CMatrix {
        let d = &self.cell[cell];
        let mut g = CMatrix::zeros(topology.total_users(), d.ncols());
        g.view_mut((topology.cell_row_offset(cell), 0), d.shape()).copy_from(d);
        g
    }
}

/// Assembles `D^c` and `D′` from per-SP product blocks.
pub fn build_demand(blocks: Vec<Vec<CMatrix>>, topology: &Topology) -> Result<Demand> {
    if blocks.len() != topology.cell_count() {
        return Err(WnvError::DimensionMismatch(format!(
            "{} cells of blocks for {} cells",
            blocks.len(),
            topology.cell_count()
        )));
    }
    for (c, row) in blocks.iter().enumerate() {
        if row.len() != topology.sp_count() {
            return Err(WnvError::DimensionMismatch(format!("cell {c}: wrong SP count")));
        }
        for (m, b) in row.iter().enumerate() {
            let k = topology.users[c][m];
            if b.shape() != (k, k) {
                return Err(WnvError::DimensionMismatch(format!(
                    "block ({c},{m}) is {:?}, expected {k}x{k}",
                    b.shape()
                )));
            }
        }
    }
    let cell: Vec<CMatrix> = blocks.iter().map(|row| block_diag(row)).collect();
    let global = block_diag(&cell);
    Ok(Demand {
        sp_blocks: blocks,
        cell,
        global,
    })
}

/// Each SP's virtual precoder from its own local channel `H^{cc}_m` only.
/// Returns the demand and the number of ZF→MRT substitutions made.
pub fn sp_demands(
    topology: &Topology,
    channel: &GlobalChannel,
    which: Csi,
    config: &SpConfig,
) -> Result<(Demand, usize)> {
    let mut fallbacks = 0;
    let mut blocks = Vec::with_capacity(topology.cell_count());
    for c in 0..topology.cell_count() {
        let mut row = Vec::with_capacity(topology.sp_count());
        for m in 0..topology.sp_count() {
            let h = channel.block(topology, which, c, c, m);
            let (w, fell_back) = local_precoder(&h, config.schemes[c][m], config.power[c][m], config)
                .map_err(|e| locate(e, c, m))?;
            fallbacks += fell_back as usize;
            row.push(&h * w);
        }
        blocks.push(row);
    }
    Ok((build_demand(blocks, topology)?, fallbacks))
}

fn local_precoder(h: &CMatrix, scheme: Scheme, power: f64, config: &SpConfig) -> Result<(CMatrix, bool)> {
    match scheme {
        Scheme::Mrt => Ok((mrt_precoder(h, power)?, false)),
        Scheme::Zf => match zf_precoder(h, power, config.zf_condition_cap) {
            Ok(w) => Ok((w, false)),
            Err(WnvError::SingularChannel { .. }) if config.zf_fallback == ZfFallback::Mrt => {
                Ok((mrt_precoder(h, power)?, true))
            }
            Err(e) => Err(e),
        },
    }
}

fn locate(e: WnvError, cell: usize, sp: usize) -> WnvError {
    match e {
        WnvError::ZeroChannel { .. } => WnvError::ZeroChannel { cell, sp },
        WnvError::SingularChannel { condition, .. } => WnvError::SingularChannel { cell, sp, condition },
        other => other,
    }
}

/// `‖D′ − D̂′‖_F`.
pub fn demand_deviation(true_demand: &Demand, est_demand: &Demand) -> Result<f64> {
    if true_demand.global.shape() != est_demand.global.shape() {
        return Err(WnvError::DimensionMismatch("demand shapes differ".into()));
    }
    Ok(frobenius(&(&true_demand.global - &est_demand.global)))
}
