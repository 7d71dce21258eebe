//! The online controller: per-slot cell solves driven by virtual queues that
//! enforce each cell's long-term average power limit.

use rand_chacha::ChaCha8Rng;

use crate::channel::{channel_bound, Csi, GlobalChannel};
use crate::error::{Result, WnvError};
use crate::linalg::{frobenius, frobenius_sq, hermitian_eigenvalues, CMatrix};
use crate::precoders::{demand_deviation, sp_demands, Demand, SpConfig};
use crate::scenario::Scenario;
use crate::solver::{solve_cell, CaseTag, SolverInput, SolverOutput};
use crate::channel::Topology;

/// Constants derived from the scenario that fix the objective weight `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoParams {
    pub theta: f64,
    /// Channel-norm bound `B` used to scale `ε`.
    pub bound_b: f64,
    /// `ζ′ = sqrt(Σ_c Σ_m P_m^c)`.
    pub zeta_prime: f64,
    /// `γ′ = sqrt(Σ_c P_max^c)`.
    pub gamma_prime: f64,
    /// `S′ = ½ Σ_c max{(P_max^c − P̄^c)², (P̄^c)²}`.
    pub s_prime: f64,
    /// `ε = θ ζ′² B²`.
    pub epsilon: f64,
    /// `U = S′ / ε`.
    pub u: f64,
    /// `ξ^c = sqrt(N^c / P̄^c · Σ_m P_m^c)`, one per cell.
    pub xi: Vec<f64>,
    pub p_max: Vec<f64>,
    /// Long-term limit per cell; an unlimited cell uses `P_max^c`, which is
    /// equivalent because per-slot power never exceeds it.
    pub p_bar: Vec<f64>,
    pub queue_enabled: Vec<bool>,
}

/// Derives `ε`, `U` and the auxiliary constants for a scenario.
pub fn compute_weight(
    theta: f64,
    topology: &Topology,
    bound_b: f64,
    sp: &SpConfig,
    p_max: &[f64],
    p_bar: &[Option<f64>],
) -> Result<AlgoParams> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(WnvError::invalid("theta", "must be positive and finite"));
    }
    if !(bound_b > 0.0) || !bound_b.is_finite() {
        return Err(WnvError::invalid("bound_b", "must be positive and finite"));
    }
    let cells = topology.cell_count();
    if p_max.len() != cells || p_bar.len() != cells || sp.power.len() != cells {
        return Err(WnvError::DimensionMismatch("per-cell parameters must list every cell".into()));
    }
    let queue_enabled: Vec<bool> = p_bar.iter().map(Option::is_some).collect();
    let p_bar_eff: Vec<f64> = p_bar.iter().zip(p_max).map(|(b, &m)| b.unwrap_or(m)).collect();

    let sp_total: Vec<f64> = sp.power.iter().map(|row| row.iter().sum()).collect();
    let zeta_prime = sp_total.iter().sum::<f64>().sqrt();
    let gamma_prime = p_max.iter().sum::<f64>().sqrt();
    let s_prime = 0.5
        * p_max
            .iter()
            .zip(&p_bar_eff)
            .map(|(&m, &b)| (m - b).powi(2).max(b * b))
            .sum::<f64>();
    let xi = (0..cells)
        .map(|c| (topology.antennas[c] as f64 / p_bar_eff[c] * sp_total[c]).sqrt())
        .collect();
    let epsilon = theta * zeta_prime * zeta_prime * bound_b * bound_b;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(WnvError::invalid("theta", "gives a degenerate ε"));
    }
    Ok(AlgoParams {
        theta,
        bound_b,
        zeta_prime,
        gamma_prime,
        s_prime,
        epsilon,
        u: s_prime / epsilon,
        xi,
        p_max: p_max.to_vec(),
        p_bar: p_bar_eff,
        queue_enabled,
    })
}

/// `Z(t+1) = max{Z(t) + ‖V(t)‖² − P̄, 0}`.
pub fn update_queue(z: f64, power: f64, p_bar: f64) -> f64 {
    (z + power - p_bar).max(0.0)
}

/// Per-slot measurements written to the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub t: usize,
    /// `Z^c(t)`, the queue each cell's solve used.
    pub queue: Vec<f64>,
    /// `‖V^c(t)‖_F²`.
    pub power: Vec<f64>,
    pub lambda: Vec<f64>,
    pub case: Vec<CaseTag>,
    /// Largest normalized stationarity residual over the cells.
    pub kkt_residual: f64,
    /// `‖H′V′ − D′‖_F²` against the true channel and the true demand.
    pub deviation: f64,
    /// `‖Ĥ′V′ − D̂′‖_F²`, the quantity the cells actually minimize.
    pub deviation_est: f64,
    pub demand_norm_sq: f64,
    pub est_demand_norm_sq: f64,
    /// `‖D′ − D̂′‖_F`.
    pub demand_error: f64,
    /// `‖H′‖_F`.
    pub channel_norm: f64,
    pub delta_hat: f64,
    /// `Σ_k log2(1 + SINR_k)` over every user, in bit/s/Hz.
    pub sum_rate: f64,
    pub zf_fallbacks: usize,
}

impl SlotRecord {
    /// Normalized deviation `‖H′V′ − D′‖² / ‖D′‖²`.
    pub fn normalized_deviation(&self) -> f64 {
        if self.demand_norm_sq > 0.0 {
            self.deviation / self.demand_norm_sq
        } else {
            0.0
        }
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }
}

/// Everything one slot produced, for callers that need the matrices.
#[derive(Debug, Clone)]
pub struct SlotOutcome {
    pub record: SlotRecord,
    pub cells: Vec<SolverOutput>,
    pub demand: Demand,
    pub est_demand: Demand,
    pub next_queue: Vec<f64>,
}

impl SlotOutcome {
    /// `V^c` for every cell, in cell order.
    pub fn precoders(&self) -> Vec<&CMatrix> {
        self.cells.iter().map(|o| &o.v).collect()
    }
}

/// One slot: demands from the SPs, independent cell solves on estimated CSI,
/// then queue updates once every cell has chosen its precoder.
pub fn run_slot(
    scenario: &Scenario,
    params: &AlgoParams,
    queue: &[f64],
    channel: &GlobalChannel,
    t: usize,
) -> Result<SlotOutcome> {
    let topo = &scenario.topology;
    let (demand, _) = sp_demands(topo, channel, Csi::True, &scenario.sp)?;
    let (est_demand, zf_fallbacks) = sp_demands(topo, channel, Csi::Estimated, &scenario.sp)?;

    let mut cells = Vec::with_capacity(topo.cell_count());
    for c in 0..topo.cell_count() {
        let h_hat = channel.bs_channel(topo, Csi::Estimated, c);
        let g_hat = est_demand.padded(topo, c);
        let input = SolverInput {
            h_hat: &h_hat,
            g_hat: &g_hat,
            z: queue[c],
            u: params.u,
            p_max: params.p_max[c],
            tol: scenario.tol,
        };
        cells.push(solve_cell(&input).map_err(|e| e.in_cell(c))?);
    }

    let power: Vec<f64> = cells.iter().map(|o| o.achieved_power).collect();
    let next_queue = (0..topo.cell_count())
        .map(|c| {
            if params.queue_enabled[c] {
                update_queue(queue[c], power[c], params.p_bar[c])
            } else {
                0.0
            }
        })
        .collect();

    let served = effective_channel(scenario, channel, Csi::True, &cells);
    let served_est = effective_channel(scenario, channel, Csi::Estimated, &cells);
    let record = SlotRecord {
        t,
        queue: queue.to_vec(),
        lambda: cells.iter().map(|o| o.lambda).collect(),
        case: cells.iter().map(|o| o.case).collect(),
        kkt_residual: cells.iter().map(|o| o.kkt_residual).fold(0.0, f64::max),
        deviation: frobenius_sq(&(&served - &demand.global)),
        deviation_est: frobenius_sq(&(&served_est - &est_demand.global)),
        demand_norm_sq: frobenius_sq(&demand.global),
        est_demand_norm_sq: frobenius_sq(&est_demand.global),
        demand_error: demand_deviation(&demand, &est_demand)?,
        channel_norm: channel.true_norm(),
        delta_hat: channel.delta_hat,
        sum_rate: sum_rate(&served, scenario.noise_power),
        zf_fallbacks,
        power,
    };
    Ok(SlotOutcome {
        record,
        cells,
        demand,
        est_demand,
        next_queue,
    })
}

/// `H′V′` (K × K): column block `c` is `H^c V^c`.
fn effective_channel(scenario: &Scenario, channel: &GlobalChannel, which: Csi, cells: &[SolverOutput]) -> CMatrix {
    let topo = &scenario.topology;
    let k = topo.total_users();
    let mut out = CMatrix::zeros(k, k);
    for (c, o) in cells.iter().enumerate() {
        let h = channel.bs_channel(topo, which, c);
        let cols = topo.cell_rows(c);
        out.columns_mut(cols.start, cols.len()).copy_from(&(h * &o.v));
    }
    out
}

/// `Σ_k log2(1 + |A_kk|² / (Σ_{j≠k} |A_kj|² + σ²))` for an effective channel `A`.
pub fn sum_rate(effective: &CMatrix, noise_power: f64) -> f64 {
    (0..effective.nrows())
        .map(|k| {
            let row = effective.row(k);
            let signal = row[k].norm_sqr();
            let interference = row.iter().map(|a| a.norm_sqr()).sum::<f64>() - signal;
            (1.0 + signal / (interference.max(0.0) + noise_power)).log2()
        })
        .sum()
}

/// Run-level extremes needed by the analytical bounds, accumulated per slot.
/// Per-SP minima are indexed `[cell][sp]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunStats {
    /// Largest realized `‖H′‖_F`.
    pub b_real: f64,
    /// Largest normalized block error.
    pub delta_hat: f64,
    /// Smallest `‖Ĥ^{cc}_m‖_F`.
    pub b_hat_min: Vec<Vec<f64>>,
    /// Smallest eigenvalue of `Ĥ^{cc}_m (Ĥ^{cc}_m)ᴴ`.
    pub omega_hat_min: Vec<Vec<f64>>,
    /// Smallest eigenvalue of `H^{cc}_m (H^{cc}_m)ᴴ`.
    pub omega_min: Vec<Vec<f64>>,
}

impl RunStats {
    pub fn new(topology: &Topology) -> Self {
        let grid = vec![vec![f64::INFINITY; topology.sp_count()]; topology.cell_count()];
        RunStats {
            b_real: 0.0,
            delta_hat: 0.0,
            b_hat_min: grid.clone(),
            omega_hat_min: grid.clone(),
            omega_min: grid,
        }
    }

    pub fn observe(&mut self, topology: &Topology, channel: &GlobalChannel) {
        self.b_real = self.b_real.max(channel.true_norm());
        self.delta_hat = self.delta_hat.max(channel.delta_hat);
        for c in 0..topology.cell_count() {
            for m in 0..topology.sp_count() {
                if topology.users[c][m] == 0 {
                    continue;
                }
                let est = channel.block(topology, Csi::Estimated, c, c, m);
                let truth = channel.block(topology, Csi::True, c, c, m);
                let b = &mut self.b_hat_min[c][m];
                *b = b.min(frobenius(&est));
                let w = &mut self.omega_hat_min[c][m];
                *w = w.min(min_gram_eigenvalue(&est));
                let w = &mut self.omega_min[c][m];
                *w = w.min(min_gram_eigenvalue(&truth));
            }
        }
    }
}

fn min_gram_eigenvalue(h: &CMatrix) -> f64 {
    let gram = h * h.adjoint();
    hermitian_eigenvalues(&gram).first().copied().unwrap_or(0.0).max(0.0)
}

/// A complete run: the trace plus the constants it was produced with.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub params: AlgoParams,
    pub records: Vec<SlotRecord>,
    pub stats: RunStats,
    pub final_queue: Vec<f64>,
}

/// Stateful online controller over a scenario's channel process.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    params: AlgoParams,
    queue: Vec<f64>,
    stats: RunStats,
    fading_rng: ChaCha8Rng,
    csi_rng: ChaCha8Rng,
    t: usize,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let bound_b = channel_bound(&scenario.topology, &scenario.gains);
        let params = compute_weight(
            scenario.theta,
            &scenario.topology,
            bound_b,
            &scenario.sp,
            &scenario.p_max,
            &scenario.p_bar,
        )?;
        Ok(Self::with_params(scenario, params))
    }

    /// Uses caller-supplied constants instead of deriving them.
    pub fn with_params(scenario: Scenario, params: AlgoParams) -> Self {
        let cells = scenario.topology.cell_count();
        let stats = RunStats::new(&scenario.topology);
        Simulation {
            fading_rng: scenario.fading_rng(),
            csi_rng: scenario.csi_rng(),
            scenario,
            params,
            queue: vec![0.0; cells],
            stats,
            t: 0,
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn params(&self) -> &AlgoParams {
        &self.params
    }

    pub fn queue(&self) -> &[f64] {
        &self.queue
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    pub fn slot(&self) -> usize {
        self.t
    }

    /// Draws the next channel from the scenario's random streams.
    pub fn draw_channel(&mut self) -> GlobalChannel {
        GlobalChannel::draw(
            &self.scenario.topology,
            &self.scenario.gains,
            self.scenario.csi_error,
            self.params.bound_b,
            &mut self.fading_rng,
            &mut self.csi_rng,
        )
    }

    /// Advances one slot on an externally supplied channel.
    pub fn step_on(&mut self, channel: &GlobalChannel) -> Result<SlotOutcome> {
        let t = self.t;
        let outcome =
            run_slot(&self.scenario, &self.params, &self.queue, channel, t).map_err(|e| e.in_slot(t))?;
        self.stats.observe(&self.scenario.topology, channel);
        self.queue.clone_from(&outcome.next_queue);
        self.t += 1;
        Ok(outcome)
    }

    /// Draws a channel and advances one slot.
    pub fn step(&mut self) -> Result<(GlobalChannel, SlotOutcome)> {
        let channel = self.draw_channel();
        let outcome = self.step_on(&channel)?;
        Ok((channel, outcome))
    }

    pub fn run(mut self, horizon: usize) -> Result<RunOutput> {
        let mut records = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            records.push(self.step()?.1.record);
        }
        Ok(RunOutput {
            params: self.params,
            records,
            stats: self.stats,
            final_queue: self.queue,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Topology;
    use crate::precoders::{Scheme, SpConfig};

    fn small_scenario(p_bar: Option<f64>, seed: u64) -> Scenario {
        let topo = Topology::hexagonal(3, 200.0, 8, 2, 2).unwrap();
        let sp = SpConfig::uniform(&topo, Scheme::Mrt, &[2.0; 3]);
        Scenario::generate(topo, 8.0, sp, vec![2.0; 3], vec![p_bar; 3], 0.0, 1e-4, 1e-15, seed).unwrap()
    }

    #[test]
    fn queue_update_is_positive_part() {
        assert_eq!(update_queue(1.0, 2.0, 5.0), 0.0);
        assert_eq!(update_queue(1.0, 6.0, 5.0), 2.0);
        assert_eq!(update_queue(0.0, 5.0, 5.0), 0.0);
    }

    #[test]
    fn weight_matches_hand_computation() {
        let topo = Topology::hexagonal(2, 100.0, 4, 2, 1).unwrap();
        let sp = SpConfig::uniform(&topo, Scheme::Mrt, &[4.0, 4.0]);
        let p = compute_weight(0.5, &topo, 3.0, &sp, &[4.0, 4.0], &[Some(1.0), Some(3.0)]).unwrap();
        // max{9, 1} and max{1, 9}
        assert!((p.s_prime - 9.0).abs() < 1e-12);
        assert!((p.zeta_prime - 8f64.sqrt()).abs() < 1e-12);
        assert!((p.epsilon - 0.5 * 8.0 * 9.0).abs() < 1e-12);
        assert!((p.u - 9.0 / 36.0).abs() < 1e-12);
        assert!((p.xi[0] - (4.0f64 / 1.0 * 4.0).sqrt()).abs() < 1e-12);
        assert!((p.xi[1] - (4.0f64 / 3.0 * 4.0).sqrt()).abs() < 1e-12);
        assert!(compute_weight(0.0, &topo, 3.0, &sp, &[4.0, 4.0], &[None, None]).is_err());
        assert!(compute_weight(-1.0, &topo, 3.0, &sp, &[4.0, 4.0], &[None, None]).is_err());
    }

    #[test]
    fn unlimited_cells_keep_an_empty_queue() {
        let out = Simulation::new(small_scenario(None, 3)).unwrap().run(20).unwrap();
        assert!(out.records.iter().all(|r| r.queue.iter().all(|&z| z == 0.0)));
    }

    #[test]
    fn queue_follows_recursion_and_power_is_feasible() {
        let out = Simulation::new(small_scenario(Some(0.5), 4)).unwrap().run(40).unwrap();
        for w in out.records.windows(2) {
            for c in 0..3 {
                let expect = update_queue(w[0].queue[c], w[0].power[c], 0.5);
                assert_eq!(w[1].queue[c], expect);
                assert!(w[0].power[c] <= 2.0 * (1.0 + 1e-9));
            }
        }
        assert!(out.records.iter().any(|r| r.queue.iter().any(|&z| z > 0.0)));
    }

    #[test]
    fn runs_are_reproducible() {
        let a = Simulation::new(small_scenario(Some(1.0), 9)).unwrap().run(5).unwrap();
        let b = Simulation::new(small_scenario(Some(1.0), 9)).unwrap().run(5).unwrap();
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn sum_rate_of_orthogonal_links() {
        let a = CMatrix::from_diagonal_element(2, 2, num_complex::Complex64::new(1.0, 0.0));
        assert!((sum_rate(&a, 1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cells_see_only_their_own_columns() {
        // Changing another BS's channel must not change cell 0's decision.
        let mut sim = Simulation::new(small_scenario(Some(1.0), 5)).unwrap();
        let ch = sim.draw_channel();
        let topo = sim.scenario().topology.clone();
        let base = run_slot(sim.scenario(), sim.params(), &[0.3; 3], &ch, 0).unwrap();
        let mut est = ch.est_h.clone();
        let cols = topo.bs_cols(2);
        est.columns_mut(cols.start, cols.len()).scale_mut(3.0);
        let altered = GlobalChannel::from_parts(&topo, ch.true_h.clone(), est, ch.error_h.clone(), 0.0, 1.0);
        let again = run_slot(sim.scenario(), sim.params(), &[0.3; 3], &altered, 0).unwrap();
        assert_eq!(base.cells[0].v, again.cells[0].v);
        assert_ne!(base.cells[2].v, again.cells[2].v);
    }
}
