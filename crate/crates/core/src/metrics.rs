//! Evaluation metrics over a run's trace and the analytical bound checks.

use std::fmt;

use crate::controller::{RunOutput, SlotRecord};
use crate::error::{Result, WnvError};
use crate::precoders::Scheme;
use crate::scenario::Scenario;

/// Relative slack allowed on the per-slot power constraint.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// `σ_n² = N₀·B_W·N_F` in watts, from dBm/Hz, Hz and dB.
pub fn noise_power(noise_psd_dbm_hz: f64, bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    dbm_to_watts(noise_psd_dbm_hz + noise_figure_db) * bandwidth_hz
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

fn check_horizon(records: &[SlotRecord], horizon: usize) -> Result<()> {
    if horizon == 0 || horizon > records.len() {
        return Err(WnvError::invalid(
            "horizon",
            format!("must be in 1..={} for this trace", records.len()),
        ));
    }
    Ok(())
}

/// `ρ̄(T)`: mean normalized deviation over the first `T` slots. Slots with a
/// zero demand are skipped; the second value counts them.
pub fn rho_bar(records: &[SlotRecord], horizon: usize) -> Result<(f64, usize)> {
    check_horizon(records, horizon)?;
    let mut sum = 0.0;
    let mut skipped = 0;
    for r in &records[..horizon] {
        if r.demand_norm_sq > 0.0 {
            sum += r.deviation / r.demand_norm_sq;
        } else {
            skipped += 1;
        }
    }
    Ok((sum / horizon as f64, skipped))
}

/// `P̄(T) = (1/(TC)) Σ_t ‖V′(t)‖_F²`.
pub fn power_bar(records: &[SlotRecord], horizon: usize) -> Result<f64> {
    check_horizon(records, horizon)?;
    let cells = records[0].power.len() as f64;
    Ok(records[..horizon].iter().map(SlotRecord::total_power).sum::<f64>() / (horizon as f64 * cells))
}

/// `(1/T) Σ_t ‖V^c(t)‖_F²` for one cell.
pub fn cell_power_bar(records: &[SlotRecord], horizon: usize, cell: usize) -> Result<f64> {
    check_horizon(records, horizon)?;
    Ok(records[..horizon].iter().map(|r| r.power[cell]).sum::<f64>() / horizon as f64)
}

/// `R̄(T)`: mean per-user rate in bit/s/Hz, given the number of users.
pub fn rate_bar(records: &[SlotRecord], horizon: usize, users: usize) -> Result<f64> {
    check_horizon(records, horizon)?;
    if users == 0 {
        return Err(WnvError::invalid("users", "must be positive"));
    }
    Ok(records[..horizon].iter().map(|r| r.sum_rate).sum::<f64>() / (horizon as f64 * users as f64))
}

/// Mean of the last quarter of a per-slot series (at least one sample).
pub fn steady_state(per_slot: &[f64]) -> f64 {
    if per_slot.is_empty() {
        return f64::NAN;
    }
    let tail = &per_slot[per_slot.len() - per_slot.len().div_ceil(4)..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

fn cumulative_mean(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut sum = 0.0;
    values
        .enumerate()
        .map(|(i, v)| {
            sum += v;
            sum / (i + 1) as f64
        })
        .collect()
}

/// The running metrics `ρ̄(T)`, `P̄(T)` and `R̄(T)` for `T = 1..=len`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub rho_bar: Vec<f64>,
    pub power_bar: Vec<f64>,
    pub rate_bar: Vec<f64>,
    pub noise_power: f64,
}

impl MetricSeries {
    pub fn from_records(records: &[SlotRecord], users: usize, noise_power: f64) -> Self {
        MetricSeries {
            rho_bar: cumulative_mean(records.iter().map(SlotRecord::normalized_deviation)),
            power_bar: cumulative_mean(records.iter().map(|r| r.total_power() / r.power.len() as f64)),
            rate_bar: cumulative_mean(records.iter().map(|r| r.sum_rate / users as f64)),
            noise_power,
        }
    }

    pub fn len(&self) -> usize {
        self.rho_bar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho_bar.is_empty()
    }
}

/// Steady-state summary of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub horizon: usize,
    pub rho_bar: f64,
    pub rho_steady: f64,
    pub power_bar: f64,
    pub power_steady: f64,
    pub rate_bar: f64,
    pub rate_steady: f64,
    pub skipped_slots: usize,
}

impl Summary {
    pub fn new(records: &[SlotRecord], users: usize) -> Result<Self> {
        let horizon = records.len();
        let (rho_bar, skipped_slots) = rho_bar(records, horizon)?;
        let rho: Vec<f64> = records.iter().map(SlotRecord::normalized_deviation).collect();
        let power: Vec<f64> = records.iter().map(|r| r.total_power() / r.power.len() as f64).collect();
        let rate: Vec<f64> = records.iter().map(|r| r.sum_rate / users as f64).collect();
        Ok(Summary {
            horizon,
            rho_bar,
            rho_steady: steady_state(&rho),
            power_bar: power_bar(records, horizon)?,
            power_steady: steady_state(&power),
            rate_bar: rate_bar(records, horizon, users)?,
            rate_steady: steady_state(&rate),
            skipped_slots,
        })
    }
}

/// One checked inequality `lhs ≤ rhs`. Slot-wise checks report the worst
/// slot in `lhs` and count violations.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundLine {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub violations: usize,
    pub checked: usize,
}

impl BoundLine {
    fn slotwise(name: String, values: impl Iterator<Item = f64>, rhs: f64) -> Self {
        let mut lhs = f64::NEG_INFINITY;
        let mut violations = 0;
        let mut checked = 0;
        for v in values {
            checked += 1;
            lhs = lhs.max(v);
            violations += usize::from(!(v <= rhs));
        }
        BoundLine {
            name,
            lhs,
            rhs,
            violations,
            checked,
        }
    }

    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

impl fmt::Display for BoundLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "check name={} lhs={:.9e} rhs={:.9e} slack={:.9e} violations={} checked={} pass={}",
            self.name,
            self.lhs,
            self.rhs,
            self.slack(),
            self.violations,
            self.checked,
            self.pass()
        )
    }
}

/// Constants of the performance analysis evaluated with realized data, and
/// the inequalities they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// `S^c = ½ max{(P_max^c − P̄^c)², (P̄^c)²}` per cell.
    pub s: Vec<f64>,
    pub s_prime: f64,
    pub xi: Vec<f64>,
    pub zeta_prime: f64,
    pub gamma_prime: f64,
    pub eta_prime: f64,
    pub phi_prime: f64,
    pub epsilon: f64,
    pub u: f64,
    pub b_nominal: f64,
    pub b_real: f64,
    pub delta_hat: f64,
    /// Analytical ceiling on `Z^c(t)`, per cell.
    pub queue_bound: Vec<f64>,
    /// `(1/T) Σ_t ‖H′V′ − D′‖_F²` over the whole run.
    pub mean_deviation: f64,
    pub lines: Vec<BoundLine>,
}

impl BoundReport {
    /// Evaluates every bound on a completed run.
    pub fn new(scenario: &Scenario, run: &RunOutput) -> Result<Self> {
        let records = &run.records;
        if records.is_empty() {
            return Err(WnvError::invalid("horizon", "bound report needs at least one slot"));
        }
        let topo = &scenario.topology;
        let p = &run.params;
        let st = &run.stats;
        let (b, d) = (st.b_real, st.delta_hat);

        let s: Vec<f64> = (0..topo.cell_count())
            .map(|c| 0.5 * (p.p_max[c] - p.p_bar[c]).powi(2).max(p.p_bar[c].powi(2)))
            .collect();

        let mut eta_sq = 0.0;
        for c in 0..topo.cell_count() {
            for m in 0..topo.sp_count() {
                let k = topo.users[c][m];
                if k == 0 {
                    continue;
                }
                let pw = scenario.sp.power[c][m];
                eta_sq += match scenario.sp.schemes[c][m] {
                    Scheme::Mrt => (1.0 + (2.0 + d) * b / st.b_hat_min[c][m]).powi(2) * pw,
                    Scheme::Zf => {
                        let w = k as f64 * st.omega_hat_min[c][m] * st.omega_min[c][m];
                        (b.powi(4) * (1.0 + d).powi(2) / w).powi(2) * pw
                    }
                };
            }
        }
        let eta_prime = eta_sq.sqrt();
        let (zeta, gamma) = (p.zeta_prime, p.gamma_prime);
        let phi_prime = 2.0
            * ((2.0 + d) * (gamma * gamma + zeta * eta_prime) + 2.0 * (zeta * (1.0 + d) + eta_prime) * gamma)
            * b
            * b
            * d;

        let grow = b * b * (1.0 + d).powi(2);
        let queue_bound: Vec<f64> = (0..topo.cell_count())
            .map(|c| p.u * grow * p.xi[c] + p.p_max[c] - p.p_bar[c])
            .collect();

        let mut lines = Vec::new();
        for c in 0..topo.cell_count() {
            if p.queue_enabled[c] {
                lines.push(BoundLine::slotwise(
                    format!("queue_bound.cell{c}"),
                    records.iter().map(|r| r.queue[c]),
                    queue_bound[c],
                ));
            }
            lines.push(BoundLine::slotwise(
                format!("slot_power.cell{c}"),
                records.iter().map(|r| r.power[c]),
                p.p_max[c] * (1.0 + FEASIBILITY_TOL),
            ));
        }
        for horizon in power_prefixes(records.len()) {
            for c in 0..topo.cell_count() {
                let rhs = p.p_bar[c] + (p.u * grow * p.xi[c] + p.p_max[c] - p.p_bar[c]) / horizon as f64;
                lines.push(BoundLine::slotwise(
                    format!("average_power.cell{c}.T{horizon}"),
                    std::iter::once(cell_power_bar(records, horizon, c)?),
                    rhs,
                ));
            }
        }
        lines.push(BoundLine::slotwise(
            "demand_norm".into(),
            records.iter().map(|r| r.demand_norm_sq.sqrt()),
            zeta * b,
        ));
        lines.push(BoundLine::slotwise(
            "estimated_demand_norm".into(),
            records.iter().map(|r| r.est_demand_norm_sq.sqrt()),
            zeta * b * (1.0 + d),
        ));
        lines.push(BoundLine::slotwise(
            "demand_error".into(),
            records.iter().map(|r| r.demand_error),
            eta_prime * b * d,
        ));

        Ok(BoundReport {
            s,
            s_prime: p.s_prime,
            xi: p.xi.clone(),
            zeta_prime: zeta,
            gamma_prime: gamma,
            eta_prime,
            phi_prime,
            epsilon: p.epsilon,
            u: p.u,
            b_nominal: p.bound_b,
            b_real: b,
            delta_hat: d,
            queue_bound,
            mean_deviation: records.iter().map(|r| r.deviation).sum::<f64>() / records.len() as f64,
            lines,
        })
    }

    pub fn line(&self, name: &str) -> Option<&BoundLine> {
        self.lines.iter().find(|l| l.name == name)
    }

    /// Lines whose name starts with `prefix`.
    pub fn lines_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a BoundLine> + 'a {
        self.lines.iter().filter(move |l| l.name.starts_with(prefix))
    }

    pub fn all_pass(&self) -> bool {
        self.lines.iter().all(BoundLine::pass)
    }

    /// Measured mean deviation minus `φ′ + ε`; the deviation bound holds
    /// whenever this is at most the (unobserved) offline optimum.
    pub fn deviation_excess(&self) -> f64 {
        self.mean_deviation - self.phi_prime - self.epsilon
    }

    fn constants(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("S'".to_string(), self.s_prime),
            ("zeta'".into(), self.zeta_prime),
            ("gamma'".into(), self.gamma_prime),
            ("eta'".into(), self.eta_prime),
            ("phi'".into(), self.phi_prime),
            ("epsilon".into(), self.epsilon),
            ("U".into(), self.u),
            ("B".into(), self.b_nominal),
            ("B_real".into(), self.b_real),
            ("delta_hat".into(), self.delta_hat),
            ("mean_deviation".into(), self.mean_deviation),
            ("deviation_excess".into(), self.deviation_excess()),
        ];
        for (c, ((s, xi), q)) in self.s.iter().zip(&self.xi).zip(&self.queue_bound).enumerate() {
            out.push((format!("S.cell{c}"), *s));
            out.push((format!("xi.cell{c}"), *xi));
            out.push((format!("queue_bound.cell{c}"), *q));
        }
        out
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, value) in self.constants() {
            writeln!(f, "constant name={name} value={value:.9e}")?;
        }
        for line in &self.lines {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// `T ∈ {1, 10, 100, …}` up to the horizon, plus the horizon itself.
pub fn power_prefixes(horizon: usize) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::successors(Some(1usize), |t| t.checked_mul(10))
        .take_while(|&t| t <= horizon)
        .collect();
    if out.last() != Some(&horizon) && horizon > 0 {
        out.push(horizon);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::CaseTag;

    fn record(deviation: f64, demand: f64, power: Vec<f64>, rate: f64) -> SlotRecord {
        SlotRecord {
            t: 0,
            queue: vec![0.0; power.len()],
            lambda: vec![0.0; power.len()],
            case: vec![CaseTag::RidgeInactive; power.len()],
            kkt_residual: 0.0,
            deviation,
            deviation_est: deviation,
            demand_norm_sq: demand,
            est_demand_norm_sq: demand,
            demand_error: 0.0,
            channel_norm: 1.0,
            delta_hat: 0.0,
            sum_rate: rate,
            zf_fallbacks: 0,
            power,
        }
    }

    #[test]
    fn noise_power_from_lte_constants() {
        let w = noise_power(-174.0, 60e3, 10.0);
        assert!((watts_to_dbm(w) - (-116.2185)).abs() < 1e-3);
        assert!((w / 2.39e-15 - 1.0).abs() < 0.01);
    }

    #[test]
    fn dbm_round_trip() {
        for dbm in [-120.0, 0.0, 37.0, 39.0] {
            let back = watts_to_dbm(dbm_to_watts(dbm));
            assert!((back - dbm).abs() <= 1e-12 * dbm.abs().max(1.0));
        }
        assert!((dbm_to_watts(37.0) - 5.011_872_336).abs() < 1e-8);
    }

    #[test]
    fn exact_match_and_zero_precoder() {
        let exact = vec![record(0.0, 2.0, vec![1.0], 1.0); 4];
        assert_eq!(rho_bar(&exact, 4).unwrap().0, 0.0);
        let zero = vec![record(2.0, 2.0, vec![0.0], 0.0); 4];
        assert_eq!(rho_bar(&zero, 4).unwrap().0, 1.0);
    }

    #[test]
    fn zero_demand_slots_are_counted() {
        let r = vec![record(0.0, 0.0, vec![1.0], 0.0), record(1.0, 2.0, vec![1.0], 0.0)];
        assert_eq!(rho_bar(&r, 2).unwrap(), (0.25, 1));
    }

    #[test]
    fn power_averages() {
        let r = vec![record(0.0, 1.0, vec![1.0, 3.0], 0.0), record(0.0, 1.0, vec![5.0, 7.0], 0.0)];
        assert_eq!(power_bar(&r, 1).unwrap(), 2.0);
        assert_eq!(power_bar(&r, 2).unwrap(), 4.0);
        assert_eq!(cell_power_bar(&r, 2, 1).unwrap(), 5.0);
        assert!(power_bar(&r, 3).is_err());
        assert!(power_bar(&r, 0).is_err());
    }

    #[test]
    fn unit_sinr_gives_one_bit() {
        let a = crate::linalg::CMatrix::from_diagonal_element(3, 3, num_complex::Complex64::new(1.0, 0.0));
        let rate = crate::controller::sum_rate(&a, 1.0);
        let r = vec![record(0.0, 1.0, vec![1.0], rate)];
        assert!((rate_bar(&r, 1, 3).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn steady_state_is_last_quarter() {
        let v: Vec<f64> = (0..8).map(f64::from).collect();
        assert_eq!(steady_state(&v), 6.5);
        assert_eq!(steady_state(&[3.0]), 3.0);
    }

    #[test]
    fn series_are_cumulative() {
        let r = vec![record(1.0, 2.0, vec![2.0], 4.0), record(0.0, 2.0, vec![4.0], 0.0)];
        let s = MetricSeries::from_records(&r, 2, 1.0);
        assert_eq!(s.rho_bar, vec![0.5, 0.25]);
        assert_eq!(s.power_bar, vec![2.0, 3.0]);
        assert_eq!(s.rate_bar, vec![2.0, 1.0]);
    }

    #[test]
    fn prefixes() {
        assert_eq!(power_prefixes(1000), vec![1, 10, 100, 1000]);
        assert_eq!(power_prefixes(250), vec![1, 10, 100, 250]);
    }
}
