//! Per-cell InP precoding: the constrained regularized least-squares problem
//!
//! ```text
//! minimize    U‖ĤV − Ĝ‖_F² + Z‖V‖_F²
//! subject to  ‖V‖_F² ≤ P_max
//! ```
//!
//! solved through its KKT conditions. The ridge solution
//! `V(λ) = (ĤᴴĤ + (Z+λ)/U · I)⁻¹ĤᴴĜ` is evaluated in the SVD basis of `Ĥ`, so
//! one decomposition serves every bisection iterate on `λ`.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WnvError};
use crate::linalg::{frobenius, frobenius_sq, is_finite, CMatrix};

/// Which branch of the KKT case analysis produced the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseTag {
    /// `Z > 0` and the ridge solution at `λ = 0` is within power.
    RidgeInactive,
    /// Power constraint active; `λ* > 0` found by bisection.
    RidgeActiveBisection,
    /// `Z = 0`, `Ĥ` rank-deficient in its column space (`K < N` or
    /// numerically singular): minimum-norm least-squares solution.
    MinnormUnderdetermined,
    /// `Z = 0`, `ĤᴴĤ` full rank: the unique least-squares solution.
    ExactOverdetermined,
}

impl CaseTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::RidgeInactive => "ridge-inactive",
            CaseTag::RidgeActiveBisection => "ridge-active-bisection",
            CaseTag::MinnormUnderdetermined => "minnorm-underdetermined",
            CaseTag::ExactOverdetermined => "exact-overdetermined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Bisection stops once `P_max − ‖V‖² ≤ power_rel_tol · P_max`.
    pub power_rel_tol: f64,
    /// Factor applied to the upper `λ` guess until it brackets the root.
    pub bracket_growth: f64,
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            power_rel_tol: 1e-9,
            bracket_growth: 2.0,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverInput<'a> {
    pub h_hat: &'a CMatrix,
    pub g_hat: &'a CMatrix,
    pub z: f64,
    pub u: f64,
    pub p_max: f64,
    pub tol: Tolerances,
}

impl SolverInput<'_> {
    fn validate(&self) -> Result<()> {
        if !is_finite(self.h_hat) {
            return Err(WnvError::NonFinite("channel estimate"));
        }
        if !is_finite(self.g_hat) {
            return Err(WnvError::NonFinite("demand"));
        }
        if !self.z.is_finite() || !self.u.is_finite() || !self.p_max.is_finite() {
            return Err(WnvError::NonFinite("scalar parameter"));
        }
        if self.h_hat.nrows() != self.g_hat.nrows() {
            return Err(WnvError::DimensionMismatch(format!(
                "channel has {} rows, demand has {}",
                self.h_hat.nrows(),
                self.g_hat.nrows()
            )));
        }
        if !(self.u > 0.0) {
            return Err(WnvError::invalid("U", "must be positive"));
        }
        if self.z < 0.0 {
            return Err(WnvError::invalid("Z", "must be nonnegative"));
        }
        if !(self.p_max > 0.0) {
            return Err(WnvError::invalid("P_max", "must be positive"));
        }
        Ok(())
    }

    /// `U‖ĤV − Ĝ‖_F² + Z‖V‖_F²`.
    pub fn objective(&self, v: &CMatrix) -> f64 {
        self.u * frobenius_sq(&(self.h_hat * v - self.g_hat)) + self.z * frobenius_sq(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutput {
    pub v: CMatrix,
    pub lambda: f64,
    pub case: CaseTag,
    pub achieved_power: f64,
    pub kkt_residual: f64,
}

/// The four KKT residuals of a candidate solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// `‖U(ĤᴴĤV − ĤᴴĜ) + (Z+λ)V‖_F / max(1, ‖ĤᴴĜ‖_F)`
    pub stationarity: f64,
    /// `max(0, −λ)`
    pub dual_infeasibility: f64,
    /// `max(0, ‖V‖² − P_max) / P_max`
    pub primal_infeasibility: f64,
    /// `λ·|‖V‖² − P_max| / max(1, λ·P_max)`
    pub slackness: f64,
}

impl KktReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.stationarity < tol
            && self.dual_infeasibility <= 0.0
            && self.primal_infeasibility <= tol
            && self.slackness <= tol
    }
}

impl SolverOutput {
    pub fn kkt(&self, input: &SolverInput<'_>) -> KktReport {
        let stationarity = stationarity_residual(input, &self.v, self.lambda);
        let power = frobenius_sq(&self.v);
        KktReport {
            stationarity,
            dual_infeasibility: (-self.lambda).max(0.0),
            primal_infeasibility: (power - input.p_max).max(0.0) / input.p_max,
            slackness: self.lambda * (power - input.p_max).abs() / (self.lambda * input.p_max).max(1.0),
        }
    }
}

fn stationarity_residual(input: &SolverInput<'_>, v: &CMatrix, lambda: f64) -> f64 {
    let h = input.h_hat;
    let hg = h.adjoint() * input.g_hat;
    let grad = (h.adjoint() * (h * v) - &hg) * Complex64::from(input.u) + v * Complex64::from(input.z + lambda);
    frobenius(&grad) / frobenius(&hg).max(1.0)
}

/// Thin SVD of `Ĥ` with the demand projected onto its left singular vectors.
#[derive(Debug, Clone)]
pub struct RidgeSpectrum {
    /// Singular values; numerically-zero ones are stored as exactly `0`.
    pub sigma: Vec<f64>,
    /// Right singular vectors as columns (`N × r`).
    right: CMatrix,
    /// `UᴴĜ` (`r × K^c`).
    coeff: CMatrix,
    /// `‖row_i(UᴴĜ)‖²`.
    coeff_row_sq: Vec<f64>,
    /// Number of nonzero singular values.
    pub rank: usize,
    pub cols: usize,
}

impl RidgeSpectrum {
    pub fn new(h_hat: &CMatrix, g_hat: &CMatrix) -> Self {
        let (k, n) = h_hat.shape();
        let svd = h_hat.clone().svd(true, true);
        let u = svd.u.expect("requested left singular vectors");
        let v_t = svd.v_t.expect("requested right singular vectors");
        let s_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let cutoff = s_max * (k.max(n) as f64) * f64::EPSILON;
        let sigma: Vec<f64> = svd
            .singular_values
            .iter()
            .map(|&s| if s > cutoff { s } else { 0.0 })
            .collect();
        let coeff = u.adjoint() * g_hat;
        let coeff_row_sq = (0..coeff.nrows())
            .map(|i| coeff.row(i).iter().map(|z| z.norm_sqr()).sum())
            .collect();
        RidgeSpectrum {
            rank: sigma.iter().filter(|&&s| s > 0.0).count(),
            sigma,
            right: v_t.adjoint(),
            coeff,
            coeff_row_sq,
            cols: n,
        }
    }

    /// `‖V(κ)‖_F²` with `κ = (Z+λ)/U`; at `κ = 0` this is the power of the
    /// pseudo-inverse solution.
    pub fn power(&self, kappa: f64) -> f64 {
        self.sigma
            .iter()
            .zip(&self.coeff_row_sq)
            .filter(|(&s, _)| s > 0.0)
            .map(|(&s, &r)| {
                let d = s * s + kappa;
                s * s * r / (d * d)
            })
            .sum()
    }

    /// `V(κ) = Σ_i σ_i/(σ_i² + κ) · v_i · row_i(UᴴĜ)`.
    pub fn precoder(&self, kappa: f64) -> CMatrix {
        let gains = DVector::from_iterator(
            self.sigma.len(),
            self.sigma.iter().map(|&s| {
                if s > 0.0 {
                    Complex64::from(s / (s * s + kappa))
                } else {
                    Complex64::from(0.0)
                }
            }),
        );
        let mut scaled = self.coeff.clone();
        for (i, g) in gains.iter().enumerate() {
            scaled.row_mut(i).scale_mut(g.re);
        }
        &self.right * scaled
    }

    /// `‖ĤᴴĜ‖_F²`.
    pub fn projected_demand_sq(&self) -> f64 {
        self.sigma
            .iter()
            .zip(&self.coeff_row_sq)
            .map(|(&s, &r)| s * s * r)
            .sum()
    }
}

/// `‖V(λ)‖_F²` for the ridge solution at multiplier `λ`.
pub fn power_curve(spectrum: &RidgeSpectrum, z: f64, u: f64, lambda: f64) -> f64 {
    spectrum.power((z + lambda) / u)
}

/// The ridge solution `(ĤᴴĤ + (Z+λ)/U·I)⁻¹ĤᴴĜ` computed from scratch.
pub fn ridge_solution(h_hat: &CMatrix, g_hat: &CMatrix, z: f64, u: f64, lambda: f64) -> CMatrix {
    RidgeSpectrum::new(h_hat, g_hat).precoder((z + lambda) / u)
}

/// Finds `λ* > 0` with `‖V(λ*)‖² ∈ [P_max(1 − tol), P_max]`.
///
/// Requires the constraint to be active (`power_curve(0) > P_max`).
pub fn bisect_lambda(spectrum: &RidgeSpectrum, z: f64, u: f64, p_max: f64, tol: &Tolerances) -> Result<f64> {
    let power = |lambda: f64| power_curve(spectrum, z, u, lambda);
    // ‖V(κ)‖² ≤ ‖ĤᴴĜ‖²/κ², so this κ already meets the budget
    let kappa_hi = (spectrum.projected_demand_sq() / p_max).sqrt();
    let mut hi = (u * kappa_hi - z).max(f64::MIN_POSITIVE);
    let mut doublings = 0;
    while power(hi) > p_max {
        if doublings >= tol.max_iterations {
            return Err(WnvError::BracketFailure(doublings));
        }
        hi *= tol.bracket_growth;
        doublings += 1;
    }
    let mut lo = 0.0;
    for _ in 0..tol.max_iterations {
        if p_max - power(hi) <= tol.power_rel_tol * p_max {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if power(mid) > p_max {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Solves one cell's per-slot precoding problem.
pub fn solve_cell(input: &SolverInput<'_>) -> Result<SolverOutput> {
    input.validate()?;
    let (k, n) = input.h_hat.shape();
    let kc = input.g_hat.ncols();

    let unconstrained_tag = |rank: usize| {
        if rank < n {
            CaseTag::MinnormUnderdetermined
        } else {
            CaseTag::ExactOverdetermined
        }
    };

    if input.g_hat.iter().all(|z| z.norm_sqr() == 0.0) {
        let v = CMatrix::zeros(n, kc);
        let case = if input.z > 0.0 {
            CaseTag::RidgeInactive
        } else {
            unconstrained_tag(k.min(n))
        };
        return Ok(finish(input, v, 0.0, case));
    }

    let spectrum = RidgeSpectrum::new(input.h_hat, input.g_hat);
    let kappa0 = input.z / input.u;
    if spectrum.power(kappa0) <= input.p_max {
        let case = if input.z > 0.0 {
            CaseTag::RidgeInactive
        } else {
            unconstrained_tag(spectrum.rank)
        };
        return Ok(finish(input, spectrum.precoder(kappa0), 0.0, case));
    }

    let lambda = bisect_lambda(&spectrum, input.z, input.u, input.p_max, &input.tol)?;
    let v = spectrum.precoder((input.z + lambda) / input.u);
    Ok(finish(input, v, lambda, CaseTag::RidgeActiveBisection))
}

fn finish(input: &SolverInput<'_>, v: CMatrix, lambda: f64, case: CaseTag) -> SolverOutput {
    let kkt_residual = stationarity_residual(input, &v, lambda);
    SolverOutput {
        achieved_power: frobenius_sq(&v),
        v,
        lambda,
        case,
        kkt_residual,
    }
}
