//! Cell geometry, user placement, large-scale path loss, Rayleigh fading and
//! synthetic CSI estimation error.

use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Result, WnvError};
use crate::linalg::{cn01, frobenius, frobenius_sq, CMatrix};

/// Distances below this are clamped before evaluating path loss (meters).
pub const MIN_DISTANCE_M: f64 = 10.0;

/// Quantile factor that makes `P{‖H′‖_F > B}` negligible for Rayleigh fading.
pub const CHERNOFF_FACTOR: f64 = 1.645;

/// Hexagonal multi-cell layout with per-cell antenna counts and per-(cell, SP)
/// user counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub radius: f64,
    pub bs_positions: Vec<[f64; 2]>,
    pub antennas: Vec<usize>,
    /// `users[c][m]` is the number of users of SP `m` served by cell `c`.
    pub users: Vec<Vec<usize>>,
}

impl Topology {
    /// Hexagonal layout: the centre cell followed by as many surrounding
    /// rings as needed, adjacent BSs `√3·R` apart.
    pub fn hexagonal(
        cell_count: usize,
        radius: f64,
        antennas_per_bs: usize,
        sp_count: usize,
        users_per_sp: usize,
    ) -> Result<Self> {
        Self::new(
            radius,
            hex_centers(cell_count, radius),
            vec![antennas_per_bs; cell_count],
            vec![vec![users_per_sp; sp_count]; cell_count],
        )
    }

    pub fn new(
        radius: f64,
        bs_positions: Vec<[f64; 2]>,
        antennas: Vec<usize>,
        users: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let c = bs_positions.len();
        if c == 0 {
            return Err(WnvError::invalid("cell_count", "must be at least 1"));
        }
        if !(radius > 0.0) {
            return Err(WnvError::invalid("radius", "must be positive"));
        }
        if antennas.len() != c || users.len() != c {
            return Err(WnvError::DimensionMismatch(format!(
                "{c} cells but {} antenna counts and {} user rows",
                antennas.len(),
                users.len()
            )));
        }
        if antennas.contains(&0) {
            return Err(WnvError::invalid("antennas_per_bs", "must be at least 1"));
        }
        let m = users[0].len();
        if m == 0 {
            return Err(WnvError::invalid("sp_count", "must be at least 1"));
        }
        for row in &users {
            if row.len() != m {
                return Err(WnvError::DimensionMismatch(
                    "every cell must list the same SPs".into(),
                ));
            }
            if row.contains(&0) {
                return Err(WnvError::invalid("users_per_sp", "must be at least 1"));
            }
        }
        Ok(Topology {
            radius,
            bs_positions,
            antennas,
            users,
        })
    }

    pub fn cell_count(&self) -> usize {
        self.bs_positions.len()
    }

    pub fn sp_count(&self) -> usize {
        self.users[0].len()
    }

    pub fn users_in_cell(&self, cell: usize) -> usize {
        self.users[cell].iter().sum()
    }

    pub fn total_users(&self) -> usize {
        (0..self.cell_count()).map(|c| self.users_in_cell(c)).sum()
    }

    pub fn total_antennas(&self) -> usize {
        self.antennas.iter().sum()
    }

    /// Row offset of cell `c`'s first user in the global channel.
    pub fn cell_row_offset(&self, cell: usize) -> usize {
        (0..cell).map(|c| self.users_in_cell(c)).sum()
    }

    /// Global rows of SP `sp`'s users in cell `cell`.
    pub fn sp_rows(&self, cell: usize, sp: usize) -> Range<usize> {
        let start = self.cell_row_offset(cell) + self.users[cell][..sp].iter().sum::<usize>();
        start..start + self.users[cell][sp]
    }

    pub fn cell_rows(&self, cell: usize) -> Range<usize> {
        let start = self.cell_row_offset(cell);
        start..start + self.users_in_cell(cell)
    }

    /// Global columns of BS `cell`'s antennas.
    pub fn bs_cols(&self, cell: usize) -> Range<usize> {
        let start: usize = self.antennas[..cell].iter().sum();
        start..start + self.antennas[cell]
    }

    /// Serving cell of every user in global row order.
    pub fn serving_cells(&self) -> Vec<usize> {
        (0..self.cell_count())
            .flat_map(|c| std::iter::repeat_n(c, self.users_in_cell(c)))
            .collect()
    }

    /// `(cell, sp)` of every user in global row order.
    pub fn user_owners(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.total_users());
        for (c, row) in self.users.iter().enumerate() {
            for (m, &k) in row.iter().enumerate() {
                out.extend(std::iter::repeat_n((c, m), k));
            }
        }
        out
    }

    /// The sub-topology containing only SP `sp`'s users (one SP per cell).
    pub fn single_sp(&self, sp: usize) -> Topology {
        Topology {
            radius: self.radius,
            bs_positions: self.bs_positions.clone(),
            antennas: self.antennas.clone(),
            users: self.users.iter().map(|row| vec![row[sp]]).collect(),
        }
    }
}

/// Centres of the first `count` cells of a flat-top hexagonal grid, spiralling
/// outwards from the origin.
pub fn hex_centers(count: usize, radius: f64) -> Vec<[f64; 2]> {
    const DIRS: [(i64, i64); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];
    let to_xy = |q: i64, r: i64| {
        let (q, r) = (q as f64, r as f64);
        [1.5 * radius * q, 3f64.sqrt() * radius * (r + q / 2.0)]
    };
    let mut out = vec![to_xy(0, 0)];
    let mut ring = 1;
    while out.len() < count {
        // start at direction 4 scaled by the ring index, then walk each side
        let (mut q, mut r) = (DIRS[4].0 * ring, DIRS[4].1 * ring);
        for d in DIRS {
            for _ in 0..ring {
                out.push(to_xy(q, r));
                q += d.0;
                r += d.1;
            }
        }
        ring += 1;
    }
    out.truncate(count);
    out
}

/// True if `p` lies inside the flat-top hexagon of circumradius `radius`
/// centred at the origin.
pub fn in_hexagon(p: [f64; 2], radius: f64) -> bool {
    let (x, y) = (p[0].abs(), p[1].abs());
    let s3 = 3f64.sqrt();
    y <= s3 / 2.0 * radius && s3 * x + y <= s3 * radius
}

/// Uniform point in the hexagon around `center` by rejection from the
/// bounding box.
pub fn sample_in_hexagon<R: Rng + ?Sized>(center: [f64; 2], radius: f64, rng: &mut R) -> [f64; 2] {
    let half_h = 3f64.sqrt() / 2.0 * radius;
    loop {
        let p = [
            rng.random_range(-radius..=radius),
            rng.random_range(-half_h..=half_h),
        ];
        if in_hexagon(p, radius) {
            return [center[0] + p[0], center[1] + p[1]];
        }
    }
}

/// Positions of every user in global row order, each uniform over its serving
/// cell's hexagon.
pub fn place_users<R: Rng + ?Sized>(topology: &Topology, rng: &mut R) -> Vec<[f64; 2]> {
    topology
        .serving_cells()
        .into_iter()
        .map(|c| sample_in_hexagon(topology.bs_positions[c], topology.radius, rng))
        .collect()
}

/// Path loss with shadowing, `β[dB] = −31.54 − 33·log10(d) + ψ`.
pub fn path_loss_gain(distance: f64, shadowing_db: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(WnvError::invalid("distance", "must be positive"));
    }
    Ok(db_to_linear(path_loss_db(distance) + shadowing_db))
}

pub fn path_loss_db(distance: f64) -> f64 {
    -31.54 - 33.0 * distance.log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Static large-scale gains between every user (rows) and every BS.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleGains {
    pub beta: Vec<Vec<f64>>,
    pub distance: Vec<Vec<f64>>,
    pub shadowing_db: Vec<Vec<f64>>,
}

impl LargeScaleGains {
    /// Computes distances (clamped at [`MIN_DISTANCE_M`]) and draws one
    /// log-normal shadowing term per user-BS pair.
    pub fn generate<R: Rng + ?Sized>(
        topology: &Topology,
        positions: &[[f64; 2]],
        shadowing_std_db: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if positions.len() != topology.total_users() {
            return Err(WnvError::DimensionMismatch(format!(
                "{} positions for {} users",
                positions.len(),
                topology.total_users()
            )));
        }
        let shadow = Normal::new(0.0, shadowing_std_db)
            .map_err(|e| WnvError::invalid("shadowing_std_db", e.to_string()))?;
        let mut beta = Vec::with_capacity(positions.len());
        let mut distance = Vec::with_capacity(positions.len());
        let mut shadowing_db = Vec::with_capacity(positions.len());
        for p in positions {
            let mut b_row = Vec::new();
            let mut d_row = Vec::new();
            let mut s_row = Vec::new();
            for bs in &topology.bs_positions {
                let d = ((p[0] - bs[0]).powi(2) + (p[1] - bs[1]).powi(2))
                    .sqrt()
                    .max(MIN_DISTANCE_M);
                let psi = shadow.sample(rng);
                b_row.push(path_loss_gain(d, psi)?);
                d_row.push(d);
                s_row.push(psi);
            }
            beta.push(b_row);
            distance.push(d_row);
            shadowing_db.push(s_row);
        }
        Ok(LargeScaleGains {
            beta,
            distance,
            shadowing_db,
        })
    }

    /// Gains given directly as a user × BS table.
    pub fn from_beta(beta: Vec<Vec<f64>>) -> Self {
        let nan = beta.iter().map(|r| vec![f64::NAN; r.len()]).collect::<Vec<_>>();
        LargeScaleGains {
            beta,
            distance: nan.clone(),
            shadowing_db: nan,
        }
    }

    /// Restriction to a subset of users (global row indices).
    pub fn select_users(&self, rows: &[usize]) -> Self {
        let pick = |t: &Vec<Vec<f64>>| rows.iter().map(|&r| t[r].clone()).collect();
        LargeScaleGains {
            beta: pick(&self.beta),
            distance: pick(&self.distance),
            shadowing_db: pick(&self.shadowing_db),
        }
    }
}

/// Small-scale Rayleigh fading on top of the large-scale gains:
/// `h = √β · g`, `g ~ CN(0, I)`, independent per slot.
pub fn draw_channel<R: Rng + ?Sized>(
    topology: &Topology,
    gains: &LargeScaleGains,
    rng: &mut R,
) -> CMatrix {
    let k = topology.total_users();
    let n = topology.total_antennas();
    let mut h = CMatrix::zeros(k, n);
    for l in 0..topology.cell_count() {
        for col in topology.bs_cols(l) {
            for row in 0..k {
                h[(row, col)] = cn01(rng) * gains.beta[row][l].sqrt();
            }
        }
    }
    h
}

/// Per-entry multiplicative CSI error: `h̃ = |h|·n`, `n ~ CN(0, e_H²)`.
/// Returns `(estimate, error)` with `estimate = true − error`.
///
/// The error samples are drawn even when `e_h == 0` so the random stream
/// stays aligned across CSI-error levels.
pub fn corrupt_csi<R: Rng + ?Sized>(true_h: &CMatrix, e_h: f64, rng: &mut R) -> (CMatrix, CMatrix) {
    let mut err = CMatrix::zeros(true_h.nrows(), true_h.ncols());
    // column-major iteration, matching `draw_channel`'s traversal order
    for (e, h) in err.iter_mut().zip(true_h.iter()) {
        *e = cn01(rng) * (e_h * h.norm());
    }
    let est = true_h - &err;
    (est, err)
}

/// `B = 1.645·sqrt(Σ_c N^c Σ_{k∈c} β_k^c)` with `β_k^c` the gain of user `k`
/// to its serving BS.
pub fn channel_bound(topology: &Topology, gains: &LargeScaleGains) -> f64 {
    let serving = topology.serving_cells();
    let sum: f64 = serving
        .iter()
        .enumerate()
        .map(|(u, &c)| topology.antennas[c] as f64 * gains.beta[u][c])
        .sum();
    CHERNOFF_FACTOR * sum.sqrt()
}

/// Which of the three channel matrices to read a block from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Csi {
    True,
    Estimated,
    Error,
}

/// One slot's channel snapshot: the true channel, the InP/SP estimate and
/// their difference.
#[derive(Debug, Clone)]
pub struct GlobalChannel {
    pub true_h: CMatrix,
    pub est_h: CMatrix,
    pub error_h: CMatrix,
    pub e_h: f64,
    pub bound_b: f64,
    /// Largest normalized block error `‖H̃^{cl}_m‖_F / ‖H^{cl}_m‖_F` this slot.
    pub delta_hat: f64,
}

impl GlobalChannel {
    pub fn draw<R: Rng + ?Sized, S: Rng + ?Sized>(
        topology: &Topology,
        gains: &LargeScaleGains,
        e_h: f64,
        bound_b: f64,
        fading_rng: &mut R,
        csi_rng: &mut S,
    ) -> Self {
        let true_h = draw_channel(topology, gains, fading_rng);
        let (est_h, error_h) = corrupt_csi(&true_h, e_h, csi_rng);
        Self::from_parts(topology, true_h, est_h, error_h, e_h, bound_b)
    }

    pub fn from_parts(
        topology: &Topology,
        true_h: CMatrix,
        est_h: CMatrix,
        error_h: CMatrix,
        e_h: f64,
        bound_b: f64,
    ) -> Self {
        let mut g = GlobalChannel {
            true_h,
            est_h,
            error_h,
            e_h,
            bound_b,
            delta_hat: 0.0,
        };
        g.delta_hat = g.max_block_error(topology);
        g
    }

    fn matrix(&self, which: Csi) -> &CMatrix {
        match which {
            Csi::True => &self.true_h,
            Csi::Estimated => &self.est_h,
            Csi::Error => &self.error_h,
        }
    }

    /// `H^{cl}_m`: SP `sp`'s users in cell `cell` to BS `bs`.
    pub fn block(&self, topology: &Topology, which: Csi, cell: usize, bs: usize, sp: usize) -> CMatrix {
        let rows = topology.sp_rows(cell, sp);
        let cols = topology.bs_cols(bs);
        self.matrix(which)
            .view((rows.start, cols.start), (rows.len(), cols.len()))
            .into_owned()
    }

    /// `H^c`: every user in the network to BS `bs` (K × N^c).
    pub fn bs_channel(&self, topology: &Topology, which: Csi, bs: usize) -> CMatrix {
        let cols = topology.bs_cols(bs);
        self.matrix(which).columns(cols.start, cols.len()).into_owned()
    }

    pub fn true_norm(&self) -> f64 {
        frobenius(&self.true_h)
    }

    fn max_block_error(&self, topology: &Topology) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..topology.cell_count() {
            for l in 0..topology.cell_count() {
                for m in 0..topology.sp_count() {
                    let h = frobenius_sq(&self.block(topology, Csi::True, c, l, m));
                    let e = frobenius_sq(&self.block(topology, Csi::Error, c, l, m));
                    if h > 0.0 {
                        worst = worst.max((e / h).sqrt());
                    }
                }
            }
        }
        worst
    }
}
