//! Small helpers over `nalgebra` complex matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn frobenius(m: &CMatrix) -> f64 {
    frobenius_sq(m).sqrt()
}

/// Draws a circularly-symmetric complex Gaussian sample with unit variance.
pub fn cn01<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Block-diagonal assembly of (possibly rectangular) blocks.
pub fn block_diag(blocks: &[CMatrix]) -> CMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn block_diag_places_blocks() {
        let a = CMatrix::from_element(1, 1, Complex64::new(2.0, 0.0));
        let b = CMatrix::from_element(2, 1, Complex64::new(0.0, 1.0));
        let d = block_diag(&[a, b]);
        assert_eq!(d.shape(), (3, 2));
        assert_eq!(d[(0, 0)], Complex64::new(2.0, 0.0));
        assert_eq!(d[(1, 1)], Complex64::new(0.0, 1.0));
        assert_eq!(d[(2, 1)], Complex64::new(0.0, 1.0));
        assert_eq!(d[(1, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn cn01_has_unit_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let var: f64 = (0..n).map(|_| cn01(&mut rng).norm_sqr()).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 0.01, "{var}");
    }
}
