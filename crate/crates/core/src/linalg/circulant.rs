use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fft::FftPlan;

/// Eigenvalues of `I + (k / delta^2) R` within this distance below 1 are
/// rounding noise and clamped to 1.
pub const EIGEN_CLAMP: f64 = 1e-8;

const SYMMETRY_TOL: f64 = 1e-8;

/// Real eigenvalues of the symmetric circulant matrix with the given first
/// row, in Fourier order (eigenvalue `j` belongs to mode `exp(2 pi i j / p)`).
pub fn circulant_eigenvalues(first_row: &[f64]) -> Result<Vec<f64>> {
    let plan = FftPlan::new(first_row.len());
    spectrum_of_row(first_row, &plan)
}

fn spectrum_of_row(first_row: &[f64], plan: &FftPlan) -> Result<Vec<f64>> {
    if first_row.is_empty() {
        return Err(Error::invalid("circulant row must be non-empty"));
    }
    if first_row.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("circulant row has non-finite entries"));
    }
    let spectrum = plan.forward_real(first_row);
    let scale = first_row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let residual = spectrum.iter().fold(0.0f64, |a, c| a.max(c.im.abs()));
    if residual > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric { residual });
    }
    Ok(spectrum.into_iter().map(|c| c.re).collect())
}

/// A symmetric circulant matrix held as its first row and its real spectrum.
///
/// Products, solves and quadratic forms all cost `O(p log p)`; the matrix and
/// its inverse are never formed.
#[derive(Debug, Clone)]
pub struct SymmetricCirculant {
    first_row: Vec<f64>,
    eigenvalues: Vec<f64>,
    plan: FftPlan,
}

impl SymmetricCirculant {
    pub fn new(first_row: Vec<f64>) -> Result<Self> {
        let plan = FftPlan::new(first_row.len());
        Self::with_plan(first_row, plan)
    }

    pub fn with_plan(first_row: Vec<f64>, plan: FftPlan) -> Result<Self> {
        if plan.len() != first_row.len() {
            return Err(Error::invalid("fft plan length differs from the row length"));
        }
        let eigenvalues = spectrum_of_row(&first_row, &plan)?;
        Ok(SymmetricCirculant {
            first_row,
            eigenvalues,
            plan,
        })
    }

    /// Builds the circulant with a prescribed real, even spectrum.
    pub fn from_eigenvalues(eigenvalues: Vec<f64>, plan: FftPlan) -> Self {
        let spectrum: Vec<Complex64> = eigenvalues.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let first_row = plan.inverse_real(&spectrum);
        SymmetricCirculant {
            first_row,
            eigenvalues,
            plan,
        }
    }

    /// Caller guarantees `eigenvalues` is the spectrum of `first_row`.
    pub(crate) fn from_parts(first_row: Vec<f64>, eigenvalues: Vec<f64>, plan: FftPlan) -> Self {
        debug_assert_eq!(first_row.len(), eigenvalues.len());
        SymmetricCirculant {
            first_row,
            eigenvalues,
            plan,
        }
    }

    pub fn len(&self) -> usize {
        self.first_row.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_row.is_empty()
    }

    pub fn first_row(&self) -> &[f64] {
        &self.first_row
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn plan(&self) -> &FftPlan {
        &self.plan
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn check_definite(&self) -> Result<()> {
        let min = self.min_eigenvalue();
        if min > 0.0 {
            Ok(())
        } else {
            Err(Error::Singular { eigenvalue: min })
        }
    }

    /// `sum_j log(lambda_j)`.
    pub fn logdet(&self) -> Result<f64> {
        self.check_definite()?;
        Ok(self.eigenvalues.iter().map(|l| l.ln()).sum())
    }

    /// Applies the circulant whose eigenvalues are `f(lambda_j)`.
    pub fn apply_spectral(&self, x: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
        assert_eq!(x.len(), self.len(), "vector length mismatch");
        let mut spec = self.plan.forward_real(x);
        for (c, &l) in spec.iter_mut().zip(&self.eigenvalues) {
            *c *= f(l);
        }
        self.plan.inverse_real(&spec)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.apply_spectral(x, |l| l)
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.check_definite()?;
        Ok(self.apply_spectral(rhs, |l| 1.0 / l))
    }

    /// Solves for each column of a `p x q` block given as `q` columns.
    pub fn solve_block(&self, columns: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        columns.iter().map(|c| self.solve(c)).collect()
    }

    /// DFT of a real vector of matching length.
    pub fn spectrum(&self, x: &[f64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.len(), "vector length mismatch");
        self.plan.forward_real(x)
    }

    /// `x^T C^{-1} y` from the spectra of `x` and `y` (Parseval).
    pub fn inverse_form(&self, x_hat: &[Complex64], y_hat: &[Complex64]) -> Result<f64> {
        self.check_definite()?;
        let sum: f64 = x_hat
            .iter()
            .zip(y_hat)
            .zip(&self.eigenvalues)
            .map(|((a, b), l)| (a.conj() * b).re / l)
            .sum();
        Ok(sum / self.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::kernel::circulant_row;

    fn dense(row: &[f64]) -> DMatrix<f64> {
        let p = row.len();
        DMatrix::from_fn(p, p, |i, j| row[(j + p - i) % p])
    }

    fn random_symmetric_row(rng: &mut ChaCha8Rng, p: usize) -> Vec<f64> {
        let mut row = vec![0.0; p];
        for j in 0..=p / 2 {
            let v = rng.random_range(-1.0..1.0);
            row[j] = v;
            row[(p - j) % p] = v;
        }
        row
    }

    #[test]
    fn identity_and_hand_examples() {
        assert_eq!(circulant_eigenvalues(&[1.0, 0.0, 0.0, 0.0]).unwrap(), vec![1.0; 4]);
        assert_eq!(circulant_eigenvalues(&[2.0, 1.0, 0.0, 1.0]).unwrap(), vec![4.0, 2.0, 0.0, 2.0]);

        let c = SymmetricCirculant::new(vec![2.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(c.logdet(), Err(Error::Singular { .. })));
        assert!(matches!(c.solve(&[1.0; 4]), Err(Error::Singular { .. })));

        let id = SymmetricCirculant::new(vec![1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(id.logdet().unwrap(), 0.0);
        let v = [0.5, -1.0, 2.0, 3.0, 4.0];
        for (a, b) in id.solve(&v).unwrap().iter().zip(v) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_asymmetric_rows() {
        assert!(matches!(
            circulant_eigenvalues(&[1.0, 0.5, 0.0, 0.0]),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(circulant_eigenvalues(&[]).is_err());
    }

    #[test]
    fn kernel_row_spectrum_matches_dense_eigensolver() {
        let row = circulant_row(1.0, 4, 1);
        let eig = circulant_eigenvalues(&row).unwrap();
        // Fourier mode j of a symmetric circulant has eigenvalue sum_l c_l cos(2 pi j l / p);
        // check each against the Rayleigh quotient of the dense matrix on that mode.
        let m = dense(&row);
        for (j, &lam) in eig.iter().enumerate() {
            let v = nalgebra::DVector::from_fn(4, |l, _| (2.0 * core::f64::consts::PI * (j * l) as f64 / 4.0).cos());
            let q = (v.transpose() * &m * &v)[(0, 0)] / v.norm_squared();
            assert!((q - lam).abs() < 1e-12);
        }
        let mut sorted = eig.clone();
        sorted.sort_by(f64::total_cmp);
        let mut dense_eig: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        dense_eig.sort_by(f64::total_cmp);
        for (a, b) in sorted.iter().zip(&dense_eig) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_with_rdelta_gives_inverse_spectrum() {
        let (p, k, delta) = (6usize, 3.0, 1.0);
        let r = circulant_row(2.0, p, 1);
        let mut row: Vec<f64> = r.iter().map(|v| k * v / (delta * delta)).collect();
        row[0] += 1.0;
        let c = SymmetricCirculant::new(row).unwrap();
        let mut e1 = vec![0.0; p];
        e1[0] = 1.0;
        let x = c.solve(&e1).unwrap();
        let coef = FftPlan::new(p).forward_real(&x);
        for (a, l) in coef.iter().zip(c.eigenvalues()) {
            assert!((a.re - 1.0 / l).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
        let dense_logdet = dense(c.first_row()).determinant().ln();
        assert!((c.logdet().unwrap() - dense_logdet).abs() < 1e-10);
    }

    #[test]
    fn random_psd_solve_matches_dense_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [8usize, 13, 64] {
            let base = random_symmetric_row(&mut rng, p);
            // Shift the spectrum so the matrix is positive definite.
            let eig = circulant_eigenvalues(&base).unwrap();
            let shift = 1.0 - eig.iter().copied().fold(f64::INFINITY, f64::min);
            let mut row = base;
            row[0] += shift;
            let c = SymmetricCirculant::new(row).unwrap();
            let b: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = c.solve(&b).unwrap();
            let want = dense(c.first_row()).lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
            for (a, w) in x.iter().zip(want.iter()) {
                assert!((a - w).abs() <= 1e-10 * (1.0 + w.abs()));
            }
        }
    }

    #[test]
    fn matvec_and_product_closure() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in 1..=64usize {
            let a = SymmetricCirculant::new(random_symmetric_row(&mut rng, p)).unwrap();
            let b = SymmetricCirculant::new(random_symmetric_row(&mut rng, p)).unwrap();
            let v: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fast = a.matvec(&v);
            let slow = dense(a.first_row()) * nalgebra::DVector::from_vec(v);
            let scale = slow.amax().max(1.0);
            for (x, y) in fast.iter().zip(slow.iter()) {
                assert!((x - y).abs() <= 1e-12 * scale * p as f64);
            }

            let eig: Vec<f64> = a.eigenvalues().iter().zip(b.eigenvalues()).map(|(x, y)| x * y).collect();
            let prod = SymmetricCirculant::from_eigenvalues(eig, a.plan().clone());
            let dense_prod = dense(a.first_row()) * dense(b.first_row());
            let scale = dense_prod.amax().max(1.0);
            for j in 0..p {
                assert!((prod.first_row()[j] - dense_prod[(0, j)]).abs() <= 1e-12 * scale * p as f64);
                for i in 0..p {
                    let shifted = dense_prod[((i + 1) % p, (j + 1) % p)];
                    assert!((dense_prod[(i, j)] - shifted).abs() <= 1e-12 * scale * p as f64);
                }
            }
        }
    }

    #[test]
    fn inverse_form_matches_solve() {
        let row = vec![3.0, 1.0, 0.5, 0.25, 0.5, 1.0];
        let c = SymmetricCirculant::new(row).unwrap();
        let x = [1.0, -2.0, 0.5, 0.0, 3.0, 1.0];
        let y = [0.3, 0.1, -0.7, 2.0, 1.0, -1.0];
        let direct: f64 = x.iter().zip(c.solve(&y).unwrap()).map(|(a, b)| a * b).sum();
        let via = c.inverse_form(&c.spectrum(&x), &c.spectrum(&y)).unwrap();
        assert!((direct - via).abs() < 1e-12);
    }
}
