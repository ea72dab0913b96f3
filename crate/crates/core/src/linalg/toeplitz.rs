use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Largest order for which a failed Schur factorization is retried with the
/// dense Cholesky.
pub const DENSE_FALLBACK_MAX: usize = 64;

const PIVOT_FLOOR: f64 = 1e-12;

/// Symmetric Toeplitz matrix given by its first column.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricToeplitz {
    first_column: Vec<f64>,
}

/// Lower Cholesky factor `L` with `L L^T = T`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzFactor {
    order: usize,
    lower: Vec<f64>,
}

impl SymmetricToeplitz {
    pub fn new(first_column: Vec<f64>) -> Result<Self> {
        if first_column.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("toeplitz column has non-finite entries"));
        }
        Ok(SymmetricToeplitz { first_column })
    }

    pub fn order(&self) -> usize {
        self.first_column.len()
    }

    pub fn first_column(&self) -> &[f64] {
        &self.first_column
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.first_column[i.abs_diff(j)]
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let m = self.order();
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                out[i * m + j] = self.get(i, j);
            }
        }
        out
    }

    /// `O(m^2)` factorization; orders up to [`DENSE_FALLBACK_MAX`] fall back to
    /// the dense Cholesky when the generator recursion breaks down.
    pub fn factor(&self) -> Result<ToeplitzFactor> {
        match self.factor_schur() {
            Ok(f) => Ok(f),
            Err(e) if self.order() <= DENSE_FALLBACK_MAX => self.factor_dense().map_err(|_| e),
            Err(e) => Err(e),
        }
    }

    /// Schur algorithm on the displacement generators of `T`.
    ///
    /// `T - Z T Z^T = g g^T - h h^T` with `g = t / sqrt(t0)` and
    /// `h = (0, t1, ..)/sqrt(t0)`; each step emits one column of `L`, shifts
    /// `g` down and applies a hyperbolic rotation that zeroes the next entry
    /// of `h`. The rotation is applied in mixed form for stability.
    pub fn factor_schur(&self) -> Result<ToeplitzFactor> {
        let m = self.order();
        let mut lower = vec![0.0; m * m];
        self.schur_columns(|i, col| {
            for (j, v) in col.iter().enumerate() {
                lower[(i + j) * m + i] = *v;
            }
        })?;
        Ok(ToeplitzFactor { order: m, lower })
    }

    /// Runs the Schur recursion, handing column `i` of `L` (rows `i..m`) to
    /// `visit` as soon as it is known.
    fn schur_columns(&self, mut visit: impl FnMut(usize, &[f64])) -> Result<()> {
        let m = self.order();
        if m == 0 {
            return Ok(());
        }
        let t0 = self.first_column[0];
        let floor = PIVOT_FLOOR * t0.abs();
        if !(t0 > floor) || t0 <= 0.0 {
            return Err(Error::NotPositiveDefinite { index: 0, pivot: t0 });
        }
        let s = t0.sqrt();
        let mut g: Vec<f64> = self.first_column.iter().map(|v| v / s).collect();
        let mut h = g.clone();
        h[0] = 0.0;

        for i in 0..m {
            visit(i, &g[i..]);
            if i + 1 == m {
                break;
            }
            // shift g down by one; entries above i + 1 are no longer needed
            g.copy_within(i..m - 1, i + 1);
            g[i] = 0.0;
            let rho = h[i + 1] / g[i + 1];
            if !rho.is_finite() || rho.abs() >= 1.0 {
                let pivot = g[i + 1] * g[i + 1] - h[i + 1] * h[i + 1];
                return Err(Error::NotPositiveDefinite { index: i + 1, pivot });
            }
            let c = (1.0 - rho * rho).sqrt();
            let inv_c = 1.0 / c;
            for (gj, hj) in g[i + 1..].iter_mut().zip(&mut h[i + 1..]) {
                let v = (*gj - rho * *hj) * inv_c;
                *hj = c * *hj - rho * v;
                *gj = v;
            }
            h[i + 1] = 0.0;
            let pivot = g[i + 1] * g[i + 1];
            if pivot < floor {
                return Err(Error::NotPositiveDefinite { index: i + 1, pivot });
            }
        }
        Ok(())
    }

    /// Log-determinant and `L^{-1} b` for each right-hand side, computed
    /// during the factorization without storing `L`.
    pub fn whiten(&self, rhs: &[&[f64]]) -> Result<(f64, Vec<Vec<f64>>)> {
        let mut out: Vec<Vec<f64>> = rhs.iter().map(|b| b.to_vec()).collect();
        let mut logdet = 0.0;
        let sweep = self.schur_columns(|i, col| {
            let diag = col[0];
            logdet += 2.0 * diag.ln();
            for x in out.iter_mut() {
                let xi = x[i] / diag;
                x[i] = xi;
                for (xj, l) in x[i + 1..].iter_mut().zip(&col[1..]) {
                    *xj -= l * xi;
                }
            }
        });
        match sweep {
            Ok(()) => Ok((logdet, out)),
            Err(e) if self.order() <= DENSE_FALLBACK_MAX => {
                let f = self.factor_dense().map_err(|_| e)?;
                Ok((f.logdet(), rhs.iter().map(|b| f.forward(b)).collect()))
            }
            Err(e) => Err(e),
        }
    }

    pub fn factor_dense(&self) -> Result<ToeplitzFactor> {
        let m = self.order();
        let floor = PIVOT_FLOOR * self.first_column.first().copied().unwrap_or(0.0).abs();
        let lower = dense_cholesky(&self.to_dense(), m, floor)?;
        Ok(ToeplitzFactor { order: m, lower })
    }

    /// Log-determinant and solution of `T x = rhs`.
    pub fn logdet_solve(&self, rhs: &[f64]) -> Result<(f64, Vec<f64>)> {
        let f = self.factor()?;
        Ok((f.logdet(), f.solve(rhs)))
    }
}

/// Row-major dense Cholesky of an `m x m` symmetric matrix. Pivots below
/// `floor` are rejected.
pub fn dense_cholesky(a: &[f64], m: usize, floor: f64) -> Result<Vec<f64>> {
    assert_eq!(a.len(), m * m, "matrix size mismatch");
    let mut l = vec![0.0; m * m];
    for j in 0..m {
        let mut diag = a[j * m + j];
        for k in 0..j {
            diag -= l[j * m + k] * l[j * m + k];
        }
        if !(diag > floor) || diag <= 0.0 {
            return Err(Error::NotPositiveDefinite { index: j, pivot: diag });
        }
        let ljj = diag.sqrt();
        l[j * m + j] = ljj;
        for i in j + 1..m {
            let mut v = a[i * m + j];
            for k in 0..j {
                v -= l[i * m + k] * l[j * m + k];
            }
            l[i * m + j] = v / ljj;
        }
    }
    Ok(l)
}

impl ToeplitzFactor {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lower(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.order + j]
    }

    pub fn logdet(&self) -> f64 {
        2.0 * (0..self.order).map(|i| self.lower(i, i).ln()).sum::<f64>()
    }

    /// `L^{-1} b`.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let m = self.order;
        assert_eq!(b.len(), m, "rhs length mismatch");
        let mut x = b.to_vec();
        for i in 0..m {
            let row = &self.lower[i * m..i * m + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] = (x[i] - s) / self.lower[i * m + i];
        }
        x
    }

    /// `L^{-T} b`.
    pub fn backward(&self, b: &[f64]) -> Vec<f64> {
        let m = self.order;
        let mut x = b.to_vec();
        for i in (0..m).rev() {
            let mut s = x[i];
            for k in i + 1..m {
                s -= self.lower[k * m + i] * x[k];
            }
            x[i] = s / self.lower[i * m + i];
        }
        x
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(rhs))
    }
}
