//! Dense helpers for the `q x q` regression systems (q is the basis size).

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Cholesky factor of a small symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SmallCholesky {
    q: usize,
    l: Vec<f64>,
}

impl SmallCholesky {
    pub(crate) fn new(a: &[f64], q: usize) -> Result<Self> {
        let scale = (0..q).map(|i| a[i * q + i].abs()).fold(0.0, f64::max);
        let mut l = vec![0.0; q * q];
        for j in 0..q {
            let mut diag = a[j * q + j];
            for k in 0..j {
                diag -= l[j * q + k] * l[j * q + k];
            }
            if !(diag > 1e-13 * scale) {
                return Err(Error::RankDeficientBasis);
            }
            let d = diag.sqrt();
            l[j * q + j] = d;
            for i in j + 1..q {
                let mut v = a[i * q + j];
                for k in 0..j {
                    v -= l[i * q + k] * l[j * q + k];
                }
                l[i * q + j] = v / d;
            }
        }
        Ok(SmallCholesky { q, l })
    }

    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let q = self.q;
        let mut x = b.to_vec();
        for i in 0..q {
            for k in 0..i {
                x[i] -= self.l[i * q + k] * x[k];
            }
            x[i] /= self.l[i * q + i];
        }
        for i in (0..q).rev() {
            for k in i + 1..q {
                x[i] -= self.l[k * q + i] * x[k];
            }
            x[i] /= self.l[i * q + i];
        }
        x
    }

    /// `b^T A^{-1} b`.
    pub(crate) fn inverse_form(&self, b: &[f64]) -> f64 {
        dot(b, &self.solve(b))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let c = SmallCholesky::new(&a, 2).unwrap();
        let x = c.solve(&[2.0, 1.0]);
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-14);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-14);
        assert!(SmallCholesky::new(&[1.0, 1.0, 1.0, 1.0], 2).is_err());
    }

    #[test]
    fn compensated_sum() {
        let mut s = KahanSum::default();
        for v in [1e16, 1.0, -1e16, 1.0] {
            s.add(v);
        }
        assert_eq!(s.value(), 2.0);
    }
}
