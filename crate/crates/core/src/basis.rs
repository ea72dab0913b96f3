//! Regression bases `f(t)` for the mean function `f(t)^T beta`.

#[allow(unused_imports)]
use num_traits::Float;

/// A finite set of regression functions evaluated at arbitrary times.
pub trait Basis: Sync {
    /// Number of functions `q`.
    fn dim(&self) -> usize;

    /// Writes `f(t)` into `out` (length [`Basis::dim`]).
    fn eval(&self, t: f64, out: &mut [f64]);

    /// True when `f` takes the same values on every segment of `p` grid
    /// samples, which enables the shortcut forms of the sufficient statistics.
    fn segment_invariant(&self, _p: usize, _d: usize) -> bool {
        false
    }
}

/// `f(t) = 1`, the default mean model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Constant;

impl Basis for Constant {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, _t: f64, out: &mut [f64]) {
        out[0] = 1.0;
    }

    fn segment_invariant(&self, _p: usize, _d: usize) -> bool {
        true
    }
}

/// `f(t) = (1, t/scale, (t/scale)^2, ...)` up to `degree`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polynomial {
    pub degree: usize,
    pub scale: f64,
}

impl Basis for Polynomial {
    fn dim(&self) -> usize {
        self.degree + 1
    }

    fn eval(&self, t: f64, out: &mut [f64]) {
        let x = t / self.scale;
        let mut v = 1.0;
        for o in out.iter_mut().take(self.degree + 1) {
            *o = v;
            v *= x;
        }
    }

    fn segment_invariant(&self, _p: usize, _d: usize) -> bool {
        self.degree == 0
    }
}

/// `f(t) = (1, cos(2 pi t / T), sin(2 pi t / T))` for a fixed period `T`
/// (seconds); segment invariant only when `T` divides the segment duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub period: f64,
}

impl Basis for Harmonic {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, t: f64, out: &mut [f64]) {
        let w = 2.0 * core::f64::consts::PI * t / self.period;
        out[0] = 1.0;
        out[1] = w.cos();
        out[2] = w.sin();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_values() {
        let b = Polynomial { degree: 2, scale: 2.0 };
        let mut out = [0.0; 3];
        b.eval(4.0, &mut out);
        assert_eq!(out, [1.0, 2.0, 4.0]);
        assert!(!b.segment_invariant(3, 1));
        assert!(Constant.segment_invariant(3, 1));
    }
}
