//! Derivative-free box-constrained maximization (Hooke and Jeeves pattern
//! search).

use alloc::vec;
use alloc::vec::Vec;

/// Tuning of the pattern search. Steps and tolerances are fractions of each
/// coordinate's range.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PatternOptions {
    pub initial_step: f64,
    pub contraction: f64,
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for PatternOptions {
    fn default() -> Self {
        PatternOptions {
            initial_step: 0.25,
            contraction: 0.5,
            tolerance: 1e-3,
            max_iters: 200,
        }
    }
}

/// One accepted point of the search.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TracePoint {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub trace: Vec<TracePoint>,
}

struct Memo<'a, F> {
    f: &'a mut F,
    seen: Vec<(Vec<f64>, f64)>,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Memo<'_, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        if let Some((_, v)) = self.seen.iter().find(|(p, _)| p.as_slice() == x) {
            return *v;
        }
        self.evaluations += 1;
        let v = (self.f)(x);
        // NaN and errors count as the worst possible value
        let v = if v.is_nan() { f64::NEG_INFINITY } else { v };
        self.seen.push((x.to_vec(), v));
        v
    }
}

fn clamp(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

/// Maximizes `f` over the box `[lo, hi]` starting from `start`.
///
/// Coordinates with `lo == hi` stay fixed. Evaluations are memoized, so
/// revisiting a point (common after clamping) is free.
pub fn maximize<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    start: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &PatternOptions,
) -> SearchResult {
    let dim = start.len();
    assert!(lo.len() == dim && hi.len() == dim, "bounds dimension mismatch");
    let range: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| h - l).collect();
    let mut step: Vec<f64> = range.iter().map(|r| opts.initial_step * r).collect();
    let tol: Vec<f64> = range.iter().map(|r| opts.tolerance * r).collect();
    let mut memo = Memo {
        f,
        seen: Vec::new(),
        evaluations: 0,
    };

    let mut base = start.to_vec();
    clamp(&mut base, lo, hi);
    let mut base_val = memo.eval(&base);
    let mut trace = vec![TracePoint {
        iteration: 0,
        x: base.clone(),
        value: base_val,
    }];

    let explore = |memo: &mut Memo<'_, F>, from: &[f64], from_val: f64, step: &[f64]| {
        let mut x = from.to_vec();
        let mut val = from_val;
        for i in 0..dim {
            if step[i] <= 0.0 {
                continue;
            }
            for dir in [1.0, -1.0] {
                let mut cand = x.clone();
                cand[i] = (cand[i] + dir * step[i]).clamp(lo[i], hi[i]);
                if cand[i] == x[i] {
                    continue;
                }
                let v = memo.eval(&cand);
                if v > val {
                    x = cand;
                    val = v;
                    break;
                }
            }
        }
        (x, val)
    };

    let mut iterations = 0;
    while iterations < opts.max_iters {
        if step.iter().zip(&tol).all(|(s, t)| s <= t) {
            break;
        }
        iterations += 1;
        let (x, val) = explore(&mut memo, &base, base_val, &step);
        if val > base_val {
            // pattern moves while they keep improving
            let mut prev = base.clone();
            let mut cur = x;
            let mut cur_val = val;
            loop {
                let mut pattern: Vec<f64> = cur.iter().zip(&prev).map(|(c, p)| 2.0 * c - p).collect();
                clamp(&mut pattern, lo, hi);
                let pv = memo.eval(&pattern);
                let (nx, nv) = explore(&mut memo, &pattern, pv, &step);
                if nv > cur_val {
                    prev = cur;
                    cur = nx;
                    cur_val = nv;
                } else {
                    break;
                }
            }
            base = cur;
            base_val = cur_val;
            trace.push(TracePoint {
                iteration: iterations,
                x: base.clone(),
                value: base_val,
            });
        } else {
            for s in step.iter_mut() {
                *s *= opts.contraction;
            }
        }
    }

    SearchResult {
        x: base,
        value: base_val,
        evaluations: memo.evaluations,
        iterations,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum_of_quadratic() {
        let mut f = |x: &[f64]| -(x[0] - 1.3).powi(2) - 2.0 * (x[1] + 0.4).powi(2);
        let r = maximize(&mut f, &[0.0, 0.0], &[-5.0, -5.0], &[5.0, 5.0], &PatternOptions::default());
        assert!((r.x[0] - 1.3).abs() < 0.02 && (r.x[1] + 0.4).abs() < 0.02, "{:?}", r.x);
        assert!(r.trace.windows(2).all(|w| w[1].value > w[0].value));
    }

    #[test]
    fn respects_bounds_and_fixed_coordinates() {
        let mut f = |x: &[f64]| x[0] + x[1];
        let r = maximize(&mut f, &[0.5, 2.0], &[0.0, 2.0], &[1.0, 2.0], &PatternOptions::default());
        assert_eq!(r.x, vec![1.0, 2.0]);
    }

    #[test]
    fn memoizes_repeated_points() {
        let mut calls = 0;
        let mut f = |x: &[f64]| {
            calls += 1;
            -(x[0] * x[0])
        };
        let r = maximize(&mut f, &[0.0], &[-1.0], &[1.0], &PatternOptions::default());
        assert_eq!(r.x, vec![0.0]);
        assert_eq!(r.evaluations, calls);
        // start plus two probes per contraction level until the tolerance
        assert!(calls <= 1 + 2 * 10);
    }

    #[test]
    fn nan_is_never_accepted() {
        let mut f = |x: &[f64]| if x[0] > 0.0 { f64::NAN } else { x[0] };
        let r = maximize(&mut f, &[-0.5], &[-1.0], &[1.0], &PatternOptions::default());
        assert!(r.x[0] <= 0.0 && r.value.is_finite());
    }
}
