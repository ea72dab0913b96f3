//! Exact profile log-likelihood of the periodic GP on a grid.
//!
//! The signal is cut into `k` segments of `p` samples and an `m`-sample
//! remainder. The log-likelihood splits exactly into the joint likelihood of
//! the segments (`l1`) plus the likelihood of the remainder conditioned on
//! them (`l2`, present only when `m > 0`). Both only touch `p`-sized
//! aggregates of the data:
//!
//! * `l1` needs the segment average `ybar`, a within-position scatter term and
//!   the circulant `R_delta = I + (k / delta^2) R`, diagonalized by one FFT;
//! * `l2` needs the conditional remainder `y_dot` and its covariance `Pi`,
//!   which is symmetric Toeplitz and is obtained from one inverse FFT and a
//!   Schur factorization.
//!
//! All log-likelihoods carry the full `-(n/2) log(2 pi)` constant.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::fft::FftPlan;
use crate::kernel::{build_kernel_blocks, Hyperparams, KernelBlocks, PeriodSpec, Signal};
use crate::linalg::{SymmetricCirculant, SymmetricToeplitz, ToeplitzFactor, EIGEN_CLAMP};
use crate::small::{dot, KahanSum, SmallCholesky};

/// `sigma^2` below this fraction of the signal's mean square is treated as an
/// exact fit: the profile likelihood is then reported as `-inf`.
pub const DEGENERATE_SIGMA2: f64 = 1e-20;

/// Aggregates of one segmentation; the raw segments are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedData {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub m: usize,
    pub fs: f64,
    /// `ybar`, length `p` (empty when `k = 0`).
    pub segment_mean: Vec<f64>,
    /// `y*`, length `m`.
    pub remainder: Vec<f64>,
    /// `Y^T Y` over the `k p` segmented points.
    pub sum_yy: f64,
    /// `Y^T Y - k ybar^T ybar`, accumulated without cancellation.
    pub scatter_yy: f64,
    /// `Gamma_bar` as `q` columns of length `p`.
    pub basis_mean: Vec<Vec<f64>>,
    /// `Gamma*` as `q` columns of length `m`.
    pub basis_remainder: Vec<Vec<f64>>,
    /// `Gamma^T Gamma`, row-major `q x q`.
    pub sum_gg: Vec<f64>,
    /// `Gamma^T Y`.
    pub sum_gy: Vec<f64>,
    /// `Gamma^T Gamma - k Gamma_bar^T Gamma_bar`.
    pub scatter_gg: Vec<f64>,
    /// `Gamma^T Y - k Gamma_bar^T ybar`.
    pub scatter_gy: Vec<f64>,
    /// Mean square of the whole signal.
    pub mean_square: f64,
    /// True when all segment regressors coincide.
    pub segment_invariant: bool,
}

impl SegmentedData {
    pub fn q(&self) -> usize {
        self.sum_gy.len()
    }

    pub fn eta(&self) -> usize {
        usize::from(self.m > 0)
    }
}

/// Rows folded into the compensated totals at a time.
const BLOCK_ROWS: usize = 128;

/// Per-position mean, total scatter `sum (y - ybar_j)^2` and `sum y^2` of the
/// `k` rows of `y` (row-major, `k x p`).
///
/// Deviations are taken from the first row, which keeps the one-pass scatter
/// `sum d^2 - (sum d)^2 / k` free of cancellation. Plain sums over blocks of
/// rows vectorize; the blocks are combined with compensated addition.
fn column_moments(y: &[f64], p: usize, k: usize) -> (Vec<f64>, f64, f64) {
    let shift = &y[..p];
    let mut t1 = vec![KahanSum::default(); p];
    let mut t2 = vec![KahanSum::default(); p];
    let mut b1 = vec![0.0; p];
    let mut b2 = vec![0.0; p];
    for block in y.chunks(BLOCK_ROWS * p) {
        b1.fill(0.0);
        b2.fill(0.0);
        // four rows per sweep, so the accumulators are stored once per four samples
        let quads = block.chunks_exact(4 * p);
        let rest = quads.remainder();
        for quad in quads {
            let (r0, tail) = quad.split_at(p);
            let (r1, tail) = tail.split_at(p);
            let (r2, r3) = tail.split_at(p);
            let (b1, b2, shift) = (&mut b1[..p], &mut b2[..p], &shift[..p]);
            let (r0, r1, r2, r3) = (&r0[..p], &r1[..p], &r2[..p], &r3[..p]);
            for j in 0..p {
                let c = shift[j];
                let (d0, d1, d2, d3) = (r0[j] - c, r1[j] - c, r2[j] - c, r3[j] - c);
                b1[j] += (d0 + d1) + (d2 + d3);
                b2[j] += (d0 * d0 + d1 * d1) + (d2 * d2 + d3 * d3);
            }
        }
        for row in rest.chunks_exact(p) {
            for j in 0..p {
                let d = row[j] - shift[j];
                b1[j] += d;
                b2[j] += d * d;
            }
        }
        for j in 0..p {
            t1[j].add(b1[j]);
            t2[j].add(b2[j]);
        }
    }
    let kf = k as f64;
    let mut scatter = KahanSum::default();
    let mut sq = KahanSum::default();
    let mean = (0..p)
        .map(|j| {
            let (s1, s2, c) = (t1[j].value(), t2[j].value(), shift[j]);
            scatter.add((s2 - s1 * s1 / kf).max(0.0));
            // sum of v^2 with v = c + d
            sq.add(s2 + c * (2.0 * s1 + kf * c));
            c + s1 / kf
        })
        .collect();
    (mean, scatter.value(), sq.value())
}

/// Splits `signal` into `floor(n/p)` segments of length `p` and a remainder
/// in one streaming pass. When `p > n` there are no segments and the whole
/// signal is the remainder.
pub fn segment(signal: &Signal, p: usize, basis: &dyn Basis) -> Result<SegmentedData> {
    if p == 0 {
        return Err(Error::invalid("p must be at least 1"));
    }
    let y = signal.values();
    let fs = signal.fs();
    let n = y.len();
    let k = n / p;
    let m = n - k * p;
    let q = basis.dim();
    if q == 0 {
        return Err(Error::invalid("regression basis must be non-empty"));
    }
    let time = |i: usize| (i + 1) as f64 / fs;
    let invariant = basis.segment_invariant(p, 1) && k > 0;

    let mut mean_y = vec![0.0; if k > 0 { p } else { 0 }];
    let mut mean_g = vec![vec![0.0; mean_y.len()]; q];
    let mut scatter_yy = KahanSum::default();
    let mut sum_yy = KahanSum::default();
    let mut sum_gy = vec![KahanSum::default(); q];
    let mut sum_gg = vec![KahanSum::default(); q * q];
    let mut scatter_gy = vec![KahanSum::default(); q];
    let mut scatter_gg = vec![KahanSum::default(); q * q];
    let mut g = vec![0.0; q];
    let mut dg = vec![0.0; q];

    if invariant {
        for j in 0..p {
            basis.eval(time(j), &mut g);
            for a in 0..q {
                mean_g[a][j] = g[a];
            }
        }
        let (mean, scatter, sq) = column_moments(&y[..k * p], p, k);
        mean_y = mean;
        scatter_yy.add(scatter);
        sum_yy.add(sq);
    } else {
        for r in 0..k {
            let count = (r + 1) as f64;
            for j in 0..p {
                let i = r * p + j;
                let v = y[i];
                sum_yy.add(v * v);
                let dy_old = v - mean_y[j];
                mean_y[j] += dy_old / count;
                let dy_new = v - mean_y[j];
                scatter_yy.add(dy_old * dy_new);
                basis.eval(time(i), &mut g);
                for a in 0..q {
                    dg[a] = g[a] - mean_g[a][j];
                    mean_g[a][j] += dg[a] / count;
                }
                for a in 0..q {
                    sum_gy[a].add(g[a] * v);
                    scatter_gy[a].add(dg[a] * dy_new);
                    for b in 0..q {
                        sum_gg[a * q + b].add(g[a] * g[b]);
                        scatter_gg[a * q + b].add(dg[a] * (g[b] - mean_g[b][j]));
                    }
                }
            }
        }
    }

    let (sum_gg, sum_gy, scatter_gg, scatter_gy) = if invariant {
        let kf = k as f64;
        let mut gg = vec![0.0; q * q];
        let mut gy = vec![0.0; q];
        for a in 0..q {
            gy[a] = kf * dot(&mean_g[a], &mean_y);
            for b in 0..q {
                gg[a * q + b] = kf * dot(&mean_g[a], &mean_g[b]);
            }
        }
        (gg, gy, vec![0.0; q * q], vec![0.0; q])
    } else {
        let mut sgg: Vec<f64> = scatter_gg.iter().map(KahanSum::value).collect();
        for a in 0..q {
            for b in 0..a {
                let s = 0.5 * (sgg[a * q + b] + sgg[b * q + a]);
                sgg[a * q + b] = s;
                sgg[b * q + a] = s;
            }
        }
        (
            sum_gg.iter().map(KahanSum::value).collect(),
            sum_gy.iter().map(KahanSum::value).collect(),
            sgg,
            scatter_gy.iter().map(KahanSum::value).collect(),
        )
    };

    let remainder = y[k * p..].to_vec();
    let mut basis_remainder = vec![vec![0.0; m]; q];
    for j in 0..m {
        basis.eval(time(k * p + j), &mut g);
        for a in 0..q {
            basis_remainder[a][j] = g[a];
        }
    }
    let mut rem_sq = KahanSum::default();
    for v in &remainder {
        rem_sq.add(v * v);
    }

    Ok(SegmentedData {
        n,
        p,
        k,
        m,
        fs,
        segment_mean: mean_y,
        remainder,
        sum_yy: sum_yy.value(),
        scatter_yy: scatter_yy.value(),
        basis_mean: mean_g,
        basis_remainder,
        sum_gg,
        sum_gy,
        scatter_gg,
        scatter_gy,
        mean_square: (sum_yy.value() + rem_sq.value()) / n as f64,
        segment_invariant: invariant,
    })
}

/// The circulant pieces of the segment covariance: the kernel block `R` and
/// `R_delta = I + (k / delta^2) R`, sharing one FFT plan.
#[derive(Debug, Clone)]
pub struct SegmentCovariance {
    pub kernel: SymmetricCirculant,
    pub rdelta: SymmetricCirculant,
    pub k: usize,
    pub delta: f64,
}

impl SegmentCovariance {
    pub fn new(blocks: &KernelBlocks, k: usize, hyper: &Hyperparams, plan: FftPlan) -> Result<Self> {
        let kernel = SymmetricCirculant::with_plan(blocks.circ_row.clone(), plan.clone())?;
        let delta2 = hyper.delta * hyper.delta;
        let scale = k as f64 / delta2;
        let mut eig = Vec::with_capacity(kernel.len());
        for &l in kernel.eigenvalues() {
            let mut mu = 1.0 + scale * l;
            if mu < 1.0 {
                if mu >= 1.0 - EIGEN_CLAMP {
                    mu = 1.0;
                } else {
                    return Err(Error::Numerical {
                        theta: hyper.theta,
                        delta: hyper.delta,
                        p: blocks.p(),
                        what: "R_delta eigenvalue below 1",
                    });
                }
            }
            eig.push(mu);
        }
        let mut row: Vec<f64> = blocks.circ_row.iter().map(|v| scale * v).collect();
        row[0] += 1.0;
        let rdelta = SymmetricCirculant::from_parts(row, eig, plan);
        Ok(SegmentCovariance {
            kernel,
            rdelta,
            k,
            delta: hyper.delta,
        })
    }

    pub fn p(&self) -> usize {
        self.kernel.len()
    }

    /// `log |R_delta|`.
    pub fn logdet_rdelta(&self) -> f64 {
        self.rdelta.eigenvalues().iter().map(|m| m.ln()).sum()
    }

    /// `log |Sigma|` for `Sigma = J_k (x) R + delta^2 I`, the covariance of
    /// the `k p` segmented points: `2 k p log delta + log |R_delta|`.
    pub fn logdet_sigma(&self) -> f64 {
        2.0 * (self.k * self.p()) as f64 * self.delta.ln() + self.logdet_rdelta()
    }

    /// `Sigma^{-1} v` for a stacked vector of `k` segments:
    /// `delta^-2 (v - 1 (x) vbar) + 1 (x) delta^-2 R_delta^{-1} vbar`.
    pub fn inverse_apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let p = self.p();
        if v.len() != self.k * p {
            return Err(Error::invalid("vector length must be k p"));
        }
        let mut mean = vec![0.0; p];
        for seg in v.chunks_exact(p) {
            for (m, x) in mean.iter_mut().zip(seg) {
                *m += x;
            }
        }
        let kf = self.k as f64;
        for m in mean.iter_mut() {
            *m /= kf;
        }
        let corrected = self.rdelta.solve(&mean)?;
        let inv_d2 = 1.0 / (self.delta * self.delta);
        let mut out = Vec::with_capacity(v.len());
        for seg in v.chunks_exact(p) {
            for j in 0..p {
                out.push(inv_d2 * (seg[j] - mean[j] + corrected[j]));
            }
        }
        Ok(out)
    }

    /// Spectrum of `(k / delta^2) R R_delta^{-1} x`, i.e. the segments'
    /// contribution to a conditional mean, from the spectrum of `x`.
    pub(crate) fn smooth_spectrum(&self, x_hat: &[Complex64]) -> Vec<Complex64> {
        let delta2 = self.delta * self.delta;
        let kf = self.k as f64;
        x_hat
            .iter()
            .zip(self.kernel.eigenvalues())
            .map(|(c, &l)| c * (kf * l / (delta2 + kf * l)))
            .collect()
    }

    pub(crate) fn smooth(&self, x_hat: &[Complex64]) -> Vec<f64> {
        self.kernel.plan().inverse_real(&self.smooth_spectrum(x_hat))
    }

    /// Spectrum of `R - (k / delta^2) R R_delta^{-1} R`, i.e.
    /// `lambda delta^2 / (delta^2 + k lambda)`.
    pub(crate) fn conditional_kernel_spectrum(&self) -> Vec<Complex64> {
        let delta2 = self.delta * self.delta;
        let kf = self.k as f64;
        self.kernel
            .eigenvalues()
            .iter()
            .map(|&l| Complex64::new(l * delta2 / (delta2 + kf * l), 0.0))
            .collect()
    }
}

/// `Gamma^T Sigma^{-1} Gamma`, `Gamma^T Sigma^{-1} Y` and `Y^T Sigma^{-1} Y`
/// for the segmented points.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    /// Row-major `q x q`.
    pub s_gg: Vec<f64>,
    pub s_gy: Vec<f64>,
    pub s_yy: f64,
}

#[derive(Debug, Clone)]
struct Spectra {
    mean: Vec<Complex64>,
    basis: Vec<Vec<Complex64>>,
}

impl Spectra {
    fn new(seg: &SegmentedData, plan: &FftPlan) -> Self {
        if seg.k == 0 {
            return Spectra {
                mean: Vec::new(),
                basis: vec![Vec::new(); seg.q()],
            };
        }
        Spectra {
            mean: plan.forward_real(&seg.segment_mean),
            basis: seg.basis_mean.iter().map(|c| plan.forward_real(c)).collect(),
        }
    }
}

pub fn sufficient_stats(seg: &SegmentedData, cov: &SegmentCovariance) -> Result<SufficientStats> {
    if seg.k == 0 {
        return Err(Error::invalid("sufficient statistics need at least one segment"));
    }
    let spectra = Spectra::new(seg, cov.kernel.plan());
    stats_from_spectra(seg, cov, &spectra)
}

fn stats_from_spectra(
    seg: &SegmentedData,
    cov: &SegmentCovariance,
    spectra: &Spectra,
) -> Result<SufficientStats> {
    let q = seg.q();
    if seg.k == 0 {
        return Ok(SufficientStats {
            s_gg: vec![0.0; q * q],
            s_gy: vec![0.0; q],
            s_yy: 0.0,
        });
    }
    let kf = seg.k as f64;
    let delta2 = cov.delta * cov.delta;
    let rd = &cov.rdelta;
    let s_yy = (seg.scatter_yy + kf * rd.inverse_form(&spectra.mean, &spectra.mean)?) / delta2;
    let mut s_gy = vec![0.0; q];
    let mut s_gg = vec![0.0; q * q];
    for a in 0..q {
        let ga = &spectra.basis[a];
        s_gy[a] = (seg.scatter_gy[a] + kf * rd.inverse_form(ga, &spectra.mean)?) / delta2;
        for b in 0..=a {
            let v = (seg.scatter_gg[a * q + b] + kf * rd.inverse_form(ga, &spectra.basis[b])?) / delta2;
            s_gg[a * q + b] = v;
            s_gg[b * q + a] = v;
        }
    }
    Ok(SufficientStats { s_gg, s_gy, s_yy })
}

/// Conditional remainder `y_dot`, `Gamma_dot` and its Toeplitz covariance
/// `Pi` (first column and factorization).
#[derive(Debug, Clone)]
pub struct RemainderTerms {
    pub y_dot: Vec<f64>,
    /// `q` columns of length `m`.
    pub g_dot: Vec<Vec<f64>>,
    pub pi_first_col: Vec<f64>,
    pub pi_logdet: f64,
    pub pi_factor: ToeplitzFactor,
}

pub fn remainder_terms(
    seg: &SegmentedData,
    blocks: &KernelBlocks,
    cov: &SegmentCovariance,
    hyper: &Hyperparams,
) -> Result<RemainderTerms> {
    if seg.m == 0 {
        return Err(Error::invalid("no remainder block (n is a multiple of p)"));
    }
    let spectra = Spectra::new(seg, cov.kernel.plan());
    remainder_from_spectra(seg, blocks, cov, hyper, &spectra)
}

/// `(y_dot, Gamma_dot, first column of Pi)`.
fn remainder_parts(
    seg: &SegmentedData,
    blocks: &KernelBlocks,
    cov: &SegmentCovariance,
    delta: f64,
    spectra: &Spectra,
) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let m = seg.m;
    let (y_dot, g_dot, mut pi) = if seg.k == 0 {
        (
            seg.remainder.clone(),
            seg.basis_remainder.clone(),
            blocks.star_row().to_vec(),
        )
    } else {
        // one batch of inverse FFTs: Pi's kernel part, then the smoothed
        // segment mean and basis columns
        let mut specs = Vec::with_capacity(2 + spectra.basis.len());
        specs.push(cov.conditional_kernel_spectrum());
        specs.push(cov.smooth_spectrum(&spectra.mean));
        for b in &spectra.basis {
            specs.push(cov.smooth_spectrum(b));
        }
        let mut rows = cov.kernel.plan().inverse_real_many(&specs).into_iter();
        let mut pi = rows.next().unwrap_or_default();
        pi.truncate(m);
        let w = rows.next().unwrap_or_default();
        let y_dot = seg.remainder.iter().zip(&w).map(|(a, b)| a - b).collect();
        let g_dot = seg
            .basis_remainder
            .iter()
            .zip(rows)
            .map(|(col, w)| col.iter().zip(&w).map(|(a, b)| a - b).collect())
            .collect();
        (y_dot, g_dot, pi)
    };
    pi[0] += delta * delta;
    (y_dot, g_dot, pi)
}

fn remainder_from_spectra(
    seg: &SegmentedData,
    blocks: &KernelBlocks,
    cov: &SegmentCovariance,
    hyper: &Hyperparams,
    spectra: &Spectra,
) -> Result<RemainderTerms> {
    let (y_dot, g_dot, pi_first_col) = remainder_parts(seg, blocks, cov, hyper.delta, spectra);
    let toeplitz = SymmetricToeplitz::new(pi_first_col.clone())?;
    let pi_factor = toeplitz
        .factor()
        .map_err(|_| Error::RemainderNotPositiveDefinite {
            theta: hyper.theta,
            delta: hyper.delta,
            p: seg.p,
        })?;
    Ok(RemainderTerms {
        y_dot,
        g_dot,
        pi_first_col,
        pi_logdet: pi_factor.logdet(),
        pi_factor,
    })
}

/// Whitened remainder quantities `L^{-1} y_dot`, `L^{-1} Gamma_dot`.
pub(crate) struct Whitened {
    pub(crate) y: Vec<f64>,
    pub(crate) g: Vec<Vec<f64>>,
}

impl Whitened {
    /// Whitening against `Pi` during its Schur factorization; returns
    /// `log |Pi|` as well.
    fn from_parts(y_dot: &[f64], g_dot: &[Vec<f64>], pi: SymmetricToeplitz) -> Result<(Self, f64)> {
        let mut rhs: Vec<&[f64]> = Vec::with_capacity(1 + g_dot.len());
        rhs.push(y_dot);
        rhs.extend(g_dot.iter().map(Vec::as_slice));
        let (logdet, mut out) = pi.whiten(&rhs)?;
        let y = out.remove(0);
        Ok((Whitened { y, g: out }, logdet))
    }

    pub(crate) fn new(rem: &RemainderTerms) -> Self {
        Whitened {
            y: rem.pi_factor.forward(&rem.y_dot),
            g: rem.g_dot.iter().map(|c| rem.pi_factor.forward(c)).collect(),
        }
    }
}

/// The `q x q` system `M = S_GG + eta Gamma_dot^T Pi^{-1} Gamma_dot` and its
/// right-hand side `S_GY + eta Gamma_dot^T Pi^{-1} y_dot`.
pub(crate) fn normal_equations(stats: &SufficientStats, white: Option<&Whitened>) -> (Vec<f64>, Vec<f64>) {
    let q = stats.s_gy.len();
    let mut mat = stats.s_gg.clone();
    let mut rhs = stats.s_gy.clone();
    if let Some(w) = white {
        for a in 0..q {
            rhs[a] += dot(&w.g[a], &w.y);
            for b in 0..q {
                mat[a * q + b] += dot(&w.g[a], &w.g[b]);
            }
        }
    }
    (mat, rhs)
}

/// Closed-form generalized least squares estimates `(beta_hat, sigma2_hat)`.
pub fn estimate_beta_sigma(
    stats: &SufficientStats,
    rem: Option<&RemainderTerms>,
    n: usize,
) -> Result<(Vec<f64>, f64)> {
    let white = rem.map(Whitened::new);
    let (mat, rhs) = normal_equations(stats, white.as_ref());
    let chol = SmallCholesky::new(&mat, rhs.len())?;
    let beta = chol.solve(&rhs);
    let yy = stats.s_yy + white.as_ref().map_or(0.0, |w| dot(&w.y, &w.y));
    let sigma2 = (yy - dot(&beta, &rhs)) / n as f64;
    Ok((beta, sigma2))
}

/// One likelihood evaluation and its components.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LikelihoodEval {
    pub loglik: f64,
    pub l1: f64,
    pub l2: f64,
    pub beta_hat: Vec<f64>,
    pub sigma2_hat: f64,
    pub logdet_rdelta: f64,
    pub logdet_pi: f64,
    pub p: usize,
    pub d: usize,
    pub k: usize,
    pub m: usize,
    pub theta: f64,
    pub delta: f64,
}

/// How the ACPGP variance estimate is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AcpgpNormalization {
    /// Divide by the full signal length `n`.
    #[default]
    SignalLength,
    /// Divide by the `k p` points the likelihood actually covers.
    SegmentedLength,
}

/// Everything computed for one `(theta, delta, p, d)`, reused by prediction.
#[derive(Debug, Clone)]
pub(crate) struct Terms {
    #[allow(dead_code)]
    pub blocks: KernelBlocks,
    pub cov: SegmentCovariance,
    pub stats: SufficientStats,
    pub rem: Option<RemainderTerms>,
}

/// A signal segmented for one `p`, with the FFTs that do not depend on the
/// hyperparameters cached. Evaluating a new `(theta, delta, d)` costs
/// `O(p log p + m^2)`.
#[derive(Debug, Clone)]
pub struct PreparedPeriod {
    seg: SegmentedData,
    plan: FftPlan,
    spectra: Spectra,
}

impl PreparedPeriod {
    pub fn new(signal: &Signal, p: usize, basis: &dyn Basis) -> Result<Self> {
        Self::from_segmented(segment(signal, p, basis)?)
    }

    pub fn from_segmented(seg: SegmentedData) -> Result<Self> {
        let plan = FftPlan::new(seg.p);
        let spectra = Spectra::new(&seg, &plan);
        Ok(PreparedPeriod { seg, plan, spectra })
    }

    pub fn segmented(&self) -> &SegmentedData {
        &self.seg
    }

    pub fn p(&self) -> usize {
        self.seg.p
    }

    pub(crate) fn terms(&self, hyper: &Hyperparams, d: usize) -> Result<Terms> {
        let spec = PeriodSpec::new(self.seg.p, d, self.seg.fs, self.seg.n)?;
        let blocks = build_kernel_blocks(&spec, hyper);
        let cov = SegmentCovariance::new(&blocks, self.seg.k, hyper, self.plan.clone())?;
        let stats = stats_from_spectra(&self.seg, &cov, &self.spectra)?;
        let rem = if self.seg.m > 0 {
            Some(remainder_from_spectra(&self.seg, &blocks, &cov, hyper, &self.spectra)?)
        } else {
            None
        };
        Ok(Terms {
            blocks,
            cov,
            stats,
            rem,
        })
    }

    /// Residual quadratic forms `(Q1, Q2)` at `beta`.
    fn residual_forms(&self, cov: &SegmentCovariance, white: Option<&Whitened>, beta: &[f64]) -> Result<(f64, f64)> {
        let seg = &self.seg;
        let q = seg.q();
        let mut q1 = 0.0;
        if seg.k > 0 {
            let delta2 = cov.delta * cov.delta;
            let mut scatter = seg.scatter_yy;
            for a in 0..q {
                scatter -= 2.0 * beta[a] * seg.scatter_gy[a];
                for b in 0..q {
                    scatter += beta[a] * beta[b] * seg.scatter_gg[a * q + b];
                }
            }
            let mut resid = self.spectra.mean.clone();
            for (a, spec) in self.spectra.basis.iter().enumerate() {
                for (r, g) in resid.iter_mut().zip(spec) {
                    *r -= g * beta[a];
                }
            }
            let quad = cov.rdelta.inverse_form(&resid, &resid)?;
            q1 = (scatter.max(0.0) + seg.k as f64 * quad) / delta2;
        }
        let q2 = match white {
            Some(w) => {
                let mut r = w.y.clone();
                for (a, col) in w.g.iter().enumerate() {
                    for (ri, gi) in r.iter_mut().zip(col) {
                        *ri -= beta[a] * gi;
                    }
                }
                dot(&r, &r)
            }
            None => 0.0,
        };
        Ok((q1, q2))
    }

    /// CPGP profile log-likelihood.
    pub fn cpgp(&self, hyper: &Hyperparams, d: usize) -> Result<LikelihoodEval> {
        let seg = &self.seg;
        let spec = PeriodSpec::new(seg.p, d, seg.fs, seg.n)?;
        let blocks = build_kernel_blocks(&spec, hyper);
        let cov = SegmentCovariance::new(&blocks, seg.k, hyper, self.plan.clone())?;
        let stats = stats_from_spectra(seg, &cov, &self.spectra)?;
        let (white, logdet_pi) = if seg.m > 0 {
            let (y_dot, g_dot, pi) = remainder_parts(seg, &blocks, &cov, hyper.delta, &self.spectra);
            let (w, ld) = Whitened::from_parts(&y_dot, &g_dot, SymmetricToeplitz::new(pi)?).map_err(|_| {
                Error::RemainderNotPositiveDefinite {
                    theta: hyper.theta,
                    delta: hyper.delta,
                    p: seg.p,
                }
            })?;
            (Some(w), ld)
        } else {
            (None, 0.0)
        };
        self.finish(&cov, &stats, white.as_ref(), logdet_pi, hyper, d)
    }

    pub(crate) fn cpgp_from_terms(&self, terms: &Terms, hyper: &Hyperparams, d: usize) -> Result<LikelihoodEval> {
        let white = terms.rem.as_ref().map(Whitened::new);
        let logdet_pi = terms.rem.as_ref().map_or(0.0, |r| r.pi_logdet);
        self.finish(&terms.cov, &terms.stats, white.as_ref(), logdet_pi, hyper, d)
    }

    fn finish(
        &self,
        cov: &SegmentCovariance,
        stats: &SufficientStats,
        white: Option<&Whitened>,
        logdet_pi: f64,
        hyper: &Hyperparams,
        d: usize,
    ) -> Result<LikelihoodEval> {
        let seg = &self.seg;
        let n = seg.n as f64;
        let kp = (seg.k * seg.p) as f64;
        let (mat, rhs) = normal_equations(stats, white);
        let beta = SmallCholesky::new(&mat, rhs.len())?.solve(&rhs);
        let (q1, q2) = self.residual_forms(cov, white, &beta)?;
        let sigma2 = (q1 + q2) / n;

        let ln_2pi = (2.0 * PI).ln();
        let logdet_rdelta = cov.logdet_rdelta();
        let two_kp_ln_delta = 2.0 * kp * hyper.delta.ln();
        let degenerate = !(sigma2 > DEGENERATE_SIGMA2 * seg.mean_square);

        let (loglik, l1, l2) = if degenerate {
            (f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0)
        } else {
            let ln_s2 = sigma2.ln();
            let loglik = -0.5 * (n * ln_s2 + two_kp_ln_delta + logdet_rdelta + logdet_pi + n + n * ln_2pi);
            let l1 = if seg.k > 0 {
                -0.5 * (kp * (ln_2pi + ln_s2) + two_kp_ln_delta + logdet_rdelta + q1 / sigma2)
            } else {
                0.0
            };
            let mf = seg.m as f64;
            let l2 = if seg.m > 0 {
                -0.5 * (mf * (ln_2pi + ln_s2) + logdet_pi + q2 / sigma2)
            } else {
                0.0
            };
            (loglik, l1, l2)
        };
        if loglik.is_nan() || loglik == f64::INFINITY {
            return Err(Error::Numerical {
                theta: hyper.theta,
                delta: hyper.delta,
                p: seg.p,
                what: "non-finite log-likelihood",
            });
        }
        Ok(LikelihoodEval {
            loglik,
            l1,
            l2,
            beta_hat: beta,
            sigma2_hat: sigma2,
            logdet_rdelta,
            logdet_pi,
            p: seg.p,
            d,
            k: seg.k,
            m: seg.m,
            theta: hyper.theta,
            delta: hyper.delta,
        })
    }

    /// Normalized first-block likelihood `l1 / (k p)` with the closed-form
    /// estimates restricted to the segments.
    pub fn acpgp(&self, hyper: &Hyperparams, d: usize, norm: AcpgpNormalization) -> Result<LikelihoodEval> {
        let seg = &self.seg;
        if seg.k == 0 {
            return Err(Error::invalid("ACPGP needs at least one whole segment (p <= n)"));
        }
        let spec = PeriodSpec::new(seg.p, d, seg.fs, seg.n)?;
        let blocks = build_kernel_blocks(&spec, hyper);
        let cov = SegmentCovariance::new(&blocks, seg.k, hyper, self.plan.clone())?;
        let stats = stats_from_spectra(seg, &cov, &self.spectra)?;
        let q = seg.q();
        let chol = SmallCholesky::new(&stats.s_gg, q)?;
        let beta = chol.solve(&stats.s_gy);
        let kp = (seg.k * seg.p) as f64;
        let denom = match norm {
            AcpgpNormalization::SignalLength => seg.n as f64,
            AcpgpNormalization::SegmentedLength => kp,
        };
        let sigma2 = (stats.s_yy - dot(&beta, &stats.s_gy)) / denom;
        let logdet_rdelta = cov.logdet_rdelta();
        let l1 = if sigma2 > DEGENERATE_SIGMA2 * seg.mean_square {
            -0.5 * (kp * sigma2.ln() + 2.0 * kp * hyper.delta.ln() + logdet_rdelta + kp + kp * (2.0 * PI).ln())
        } else {
            f64::NEG_INFINITY
        };
        if l1.is_nan() {
            return Err(Error::Numerical {
                theta: hyper.theta,
                delta: hyper.delta,
                p: seg.p,
                what: "non-finite log-likelihood",
            });
        }
        Ok(LikelihoodEval {
            loglik: l1 / kp,
            l1,
            l2: 0.0,
            beta_hat: beta,
            sigma2_hat: sigma2,
            logdet_rdelta,
            logdet_pi: 0.0,
            p: seg.p,
            d,
            k: seg.k,
            m: seg.m,
            theta: hyper.theta,
            delta: hyper.delta,
        })
    }
}

/// CPGP profile log-likelihood at `(theta, delta, p, d)`:
///
/// ```text
/// l = -1/2 [ n log s2 + 2kp log delta + log|R_delta| + eta log|Pi| + n + n log 2 pi ]
/// ```
pub fn profile_loglik(
    signal: &Signal,
    theta: f64,
    delta: f64,
    p: usize,
    d: usize,
    basis: &dyn Basis,
) -> Result<LikelihoodEval> {
    let hyper = Hyperparams::new(theta, delta)?;
    PeriodSpec::for_signal(signal, p, d)?;
    PreparedPeriod::new(signal, p, basis)?.cpgp(&hyper, d)
}

/// Approximate variant that keeps only `l1 / (k p)`, with `sigma^2`
/// normalized by the signal length.
pub fn acpgp_loglik(
    signal: &Signal,
    theta: f64,
    delta: f64,
    p: usize,
    d: usize,
    basis: &dyn Basis,
) -> Result<LikelihoodEval> {
    let hyper = Hyperparams::new(theta, delta)?;
    PeriodSpec::for_signal(signal, p, d)?;
    PreparedPeriod::new(signal, p, basis)?.acpgp(&hyper, d, AcpgpNormalization::SignalLength)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{Constant, Polynomial};
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sig(v: Vec<f64>) -> Signal {
        Signal::new(v, 1.0).unwrap()
    }

    #[test]
    fn segment_examples() {
        let s = segment(&sig(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), 3, &Constant).unwrap();
        assert_eq!((s.k, s.m, s.eta()), (2, 0, 0));
        assert_eq!(s.segment_mean, vec![2.5, 3.5, 4.5]);

        let s = segment(&sig(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]), 3, &Constant).unwrap();
        assert_eq!((s.k, s.m, s.eta()), (2, 1, 1));
        assert_eq!(s.remainder, vec![7.0]);

        let s = segment(&sig(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]), 10, &Constant).unwrap();
        assert_eq!((s.k, s.m), (0, 7));
        assert!(s.segment_mean.is_empty());
        assert_eq!(s.remainder.len(), 7);
    }

    #[test]
    fn segment_aggregates_match_direct_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..23).map(|_| rng.random_range(-2.0..2.0) + 10.0).collect();
        let basis = Polynomial { degree: 1, scale: 10.0 };
        let s = segment(&sig(v.clone()), 5, &basis).unwrap();
        let (k, p) = (4, 5);
        let mut yy = 0.0;
        let mut gy = [0.0; 2];
        let mut gg = [0.0; 4];
        for i in 0..k * p {
            let t = (i + 1) as f64;
            let g = [1.0, t / 10.0];
            yy += v[i] * v[i];
            for a in 0..2 {
                gy[a] += g[a] * v[i];
                for b in 0..2 {
                    gg[a * 2 + b] += g[a] * g[b];
                }
            }
        }
        assert!((s.sum_yy - yy).abs() < 1e-10);
        for j in 0..p {
            let mean: f64 = (0..k).map(|r| v[r * p + j]).sum::<f64>() / k as f64;
            assert!((s.segment_mean[j] - mean).abs() < 1e-12);
        }
        let ybar2: f64 = s.segment_mean.iter().map(|v| v * v).sum();
        assert!((s.scatter_yy - (yy - k as f64 * ybar2)).abs() < 1e-9);
        for a in 0..2 {
            assert!((s.sum_gy[a] - gy[a]).abs() < 1e-10);
            let cross = dot(&s.basis_mean[a], &s.segment_mean);
            assert!((s.scatter_gy[a] - (gy[a] - k as f64 * cross)).abs() < 1e-9);
            for b in 0..2 {
                assert!((s.sum_gg[a * 2 + b] - gg[a * 2 + b]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn constant_signal_has_zero_variance_and_mean_beta() {
        let s = sig(vec![2.5; 11]);
        let prepared = PreparedPeriod::new(&s, 4, &Constant).unwrap();
        let hyper = Hyperparams::new(2.0, 1.0).unwrap();
        let terms = prepared.terms(&hyper, 1).unwrap();
        assert!((terms.stats.s_gy[0] / terms.stats.s_gg[0] - 2.5).abs() < 1e-12);
        let (beta, sigma2) = estimate_beta_sigma(&terms.stats, terms.rem.as_ref(), 11).unwrap();
        assert!((beta[0] - 2.5).abs() < 1e-12);
        assert!(sigma2.abs() < 1e-12);
        let eval = prepared.cpgp(&hyper, 1).unwrap();
        assert_eq!(eval.loglik, f64::NEG_INFINITY);
    }

    #[test]
    fn single_remainder_point_pi_is_positive_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let hyper = Hyperparams::new(3.0, 0.5).unwrap();
        let prepared = PreparedPeriod::new(&sig(v), 4, &Constant).unwrap();
        let terms = prepared.terms(&hyper, 1).unwrap();
        let rem = terms.rem.unwrap();
        assert_eq!(rem.pi_first_col.len(), 1);
        // 1 + delta^2 - (k/delta^2) r^T R_delta^{-1} r with r the first column of R
        let r = terms.blocks.circ_row.clone();
        let x = terms.cov.rdelta.solve(&r).unwrap();
        let want = 1.0 + 0.25 - 2.0 / 0.25 * dot(&r, &x);
        assert!((rem.pi_first_col[0] - want).abs() < 1e-12);
        assert!(rem.pi_first_col[0] > 0.0);
    }

    #[test]
    fn loglik_splits_into_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &(n, p) in &[(30usize, 7usize), (30, 5), (12, 20)] {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let e = profile_loglik(&sig(v), 4.0, 0.7, p, 1, &Constant).unwrap();
            let eta = if n % p == 0 { 0.0 } else { 1.0 };
            assert!((e.loglik - (e.l1 + eta * e.l2)).abs() < 1e-10, "{e:?}");
            if n % p == 0 {
                assert_eq!(e.l2, 0.0);
            }
        }
    }

    #[test]
    fn acpgp_matches_cpgp_when_p_divides_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let v: Vec<f64> = (0..24).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = sig(v);
        let c = profile_loglik(&s, 3.0, 1.5, 6, 1, &Constant).unwrap();
        let a = acpgp_loglik(&s, 3.0, 1.5, 6, 1, &Constant).unwrap();
        assert!((a.loglik - c.loglik / 24.0).abs() < 1e-12);
        assert!(acpgp_loglik(&s, 3.0, 1.5, 25, 1, &Constant).is_err());
    }

    #[test]
    fn sigma2_is_shift_invariant_with_constant_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let v: Vec<f64> = (0..41).map(|_| rng.random_range(-1.0..1.0)).collect();
        let shifted: Vec<f64> = v.iter().map(|x| x + 100.0).collect();
        let a = profile_loglik(&sig(v), 5.0, 2.0, 6, 1, &Constant).unwrap();
        let b = profile_loglik(&sig(shifted), 5.0, 2.0, 6, 1, &Constant).unwrap();
        assert!((a.sigma2_hat - b.sigma2_hat).abs() <= 1e-10 * a.sigma2_hat);
        assert!((a.beta_hat[0] + 100.0 - b.beta_hat[0]).abs() < 1e-9);
    }
}
