//! Discrete Fourier transforms of arbitrary length.
//!
//! Power-of-two lengths use an iterative radix-2 transform. Every other length
//! goes through Bluestein's chirp-z reformulation on a power-of-two grid of at
//! least `2n - 1` points, so circulant operators are always diagonalized at
//! their native size.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone)]
pub struct FftPlan {
    len: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Trivial,
    Radix2(Arc<Radix2>),
    Bluestein(Arc<Bluestein>),
}

#[derive(Debug)]
struct Radix2 {
    len: usize,
    // exp(-2 pi i j / len) for j < len / 2
    twiddles: Vec<Complex64>,
    bitrev: Vec<u32>,
}

#[derive(Debug)]
struct Bluestein {
    inner: Radix2,
    // exp(-i pi j^2 / n)
    chirp: Vec<Complex64>,
    // forward transform of the conjugate chirp, wrapped, scaled by 1/inner.len
    kernel: Vec<Complex64>,
}

fn unit(angle: f64) -> Complex64 {
    Complex64::new(angle.cos(), angle.sin())
}

impl Radix2 {
    fn new(len: usize) -> Self {
        debug_assert!(len.is_power_of_two());
        let bits = len.trailing_zeros();
        let twiddles = (0..len / 2)
            .map(|j| unit(-2.0 * PI * j as f64 / len as f64))
            .collect();
        let bitrev = (0..len as u32)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) })
            .collect();
        Radix2 {
            len,
            twiddles,
            bitrev,
        }
    }

    /// In-place forward transform (no normalization).
    fn forward(&self, data: &mut [Complex64]) {
        let n = self.len;
        for i in 0..n {
            let j = self.bitrev[i] as usize;
            if i < j {
                data.swap(i, j);
            }
        }
        let mut half = 1;
        while half < n {
            let stride = n / (2 * half);
            for start in (0..n).step_by(2 * half) {
                for j in 0..half {
                    let w = self.twiddles[j * stride];
                    let a = data[start + j];
                    let b = data[start + j + half] * w;
                    data[start + j] = a + b;
                    data[start + j + half] = a - b;
                }
            }
            half *= 2;
        }
    }
}

impl Bluestein {
    fn new(len: usize) -> Self {
        let inner_len = (2 * len - 1).next_power_of_two();
        let inner = Radix2::new(inner_len);
        // j^2 reduced mod 2n keeps the chirp angle small and exact.
        let modulus = 2 * len as u64;
        let chirp: Vec<Complex64> = (0..len as u64)
            .map(|j| unit(-PI * ((j * j) % modulus) as f64 / len as f64))
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); inner_len];
        let scale = 1.0 / inner_len as f64;
        kernel[0] = chirp[0].conj() * scale;
        for j in 1..len {
            let c = chirp[j].conj() * scale;
            kernel[j] = c;
            kernel[inner_len - j] = c;
        }
        inner.forward(&mut kernel);
        Bluestein {
            inner,
            chirp,
            kernel,
        }
    }

    fn forward(&self, data: &mut [Complex64]) {
        let n = data.len();
        let mut work = vec![Complex64::new(0.0, 0.0); self.inner.len];
        for j in 0..n {
            work[j] = data[j] * self.chirp[j];
        }
        self.inner.forward(&mut work);
        for (w, k) in work.iter_mut().zip(&self.kernel) {
            // inverse via conjugation: conj(F(conj(x)))
            *w = (*w * k).conj();
        }
        self.inner.forward(&mut work);
        for j in 0..n {
            data[j] = work[j].conj() * self.chirp[j];
        }
    }
}

impl FftPlan {
    pub fn new(len: usize) -> Self {
        let kind = if len <= 1 {
            Kind::Trivial
        } else if len.is_power_of_two() {
            Kind::Radix2(Arc::new(Radix2::new(len)))
        } else {
            Kind::Bluestein(Arc::new(Bluestein::new(len)))
        };
        FftPlan { len, kind }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place `X_k = sum_j x_j exp(-2 pi i j k / n)`.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len, "fft length mismatch");
        match &self.kind {
            Kind::Trivial => {}
            Kind::Radix2(r) => r.forward(data),
            Kind::Bluestein(b) => b.forward(data),
        }
    }

    /// In-place inverse transform, normalized by `1/n`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        for x in data.iter_mut() {
            *x = x.conj();
        }
        self.forward(data);
        let scale = 1.0 / self.len.max(1) as f64;
        for x in data.iter_mut() {
            *x = x.conj() * scale;
        }
    }

    /// Spectrum of a real sequence.
    pub fn forward_real(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Real part of the inverse transform of a Hermitian spectrum.
    pub fn inverse_real(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut buf = spectrum.to_vec();
        self.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Inverse transforms of several Hermitian spectra, two per complex
    /// transform: `ifft(A + iB) = a + ib` when `a` and `b` are real.
    pub fn inverse_real_many(&self, spectra: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(spectra.len());
        for pair in spectra.chunks(2) {
            if let [a, b] = pair {
                let i = Complex64::new(0.0, 1.0);
                let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + i * y).collect();
                self.inverse(&mut buf);
                out.push(buf.iter().map(|c| c.re).collect());
                out.push(buf.iter().map(|c| c.im).collect());
            } else {
                out.push(self.inverse_real(&pair[0]));
            }
        }
        out
    }
}
