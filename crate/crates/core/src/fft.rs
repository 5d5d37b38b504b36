//! Radix-2 complex FFT and FFT-backed linear convolution of real sequences.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// Below this many multiply-adds the direct convolution is used.
const DIRECT_CONVOLUTION_LIMIT: usize = 1 << 16;

/// Precomputed plan for power-of-two transforms of a fixed length.
pub struct Fft {
    n: usize,
    twiddles: Vec<Complex64>,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT length must be a power of two");
        let twiddles = (0..n / 2)
            .map(|j| {
                let (s, c) = libm::sincos(-2.0 * PI * j as f64 / n as f64);
                Complex64::new(c, s)
            })
            .collect();
        Self { n, twiddles }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform, `X_k = Σ_j x_j e^{-2πijk/n}`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    /// In-place inverse transform including the `1/n` factor.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
        let scale = 1.0 / self.n as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    fn transform(&self, buf: &mut [Complex64], conjugate: bool) {
        let n = self.n;
        assert_eq!(buf.len(), n);
        if n <= 1 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let step = n / len;
            for start in (0..n).step_by(len) {
                for j in 0..half {
                    let mut w = self.twiddles[j * step];
                    if conjugate {
                        w = w.conj();
                    }
                    let u = buf[start + j];
                    let v = buf[start + j + half] * w;
                    buf[start + j] = u + v;
                    buf[start + j + half] = u - v;
                }
            }
            len <<= 1;
        }
    }
}

fn direct_convolution(a: &[f64], b: &[f64], out_len: usize) -> Vec<f64> {
    let mut out = vec![0.0; out_len];
    for (i, &ai) in a.iter().enumerate().take(out_len) {
        if ai == 0.0 {
            continue;
        }
        let upper = (out_len - i).min(b.len());
        for (o, &bj) in out[i..i + upper].iter_mut().zip(&b[..upper]) {
            *o += ai * bj;
        }
    }
    out
}

/// In-place forward transform of a row-major `m^dim` array along every axis.
pub fn forward_nd(plan: &Fft, dim: usize, buf: &mut [Complex64]) {
    let m = plan.len();
    assert_eq!(buf.len(), m.pow(dim as u32));
    if dim == 1 {
        plan.forward(buf);
        return;
    }
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    for axis in 0..dim {
        let stride = m.pow(axis as u32);
        let block = stride * m;
        for outer in (0..buf.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (j, z) in line.iter_mut().enumerate() {
                    *z = buf[base + j * stride];
                }
                plan.forward(&mut line);
                for (j, z) in line.iter().enumerate() {
                    buf[base + j * stride] = *z;
                }
            }
        }
    }
}

/// Linear convolution of two real sequences truncated to `out_len` entries.
///
/// The two inputs are packed into the real and imaginary parts of a single
/// complex transform, so each call costs two transforms of the padded length.
pub fn convolve(a: &[f64], b: &[f64], out_len: usize) -> Vec<f64> {
    let a = &a[..a.len().min(out_len)];
    let b = &b[..b.len().min(out_len)];
    if a.is_empty() || b.is_empty() || out_len == 0 {
        return vec![0.0; out_len];
    }
    if a.len().saturating_mul(b.len()) <= DIRECT_CONVOLUTION_LIMIT {
        return direct_convolution(a, b, out_len);
    }
    let n = (a.len() + b.len() - 1).next_power_of_two();
    let plan = Fft::new(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (z, &x) in buf.iter_mut().zip(a) {
        z.re = x;
    }
    for (z, &y) in buf.iter_mut().zip(b) {
        z.im = y;
    }
    plan.forward(&mut buf);
    // Z = A + iB with A, B hermitian; A_k B_k = (Z_k^2 - conj(Z_{n-k})^2) / 4i.
    let mut prod = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let zk = buf[k];
        let zc = buf[(n - k) % n].conj();
        prod[k] = (zk * zk - zc * zc) * Complex64::new(0.0, -0.25);
    }
    drop(buf);
    plan.inverse(&mut prod);
    let mut out: Vec<f64> = prod.iter().take(out_len).map(|z| z.re).collect();
    out.resize(out_len, 0.0);
    out
}

/// `convolve(a, a, out_len)` with a single forward transform.
pub fn square(a: &[f64], out_len: usize) -> Vec<f64> {
    let a = &a[..a.len().min(out_len)];
    if a.is_empty() || out_len == 0 {
        return vec![0.0; out_len];
    }
    if a.len().saturating_mul(a.len()) <= DIRECT_CONVOLUTION_LIMIT {
        return direct_convolution(a, a, out_len);
    }
    let n = (2 * a.len() - 1).next_power_of_two();
    let plan = Fft::new(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (z, &x) in buf.iter_mut().zip(a) {
        z.re = x;
    }
    plan.forward(&mut buf);
    for z in buf.iter_mut() {
        *z = *z * *z;
    }
    plan.inverse(&mut buf);
    let mut out: Vec<f64> = buf.iter().take(out_len).map(|z| z.re).collect();
    out.resize(out_len, 0.0);
    out
}
