//! Truncated power series arithmetic with FFT products and Newton iteration.

use alloc::vec;
use alloc::vec::Vec;

use crate::fft;

/// `a·b mod z^n`.
pub fn mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let a = &a[..a.len().min(n)];
    let b = &b[..b.len().min(n)];
    if a.is_empty() || b.is_empty() {
        return vec![0.0; n];
    }
    fft::convolve(a, b, n)
}

/// `1/a mod z^n`; requires `a[0] != 0`.
pub fn inverse(a: &[f64], n: usize) -> Vec<f64> {
    assert!(a[0] != 0.0);
    let mut h = vec![1.0 / a[0]];
    let mut m = 1;
    while m < n {
        m = (2 * m).min(n);
        let ah = mul(a, &h, m);
        let mut corr: Vec<f64> = ah.iter().map(|v| -v).collect();
        corr[0] += 2.0;
        h = mul(&h, &corr, m);
    }
    h.truncate(n);
    h
}

fn derivative(a: &[f64]) -> Vec<f64> {
    a.iter()
        .enumerate()
        .skip(1)
        .map(|(k, v)| k as f64 * v)
        .collect()
}

fn integral(a: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (k, v) in a.iter().enumerate().take(n.saturating_sub(1)) {
        out[k + 1] = v / (k as f64 + 1.0);
    }
    out
}

/// `log a mod z^n`; requires `a[0] = 1`.
pub fn log(a: &[f64], n: usize) -> Vec<f64> {
    assert!((a[0] - 1.0).abs() < 1e-15);
    let da = derivative(&a[..a.len().min(n)]);
    let q = mul(&da, &inverse(a, n), n.saturating_sub(1));
    integral(&q, n)
}

/// `exp a mod z^n`; requires `a[0] = 0`.
pub fn exp(a: &[f64], n: usize) -> Vec<f64> {
    assert!(a[0] == 0.0);
    let mut f = vec![1.0];
    let mut m = 1;
    while m < n {
        m = (2 * m).min(n);
        let lf = log(&f, m);
        let mut corr: Vec<f64> = (0..m)
            .map(|k| a.get(k).copied().unwrap_or(0.0) - lf[k])
            .collect();
        corr[0] += 1.0;
        f = mul(&f, &corr, m);
    }
    f.truncate(n);
    f
}

/// `a^p mod z^n` for `a[0] = 1` and real `p`.
pub fn pow(a: &[f64], p: f64, n: usize) -> Vec<f64> {
    let l: Vec<f64> = log(a, n).iter().map(|v| p * v).collect();
    exp(&l, n)
}
