//! Special functions not covered by `libm`.

use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln Γ(x + a) − ln Γ(x + b)` without cancellation for large `x`.
pub fn ln_gamma_ratio(x: f64, a: f64, b: f64) -> f64 {
    if x < 30.0 {
        return ln_gamma(x + a) - ln_gamma(x + b);
    }
    let la = (a / x).ln_1p();
    let lb = (b / x).ln_1p();
    let main = (a - b) * x.ln() + (x + a - 0.5) * la - (x + b - 0.5) * lb - (a - b);
    let za = x + a;
    let zb = x + b;
    let tail = |z: f64| {
        let z2 = z * z;
        1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z * z2 * z2)
    };
    main + tail(za) - tail(zb)
}

/// Coefficient of `z^k` in `(1 − z)^g`, i.e. `(−1)^k binom(g, k)`.
///
/// Uses `Γ(k − g) / (Γ(−g) Γ(k + 1))` for large `k`; vanishes for `k > g`
/// when `g` is a non-negative integer.
pub fn binomial_series_coeff(g: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if g >= 0.0 && g == g.floor() && (k as f64) > g {
        return 0.0;
    }
    if k < 64 {
        let mut w = 1.0;
        for j in 1..=k {
            w *= (j as f64 - 1.0 - g) / j as f64;
        }
        return w;
    }
    let kf = k as f64;
    let magnitude = ln_gamma_ratio(kf, -g, 1.0);
    let gneg = gamma(-g);
    magnitude.exp() / gneg
}

/// Real-argument extension of [`binomial_series_coeff`] for `k ≥ 64`.
pub fn binomial_series_coeff_real(g: f64, k: f64) -> f64 {
    if g >= 0.0 && g == g.floor() {
        return 0.0;
    }
    ln_gamma_ratio(k, -g, 1.0).exp() / gamma(-g)
}

/// Principal `Log(1 − w)` accurate for small `|w|`.
pub fn log_one_minus(w: Complex64) -> Complex64 {
    let re = 0.5 * (-2.0 * w.re + w.norm_sqr()).ln_1p();
    let im = (-w.im).atan2(1.0 - w.re);
    Complex64::new(re, im)
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln Γ(n + 1) − (n + ½) ln n + n − ln √(2π)`.
fn stirling_error(n: f64) -> f64 {
    if n < 15.0 {
        if n == 0.0 {
            return 1.0 - LN_SQRT_2PI;
        }
        return ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let n2 = n * n;
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n > 500.0 {
        return (S0 - S1 / n2) / n;
    }
    if n > 80.0 {
        return (S0 - (S1 - S2 / n2) / n2) / n;
    }
    if n > 35.0 {
        return (S0 - (S1 - (S2 - S3 / n2) / n2) / n2) / n;
    }
    (S0 - (S1 - (S2 - (S3 - S4 / n2) / n2) / n2) / n2) / n
}

/// Deviance `x ln(x/m) + m − x` without cancellation.
fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        return s;
    }
    x * (x / m).ln() + m - x
}

/// Binomial probability `C(n, j) p^j (1 − p)^{n − j}` for real `0 ≤ j ≤ n`.
///
/// Saddle-point form with relative accuracy near machine precision for large `n`.
pub fn binomial_pmf(n: f64, j: f64, p: f64) -> f64 {
    if j < 0.0 || j > n {
        return 0.0;
    }
    let q = 1.0 - p;
    if j == 0.0 {
        return (n * q.ln()).exp();
    }
    if j == n {
        return (n * p.ln()).exp();
    }
    let lc = stirling_error(n)
        - stirling_error(j)
        - stirling_error(n - j)
        - deviance(j, n * p)
        - deviance(n - j, n * q);
    let lf = 2.0 * core::f64::consts::PI * j * (n - j) / n;
    lc.exp() / lf.sqrt()
}

/// `e^u − 1` for complex `u` without cancellation near zero.
pub fn exp_m1(u: Complex64) -> Complex64 {
    let (s, c) = libm::sincos(u.im);
    let half = libm::sin(0.5 * u.im);
    let re = u.re.exp_m1() * c - 2.0 * half * half;
    Complex64::new(re, u.re.exp() * s)
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_fraction(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
pub fn chi_square_sf(stat: f64, dof: f64) -> f64 {
    gamma_q(0.5 * dof, 0.5 * stat)
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        // P(K ≤ λ) = √(2π)/λ Σ e^{−(2j−1)²π²/(8λ²)}, negligible here.
        let mut s = 0.0;
        for j in 1..=5 {
            let m = (2 * j - 1) as f64;
            s += (-m * m * PI * PI / (8.0 * lambda * lambda)).exp();
        }
        return 1.0 - (2.0 * PI).sqrt() / lambda * s;
    }
    let mut s = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        s += if j % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Smallest `λ` with `P(K > λ) ≤ level`.
pub fn kolmogorov_critical(level: f64) -> f64 {
    let (mut lo, mut hi) = (0.2, 5.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_sf(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}
