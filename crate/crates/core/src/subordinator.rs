//! The discrete subordinator `τ_n = R_1 + … + R_n`.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bernstein::{stable_tail, stable_tail_real, BernsteinSpec, CoeffTable, TailLaw};
use crate::error::{bail, Result};
use crate::fft;
use crate::special::{compensated_sum, gamma, ln_gamma, ln_gamma_ratio};

/// Round-off below this magnitude is clamped silently.
pub const ROUNDOFF_REPORT_LEVEL: f64 = 1e-12;

/// Law of `τ_n` on `0..=K` with the missing mass tracked.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorTable {
    n: usize,
    pmf: Vec<f64>,
    tail_mass: f64,
    tail: TailLaw,
    most_negative: f64,
}

impl SubordinatorTable {
    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn k_max(&self) -> usize {
        self.pmf.len() - 1
    }

    /// `P(τ_n = k)`, zero beyond `K`.
    pub fn get(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    /// `pmf[k] = P(τ_n = k)` for `k = 0..=K`; entries below `n` are zero.
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// `P(τ_n > K)`.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn tail_law(&self) -> TailLaw {
        self.tail
    }

    /// Most negative FFT round-off clamped to zero, if it exceeded the report level.
    pub fn clamped_roundoff(&self) -> Option<f64> {
        (self.most_negative < -ROUNDOFF_REPORT_LEVEL).then_some(self.most_negative)
    }

    /// `Σ_{k ≤ K} P(τ_n = k) e^{−λk}`.
    pub fn laplace(&self, lambda: f64) -> f64 {
        let q = (-lambda).exp();
        let mut acc = 0.0;
        for v in self.pmf.iter().rev() {
            acc = acc * q + v;
        }
        acc
    }
}

/// Law of `τ_n` truncated at `K`, by repeated squaring of the coefficient series.
///
/// Only coefficients up to `min(K, coeffs.K)` enter; the table is exact on
/// that range and the remaining mass is reported as `tail_mass`.
pub fn tau_pmf(coeffs: &CoeffTable, n: usize, k_max: usize) -> Result<SubordinatorTable> {
    if k_max < n {
        bail!(Argument, "truncation K = {k_max} must be at least n = {n}");
    }
    let len = k_max.min(coeffs.k_max()).max(n) + 1;
    let base: Vec<f64> = coeffs.as_slice().iter().copied().take(len).collect();
    let mut most_negative = 0.0_f64;
    let mut clamp = |v: &mut Vec<f64>| {
        for x in v.iter_mut() {
            if *x < 0.0 {
                most_negative = most_negative.min(*x);
                *x = 0.0;
            }
        }
    };
    let mut result = vec![1.0];
    let mut power = base;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = fft::convolve(&result, &power, len);
            clamp(&mut result);
        }
        e >>= 1;
        if e > 0 {
            power = fft::square(&power, len);
            clamp(&mut power);
        }
    }
    result.resize(len, 0.0);
    for v in result.iter_mut().take(n) {
        *v = 0.0;
    }
    let total = compensated_sum(result.iter().copied());
    Ok(SubordinatorTable {
        n,
        pmf: result,
        tail_mass: (1.0 - total).max(0.0),
        tail: coeffs.tail_law(),
        most_negative,
    })
}

/// `P(τ_n > t)` with the bracket implied by the truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBracket {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

/// `G_n(t) = P(τ_n > t)`.
///
/// Exact below the truncation level; at or beyond it only `[0, tail_mass]` is known.
pub fn tau_tail(table: &SubordinatorTable, t: f64) -> TailBracket {
    if t < table.n as f64 {
        return TailBracket {
            value: 1.0,
            lower: 1.0,
            upper: 1.0,
        };
    }
    let k_max = table.k_max();
    if t >= k_max as f64 {
        return TailBracket {
            value: table.tail_mass,
            lower: 0.0,
            upper: table.tail_mass,
        };
    }
    let upto = t.floor() as usize;
    // The table is exact on 0..=K, so the complement of the head is exact too.
    let value = (1.0 - compensated_sum(table.pmf[..=upto].iter().copied())).max(0.0);
    TailBracket {
        value,
        lower: value,
        upper: value,
    }
}

/// `n ψ(1/t) / Γ(1 − α/2)`.
pub fn tail_predictor(spec: &BernsteinSpec, n: u64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        bail!(Domain, "tail predictor needs t > 0, got {t}");
    }
    Ok(n as f64 * spec.eval(1.0 / t)? / gamma(1.0 - spec.index()))
}

/// `P(τ_n = k)` for the stable family from `(1 − (1 − z)^β)^n`, real `k`.
///
/// Exact, but the alternating sum cancels badly unless `k` is far beyond `n^{1/β}`.
pub fn stable_pmf_closed(index: f64, n: u32, k: f64) -> f64 {
    let mut acc = 0.0;
    for j in 1..=n {
        let g = j as f64 * index;
        if g == g.floor() && k > g {
            continue;
        }
        let ln_binom =
            ln_gamma(n as f64 + 1.0) - ln_gamma(j as f64 + 1.0) - ln_gamma((n - j) as f64 + 1.0);
        let mag = (ln_binom + ln_gamma_ratio(k, -g, 1.0)).exp() / gamma(-g);
        acc += if j % 2 == 1 { -mag } else { mag };
    }
    acc
}

/// Uniform draw in `[0, 1)` with 53 random bits.
pub fn unit_uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Generator for replica `replica` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

const GUIDE_BUCKETS: usize = 1 << 16;

/// Inverse-CDF sampler for one increment `R`.
///
/// Draws that land in the truncated tail use the exact stable tail law when
/// known; otherwise they are rejected and redrawn.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    cdf: Vec<f64>,
    guide: Vec<u32>,
    tail: TailLaw,
    tail_mass: f64,
}

impl IncrementSampler {
    pub fn new(coeffs: &CoeffTable) -> Result<Self> {
        let k_max = coeffs.k_max();
        if k_max > u32::MAX as usize {
            bail!(Resource, "sampler table limited to 2^32 entries");
        }
        let tails = coeffs.tails();
        let cdf: Vec<f64> = tails.iter().map(|t| 1.0 - t).collect();
        let mut guide = vec![0u32; GUIDE_BUCKETS + 1];
        let mut k = 0usize;
        for (b, slot) in guide.iter_mut().enumerate() {
            let u = b as f64 / GUIDE_BUCKETS as f64;
            while k < k_max && cdf[k] <= u {
                k += 1;
            }
            *slot = k as u32;
        }
        Ok(Self {
            cdf,
            guide,
            tail: coeffs.tail_law(),
            tail_mass: coeffs.tail_mass(),
        })
    }

    pub fn k_max(&self) -> usize {
        self.cdf.len() - 1
    }

    /// Probability that a raw draw falls beyond the table.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// One draw of `R`; `rejections` counts redraws caused by an unknown tail law.
    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R, rejections: &mut u64) -> u64 {
        loop {
            let u = unit_uniform(rng);
            let k_max = self.k_max();
            if u < self.cdf[k_max] {
                return self.lookup(u) as u64;
            }
            match self.tail {
                TailLaw::Stable { index } => return self.stable_tail_draw(index, rng),
                TailLaw::None => *rejections += 1,
            }
        }
    }

    /// Smallest `k` with `cdf[k] > u`.
    fn lookup(&self, u: f64) -> usize {
        let b = ((u * GUIDE_BUCKETS as f64) as usize).min(GUIDE_BUCKETS - 1);
        let mut lo = self.guide[b] as usize;
        let mut hi = (self.guide[b + 1] as usize).max(lo);
        hi = hi.min(self.k_max());
        if self.cdf[lo] > u {
            return lo.max(1);
        }
        // Invariant: cdf[lo] <= u < cdf[hi].
        while self.cdf[hi] <= u {
            hi = (hi * 2).min(self.k_max());
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.cdf[mid] <= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    fn stable_tail_draw<R: RngCore + ?Sized>(&self, index: f64, rng: &mut R) -> u64 {
        let k_max = self.k_max() as f64;
        // Fresh uniform in (0, 1] keeps full resolution deep in the tail.
        let w = 1.0 - unit_uniform(rng);
        let target = stable_tail(index, self.k_max() as u64) * w;
        let tail_at = |x: f64| stable_tail_real(index, x.max(1.0));
        // P(R > x) ≈ x^{−β}/Γ(1 − β), then Newton in log x.
        let mut ln_x = -(target * gamma(1.0 - index)).ln() / index;
        ln_x = ln_x.max(k_max.ln());
        for _ in 0..60 {
            let x = ln_x.exp();
            if x > 1.8e19 {
                return u64::MAX;
            }
            let f = tail_at(x).ln() - target.ln();
            // d ln P(R > x) / d ln x ≈ −β.
            let step = f / index;
            ln_x += step;
            if step.abs() < 1e-13 {
                break;
            }
        }
        let x = ln_x.exp();
        if x >= 1.8e19 {
            return u64::MAX;
        }
        let mut k = (x.ceil() as u64).max(self.k_max() as u64 + 1);
        while k > self.k_max() as u64 + 1 && tail_at((k - 1) as f64) <= target {
            k -= 1;
        }
        while tail_at(k as f64) > target {
            k += 1;
        }
        k
    }

    /// `τ_n` as a sum of `n` draws, saturating at `u64::MAX`.
    pub fn draw_sum<R: RngCore + ?Sized>(&self, n: u64, rng: &mut R, rejections: &mut u64) -> u64 {
        let mut s = 0u64;
        for _ in 0..n {
            s = s.saturating_add(self.draw(rng, rejections));
        }
        s
    }
}

/// One draw of `τ_n`, deterministic in `seed`.
pub fn sample_tau(coeffs: &CoeffTable, n: u64, seed: u64) -> Result<u64> {
    let sampler = IncrementSampler::new(coeffs)?;
    let mut rng = stream_rng(seed, 0);
    let mut rejections = 0;
    Ok(sampler.draw_sum(n, &mut rng, &mut rejections))
}
