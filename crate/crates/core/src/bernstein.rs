//! Bernstein functions and the coefficients of their discrete subordinators.
//!
//! A [`BernsteinSpec`] describes `ψ(x) = a + b x + ∫ (1 − e^{−x t}) ν(dt)`
//! normalized so that `ψ(0) = 0` and `ψ(1) = 1`. Its coefficients
//! `c(k) = [k = 1]·b + (1/k!) ∫ t^k e^{−t} ν(dt)` form the law of one
//! subordinator increment, see [`CoeffTable`].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::E;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{bail, Result};
use crate::series;
use crate::special::{
    binomial_series_coeff, compensated_sum, exp_m1, gamma, ln_gamma, ln_gamma_ratio,
};

/// Coefficient tables stop once the remaining mass falls below this.
pub const DEFAULT_TAIL_TARGET: f64 = 1e-9;
/// Largest truncation chosen automatically.
pub const MAX_TRUNCATION: usize = 10_000_000;
/// Largest truncation for families whose coefficients come from series algebra.
pub const MAX_SERIES_TRUNCATION: usize = 1 << 20;

// The rounding of `k − 1 − β` is biased; re-anchor before drift reaches 1e-14.
const STABLE_ANCHOR_STRIDE: usize = 256;
const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Node grid used to discretize a Lévy density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub nodes: usize,
}

impl Default for LevyGrid {
    /// Geometric grid from `1e-8` to `1e12`, spaced like 400 nodes over `[1e-8, 50]`.
    fn default() -> Self {
        Self {
            t_min: 1e-8,
            t_max: 1e12,
            nodes: 826,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `ψ(x) = x^{α/2}`.
    Stable,
    /// `ψ(x) = x^{α/2} (log(e + 1/x))^{−p}`, rescaled to `ψ(1) = 1`.
    StableLog { log_power: f64, norm: f64 },
    /// Lévy measure `Σ w_i δ_{t_i}`.
    LevyQuadrature { nodes: Vec<f64>, weights: Vec<f64> },
}

/// A normalized Bernstein function with regular-variation index `α/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinSpec {
    family: Family,
    alpha: f64,
    killing: f64,
    drift: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        bail!(Domain, "alpha must lie in (0,2), got {alpha}");
    }
    Ok(())
}

impl BernsteinSpec {
    pub fn stable(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            family: Family::Stable,
            alpha,
            killing: 0.0,
            drift: 0.0,
        })
    }

    pub fn stable_log(alpha: f64, log_power: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(log_power >= 0.0 && log_power.is_finite()) {
            bail!(
                Domain,
                "log power must be finite and non-negative, got {log_power}"
            );
        }
        let norm = (1.0 + E).ln().powf(-log_power);
        Ok(Self {
            family: Family::StableLog { log_power, norm },
            alpha,
            killing: 0.0,
            drift: 0.0,
        })
    }

    /// Generic triple with a discrete Lévy measure.
    ///
    /// `alpha` is the declared regular-variation index; `α = 2` is admitted
    /// for the identity `ψ(x) = x`.
    pub fn levy_quadrature(
        alpha: f64,
        nodes: Vec<f64>,
        weights: Vec<f64>,
        killing: f64,
        drift: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            bail!(Domain, "alpha must lie in (0,2], got {alpha}");
        }
        if nodes.len() != weights.len() {
            bail!(Spec, "{} nodes but {} weights", nodes.len(), weights.len());
        }
        if nodes.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            bail!(Spec, "Levy nodes must be positive and finite");
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            bail!(Spec, "Levy weights must be non-negative and finite");
        }
        if killing != 0.0 {
            bail!(
                Spec,
                "killing term must be 0 so that psi(0) = 0, got {killing}"
            );
        }
        if !(drift >= 0.0 && drift.is_finite()) {
            bail!(Spec, "drift must be non-negative, got {drift}");
        }
        let spec = Self {
            family: Family::LevyQuadrature { nodes, weights },
            alpha,
            killing,
            drift,
        };
        let one = spec.eval(1.0)?;
        if (one - 1.0).abs() > NORMALIZATION_TOLERANCE {
            bail!(Spec, "psi(1) must equal 1, got {one}");
        }
        Ok(spec)
    }

    /// `ψ(x) = x`: unit drift, no jumps.
    pub fn identity() -> Self {
        Self {
            family: Family::LevyQuadrature {
                nodes: Vec::new(),
                weights: Vec::new(),
            },
            alpha: 2.0,
            killing: 0.0,
            drift: 1.0,
        }
    }

    /// Discretization of the stable Lévy density `(α/2)/Γ(1−α/2) t^{−1−α/2}`.
    ///
    /// Trapezoid rule in `log t` on `grid`; jumps below `t_min` are folded into
    /// the drift and the mass above `t_max` is lumped into the last node.
    pub fn stable_levy_quadrature(alpha: f64, grid: LevyGrid) -> Result<Self> {
        check_alpha(alpha)?;
        if !(grid.t_min > 0.0 && grid.t_max > grid.t_min && grid.nodes >= 2) {
            bail!(Argument, "invalid Levy grid {grid:?}");
        }
        let beta = 0.5 * alpha;
        let scale = beta / gamma(1.0 - beta);
        let h = (grid.t_max / grid.t_min).ln() / (grid.nodes - 1) as f64;
        let mut nodes = Vec::with_capacity(grid.nodes);
        let mut weights = Vec::with_capacity(grid.nodes);
        for i in 0..grid.nodes {
            let t = grid.t_min * (h * i as f64).exp();
            let end = i == 0 || i + 1 == grid.nodes;
            let w = h * scale * t.powf(-beta) * if end { 0.5 } else { 1.0 };
            nodes.push(t);
            weights.push(w);
        }
        if let Some(last) = weights.last_mut() {
            *last += grid.t_max.powf(-beta) / gamma(1.0 - beta);
        }
        let mut drift = scale * grid.t_min.powf(1.0 - beta) / (1.0 - beta);
        let raw = Self {
            family: Family::LevyQuadrature {
                nodes: nodes.clone(),
                weights: weights.clone(),
            },
            alpha,
            killing: 0.0,
            drift,
        };
        let one = raw.eval(1.0)?;
        for w in weights.iter_mut() {
            *w /= one;
        }
        drift /= one;
        Ok(Self {
            family: Family::LevyQuadrature { nodes, weights },
            alpha,
            killing: 0.0,
            drift,
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Regular-variation index `α/2` of `ψ` at zero.
    pub fn index(&self) -> f64 {
        0.5 * self.alpha
    }

    pub fn killing(&self) -> f64 {
        self.killing
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            bail!(Domain, "psi is defined on [0, inf), got {x}");
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: f64) -> f64 {
        let beta = self.index();
        match &self.family {
            Family::Stable => x.powf(beta),
            Family::StableLog { log_power, norm } => {
                if x == 0.0 {
                    return 0.0;
                }
                let log_term = if x < 1.0 {
                    -x.ln() + (E * x).ln_1p()
                } else {
                    (E + 1.0 / x).ln()
                };
                x.powf(beta) * log_term.powf(-log_power) / norm
            }
            Family::LevyQuadrature { nodes, weights } => {
                let jumps = compensated_sum(
                    nodes
                        .iter()
                        .zip(weights)
                        .map(|(t, w)| -w * (-x * t).exp_m1()),
                );
                self.killing + self.drift * x + jumps
            }
        }
    }

    /// Holomorphic extension to the closed right half-plane.
    pub fn eval_complex(&self, z: Complex64) -> Result<Complex64> {
        if !(z.re >= 0.0) || !z.im.is_finite() {
            bail!(Domain, "psi extends to Re z >= 0 only, got {z}");
        }
        Ok(self.eval_complex_unchecked(z))
    }

    pub(crate) fn eval_complex_unchecked(&self, z: Complex64) -> Complex64 {
        let beta = self.index();
        let zero = Complex64::new(0.0, 0.0);
        match &self.family {
            Family::Stable => {
                if z == zero {
                    zero
                } else {
                    (z.ln() * beta).exp()
                }
            }
            Family::StableLog { log_power, norm } => {
                if z == zero {
                    return zero;
                }
                let log_term = (Complex64::new(1.0, 0.0) + z * E).ln() - z.ln();
                ((z.ln() * beta) - log_term.ln() * *log_power).exp() / norm
            }
            Family::LevyQuadrature { nodes, weights } => {
                let mut acc = Complex64::new(self.killing, 0.0) + z * self.drift;
                for (t, w) in nodes.iter().zip(weights) {
                    acc -= exp_m1(-z * *t) * *w;
                }
                acc
            }
        }
    }

    /// Smallest `x ∈ (0, 1]` with `ψ(x) = y`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        self.inverse_bounded(y, 1.0)
    }

    /// Inverse on `(0, x_max]` by bisection in `log x`.
    ///
    /// The lower end starts at `1e-16` and moves down while `ψ` still exceeds `y`.
    pub fn inverse_bounded(&self, y: f64, x_max: f64) -> Result<f64> {
        let top = self.eval(x_max)?;
        if !(y > 0.0 && y <= top * (1.0 + 1e-15)) {
            bail!(
                Range,
                "inverse of psi needs 0 < y <= psi({x_max}) = {top}, got {y}"
            );
        }
        let mut lo = 1e-16_f64.min(x_max);
        while self.eval_unchecked(lo) > y {
            lo *= 1e-8;
            if lo < 1e-300 {
                bail!(Range, "no preimage of {y} above 1e-300");
            }
        }
        if (top - y).abs() <= 1e-14 * y {
            return Ok(x_max);
        }
        let mut hi = x_max;
        let mut mid = hi;
        for _ in 0..200 {
            mid = (lo.ln() + 0.5 * (hi.ln() - lo.ln())).exp();
            let v = self.eval_unchecked(mid);
            if (v - y).abs() <= 1e-14 * y || hi / lo - 1.0 < 4e-16 {
                break;
            }
            if v > y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(mid)
    }

    /// Coefficients `c(1..=k_max)`.
    pub fn coefficients(&self, k_max: usize) -> Result<CoeffTable> {
        if k_max == 0 {
            bail!(Argument, "truncation level must be at least 1");
        }
        let beta = self.index();
        match &self.family {
            Family::Stable => {
                let c = stable_coefficients(beta, k_max);
                let tail_mass = stable_tail(beta, k_max as u64);
                Ok(CoeffTable {
                    c,
                    tail_mass,
                    tail: TailLaw::Stable { index: beta },
                })
            }
            Family::StableLog { log_power, .. } => {
                if k_max > 4 * MAX_SERIES_TRUNCATION {
                    bail!(
                        Resource,
                        "series coefficients limited to K <= {}, got {k_max}",
                        4 * MAX_SERIES_TRUNCATION
                    );
                }
                let c = stable_log_coefficients(beta, *log_power, k_max)?;
                CoeffTable::from_coefficients(c, TailLaw::None)
            }
            Family::LevyQuadrature { nodes, weights } => {
                let mut c = levy_coefficients(nodes, weights, k_max);
                c[1] += self.drift;
                CoeffTable::from_coefficients(c, TailLaw::None)
            }
        }
    }

    /// Coefficients truncated at the smallest `K ≤ cap` with tail mass below `target`.
    pub fn coefficients_to_tail(&self, target: f64, cap: usize) -> Result<CoeffTable> {
        let beta = self.index();
        match &self.family {
            Family::Stable => {
                let k = smallest_k(cap as u64, |k| stable_tail(beta, k) < target);
                self.coefficients(k as usize)
            }
            _ => {
                let cap = match self.family {
                    Family::StableLog { .. } => cap.min(MAX_SERIES_TRUNCATION),
                    _ => cap,
                };
                let table = self.coefficients(cap)?;
                let tails = table.tails();
                let k = tails.iter().position(|t| *t < target).unwrap_or(cap).max(1);
                Ok(table.truncate(k))
            }
        }
    }

    /// Coefficients at the default truncation.
    pub fn default_coefficients(&self) -> Result<CoeffTable> {
        self.coefficients_to_tail(DEFAULT_TAIL_TARGET, MAX_TRUNCATION)
    }
}

fn smallest_k(cap: u64, ok: impl Fn(u64) -> bool) -> u64 {
    if !ok(cap) {
        return cap;
    }
    let (mut lo, mut hi) = (0u64, cap);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi.max(1)
}

/// `c(k) = −[z^k](1 − z)^β`, by recurrence re-anchored on the closed form.
fn stable_coefficients(beta: f64, k_max: usize) -> Vec<f64> {
    let mut c = vec![0.0; k_max + 1];
    let mut cur = beta;
    for (k, slot) in c.iter_mut().enumerate().skip(1) {
        if k > 1 {
            if k % STABLE_ANCHOR_STRIDE == 0 {
                cur = -binomial_series_coeff(beta, k as u64);
            } else {
                cur *= (k as f64 - 1.0 - beta) / k as f64;
            }
        }
        *slot = cur;
    }
    c
}

/// `Σ_{k > K} c(k) = [z^K](1 − z)^{β − 1}`.
pub(crate) fn stable_tail(beta: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    binomial_series_coeff(beta - 1.0, k)
}

/// `P(R > k)` for real `k ≥ 64` on the stable family.
pub(crate) fn stable_tail_real(beta: f64, k: f64) -> f64 {
    (ln_gamma_ratio(k, 1.0 - beta, 1.0)).exp() / gamma(1.0 - beta)
}

fn stable_log_coefficients(beta: f64, log_power: f64, k_max: usize) -> Result<Vec<f64>> {
    let n = k_max + 1;
    // log(e + 1/(1 − z)) = log(e + 1) + Σ (1 − q^k)/k z^k with q = e/(e + 1).
    let q = E / (E + 1.0);
    let s0 = (E + 1.0).ln();
    let mut s = vec![0.0; n];
    s[0] = 1.0;
    let mut qk = 1.0;
    for (k, v) in s.iter_mut().enumerate().skip(1) {
        qk *= q;
        *v = (1.0 - qk) / (k as f64 * s0);
    }
    let powered = series::pow(&s, -log_power, n);
    let binom: Vec<f64> = (0..n as u64)
        .map(|k| binomial_series_coeff(beta, k))
        .collect();
    let g = series::mul(&binom, &powered, n);
    let mut c = vec![0.0; n];
    for k in 1..n {
        let v = -g[k];
        if v < -1e-13 {
            bail!(Numeric, "coefficient {k} came out negative ({v})");
        }
        c[k] = v.max(0.0);
    }
    Ok(c)
}

fn levy_coefficients(nodes: &[f64], weights: &[f64], k_max: usize) -> Vec<f64> {
    let mut c = vec![0.0; k_max + 1];
    for (&t, &w) in nodes.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let start = (t.floor() as usize).clamp(1, k_max);
        let ln_start = -t + start as f64 * t.ln() - ln_gamma(start as f64 + 1.0);
        if ln_start < -745.0 {
            continue;
        }
        let peak = ln_start.exp();
        let floor = peak * 1e-25;
        let mut p = peak;
        c[start] += w * p;
        for (k, ck) in c.iter_mut().enumerate().take(k_max + 1).skip(start + 1) {
            p *= t / k as f64;
            if p < floor && k as f64 > t {
                break;
            }
            *ck += w * p;
        }
        p = peak;
        for k in (1..start).rev() {
            p *= (k + 1) as f64 / t;
            if p < floor {
                break;
            }
            c[k] += w * p;
        }
    }
    c
}

/// Known law of `R` beyond the truncation level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailLaw {
    /// `P(R > k) = [z^k](1 − z)^{β − 1}`.
    Stable {
        index: f64,
    },
    None,
}

/// Law of one subordinator increment `R`, truncated at `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTable {
    /// `c[k] = P(R = k)`; `c[0] = 0`.
    c: Vec<f64>,
    tail_mass: f64,
    tail: TailLaw,
}

impl CoeffTable {
    /// Table from `c[0..=K]` with `c[0]` ignored; the tail is `1 − Σ c`.
    pub fn from_coefficients(mut c: Vec<f64>, tail: TailLaw) -> Result<Self> {
        if c.len() < 2 {
            bail!(Argument, "coefficient table needs K >= 1");
        }
        c[0] = 0.0;
        if c.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            bail!(Numeric, "coefficients must be finite and non-negative");
        }
        let total = compensated_sum(c.iter().copied());
        let tail_mass = (1.0 - total).max(0.0);
        if total > 1.0 + 1e-12 {
            bail!(Numeric, "coefficients sum to {total} > 1");
        }
        Ok(Self { c, tail_mass, tail })
    }

    /// Truncation level `K`.
    pub fn k_max(&self) -> usize {
        self.c.len() - 1
    }

    /// `P(R = k)` for `k ≤ K`, else 0.
    pub fn get(&self, k: usize) -> f64 {
        self.c.get(k).copied().unwrap_or(0.0)
    }

    /// Slice `c[0..=K]` with `c[0] = 0`.
    pub fn as_slice(&self) -> &[f64] {
        &self.c
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn tail_law(&self) -> TailLaw {
        self.tail
    }

    /// `P(R > k)` for `k = 0..=K`.
    pub fn tails(&self) -> Vec<f64> {
        let k_max = self.k_max();
        let mut out = vec![0.0; k_max + 1];
        let mut acc = self.tail_mass;
        let mut comp = 0.0;
        for k in (0..=k_max).rev() {
            out[k] = acc + comp;
            if k > 0 {
                let v = self.c[k];
                let t = acc + v;
                comp += if acc.abs() >= v {
                    (acc - t) + v
                } else {
                    (v - t) + acc
                };
                acc = t;
            }
        }
        out
    }

    /// Same law truncated at `k ≤ K`.
    pub fn truncate(&self, k: usize) -> Self {
        let k = k.clamp(1, self.k_max());
        let dropped = compensated_sum(self.c[k + 1..].iter().copied());
        let tail_mass = match self.tail {
            TailLaw::Stable { index } => stable_tail(index, k as u64),
            TailLaw::None => self.tail_mass + dropped,
        };
        Self {
            c: self.c[..=k].to_vec(),
            tail_mass,
            tail: self.tail,
        }
    }

    /// `Σ_{k ≤ K} c(k) z^k`.
    pub fn generating_function(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for v in self.c.iter().rev() {
            acc = acc * z + *v;
        }
        acc
    }
}
