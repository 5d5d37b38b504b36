//! Transition function of the subordinated walk.
//!
//! Two independent routes compute `p_ψ(x, n)`: the time average
//! `Σ_k p(x, k) P(τ_n = k)` and uniform-grid inversion of
//! `Φ_ψ(θ)^n = (1 − ψ(1 − Φ(θ)))^n`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;
use rand_chacha::rand_core::RngCore;
use rand_distr::{Binomial, Distribution};

use crate::asymptotics::const_c;
use crate::bernstein::{BernsteinSpec, TailLaw};
use crate::error::{bail, Result};
use crate::fft::{self, Fft};
use crate::quad::GaussLegendre;
use crate::special::{compensated_sum, log_one_minus};
use crate::subordinator::{stable_pmf_closed, IncrementSampler, SubordinatorTable};
use crate::walk::{ConvolutionTable, WalkAnalysis, WalkSpec, TABLE_ENTRY_CAP};

/// Work budget, in table entries visited, for convolution by dynamic programming.
pub const CONVOLUTION_WORK_CAP: usize = 1 << 31;
/// Smallest grid the default size selection returns.
pub const MIN_GRID: usize = 4096;

/// A kernel value and a bound on its truncation or aliasing error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub error_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Time average truncated at the table length.
    Exact,
    /// Time average with the stable tail of `τ_n` summed in closed form.
    ExactCompleted,
    /// Inversion on an `M^d` grid; values are `M`-periodized.
    Fourier { grid: usize },
    /// Time average of the walk on the torus `(ℤ/M)^d`.
    PeriodizedExact { grid: usize },
}

/// `p_ψ(x, n)` over a window of lattice points.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub n: usize,
    pub points: Vec<Vec<i64>>,
    pub values: Vec<f64>,
    pub error_bounds: Vec<f64>,
    pub route: Route,
}

impl KernelTable {
    pub fn get(&self, x: &[i64]) -> Option<KernelValue> {
        self.points
            .iter()
            .position(|p| p == x)
            .map(|i| KernelValue {
                value: self.values[i],
                error_bound: self.error_bounds[i],
            })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `p(x, k)` for a window of points and `k = 0..=K`.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    points: Vec<Vec<i64>>,
    k_max: usize,
    /// Row-major by point.
    rows: Vec<f64>,
    /// `sup_{k > K} p(x, k)` or 1 when unknown.
    beyond: f64,
}

impl TransitionMatrix {
    /// Closed forms when available, otherwise dynamic programming capped by
    /// [`CONVOLUTION_WORK_CAP`]; rows stop early if the cap is hit.
    pub fn new(walk: &WalkSpec, points: &[Vec<i64>], k_max: usize) -> Result<Self> {
        for p in points {
            if p.len() != walk.dim() {
                bail!(
                    Argument,
                    "point {p:?} does not have dimension {}",
                    walk.dim()
                );
            }
        }
        let width = k_max + 1;
        let mut rows = vec![0.0; points.len() * width];
        let mut reached = k_max;
        let beyond;
        if walk.closed_form().is_some() {
            for (i, x) in points.iter().enumerate() {
                for k in 0..=k_max {
                    rows[i * width + k] = walk.closed_transition(x, k as f64).unwrap_or(0.0);
                }
            }
            let origin = vec![0i64; walk.dim()];
            let k_even = 2 * k_max.div_ceil(2);
            beyond = if walk.is_symmetric() {
                walk.closed_transition(&origin, k_even as f64)
                    .unwrap_or(1.0)
            } else {
                1.0
            };
        } else {
            let mut table = ConvolutionTable::origin(walk.dim());
            let mut work = 0usize;
            let mut origin_at_even = 1.0;
            let k_even = 2 * k_max.div_ceil(2);
            for k in 0..=k_even {
                if k > 0 {
                    let next = match table.step(walk, TABLE_ENTRY_CAP) {
                        Ok(t) => t,
                        Err(_) => {
                            reached = k - 1;
                            break;
                        }
                    };
                    work = work.saturating_add(
                        (2 * next.radius() as usize + 1).pow(walk.dim() as u32)
                            * walk.support().count(),
                    );
                    table = next;
                }
                if k <= k_max {
                    for (i, x) in points.iter().enumerate() {
                        rows[i * width + k] = table.get(x);
                    }
                }
                if k == k_even {
                    origin_at_even = table.get(&vec![0; walk.dim()]);
                }
                if work > CONVOLUTION_WORK_CAP && k < k_even {
                    reached = k.min(k_max);
                    break;
                }
            }
            beyond = if walk.is_symmetric() && reached == k_max {
                origin_at_even
            } else {
                1.0
            };
        }
        Ok(Self {
            points: points.to_vec(),
            k_max: reached,
            rows,
            beyond,
        })
    }

    fn row(&self, i: usize) -> &[f64] {
        let width = self.rows.len() / self.points.len().max(1);
        &self.rows[i * width..i * width + self.k_max + 1]
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn points(&self) -> &[Vec<i64>] {
        &self.points
    }
}

/// Time-average route over a window; the truncated mass of `τ_n` enters the bound.
pub fn kernel_exact_window(matrix: &TransitionMatrix, sub: &SubordinatorTable) -> KernelTable {
    let k_top = matrix.k_max.min(sub.k_max());
    let pmf = sub.pmf();
    let missing = sub.tail_mass() + compensated_sum(pmf[k_top + 1..].iter().copied());
    let sup = if k_top == sub.k_max() {
        matrix.beyond
    } else {
        1.0
    };
    let mut values = Vec::with_capacity(matrix.points.len());
    let mut bounds = Vec::with_capacity(matrix.points.len());
    for i in 0..matrix.points.len() {
        let row = matrix.row(i);
        let v = compensated_sum((sub.steps()..=k_top).map(|k| row[k] * pmf[k]));
        values.push(v);
        bounds.push(missing * sup);
    }
    KernelTable {
        n: sub.steps(),
        points: matrix.points.clone(),
        values,
        error_bounds: bounds,
        route: Route::Exact,
    }
}

/// `Σ_{k = n}^{K} p(x, k) P(τ_n = k)` with bound `tail_mass · sup_{k > K} p(x, k)`.
pub fn kernel_exact(walk: &WalkSpec, sub: &SubordinatorTable, x: &[i64]) -> Result<KernelValue> {
    let matrix = TransitionMatrix::new(walk, &[x.to_vec()], sub.k_max())?;
    let t = kernel_exact_window(&matrix, sub);
    Ok(KernelValue {
        value: t.values[0],
        error_bound: t.error_bounds[0],
    })
}

/// Closed-form tail `Σ_{k > K} p(x, k) P(τ_n = k)` for the stable family.
///
/// Euler–Maclaurin over the residue class of `x`; the integral uses
/// `k = a v^{−1/q}` with `q = d/2 + β` and dyadic Gauss–Legendre panels in `v`.
#[derive(Debug, Clone)]
pub struct StableTailCompletion {
    index: f64,
    n: u32,
    dim: usize,
    period: usize,
    k_max: usize,
    rules: [GaussLegendre; 2],
}

const DYADIC_PANELS: i32 = 64;

impl StableTailCompletion {
    pub fn new(walk: &WalkSpec, analysis: &WalkAnalysis, sub: &SubordinatorTable) -> Result<Self> {
        let TailLaw::Stable { index } = sub.tail_law() else {
            bail!(Argument, "tail completion needs the stable tail law");
        };
        if walk.closed_form().is_none() {
            bail!(Argument, "tail completion needs a closed-form walk");
        }
        let n = u32::try_from(sub.steps())
            .map_err(|_| crate::Error::Argument("step count too large".into()))?;
        Ok(Self {
            index,
            n,
            dim: walk.dim(),
            period: analysis.period(),
            k_max: sub.k_max(),
            rules: [GaussLegendre::new(24), GaussLegendre::new(16)],
        })
    }

    fn summand(&self, walk: &WalkSpec, x: &[i64], k: f64) -> f64 {
        walk.closed_transition_continuous(x, k).unwrap_or(0.0)
            * stable_pmf_closed(self.index, self.n, k)
    }

    /// Tail sum for `x` with its error estimate.
    pub fn complete(&self, walk: &WalkSpec, analysis: &WalkAnalysis, x: &[i64]) -> KernelValue {
        let r = self.period;
        let class = analysis.class_of(x);
        let mut a = self.k_max + 1;
        while a % r != class {
            a += 1;
        }
        let af = a as f64;
        let h = r as f64;
        let f = |k: f64| self.summand(walk, x, k);
        let q = 0.5 * self.dim as f64 + self.index;
        let integral = |rule: &GaussLegendre| {
            let mut total = 0.0;
            for j in 0..DYADIC_PANELS {
                let hi = 2f64.powi(-j);
                let lo = 0.5 * hi;
                total += rule.integrate(lo, hi, |v| {
                    let k = af * v.powf(-1.0 / q);
                    f(k) * (af / q) * v.powf(-1.0 / q - 1.0)
                });
            }
            total
        };
        let fine = integral(&self.rules[0]);
        let coarse = integral(&self.rules[1]);
        let d = 0.5;
        let fa = f(af);
        let d1 = (f(af + d) - f(af - d)) / (2.0 * d);
        let d3 = (f(af + 2.0 * d) - 2.0 * f(af + d) + 2.0 * f(af - d) - f(af - 2.0 * d))
            / (2.0 * d * d * d);
        let em3 = h * h * h * d3 / 720.0;
        let value = fine / h + 0.5 * fa - h * d1 / 12.0 + em3;
        // Last panel [0, 2^{−64}] is omitted; its share is below 1e-19 of the integral.
        let error = em3.abs() + (fine - coarse).abs() / h + 1e-13 * value.abs();
        KernelValue {
            value,
            error_bound: error,
        }
    }
}

/// Time-average route with the `τ_n` tail beyond the table summed analytically.
pub fn kernel_exact_completed(
    walk: &WalkSpec,
    analysis: &WalkAnalysis,
    matrix: &TransitionMatrix,
    sub: &SubordinatorTable,
) -> Result<KernelTable> {
    if matrix.k_max < sub.k_max() {
        bail!(
            Argument,
            "transition matrix shorter than the subordinator table"
        );
    }
    let completion = StableTailCompletion::new(walk, analysis, sub)?;
    let mut table = kernel_exact_window(matrix, sub);
    for (i, x) in matrix.points.iter().enumerate() {
        let tail = completion.complete(walk, analysis, x);
        table.values[i] += tail.value;
        table.error_bounds[i] = tail.error_bound;
    }
    table.route = Route::ExactCompleted;
    Ok(table)
}

/// `Log Φ_ψ(θ)` on the uniform grid `θ ∈ (2π/M) (ℤ/M)^d`.
#[derive(Debug, Clone)]
pub struct FourierGrid {
    dim: usize,
    m: usize,
    log_char: Vec<Complex64>,
}

impl FourierGrid {
    pub fn new(walk: &WalkSpec, psi: &BernsteinSpec, m: usize) -> Result<Self> {
        if m < 2 || !m.is_power_of_two() {
            bail!(Argument, "grid size must be a power of two, got {m}");
        }
        let dim = walk.dim();
        let total = m
            .checked_pow(dim as u32)
            .filter(|t| *t <= TABLE_ENTRY_CAP)
            .ok_or_else(|| crate::Error::Resource(alloc::format!("grid {m}^{dim} too large")))?;
        let mut log_char = Vec::with_capacity(total);
        let mut theta = vec![0.0; dim];
        for idx in 0..total {
            let mut rest = idx;
            for t in theta.iter_mut() {
                *t = 2.0 * PI * (rest % m) as f64 / m as f64;
                rest /= m;
            }
            let w = walk.one_minus_char_fn(&theta);
            if idx != 0 && w.re < 1e-15 {
                bail!(
                    Numeric,
                    "near-periodicity: Re(1 - Phi) = {:e} at theta = {theta:?}",
                    w.re
                );
            }
            let s = psi.eval_complex_unchecked(Complex64::new(w.re.max(0.0), w.im));
            log_char.push(log_one_minus(s));
        }
        Ok(Self { dim, m, log_char })
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Log Φ_ψ` at grid index `idx` (row-major, first axis fastest).
    pub fn log_char(&self, idx: usize) -> Complex64 {
        self.log_char[idx]
    }

    /// `Σ_m p_ψ(x + mM, n)` for every `x ∈ (ℤ/M)^d`.
    pub fn periodic_kernel(&self, n: usize) -> PeriodicKernel {
        self.periodic_kernel_with(n, |_| Complex64::new(1.0, 0.0))
    }

    /// Periodized inverse of `Φ_ψ^n · weight(idx)`.
    pub fn periodic_kernel_with(
        &self,
        n: usize,
        weight: impl Fn(usize) -> Complex64,
    ) -> PeriodicKernel {
        let nf = n as f64;
        let mut buf: Vec<Complex64> = self
            .log_char
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let base = if n == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    (*l * nf).exp()
                };
                base * weight(i)
            })
            .collect();
        let plan = Fft::new(self.m);
        fft::forward_nd(&plan, self.dim, &mut buf);
        let scale = 1.0 / buf.len() as f64;
        PeriodicKernel {
            dim: self.dim,
            m: self.m,
            values: buf.iter().map(|z| z.re * scale).collect(),
        }
    }
}

/// Periodized kernel on `(ℤ/M)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicKernel {
    dim: usize,
    m: usize,
    values: Vec<f64>,
}

impl PeriodicKernel {
    pub fn get(&self, x: &[i64]) -> f64 {
        let m = self.m as i64;
        let idx = x
            .iter()
            .rev()
            .fold(0usize, |acc, c| acc * self.m + c.rem_euclid(m) as usize);
        self.values[idx]
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.values.iter().copied())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Envelope for the images `Σ_{m ≠ 0} p_ψ(x + mM, n)` from the far-field
/// asymptotic `r C n ‖y‖^{−d} ψ(‖y‖^{−2})`.
///
/// Images with `|m|∞ ≤ 4` are summed explicitly, the rest by a radial integral.
pub fn aliasing_bound(
    analysis: &WalkAnalysis,
    psi: &BernsteinSpec,
    x: &[i64],
    n: usize,
    m: usize,
) -> Result<f64> {
    let d = analysis.dim();
    if psi.alpha() >= 2.0 {
        bail!(Argument, "aliasing envelope needs alpha < 2");
    }
    let c = const_c(d, psi.alpha(), analysis.covariance())?;
    let scale = analysis.period() as f64 * c * n as f64;
    let envelope =
        |norm: f64| scale * norm.powi(-(d as i32)) * psi.eval(norm.powi(-2)).unwrap_or(0.0);
    let reach: i64 = 4;
    let side = (2 * reach + 1) as usize;
    let mut total = 0.0;
    let mut shift = vec![0i64; d];
    let mut y = vec![0.0; d];
    for idx in 0..side.pow(d as u32) {
        let mut rest = idx;
        for s in shift.iter_mut() {
            *s = (rest % side) as i64 - reach;
            rest /= side;
        }
        if shift.iter().all(|s| *s == 0) {
            continue;
        }
        for ((yc, xc), s) in y.iter_mut().zip(x).zip(&shift) {
            *yc = (*xc + s * m as i64) as f64;
        }
        total += envelope(analysis.norm_sq(&y).sqrt());
    }
    // Radial tail beyond the explicit images, with ψ(ρ^{−2}) ≈ ψ(R^{−2}) (R/ρ)^{α}.
    let lambda_min = analysis
        .covariance_inverse()
        .symmetric_eigen()
        .0
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let radius = (reach as f64 + 0.5) * m as f64 * lambda_min.max(0.0).sqrt();
    let det = analysis.det_covariance();
    let sphere = 2.0 * PI.powf(0.5 * d as f64) / crate::special::gamma(0.5 * d as f64);
    let cells = (m as f64).powi(d as i32) / det.sqrt();
    total += envelope(radius) * radius.powi(d as i32) * sphere / (psi.alpha() * cells);
    Ok(total)
}

/// `Σ_m p_ψ(x + mM, n)` by grid inversion, with an aliasing envelope.
pub fn kernel_fourier(
    walk: &WalkSpec,
    analysis: &WalkAnalysis,
    psi: &BernsteinSpec,
    x: &[i64],
    n: usize,
    m: usize,
) -> Result<KernelValue> {
    check_grid(x, m)?;
    let grid = FourierGrid::new(walk, psi, m)?;
    let value = grid.periodic_kernel(n).get(x);
    let error_bound = if n == 0 {
        0.0
    } else {
        aliasing_bound(analysis, psi, x, n, m)?
    };
    Ok(KernelValue { value, error_bound })
}

fn check_grid(x: &[i64], m: usize) -> Result<()> {
    let sup = x.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0);
    if !m.is_multiple_of(2) || (m as u64) <= 2 * sup {
        bail!(
            Argument,
            "grid size {m} must be even and exceed 2|x| = {}",
            2 * sup
        );
    }
    Ok(())
}

/// Smallest power of two `≥ max(4096, 8 (|x|∞ + 8 ⌈s(n)⌉))` with `s(n) = ψ^{−1}(1/n)^{−1/2}`.
pub fn default_grid_size(psi: &BernsteinSpec, x_sup: u64, n: usize) -> Result<usize> {
    let s = spatial_scale(psi, n)?;
    let want = 8.0 * (x_sup as f64 + 8.0 * s.ceil());
    if !(want < 1e18) {
        bail!(Resource, "default grid for n = {n} is too large");
    }
    Ok((want as usize).max(MIN_GRID).next_power_of_two())
}

/// `ψ^{−1}(1/n)^{−1/2}`, the spatial scale after `n` steps.
pub fn spatial_scale(psi: &BernsteinSpec, n: usize) -> Result<f64> {
    if n == 0 {
        bail!(Argument, "spatial scale needs n >= 1");
    }
    Ok(psi.inverse(1.0 / n as f64)?.powf(-0.5))
}

/// `Σ_{j < r} p^{(j)} ∗ p_ψ(·, n)` at `x` by time averaging.
pub fn smoothed_kernel_exact(
    walk: &WalkSpec,
    analysis: &WalkAnalysis,
    sub: &SubordinatorTable,
    x: &[i64],
) -> Result<KernelValue> {
    let r = analysis.period();
    let matrix = TransitionMatrix::new(walk, &[x.to_vec()], sub.k_max() + r - 1)?;
    let row = matrix.row(0);
    let pmf = sub.pmf();
    let k_top = sub.k_max().min(matrix.k_max + 1 - r);
    let mut total = 0.0;
    for j in 0..r {
        total += compensated_sum((sub.steps()..=k_top).map(|k| row[k + j] * pmf[k]));
    }
    let missing = sub.tail_mass() + compensated_sum(pmf[k_top + 1..].iter().copied());
    Ok(KernelValue {
        value: total,
        error_bound: r as f64 * missing,
    })
}

/// Smoothed kernel by grid inversion of `Φ_ψ^n Σ_{j < r} Φ^j`.
pub fn smoothed_kernel_fourier(
    walk: &WalkSpec,
    analysis: &WalkAnalysis,
    grid: &FourierGrid,
    n: usize,
) -> PeriodicKernel {
    let r = analysis.period();
    let m = grid.size();
    let dim = grid.dim();
    grid.periodic_kernel_with(n, |idx| {
        let mut theta = vec![0.0; dim];
        let mut rest = idx;
        for t in theta.iter_mut() {
            *t = 2.0 * PI * (rest % m) as f64 / m as f64;
            rest /= m;
        }
        let phi = walk.char_fn(&theta);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        for _ in 0..r {
            acc += pow;
            pow *= phi;
        }
        acc
    })
}

/// `Σ_m p_ψ(x + mM, n)` by time averaging the walk on the torus `(ℤ/M)^d`.
///
/// For `k > K` the torus kernel is replaced by its unimodular characters,
/// whose `τ_n` averages are closed-form in `ψ`; the rest is bounded by the
/// spectral gap.
pub fn kernel_periodized_exact(
    walk: &WalkSpec,
    psi: &BernsteinSpec,
    sub: &SubordinatorTable,
    x: &[i64],
    m: usize,
) -> Result<KernelValue> {
    check_grid(x, m)?;
    let dim = walk.dim();
    let total = m
        .checked_pow(dim as u32)
        .filter(|t| *t <= TABLE_ENTRY_CAP)
        .ok_or_else(|| crate::Error::Resource(alloc::format!("torus {m}^{dim} too large")))?;
    let mi = m as i64;
    let index = |y: &[i64]| {
        y.iter()
            .rev()
            .fold(0usize, |acc, c| acc * m + c.rem_euclid(mi) as usize)
    };
    let steps: Vec<(Vec<i64>, f64)> = walk.support().map(|(v, p)| (v.to_vec(), p)).collect();
    let target = index(x);
    let pmf = sub.pmf();
    let mut dist = vec![0.0; total];
    dist[0] = 1.0;
    let mut next = vec![0.0; total];
    let mut head = 0.0;
    let mut point = vec![0i64; dim];
    let mut shifted = vec![0i64; dim];
    for (k, &pk) in pmf.iter().enumerate() {
        if k >= sub.steps() {
            head += dist[target] * pk;
        }
        if k == pmf.len() - 1 {
            break;
        }
        next.iter_mut().for_each(|v| *v = 0.0);
        for (i, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let mut rest = i;
            for c in point.iter_mut() {
                *c = (rest % m) as i64;
                rest /= m;
            }
            for (v, p) in &steps {
                for ((s, a), b) in shifted.iter_mut().zip(&point).zip(v) {
                    *s = a + b;
                }
                next[index(&shifted)] += p * mass;
            }
        }
        core::mem::swap(&mut dist, &mut next);
    }
    // Characters of the torus: unimodular ones carry the tail exactly.
    let mut tail = Complex64::new(0.0, 0.0);
    let mut gap = 0.0_f64;
    let mut theta = vec![0.0; dim];
    for idx in 0..total {
        let mut rest = idx;
        for t in theta.iter_mut() {
            *t = 2.0 * PI * (rest % m) as f64 / m as f64;
            rest /= m;
        }
        let phi = walk.char_fn(&theta);
        if phi.norm() < 1.0 - 1e-12 {
            gap = gap.max(phi.norm());
            continue;
        }
        let w = walk.one_minus_char_fn(&theta);
        let s = psi.eval_complex_unchecked(Complex64::new(w.re.max(0.0), w.im));
        let full = if sub.steps() == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            (log_one_minus(s) * sub.steps() as f64).exp()
        };
        let mut head_char = Complex64::new(0.0, 0.0);
        for k in (0..pmf.len()).rev() {
            head_char = head_char * phi + pmf[k];
        }
        let phase: f64 = theta.iter().zip(x).map(|(t, c)| t * *c as f64).sum();
        let (sn, cs) = libm::sincos(-phase);
        tail += (full - head_char) * Complex64::new(cs, sn);
    }
    let tail = tail.re / total as f64;
    let k_max = pmf.len() - 1;
    let error = gap.powi((k_max + 1) as i32) * sub.tail_mass() + 1e-14;
    Ok(KernelValue {
        value: head + tail,
        error_bound: error,
    })
}

/// Lattice positions of a simulated subordinated walk.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    pub points: Vec<Vec<i64>>,
    /// Redraws of `R` caused by a truncated table without a tail law.
    pub rejections: u64,
    /// Whether some `τ` increment saturated at `u64::MAX`.
    pub saturated: bool,
}

/// Positions `S_{τ_{⌊n t⌋}}` for each `t` of a non-decreasing grid.
pub fn simulate_endpoint<R: RngCore + ?Sized>(
    walk: &WalkSpec,
    sampler: &IncrementSampler,
    n: u64,
    t_grid: &[f64],
    rng: &mut R,
) -> Result<SimulatedPath> {
    if t_grid.windows(2).any(|w| w[1] < w[0]) || t_grid.iter().any(|t| !(*t >= 0.0)) {
        bail!(
            Argument,
            "time grid must be non-negative and non-decreasing"
        );
    }
    let dim = walk.dim();
    let steps: Vec<(Vec<i64>, f64)> = walk.support().map(|(v, p)| (v.to_vec(), p)).collect();
    let mut position = vec![0i128; dim];
    let mut done = 0u64;
    let mut rejections = 0u64;
    let mut saturated = false;
    let mut points = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let target = (n as f64 * t).floor() as u64;
        let increment = sampler.draw_sum(target - done, rng, &mut rejections);
        saturated |= increment == u64::MAX;
        done = target;
        walk_steps(&steps, increment, &mut position, rng)?;
        points.push(
            position
                .iter()
                .map(|c| (*c).clamp(i64::MIN as i128, i64::MAX as i128) as i64)
                .collect(),
        );
    }
    Ok(SimulatedPath {
        points,
        rejections,
        saturated,
    })
}

/// Adds the displacement of `k` walk steps using multinomial step counts.
fn walk_steps<R: RngCore + ?Sized>(
    steps: &[(Vec<i64>, f64)],
    k: u64,
    position: &mut [i128],
    rng: &mut R,
) -> Result<()> {
    let mut remaining = k;
    let mut mass = 1.0;
    for (i, (v, p)) in steps.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let count = if i + 1 == steps.len() {
            remaining
        } else {
            binomial((p / mass).clamp(0.0, 1.0), remaining, rng)?
        };
        for (c, s) in position.iter_mut().zip(v) {
            *c += count as i128 * *s as i128;
        }
        remaining -= count;
        mass -= p;
    }
    Ok(())
}

/// Largest trial count `rand_distr` accepts in one binomial draw.
const BINOMIAL_CHUNK: u64 = 1 << 62;

/// `Binomial(trials, q)` as a sum of chunks, since huge `τ` increments exceed
/// the sampler's `i64` range.
fn binomial<R: RngCore + ?Sized>(q: f64, trials: u64, rng: &mut R) -> Result<u64> {
    let mut left = trials;
    let mut count = 0;
    while left > 0 {
        let chunk = left.min(BINOMIAL_CHUNK);
        let b = Binomial::new(chunk, q)
            .map_err(|e| crate::Error::Numeric(alloc::format!("binomial draw: {e}")))?;
        count += b.sample(&mut RngAdapter(rng));
        left -= chunk;
    }
    Ok(count)
}

/// Lets a `?Sized` generator drive `rand_distr` samplers.
struct RngAdapter<'a, R: RngCore + ?Sized>(&'a mut R);

impl<R: RngCore + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subordinator::{stream_rng, tau_pmf};
    use crate::walk::analyze;

    fn setup(
        alpha: f64,
        n: usize,
        k: usize,
    ) -> (WalkSpec, WalkAnalysis, BernsteinSpec, SubordinatorTable) {
        let walk = WalkSpec::simple(1).unwrap();
        let analysis = analyze(&walk).unwrap();
        let psi = BernsteinSpec::stable(alpha).unwrap();
        let sub = tau_pmf(&psi.coefficients(k).unwrap(), n, k).unwrap();
        (walk, analysis, psi, sub)
    }

    #[test]
    fn saturated_step_counts_are_drawn() {
        let walk = WalkSpec::simple(1).unwrap();
        let steps: Vec<(Vec<i64>, f64)> = walk.support().map(|(v, p)| (v.to_vec(), p)).collect();
        let mut position = [0i128];
        walk_steps(&steps, u64::MAX, &mut position, &mut stream_rng(3, 0)).unwrap();
        // Odd step count keeps the odd sublattice; the spread is about 2^32.
        assert_eq!(position[0].rem_euclid(2), 1);
        assert!(position[0].unsigned_abs() < 1 << 40);
    }

    #[test]
    fn exact_leading_terms() {
        let (walk, _, _, sub) = setup(1.0, 1, 4);
        let v = kernel_exact(&walk, &sub, &[0]).unwrap();
        // c(2)/2 + c(4)·3/8.
        assert!((v.value - (1.0 / 16.0 + 15.0 / 1024.0)).abs() < 1e-16);
        assert!(v.error_bound <= sub.tail_mass());
        let far = kernel_exact(&walk, &sub, &[100]).unwrap();
        assert_eq!(far.value, 0.0);
    }

    #[test]
    fn identity_psi_reproduces_walk() {
        let walk = WalkSpec::simple(1).unwrap();
        let coeffs = BernsteinSpec::identity().coefficients(8).unwrap();
        let sub = tau_pmf(&coeffs, 1, 8).unwrap();
        assert_eq!(kernel_exact(&walk, &sub, &[1]).unwrap().value, 0.5);
        assert_eq!(kernel_exact(&walk, &sub, &[0]).unwrap().value, 0.0);
    }

    #[test]
    fn fourier_zero_steps_is_delta() {
        let (walk, analysis, psi, _) = setup(1.0, 1, 4);
        let v = kernel_fourier(&walk, &analysis, &psi, &[0], 0, 64).unwrap();
        assert!((v.value - 1.0).abs() < 1e-15);
        assert!(kernel_fourier(&walk, &analysis, &psi, &[40], 1, 64).is_err());
    }

    #[test]
    fn routes_agree_for_alpha_one() {
        let (walk, analysis, psi, sub) = setup(1.0, 5, 1 << 14);
        let points: Vec<Vec<i64>> = (-6..=6).map(|x| vec![x]).collect();
        let matrix = TransitionMatrix::new(&walk, &points, sub.k_max()).unwrap();
        let exact = kernel_exact_completed(&walk, &analysis, &matrix, &sub).unwrap();
        let grid = FourierGrid::new(&walk, &psi, 1 << 16).unwrap();
        let periodic = grid.periodic_kernel(5);
        for (i, x) in points.iter().enumerate() {
            let bound =
                exact.error_bounds[i] + aliasing_bound(&analysis, &psi, x, 5, 1 << 16).unwrap();
            let diff = (exact.values[i] - periodic.get(x)).abs();
            assert!(diff <= bound + 1e-13, "{x:?}: {diff:e} > {bound:e}");
            assert!(diff < 1e-8);
        }
        assert!((periodic.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn periodized_exact_matches_fourier_on_small_torus() {
        let (walk, _, psi, sub) = setup(1.0, 3, 4000);
        let v = kernel_periodized_exact(&walk, &psi, &sub, &[0], 64).unwrap();
        let grid = FourierGrid::new(&walk, &psi, 64).unwrap();
        let f = grid.periodic_kernel(3).get(&[0]);
        assert!(
            (v.value - f).abs() < 1e-12 + v.error_bound,
            "{} {}",
            v.value,
            f
        );
    }

    #[test]
    fn smoothed_kernel_simple_walk_identity() {
        let (walk, analysis, _, sub) = setup(1.0, 2, 2000);
        let s = smoothed_kernel_exact(&walk, &analysis, &sub, &[3]).unwrap();
        let m = |x: i64| kernel_exact(&walk, &sub, &[x]).unwrap().value;
        // p ∗ p_ψ at x is (p_ψ(x − 1) + p_ψ(x + 1)) / 2, and one parity vanishes.
        let want = m(3) + 0.5 * (m(2) + m(4));
        assert!((s.value - want).abs() < 1e-15);
        let left = smoothed_kernel_exact(&walk, &analysis, &sub, &[-3]).unwrap();
        assert!((left.value - s.value).abs() < 1e-15);
    }

    #[test]
    fn simulation_is_reproducible() {
        let walk = WalkSpec::simple(2).unwrap();
        let coeffs = BernsteinSpec::stable(1.0)
            .unwrap()
            .coefficients(1 << 12)
            .unwrap();
        let sampler = IncrementSampler::new(&coeffs).unwrap();
        let run = |seed| {
            let mut rng = stream_rng(seed, 3);
            simulate_endpoint(&walk, &sampler, 10, &[0.0, 0.5, 1.0], &mut rng).unwrap()
        };
        let a = run(9);
        assert_eq!(a, run(9));
        assert_eq!(a.points[0], vec![0, 0]);
        assert!(
            simulate_endpoint(&walk, &sampler, 10, &[1.0, 0.5], &mut stream_rng(0, 0)).is_err()
        );
    }
}
