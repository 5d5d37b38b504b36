//! Finite-range, mean-zero random walks on `ℤ^d`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{bail, Result};
use crate::linalg::Matrix;
use crate::special::binomial_pmf;

/// Default step horizon for period and irreducibility detection.
pub const PERIOD_HORIZON: usize = 64;
/// Default cap on the number of entries of one convolution table.
pub const TABLE_ENTRY_CAP: usize = 1 << 28;

/// Walks whose transition probabilities have a closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedForm {
    /// Steps `±1` with probability `1/2`.
    Simple1d,
    /// Steps `±e_1, ±e_2` with probability `1/4`.
    Simple2d,
    /// `p(0) = 1/2`, `p(±1) = 1/4`.
    Lazy1d,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkSpec {
    dim: usize,
    steps: Vec<Vec<i64>>,
    probs: Vec<f64>,
    closed_form: Option<ClosedForm>,
}

impl WalkSpec {
    pub fn new(dim: usize, support: Vec<(Vec<i64>, f64)>) -> Result<Self> {
        if dim == 0 {
            bail!(Spec, "dimension must be positive");
        }
        if support.is_empty() {
            bail!(Spec, "support must be non-empty");
        }
        let mut steps = Vec::with_capacity(support.len());
        let mut probs = Vec::with_capacity(support.len());
        for (v, p) in support {
            if v.len() != dim {
                bail!(Spec, "step {v:?} does not have dimension {dim}");
            }
            if !(p > 0.0 && p.is_finite()) {
                bail!(Spec, "probability of step {v:?} must be positive, got {p}");
            }
            if steps.contains(&v) {
                bail!(Spec, "step {v:?} listed twice");
            }
            steps.push(v);
            probs.push(p);
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-14 {
            bail!(Spec, "step probabilities sum to {total}, not 1");
        }
        for axis in 0..dim {
            let mean: f64 = steps
                .iter()
                .zip(&probs)
                .map(|(v, p)| v[axis] as f64 * p)
                .sum();
            if mean.abs() > 1e-14 {
                bail!(
                    Spec,
                    "walk must have mean zero; axis {axis} has mean {mean}"
                );
            }
        }
        let mut spec = Self {
            dim,
            steps,
            probs,
            closed_form: None,
        };
        spec.closed_form = spec.detect_closed_form();
        Ok(spec)
    }

    /// Nearest-neighbour walk on `ℤ^d`.
    pub fn simple(dim: usize) -> Result<Self> {
        if dim == 0 {
            bail!(Spec, "dimension must be positive");
        }
        let p = 1.0 / (2 * dim) as f64;
        let mut support = Vec::with_capacity(2 * dim);
        for axis in 0..dim {
            for sign in [1, -1] {
                let mut v = vec![0; dim];
                v[axis] = sign;
                support.push((v, p));
            }
        }
        Self::new(dim, support)
    }

    pub fn lazy_1d() -> Self {
        Self::new(1, vec![(vec![0], 0.5), (vec![1], 0.25), (vec![-1], 0.25)])
            .expect("lazy walk is valid")
    }

    /// Built-in walks: `simple-1d`, `simple-2d`, `simple-3d`, `lazy-1d`.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "simple-1d" => Self::simple(1),
            "simple-2d" => Self::simple(2),
            "simple-3d" => Self::simple(3),
            "lazy-1d" => Ok(Self::lazy_1d()),
            _ => bail!(Spec, "unknown walk {name:?}"),
        }
    }

    fn detect_closed_form(&self) -> Option<ClosedForm> {
        let same = |other: &WalkSpec| {
            other.dim == self.dim
                && other.steps.len() == self.steps.len()
                && other
                    .steps
                    .iter()
                    .zip(&other.probs)
                    .all(|(v, p)| self.prob_of(v).is_some_and(|q| (q - p).abs() <= 1e-15))
        };
        if self.dim == 1 && same(&raw_simple(1)) {
            Some(ClosedForm::Simple1d)
        } else if self.dim == 2 && same(&raw_simple(2)) {
            Some(ClosedForm::Simple2d)
        } else if self.dim == 1
            && same(&WalkSpec {
                dim: 1,
                steps: vec![vec![0], vec![1], vec![-1]],
                probs: vec![0.5, 0.25, 0.25],
                closed_form: None,
            })
        {
            Some(ClosedForm::Lazy1d)
        } else {
            None
        }
    }

    fn prob_of(&self, v: &[i64]) -> Option<f64> {
        self.steps
            .iter()
            .position(|s| s == v)
            .map(|i| self.probs[i])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn closed_form(&self) -> Option<ClosedForm> {
        self.closed_form
    }

    pub fn support(&self) -> impl Iterator<Item = (&[i64], f64)> + '_ {
        self.steps
            .iter()
            .map(|v| v.as_slice())
            .zip(self.probs.iter().copied())
    }

    /// Largest sup-norm of a step.
    pub fn max_step(&self) -> i64 {
        self.steps
            .iter()
            .flat_map(|v| v.iter().map(|c| c.abs()))
            .max()
            .unwrap_or(0)
    }

    /// `p(v) = p(−v)` for every step.
    pub fn is_symmetric(&self) -> bool {
        self.steps.iter().zip(&self.probs).all(|(v, p)| {
            let neg: Vec<i64> = v.iter().map(|c| -c).collect();
            self.prob_of(&neg) == Some(*p)
        })
    }

    /// `Φ(θ) = Σ p(v) e^{i⟨v, θ⟩}`.
    pub fn char_fn(&self, theta: &[f64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (v, p) in self.support() {
            let (s, c) = libm::sincos(dot(v, theta));
            acc += Complex64::new(c, s) * p;
        }
        acc
    }

    /// `1 − Φ(θ)` without cancellation near `θ = 0`.
    pub fn one_minus_char_fn(&self, theta: &[f64]) -> Complex64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (v, p) in self.support() {
            let a = dot(v, theta);
            let h = libm::sin(0.5 * a);
            re += 2.0 * p * h * h;
            im -= p * libm::sin(a);
        }
        Complex64::new(re, im)
    }

    /// Closed-form `p(x, k)` when available; `k` may be real for the 1-d forms.
    pub fn closed_transition(&self, x: &[i64], k: f64) -> Option<f64> {
        let form = self.closed_form?;
        Some(match form {
            ClosedForm::Simple1d => simple_1d(x[0], k),
            ClosedForm::Simple2d => simple_1d(x[0] + x[1], k) * simple_1d(x[0] - x[1], k),
            ClosedForm::Lazy1d => binomial_pmf(2.0 * k, k + x[0].unsigned_abs() as f64, 0.5),
        })
    }

    /// Closed form continued smoothly in real `k`, ignoring the residue class.
    ///
    /// Agrees with [`Self::closed_transition`] for integer `k` in the class of `x`.
    pub fn closed_transition_continuous(&self, x: &[i64], k: f64) -> Option<f64> {
        let form = self.closed_form?;
        let line = |y: i64| binomial_pmf(k, 0.5 * (k + y.unsigned_abs() as f64), 0.5);
        Some(match form {
            ClosedForm::Simple1d => line(x[0]),
            ClosedForm::Simple2d => line(x[0] + x[1]) * line(x[0] - x[1]),
            ClosedForm::Lazy1d => binomial_pmf(2.0 * k, k + x[0].unsigned_abs() as f64, 0.5),
        })
    }

    /// Exact `p(·, n)` by dynamic programming.
    pub fn convolve_n(&self, n: usize) -> Result<ConvolutionTable> {
        self.convolve_n_capped(n, TABLE_ENTRY_CAP)
    }

    pub fn convolve_n_capped(&self, n: usize, entry_cap: usize) -> Result<ConvolutionTable> {
        let mut table = ConvolutionTable::origin(self.dim);
        for _ in 0..n {
            table = table.step(self, entry_cap)?;
        }
        Ok(table)
    }

    /// Steps grouped as `(v, −v)` pairs so symmetric inputs give symmetric sums.
    fn paired_steps(&self) -> Vec<(usize, Option<usize>)> {
        let mut used = vec![false; self.steps.len()];
        let mut out = Vec::new();
        for i in 0..self.steps.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            let neg: Vec<i64> = self.steps[i].iter().map(|c| -c).collect();
            let partner = if neg == self.steps[i] {
                None
            } else {
                self.steps
                    .iter()
                    .position(|s| *s == neg)
                    .filter(|j| !used[*j])
            };
            if let Some(j) = partner {
                used[j] = true;
            }
            out.push((i, partner));
        }
        out
    }
}

fn raw_simple(dim: usize) -> WalkSpec {
    let p = 1.0 / (2 * dim) as f64;
    let mut steps = Vec::new();
    let mut probs = Vec::new();
    for axis in 0..dim {
        for sign in [1, -1] {
            let mut v = vec![0; dim];
            v[axis] = sign;
            steps.push(v);
            probs.push(p);
        }
    }
    WalkSpec {
        dim,
        steps,
        probs,
        closed_form: None,
    }
}

// Evaluated at |x| so symmetric inputs give bitwise symmetric values.
fn simple_1d(x: i64, k: f64) -> f64 {
    let xf = x.unsigned_abs() as f64;
    if xf.abs() > k {
        return 0.0;
    }
    if k == k.floor() && ((k as i64 - x).rem_euclid(2)) != 0 {
        return 0.0;
    }
    binomial_pmf(k, 0.5 * (k + xf), 0.5)
}

fn dot(v: &[i64], theta: &[f64]) -> f64 {
    v.iter().zip(theta).map(|(a, b)| *a as f64 * b).sum()
}

/// `p(·, n)` on the box `‖x‖∞ ≤ radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionTable {
    n: usize,
    dim: usize,
    radius: i64,
    values: Vec<f64>,
}

impl ConvolutionTable {
    /// `p(·, 0) = δ_0`.
    pub fn origin(dim: usize) -> Self {
        Self {
            n: 0,
            dim,
            radius: 0,
            values: vec![1.0],
        }
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    fn side(&self) -> usize {
        (2 * self.radius + 1) as usize
    }

    fn index(&self, x: &[i64]) -> Option<usize> {
        let side = self.side();
        let mut idx = 0usize;
        for &c in x.iter().rev() {
            if c.abs() > self.radius {
                return None;
            }
            idx = idx * side + (c + self.radius) as usize;
        }
        Some(idx)
    }

    fn point(&self, mut idx: usize) -> Vec<i64> {
        let side = self.side();
        (0..self.dim)
            .map(|_| {
                let c = (idx % side) as i64 - self.radius;
                idx /= side;
                c
            })
            .collect()
    }

    /// `p(x, n)`; zero outside the box.
    pub fn get(&self, x: &[i64]) -> f64 {
        self.index(x).map_or(0.0, |i| self.values[i])
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| (self.point(i), *v))
    }

    /// `p(·, n + 1)` from `p(·, n)`.
    pub fn step(&self, walk: &WalkSpec, entry_cap: usize) -> Result<Self> {
        let radius = self.radius + walk.max_step();
        let side = (2 * radius + 1) as usize;
        let entries = side
            .checked_pow(self.dim as u32)
            .filter(|e| *e <= entry_cap)
            .ok_or_else(|| {
                crate::Error::Resource(alloc::format!(
                    "convolution table of radius {radius} in dimension {} exceeds {entry_cap} entries",
                    self.dim
                ))
            })?;
        let mut out = Self {
            n: self.n + 1,
            dim: self.dim,
            radius,
            values: vec![0.0; entries],
        };
        let pairs = walk.paired_steps();
        let mut y_minus = vec![0i64; self.dim];
        for idx in 0..entries {
            let y = out.point(idx);
            let mut acc = 0.0;
            for &(i, partner) in &pairs {
                let term = |s: usize, buf: &mut Vec<i64>| {
                    for (b, (yc, vc)) in buf.iter_mut().zip(y.iter().zip(&walk.steps[s])) {
                        *b = yc - vc;
                    }
                    walk.probs[s] * self.get(buf)
                };
                let a = term(i, &mut y_minus);
                acc += match partner {
                    Some(j) => a + term(j, &mut y_minus),
                    None => a,
                };
            }
            out.values[idx] = acc;
        }
        Ok(out)
    }
}

/// Period, residue classes and covariance of a walk.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkAnalysis {
    dim: usize,
    period: usize,
    /// Residue class of each unit vector.
    unit_classes: Vec<usize>,
    q: Matrix,
    q_inv: Matrix,
    det_q: f64,
}

impl WalkAnalysis {
    pub fn period(&self) -> usize {
        self.period
    }

    /// Residue class of `x`: `p(x, n) > 0` only if `n ≡ class_of(x)` mod `r`.
    pub fn class_of(&self, x: &[i64]) -> usize {
        let r = self.period as i64;
        let s: i64 = x
            .iter()
            .zip(&self.unit_classes)
            .map(|(c, a)| c.rem_euclid(r) * *a as i64)
            .sum();
        s.rem_euclid(r) as usize
    }

    pub fn covariance(&self) -> &Matrix {
        &self.q
    }

    pub fn covariance_inverse(&self) -> &Matrix {
        &self.q_inv
    }

    pub fn det_covariance(&self) -> f64 {
        self.det_q
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `‖x‖² = ⟨Q⁻¹x, x⟩`.
    pub fn norm_sq(&self, x: &[f64]) -> f64 {
        self.q_inv.quadratic_form(x)
    }

    /// Main term of the local limit theorem.
    pub fn lclt_estimate(&self, x: &[i64], n: u64) -> Result<f64> {
        if n == 0 {
            bail!(Argument, "step count must be positive");
        }
        let xf: Vec<f64> = x.iter().map(|c| *c as f64).collect();
        let nf = n as f64;
        let norm_sq = self.norm_sq(&xf);
        if norm_sq.sqrt() > nf.powf(2.0 / 3.0) {
            bail!(
                Regime,
                "|x| = {} exceeds n^(2/3) = {}",
                norm_sq.sqrt(),
                nf.powf(2.0 / 3.0)
            );
        }
        if (n % self.period as u64) as usize != self.class_of(x) {
            return Ok(0.0);
        }
        let d = self.dim as f64;
        Ok(
            self.period as f64 * (2.0 * PI * nf).powf(-0.5 * d) / self.det_q.sqrt()
                * (-norm_sq / (2.0 * nf)).exp(),
        )
    }
}

struct Reach {
    radius: i64,
    side: usize,
}

impl Reach {
    fn index(&self, x: &[i64]) -> usize {
        x.iter().rev().fold(0usize, |acc, c| {
            acc * self.side + (c + self.radius) as usize
        })
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Derives period, classes and covariance; checks irreducibility on a box.
pub fn analyze(spec: &WalkSpec) -> Result<WalkAnalysis> {
    analyze_with_horizon(spec, PERIOD_HORIZON)
}

pub fn analyze_with_horizon(spec: &WalkSpec, horizon: usize) -> Result<WalkAnalysis> {
    let dim = spec.dim;
    let step_radius = spec.max_step();
    let check_radius = 3 * step_radius;
    let radius = (horizon as i64 * step_radius).max(check_radius);
    let side = (2 * radius + 1) as usize;
    let entries = side
        .checked_pow(dim as u32)
        .filter(|e| *e <= TABLE_ENTRY_CAP)
        .ok_or_else(|| crate::Error::Resource("period detection box too large".into()))?;
    let reach = Reach { radius, side };
    // first[i]: earliest step count reaching the point, u32::MAX if none.
    let mut first = vec![u32::MAX; entries];
    let mut current: Vec<Vec<i64>> = vec![vec![0; dim]];
    let mut seen_step = vec![u32::MAX; entries];
    let mut period = 0usize;
    let mut visits: Vec<(usize, usize)> = Vec::new();
    first[reach.index(&current[0])] = 0;
    for n in 1..=horizon {
        let mut next = Vec::new();
        for x in &current {
            for v in &spec.steps {
                let y: Vec<i64> = x.iter().zip(v).map(|(a, b)| a + b).collect();
                if y.iter().any(|c| c.abs() > radius) {
                    continue;
                }
                let i = reach.index(&y);
                if seen_step[i] != n as u32 {
                    seen_step[i] = n as u32;
                    if first[i] == u32::MAX {
                        first[i] = n as u32;
                    }
                    visits.push((i, n));
                    next.push(y);
                }
            }
        }
        if next.iter().any(|y| y.iter().all(|c| *c == 0)) {
            period = gcd(period, n);
        }
        current = next;
    }
    if period == 0 {
        bail!(
            Numeric,
            "period undetermined: no return to the origin within {horizon} steps"
        );
    }
    let mut unit_classes = Vec::with_capacity(dim);
    for axis in 0..dim {
        let mut e = vec![0; dim];
        e[axis] = 1;
        let f = first[reach.index(&e)];
        if f == u32::MAX {
            bail!(
                Spec,
                "reducible walk: unit vector {axis} is not reached within {horizon} steps"
            );
        }
        unit_classes.push(f as usize % period);
    }
    // Every point of the check box must be reached.
    let mut idx = vec![-check_radius; dim];
    loop {
        if first[reach.index(&idx)] == u32::MAX {
            bail!(
                Spec,
                "reducible walk: {idx:?} is not reached within {horizon} steps"
            );
        }
        let mut axis = 0;
        loop {
            if axis == dim {
                break;
            }
            idx[axis] += 1;
            if idx[axis] <= check_radius {
                break;
            }
            idx[axis] = -check_radius;
            axis += 1;
        }
        if axis == dim {
            break;
        }
    }
    let mut q = Matrix::zeros(dim);
    for (v, p) in spec.support() {
        for i in 0..dim {
            for j in 0..dim {
                q[(i, j)] += p * v[i] as f64 * v[j] as f64;
            }
        }
    }
    let q_inv = q
        .inverse_spd()
        .map_err(|_| crate::Error::Spec("covariance is singular".into()))?;
    let det_q = q.determinant_spd()?;
    let analysis = WalkAnalysis {
        dim,
        period,
        unit_classes,
        q,
        q_inv,
        det_q,
    };
    let mut point = vec![0i64; dim];
    for &(i, n) in &visits {
        let mut rest = i;
        for c in point.iter_mut() {
            *c = (rest % side) as i64 - radius;
            rest /= side;
        }
        if analysis.class_of(&point) != n % period {
            bail!(Numeric, "inconsistent residue class at {point:?}");
        }
    }
    Ok(analysis)
}
