//! Symmetric stable limit law with characteristic function
//! `exp(−t (⟨Qξ, ξ⟩ / 2)^{α/2})`.
//!
//! After whitening `ξ = Q^{−1/2} η` the law is radial; the one-dimensional
//! integrals run along a rotated ray where the integrand decays without
//! oscillating, so far tails keep full relative precision.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{bail, Result};
use crate::linalg::Matrix;
use crate::quad::GaussLegendre;
use crate::special::gamma;

/// Nodes per panel of the radial integrals.
const PANEL_NODES: usize = 24;
/// Panels are abandoned once the integrand envelope is below `e^{−DECAY_CUTOFF}`.
const DECAY_CUTOFF: f64 = 46.0;
/// Phase change allowed within one sub-panel, in radians.
const PHASE_PER_PANEL: f64 = 1.5;
/// Sub-panel budget before the quadrature is declared non-convergent.
const PANEL_CAP: usize = 1 << 22;

#[derive(Debug, Clone)]
pub struct StableLimit {
    dim: usize,
    alpha: f64,
    covariance: Matrix,
    whitening: Matrix,
    det: f64,
    rule: GaussLegendre,
}

impl StableLimit {
    /// `alpha = 2` is admitted as the Gaussian endpoint.
    pub fn new(dim: usize, alpha: f64, covariance: Matrix) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            bail!(
                Argument,
                "stable densities are supported for d in 1..=3, got {dim}"
            );
        }
        if !(alpha > 0.0 && alpha <= 2.0) {
            bail!(Domain, "alpha must lie in (0,2], got {alpha}");
        }
        if covariance.dim() != dim {
            bail!(
                Argument,
                "covariance has dimension {} but d = {dim}",
                covariance.dim()
            );
        }
        let not_spd =
            |_| crate::Error::Argument("covariance must be symmetric positive definite".into());
        let det = covariance.determinant_spd().map_err(not_spd)?;
        let whitening = covariance.inverse_sqrt_spd().map_err(not_spd)?;
        Ok(Self {
            dim,
            alpha,
            covariance,
            whitening,
            det,
            rule: GaussLegendre::new(PANEL_NODES),
        })
    }

    /// One-dimensional law with characteristic function `exp(−t |ξ|^α)`.
    pub fn unit_scale(alpha: f64) -> Result<Self> {
        Self::new(1, alpha, Matrix::diagonal(&[2.0]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    /// Law of coordinate `axis`.
    pub fn marginal(&self, axis: usize) -> Result<Self> {
        if axis >= self.dim {
            bail!(Argument, "axis {axis} out of range for d = {}", self.dim);
        }
        Self::new(
            1,
            self.alpha,
            Matrix::diagonal(&[self.covariance[(axis, axis)]]),
        )
    }

    fn radial_rate(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            bail!(Domain, "time must be positive, got {t}");
        }
        Ok(t * 2f64.powf(-0.5 * self.alpha))
    }

    fn whitened_norm(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            bail!(
                Argument,
                "point has dimension {} but d = {}",
                x.len(),
                self.dim
            );
        }
        let y = self.whitening.mul_vec(x);
        Ok(y.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// Density at `x` and time `t`.
    pub fn density(&self, x: &[f64], t: f64) -> Result<f64> {
        let c = self.radial_rate(t)?;
        let rho = self.whitened_norm(x)?;
        let iso = if rho == 0.0 {
            let d = self.dim as f64;
            let sphere = 2.0 * PI.powf(0.5 * d) / gamma(0.5 * d);
            (2.0 * PI).powf(-d) * sphere * gamma(d / self.alpha)
                / (self.alpha * c.powf(d / self.alpha))
        } else {
            match self.dim {
                1 => self.ray_integral(rho, c, false)?,
                2 => self.radial_integral(rho, c, |u| libm::j0(u * rho) * u)? / (2.0 * PI),
                _ => self.radial_integral(rho, c, |u| (u * rho).sin() * u)? / (2.0 * PI * PI * rho),
            }
        };
        Ok((iso / self.det.sqrt()).max(0.0))
    }

    /// Distribution function at `x` and time `t`; one-dimensional laws only.
    pub fn cdf(&self, x: f64, t: f64) -> Result<f64> {
        if self.dim != 1 {
            bail!(
                Argument,
                "cdf needs a one-dimensional law; take a marginal first"
            );
        }
        let c = self.radial_rate(t)?;
        let rho = self.whitened_norm(&[x])?;
        if rho == 0.0 {
            return Ok(0.5);
        }
        let upper = self.ray_integral(rho, c, true)?.clamp(0.0, 0.5);
        Ok(if x > 0.0 { 1.0 - upper } else { upper })
    }

    /// `(1/π) Re ∫ e^{−c u^α} e^{iuρ} du` for the density, or `∫_ρ^∞` of it for
    /// the upper tail, along the ray `u = v e^{iθ}`.
    fn ray_integral(&self, rho: f64, c: f64, tail: bool) -> Result<f64> {
        let alpha = self.alpha;
        let natural = c.powf(-1.0 / alpha);
        // Rotation pays off only once the oscillation outpaces the damping.
        let angle = if rho * natural < 1.0 {
            0.0
        } else if alpha <= 1.0 {
            0.5 * PI
        } else {
            0.375 * PI / alpha
        };
        let rot = Complex64::from_polar(1.0, angle);
        let rot_a = Complex64::from_polar(1.0, alpha * angle);
        let damp_stable = c * rot_a.re;
        let damp_ray = rho * rot.im;
        let phase_stable = c * rot_a.im;
        let phase_ray = rho * rot.re;
        let mut scale = f64::INFINITY;
        if damp_stable > 1e-12 * c {
            scale = scale.min(damp_stable.powf(-1.0 / alpha));
        }
        if damp_ray > 0.0 {
            scale = scale.min(1.0 / damp_ray);
        }
        let integrand = |v: f64| {
            let va = v.powf(alpha);
            let g = (-(c * va) * rot_a + Complex64::new(0.0, v * rho) * rot).exp();
            if tail {
                (Complex64::new(0.0, 1.0) * g / v).re
            } else {
                (rot * g).re
            }
        };
        let mut lo = scale * 2f64.powi(-(((64.0 / alpha).ceil() as i32).min(1000)));
        let mut total = 0.0;
        let mut used = 0usize;
        loop {
            let envelope = damp_stable * lo.powf(alpha) + damp_ray * lo;
            if envelope > DECAY_CUTOFF {
                break;
            }
            let hi = 2.0 * lo;
            let phase = phase_ray * (hi - lo) + phase_stable * (hi.powf(alpha) - lo.powf(alpha));
            let pieces = ((phase / PHASE_PER_PANEL).ceil() as usize).max(1);
            used += pieces;
            if used > PANEL_CAP {
                bail!(
                    Numeric,
                    "stable quadrature did not converge: rho = {rho:e}, rate = {c:e}, alpha = {alpha}"
                );
            }
            let width = (hi - lo) / pieces as f64;
            for i in 0..pieces {
                let a = lo + i as f64 * width;
                total += self.rule.integrate(a, a + width, integrand);
            }
            lo = hi;
        }
        let mut value = total / PI;
        if tail {
            // The arc around the pole of `1/u` between the axis and the ray.
            value += 0.5 - angle / PI;
        }
        Ok(value)
    }

    /// `∫_0^∞ e^{−c u^α} kernel(u) du` on the real axis with panels split by
    /// the oscillation of `uρ`.
    fn radial_integral(&self, rho: f64, c: f64, kernel: impl Fn(f64) -> f64) -> Result<f64> {
        let alpha = self.alpha;
        let top = (DECAY_CUTOFF / c).powf(1.0 / alpha);
        let f = |u: f64| (-c * u.powf(alpha)).exp() * kernel(u);
        let mut total = 0.0;
        let mut used = 0usize;
        let mut hi = top;
        for _ in 0..(64.0 / alpha).ceil() as usize {
            let lo = 0.5 * hi;
            let pieces = (((hi - lo) * rho / PHASE_PER_PANEL).ceil() as usize).max(1);
            used += pieces;
            if used > PANEL_CAP {
                bail!(
                    Numeric,
                    "stable quadrature did not converge: rho = {rho:e}, rate = {c:e}, alpha = {alpha}"
                );
            }
            let width = (hi - lo) / pieces as f64;
            for i in 0..pieces {
                let a = lo + i as f64 * width;
                total += self.rule.integrate(a, a + width, f);
            }
            hi = lo;
        }
        Ok(total)
    }
}

/// Kolmogorov–Smirnov distance between sorted samples and a continuous law.
///
/// Tied samples are compared at the mid-rank `(i + j) / 2n` of their run, so
/// lattice atoms are neither favoured nor penalised.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let n = sorted.len();
    if n == 0 {
        bail!(Argument, "empty sample");
    }
    if sorted.windows(2).any(|w| w[1] < w[0]) {
        bail!(Argument, "sample must be sorted");
    }
    let nf = n as f64;
    let mut worst = 0.0_f64;
    let mut i = 0;
    let mut runs = Vec::new();
    while i < n {
        let mut j = i + 1;
        while j < n && sorted[j] == sorted[i] {
            j += 1;
        }
        runs.push((i, j));
        i = j;
    }
    for (i, j) in runs {
        let f = cdf(sorted[i])?;
        let mid = 0.5 * (i + j) as f64 / nf;
        if j - i == 1 {
            worst = worst
                .max((f - i as f64 / nf).abs())
                .max((j as f64 / nf - f).abs());
        } else {
            worst = worst.max((f - mid).abs());
        }
    }
    Ok(worst)
}
