//! Closed-form constants, the stable limit law and the verification harness.

use core::f64::consts::PI;

use num_traits::Float;

use crate::error::{bail, Result};
use crate::linalg::Matrix;
use crate::special::gamma;

mod stable;
mod verify;

pub use stable::{ks_distance, StableLimit};
pub use verify::{
    flt_report_from_samples, flt_samples, verify_doa, verify_flt_marginal, verify_onsite,
    verify_polya, verify_ratio, verify_tail, AsymptoticReport, ReportCell, Tolerances,
};

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        bail!(Domain, "alpha must lie in (0,2), got {alpha}");
    }
    Ok(())
}

fn det_spd(q: &Matrix) -> Result<f64> {
    q.determinant_spd().map_err(|_| {
        crate::Error::Argument("covariance must be symmetric positive definite".into())
    })
}

/// Tail constant of the one-dimensional stable density with unit time:
/// `p(x, t) ~ c_α t |x|^{−1−α}`.
pub fn const_polya(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(alpha
        * 2f64.powf(alpha - 1.0)
        * PI.powf(-1.5)
        * gamma(0.5 * (alpha + 1.0))
        * gamma(0.5 * alpha)
        * (0.5 * PI * alpha).sin())
}

/// Constant of the smoothed far-field asymptotic
/// `α 2^{α/2} π^{−d/2−1} (det Q)^{−1/2} Γ(α/2) Γ((d+α)/2) sin(πα/2)`.
pub fn const_c(d: usize, alpha: f64, q: &Matrix) -> Result<f64> {
    check_alpha(alpha)?;
    if q.dim() != d {
        bail!(Argument, "covariance has dimension {} but d = {d}", q.dim());
    }
    let det = det_spd(q)?;
    let df = d as f64;
    Ok(alpha
        * 2f64.powf(0.5 * alpha)
        * PI.powf(-0.5 * df - 1.0)
        * det.powf(-0.5)
        * gamma(0.5 * alpha)
        * gamma(0.5 * (df + alpha))
        * (0.5 * PI * alpha).sin())
}

/// Constant of the on-site decay
/// `(2π)^{d/2} Γ(1 + d/α) / Γ(1 + d/2) (det Q)^{−1/2}`.
pub fn const_d(d: usize, alpha: f64, q: &Matrix) -> Result<f64> {
    check_alpha(alpha)?;
    if q.dim() != d {
        bail!(Argument, "covariance has dimension {} but d = {d}", q.dim());
    }
    let det = det_spd(q)?;
    let df = d as f64;
    Ok(
        (2.0 * PI).powf(0.5 * df) * gamma(1.0 + df / alpha) / gamma(1.0 + 0.5 * df)
            * det.powf(-0.5),
    )
}
