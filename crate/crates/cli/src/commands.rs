//! Command implementations: each writes its CSV artifact and returns a summary.

use rayon::prelude::*;
use serde_json::{json, Value};
use subwalk_core::asymptotics::{
    const_c, const_d, const_polya, flt_report_from_samples, flt_samples, verify_doa, verify_onsite,
    verify_polya, verify_ratio, verify_tail, AsymptoticReport,
};
use subwalk_core::bernstein::{BernsteinSpec, CoeffTable, Family, TailLaw};
use subwalk_core::kernel::{
    aliasing_bound, default_grid_size, kernel_exact_completed, kernel_exact_window,
    simulate_endpoint, FourierGrid, KernelTable, TransitionMatrix,
};
use subwalk_core::subordinator::{stream_rng, tail_predictor, tau_pmf, tau_tail, IncrementSampler};
use subwalk_core::walk::{analyze, WalkAnalysis, WalkSpec};

use crate::config::{KernelRoute, RunConfig};
use crate::error::CliError;
use crate::output::{float, point, CsvArtifact};

/// Replicas handed to one worker at a time.
const REPLICA_CHUNK: u64 = 4096;
/// Table length for samplers of the stable family; draws beyond it use the exact tail.
const STABLE_SAMPLER_TABLE: usize = 1 << 20;

pub struct Outcome {
    pub summary: Value,
    pub pass: bool,
}

impl Outcome {
    fn ok(summary: Value) -> Self {
        Self {
            summary,
            pass: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem {
    Tail,
    Onsite,
    Ratio,
    Polya,
    Doa,
    Flt,
}

struct Context {
    walk: WalkSpec,
    analysis: WalkAnalysis,
    psi: BernsteinSpec,
}

fn context(config: &RunConfig) -> Result<Context, CliError> {
    let walk = config.walk_spec()?;
    let analysis = analyze(&walk)?;
    let psi = config.psi_spec()?;
    Ok(Context {
        walk,
        analysis,
        psi,
    })
}

pub fn coeffs(config: &RunConfig) -> Result<Outcome, CliError> {
    let psi = config.psi_spec()?;
    let table = match config.coeffs.k {
        Some(k) => psi.coefficients(k)?,
        None => psi.default_coefficients()?,
    };
    let mut csv = CsvArtifact::create(&config.out, "coeffs.csv", &["k", "c"])?;
    for k in 1..=table.k_max() {
        csv.row([k.to_string(), float(table.get(k))])?;
    }
    let (path, rows) = csv.finish()?;
    Ok(Outcome::ok(json!({
        "command": "coeffs",
        "artifact": path,
        "rows": rows,
        "k_max": table.k_max(),
        "tail_mass": table.tail_mass(),
    })))
}

pub fn tau(config: &RunConfig) -> Result<Outcome, CliError> {
    let psi = config.psi_spec()?;
    let p = &config.tau;
    if p.n == 0 {
        return Err(CliError::Usage("tau needs n >= 1".into()));
    }
    let t_top = p.t.iter().cloned().fold(0.0, f64::max);
    if !t_top.is_finite() || t_top > 1e9 {
        return Err(CliError::Usage(format!(
            "tail thresholds must be below 1e9, got {t_top}"
        )));
    }
    let k =
        p.k.unwrap_or_else(|| 4096usize.max(t_top.floor() as usize + 1))
            .max(p.n);
    let sub = tau_pmf(&psi.coefficients(k)?, p.n, k)?;
    let mut csv = CsvArtifact::create(&config.out, "tau.csv", &["k", "prob"])?;
    for (k, prob) in sub.pmf().iter().enumerate().skip(p.n) {
        csv.row([k.to_string(), float(*prob)])?;
    }
    let (path, rows) = csv.finish()?;
    let mut summary = json!({
        "command": "tau",
        "artifact": path,
        "rows": rows,
        "n": p.n,
        "k_max": sub.k_max(),
        "tail_mass": sub.tail_mass(),
    });
    if let Some(level) = sub.clamped_roundoff() {
        summary["clamped_roundoff"] = json!(level);
    }
    if !p.t.is_empty() {
        let mut csv = CsvArtifact::create(
            &config.out,
            "tau_tail.csv",
            &[
                "t",
                "empirical_tail",
                "predictor",
                "ratio",
                "lower",
                "upper",
            ],
        )?;
        for &t in &p.t {
            let bracket = tau_tail(&sub, t);
            let predictor = if t > 0.0 && psi.alpha() < 2.0 {
                tail_predictor(&psi, p.n as u64, t)?
            } else {
                f64::NAN
            };
            csv.row([
                float(t),
                float(bracket.value),
                float(predictor),
                float(bracket.value / predictor),
                float(bracket.lower),
                float(bracket.upper),
            ])?;
        }
        let (path, _) = csv.finish()?;
        summary["tail_artifact"] = json!(path);
    }
    Ok(Outcome::ok(summary))
}

pub fn kernel(config: &RunConfig) -> Result<Outcome, CliError> {
    let ctx = context(config)?;
    let p = &config.kernel;
    let d = ctx.walk.dim();
    let points = if p.x.is_empty() {
        vec![vec![0; d]]
    } else {
        p.x.clone()
    };
    if p.n.is_empty() {
        return Err(CliError::Usage("kernel needs at least one n".into()));
    }
    let mut tables: Vec<KernelTable> = Vec::new();
    if matches!(p.route, KernelRoute::Exact | KernelRoute::Both) {
        let n_top = *p.n.iter().max().unwrap_or(&0);
        let k = p.k.max(n_top);
        let coeffs = ctx.psi.coefficients(k)?;
        let matrix = TransitionMatrix::new(&ctx.walk, &points, k)?;
        let completes =
            matches!(coeffs.tail_law(), TailLaw::Stable { .. }) && ctx.walk.closed_form().is_some();
        let exact: Result<Vec<_>, CliError> =
            p.n.par_iter()
                .map(|&n| {
                    let sub = tau_pmf(&coeffs, n, k)?;
                    Ok(if completes && n > 0 {
                        kernel_exact_completed(&ctx.walk, &ctx.analysis, &matrix, &sub)?
                    } else {
                        kernel_exact_window(&matrix, &sub)
                    })
                })
                .collect();
        tables.extend(exact?);
    }
    let mut grid_used = None;
    if matches!(p.route, KernelRoute::Fourier | KernelRoute::Both) {
        let sup = points
            .iter()
            .flatten()
            .map(|c| c.unsigned_abs())
            .max()
            .unwrap_or(0);
        let n_top = *p.n.iter().max().unwrap_or(&1);
        let m = match p.grid {
            Some(m) => m,
            None => default_grid_size(&ctx.psi, sup, n_top.max(1))?,
        };
        if m % 2 != 0 || (m as u64) <= 2 * sup {
            return Err(CliError::Usage(format!(
                "grid {m} must be even and exceed 2|x| = {}",
                2 * sup
            )));
        }
        grid_used = Some(m);
        let grid = FourierGrid::new(&ctx.walk, &ctx.psi, m)?;
        let fourier: Result<Vec<_>, CliError> =
            p.n.par_iter()
                .map(|&n| {
                    let periodic = grid.periodic_kernel(n);
                    let mut values = Vec::with_capacity(points.len());
                    let mut bounds = Vec::with_capacity(points.len());
                    for x in &points {
                        values.push(periodic.get(x));
                        bounds.push(if n == 0 || ctx.psi.alpha() >= 2.0 {
                            0.0
                        } else {
                            aliasing_bound(&ctx.analysis, &ctx.psi, x, n, m)?
                        });
                    }
                    Ok(KernelTable {
                        n,
                        points: points.clone(),
                        values,
                        error_bounds: bounds,
                        route: subwalk_core::kernel::Route::Fourier { grid: m },
                    })
                })
                .collect();
        tables.extend(fourier?);
    }
    let mut csv = CsvArtifact::create(
        &config.out,
        "kernel.csv",
        &["x", "n", "p_psi", "error_bound", "route"],
    )?;
    for table in &tables {
        for (i, x) in table.points.iter().enumerate() {
            csv.row([
                point(x),
                table.n.to_string(),
                float(table.values[i]),
                float(table.error_bounds[i]),
                route_name(table.route).to_string(),
            ])?;
        }
    }
    let (path, rows) = csv.finish()?;
    let mut summary = json!({ "command": "kernel", "artifact": path, "rows": rows });
    if let Some(m) = grid_used {
        summary["grid"] = json!(m);
    }
    let mut pass = true;
    if p.route == KernelRoute::Both {
        let half = tables.len() / 2;
        let mut gap = 0.0_f64;
        for (e, f) in tables[..half].iter().zip(&tables[half..]) {
            for i in 0..e.points.len() {
                let diff = (e.values[i] - f.values[i]).abs();
                gap = gap.max(diff);
                pass &= diff <= e.error_bounds[i] + f.error_bounds[i] + 1e-12;
            }
        }
        summary["max_route_gap"] = json!(gap);
        summary["routes_agree"] = json!(pass);
    }
    Ok(Outcome { summary, pass })
}

fn route_name(route: subwalk_core::kernel::Route) -> &'static str {
    use subwalk_core::kernel::Route;
    match route {
        Route::Exact => "exact",
        Route::ExactCompleted => "exact_completed",
        Route::Fourier { .. } => "fourier",
        Route::PeriodizedExact { .. } => "periodized_exact",
    }
}

/// Stable laws sample their tail exactly, so a moderate table suffices.
fn sampler_table(psi: &BernsteinSpec) -> Result<CoeffTable, CliError> {
    Ok(match psi.family() {
        Family::Stable => psi.coefficients(STABLE_SAMPLER_TABLE)?,
        _ => psi.default_coefficients()?,
    })
}

pub fn simulate(config: &RunConfig) -> Result<Outcome, CliError> {
    let ctx = context(config)?;
    let p = &config.simulate;
    let coeffs = sampler_table(&ctx.psi)?;
    let sampler = IncrementSampler::new(&coeffs)?;
    let paths: Result<Vec<_>, CliError> = (0..p.replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(config.seed, i);
            Ok(simulate_endpoint(
                &ctx.walk, &sampler, p.n as u64, &p.t_grid, &mut rng,
            )?)
        })
        .collect();
    let paths = paths?;
    let mut csv = CsvArtifact::create(&config.out, "simulate.csv", &["replica", "t", "x"])?;
    let mut rejections = 0;
    let mut saturated = 0;
    for (i, path) in paths.iter().enumerate() {
        rejections += path.rejections;
        saturated += path.saturated as u64;
        for (t, x) in p.t_grid.iter().zip(&path.points) {
            csv.row([i.to_string(), float(*t), point(x)])?;
        }
    }
    let (path, rows) = csv.finish()?;
    Ok(Outcome::ok(json!({
        "command": "simulate",
        "artifact": path,
        "rows": rows,
        "rejections": rejections,
        "saturated_replicas": saturated,
    })))
}

pub fn constants(config: &RunConfig) -> Result<Outcome, CliError> {
    let ctx = context(config)?;
    let d = ctx.walk.dim();
    let alpha = ctx.psi.alpha();
    let q = ctx.analysis.covariance();
    let mut values = vec![
        ("period", ctx.analysis.period() as f64),
        ("det_q", ctx.analysis.det_covariance()),
    ];
    if alpha < 2.0 {
        values.push(("polya_c_alpha", const_polya(alpha)?));
        values.push(("far_field_c", const_c(d, alpha, q)?));
        values.push(("onsite_d", const_d(d, alpha, q)?));
    }
    let mut csv = CsvArtifact::create(&config.out, "constants.csv", &["name", "value"])?;
    let mut summary = json!({ "command": "constants", "d": d, "alpha": alpha });
    for (name, v) in &values {
        csv.row([name.to_string(), float(*v)])?;
        summary[*name] = json!(v);
    }
    let (path, _) = csv.finish()?;
    summary["artifact"] = json!(path);
    Ok(Outcome::ok(summary))
}

/// `x` padded with zeros to dimension `d`.
fn padded(first: i64, d: usize) -> Vec<i64> {
    let mut x = vec![0; d];
    x[0] = first;
    x
}

fn pairs(xs: &[Vec<i64>], ns: &[usize]) -> Vec<(Vec<i64>, usize)> {
    xs.iter()
        .flat_map(|x| ns.iter().map(move |n| (x.clone(), *n)))
        .collect()
}

fn or_default<T: Clone>(given: &[T], default: &[T]) -> Vec<T> {
    if given.is_empty() {
        default.to_vec()
    } else {
        given.to_vec()
    }
}

pub fn verify(config: &RunConfig, theorem: Theorem) -> Result<Outcome, CliError> {
    let ctx = context(config)?;
    let v = &config.verify;
    let tol = config.tolerances.resolve();
    let d = ctx.walk.dim();
    let report = match theorem {
        Theorem::Tail => {
            let ns = or_default(&v.n, &[4]);
            let ts = or_default(&v.t, &[1e4, 1e6]);
            let grid: Vec<(usize, f64)> = ns
                .iter()
                .flat_map(|n| ts.iter().map(move |t| (*n, *t)))
                .collect();
            verify_tail(&ctx.psi, &grid, tol.tail)?
        }
        Theorem::Onsite => {
            let ns = or_default(&v.n, &[100, 10_000]);
            verify_onsite(&ctx.walk, &ctx.analysis, &ctx.psi, &ns, tol.onsite)?
        }
        Theorem::Ratio => {
            let xs = or_default(&v.x, &[padded(5, d)]);
            let ns = or_default(&v.n, &[10_000]);
            verify_ratio(
                &ctx.walk,
                &ctx.analysis,
                &ctx.psi,
                &pairs(&xs, &ns),
                tol.ratio,
            )?
        }
        Theorem::Polya => {
            let xs = or_default(&v.x, &[padded(2000, d)]);
            let ns = or_default(&v.n, &[10]);
            verify_polya(
                &ctx.walk,
                &ctx.analysis,
                &ctx.psi,
                &pairs(&xs, &ns),
                v.grid,
                tol.polya,
            )?
        }
        Theorem::Doa => {
            let mut unit = vec![0.0; d];
            unit[0] = 1.0;
            let xi = or_default(&v.xi, &unit);
            let ns = or_default(&v.n, &[1_000_000]);
            verify_doa(&ctx.walk, &ctx.analysis, &ctx.psi, &xi, &ns, tol.doa)?
        }
        Theorem::Flt => flt(config, &ctx, tol.flt)?,
    };
    write_report(config, &report)
}

fn flt(config: &RunConfig, ctx: &Context, tolerance: f64) -> Result<AsymptoticReport, CliError> {
    let v = &config.verify;
    let n = v.n.first().copied().unwrap_or(2000);
    let t = v.t.first().copied().unwrap_or(1.0);
    let replicas = v.replicas.unwrap_or(100_000);
    if replicas == 0 {
        return Err(CliError::Usage("flt needs at least one replica".into()));
    }
    let coeffs = sampler_table(&ctx.psi)?;
    let sampler = IncrementSampler::new(&coeffs)?;
    let chunks: Vec<u64> = (0..replicas.div_ceil(REPLICA_CHUNK)).collect();
    let parts: Result<Vec<_>, CliError> = chunks
        .par_iter()
        .map(|c| {
            let range = c * REPLICA_CHUNK..((c + 1) * REPLICA_CHUNK).min(replicas);
            Ok(flt_samples(
                &ctx.walk,
                &sampler,
                &ctx.psi,
                n,
                t,
                v.axis,
                config.seed,
                range,
            )?)
        })
        .collect();
    let mut samples = Vec::with_capacity(replicas as usize);
    let mut rejections = 0;
    for (part, rej) in parts? {
        samples.extend(part);
        rejections += rej;
    }
    let mut report =
        flt_report_from_samples(&ctx.analysis, &ctx.psi, n, t, v.axis, samples, tolerance)?;
    if rejections > 0 {
        report.notes.push(format!("{rejections} increment redraws"));
    }
    Ok(report)
}

fn write_report(config: &RunConfig, report: &AsymptoticReport) -> Result<Outcome, CliError> {
    let mut header: Vec<&str> = report.parameters.clone();
    header.extend(["measured", "predicted", "ratio"]);
    let name = format!("verify_{}.csv", report.theorem);
    let mut csv = CsvArtifact::create(&config.out, &name, &header)?;
    for cell in &report.cells {
        let mut row: Vec<String> = cell.params.iter().map(|v| float(*v)).collect();
        row.extend([
            float(cell.measured),
            float(cell.predicted),
            float(cell.ratio),
        ]);
        csv.row(row)?;
    }
    let (path, _) = csv.finish()?;
    Ok(Outcome {
        summary: json!({
            "command": "verify",
            "theorem": report.theorem,
            "pass": report.pass,
            "worst_ratio": report.worst_ratio(),
            "tolerance": report.tolerance,
            "artifact": path,
            "notes": report.notes,
        }),
        pass: report.pass,
    })
}
