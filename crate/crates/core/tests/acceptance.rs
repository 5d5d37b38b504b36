//! Acceptance criteria, one PASS/FAIL line each; exits non-zero on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subwalk_core::asymptotics::{
    flt_report_from_samples, flt_samples, verify_doa, verify_onsite, verify_polya, verify_ratio,
    verify_tail,
};
use subwalk_core::bernstein::{BernsteinSpec, LevyGrid};
use subwalk_core::fft::convolve;
use subwalk_core::kernel::{
    aliasing_bound, kernel_exact_completed, kernel_exact_window, kernel_periodized_exact,
    FourierGrid, TransitionMatrix,
};
use subwalk_core::special::chi_square_sf;
use subwalk_core::subordinator::{stream_rng, tau_pmf, IncrementSampler};
use subwalk_core::walk::{analyze, WalkSpec};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, u64, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("1 coefficient golden", 5, coefficient_golden),
        ("2 two-route kernel equivalence", 60, two_route),
        ("3 on-site decay", 60, onsite_decay),
        ("4 subordinator tail", 120, subordinator_tail),
        ("5 smoothed far-field asymptotic", 120, smoothed_far_field),
        ("6 strong ratio limit", 60, strong_ratio),
        ("7 domain of attraction", 1, domain_of_attraction),
        ("8 marginal functional limit", 120, flt_marginal),
        ("9 local limit sanity", 10, lclt_sanity),
        ("10 periodization identity", 5, periodization),
        ("11 property suites", 120, property_suites),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (pass && in_time, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {detail} [{:.2}s of {limit}s]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn coefficient_golden() -> Outcome {
    let c = BernsteinSpec::stable(1.0)
        .map_err(err)?
        .coefficients(4)
        .map_err(err)?;
    let want = [0.5, 0.125, 0.0625, 5.0 / 128.0];
    let golden = (1..=4)
        .map(|k| (c.get(k) - want[k - 1]).abs())
        .fold(0.0, f64::max);
    let mut worst_mass = 0.0_f64;
    for alpha in [0.5, 1.0, 1.5] {
        let t = BernsteinSpec::stable(alpha)
            .map_err(err)?
            .coefficients(1_000_000)
            .map_err(err)?;
        let total: f64 = t.as_slice().iter().sum::<f64>() + t.tail_mass();
        worst_mass = worst_mass.max((total - 1.0).abs());
    }
    Ok((
        golden <= 1e-12 && worst_mass <= 1e-12,
        format!("max golden error {golden:.2e}, max |sum + tail - 1| {worst_mass:.2e}"),
    ))
}

fn two_route() -> Outcome {
    let walk = WalkSpec::simple(1).map_err(err)?;
    let analysis = analyze(&walk).map_err(err)?;
    let points: Vec<Vec<i64>> = (-30..=30).map(|x| vec![x]).collect();
    let k_max = 1 << 16;
    let matrix = TransitionMatrix::new(&walk, &points, k_max).map_err(err)?;
    let mut worst_diff = 0.0_f64;
    let mut worst_bound = 0.0_f64;
    let mut violations = 0;
    for (alpha, grid) in [(0.5, 1usize << 22), (1.0, 1 << 18), (1.5, 1 << 14)] {
        let psi = BernsteinSpec::stable(alpha).map_err(err)?;
        let coeffs = psi.coefficients(k_max).map_err(err)?;
        let fourier = FourierGrid::new(&walk, &psi, grid).map_err(err)?;
        for n in 1..=20 {
            let sub = tau_pmf(&coeffs, n, k_max).map_err(err)?;
            let exact = kernel_exact_completed(&walk, &analysis, &matrix, &sub).map_err(err)?;
            let periodic = fourier.periodic_kernel(n);
            for (i, x) in points.iter().enumerate() {
                let alias = aliasing_bound(&analysis, &psi, x, n, grid).map_err(err)?;
                let bound = exact.error_bounds[i] + alias;
                let diff = (exact.values[i] - periodic.get(x)).abs();
                if diff > bound || diff > 1e-8 || bound > 1e-8 {
                    violations += 1;
                }
                worst_diff = worst_diff.max(diff);
                worst_bound = worst_bound.max(bound);
            }
        }
    }
    Ok((
        violations == 0,
        format!("max |exact - fourier| {worst_diff:.2e}, max bound {worst_bound:.2e}, {violations} violations"),
    ))
}

fn onsite_decay() -> Outcome {
    let walk = WalkSpec::simple(1).map_err(err)?;
    let analysis = analyze(&walk).map_err(err)?;
    let psi = BernsteinSpec::stable(1.0).map_err(err)?;
    let r = verify_onsite(&walk, &analysis, &psi, &[100, 10_000], 0.05).map_err(err)?;
    let (small, large) = (r.cells[0].ratio, r.cells[1].ratio);
    let pass = (0.95..=1.05).contains(&large) && (large - 1.0).abs() < (small - 1.0).abs();
    Ok((
        pass,
        format!("ratio {small:.6} at n=1e2, {large:.6} at n=1e4"),
    ))
}

fn subordinator_tail() -> Outcome {
    let psi = BernsteinSpec::stable(1.0).map_err(err)?;
    let r = verify_tail(&psi, &[(4, 1e4), (4, 1e6)], 0.15).map_err(err)?;
    let (near, far) = (&r.cells[0], &r.cells[1]);
    let lo = far.params[2] / far.predicted;
    let hi = far.params[3] / far.predicted;
    let pass = r.pass
        && (0.85..=1.15).contains(&lo)
        && (0.85..=1.15).contains(&hi)
        && (far.ratio - 1.0).abs() < (near.ratio - 1.0).abs();
    Ok((
        pass,
        format!(
            "ratio {:.6} at t=1e4, {:.6} at t=1e6 (bracket [{lo:.6}, {hi:.6}])",
            near.ratio, far.ratio
        ),
    ))
}

fn smoothed_far_field() -> Outcome {
    let walk = WalkSpec::simple(1).map_err(err)?;
    let analysis = analyze(&walk).map_err(err)?;
    let psi = BernsteinSpec::stable(1.0).map_err(err)?;
    let r = verify_polya(
        &walk,
        &analysis,
        &psi,
        &[(vec![2000], 10)],
        Some(1 << 14),
        0.15,
    )
    .map_err(err)?;
    let cell = &r.cells[0];
    Ok((
        (0.85..=1.15).contains(&cell.ratio),
        format!(
            "ratio {:.6} (aliasing envelope {:.2e} of {:.3e})",
            cell.ratio, cell.params[4], cell.measured
        ),
    ))
}

fn strong_ratio() -> Outcome {
    let walk = WalkSpec::simple(1).map_err(err)?;
    let analysis = analyze(&walk).map_err(err)?;
    let psi = BernsteinSpec::stable(1.0).map_err(err)?;
    let r = verify_ratio(&walk, &analysis, &psi, &[(vec![5], 10_000)], 0.01).map_err(err)?;
    let ratio = r.cells[0].ratio;
    Ok((
        (0.99..=1.01).contains(&ratio),
        format!("p(5,n)/p(0,n) = {ratio:.8}"),
    ))
}

fn domain_of_attraction() -> Outcome {
    let walk = WalkSpec::simple(1).map_err(err)?;
    let analysis = analyze(&walk).map_err(err)?;
    let psi = BernsteinSpec::stable(1.0).map_err(err)?;
    let r = verify_doa(&walk, &analysis, &psi, &[1.0], &[1_000_000], 0.01).map_err(err)?;
    let cell = &r.cells[0];
    let gap = (cell.measured + 0.5f64.sqrt()).abs();
    Ok((
        gap <= 0.01,
        format!("n Log Phi = {:.8}, |gap| {gap:.2e}", cell.measured),
    ))
}

fn flt_marginal() -> Outcome {
    let walk = WalkSpec::simple(1).map_err(err)?;
    let analysis = analyze(&walk).map_err(err)?;
    let psi = BernsteinSpec::stable(1.0).map_err(err)?;
    let coeffs = psi.coefficients(1 << 20).map_err(err)?;
    let sampler = IncrementSampler::new(&coeffs).map_err(err)?;
    let replicas = 100_000;
    let mut distances = Vec::new();
    for n in [200, 2000] {
        let (samples, _) =
            flt_samples(&walk, &sampler, &psi, n, 1.0, 0, 2024, 0..replicas).map_err(err)?;
        let r = flt_report_from_samples(&analysis, &psi, n, 1.0, 0, samples, 0.02).map_err(err)?;
        distances.push(r.cells[0].measured);
    }
    let pass = distances[1] < 0.02 && distances[1] < distances[0];
    Ok((
        pass,
        format!(
            "KS {:.5} at n=200, {:.5} at n=2000",
            distances[0], distances[1]
        ),
    ))
}

fn lclt_sanity() -> Outcome {
    let walk = WalkSpec::simple(1).map_err(err)?;
    let m = 5000usize;
    let table = walk.convolve_n(2 * m).map_err(err)?;
    let dp = table.get(&[0]) * (std::f64::consts::PI * m as f64).sqrt();
    let closed = walk.closed_transition(&[0], (2 * m) as f64).unwrap_or(0.0)
        * (std::f64::consts::PI * m as f64).sqrt();
    let pass = (dp - 1.0).abs() <= 1e-3 && (closed - 1.0).abs() <= 1e-3;
    Ok((
        pass,
        format!("p(0,2m) sqrt(pi m) = {dp:.8} (closed form {closed:.8})"),
    ))
}

fn periodization() -> Outcome {
    let walk = WalkSpec::simple(1).map_err(err)?;
    let psi = BernsteinSpec::stable(1.0).map_err(err)?;
    let k_max = 1 << 13;
    let sub = tau_pmf(&psi.coefficients(k_max).map_err(err)?, 3, k_max).map_err(err)?;
    let torus = kernel_periodized_exact(&walk, &psi, &sub, &[0], 64).map_err(err)?;
    let fourier = FourierGrid::new(&walk, &psi, 64)
        .map_err(err)?
        .periodic_kernel(3)
        .get(&[0]);
    let diff = (torus.value - fourier).abs();
    Ok((
        diff <= 1e-10 && diff <= torus.error_bound + 1e-12,
        format!(
            "|fourier - periodized exact| {diff:.2e}, bound {:.2e}",
            torus.error_bound
        ),
    ))
}

fn property_suites() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    // Increment inequality |ψ(u(1+z)) − ψ(u)| ≤ z ψ(u).
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let uniform = |rng: &mut ChaCha8Rng| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let families = [
        BernsteinSpec::stable(0.3).map_err(err)?,
        BernsteinSpec::stable(1.7).map_err(err)?,
        BernsteinSpec::stable_log(1.0, 1.0).map_err(err)?,
        BernsteinSpec::stable_levy_quadrature(1.2, LevyGrid::default()).map_err(err)?,
    ];
    let mut worst = f64::NEG_INFINITY;
    for i in 0..200 {
        let psi = &families[i % families.len()];
        let u = 5.0 * (1.0 - uniform(&mut rng));
        let z = 10.0 * uniform(&mut rng);
        let lhs = (psi.eval(u * (1.0 + z)).map_err(err)? - psi.eval(u).map_err(err)?).abs();
        worst = worst.max(lhs - z * psi.eval(u).map_err(err)?);
    }
    pass &= worst <= 1e-12;
    notes.push(format!("increment excess {worst:.1e}"));

    // Chapman–Kolmogorov on a window, bounded by the mass outside it.
    let walk = WalkSpec::simple(1).map_err(err)?;
    let analysis = analyze(&walk).map_err(err)?;
    let psi = BernsteinSpec::stable(1.5).map_err(err)?;
    let k_max = 1 << 14;
    let coeffs = psi.coefficients(k_max).map_err(err)?;
    let width = 400i64;
    let points: Vec<Vec<i64>> = (-width..=width).map(|x| vec![x]).collect();
    let matrix = TransitionMatrix::new(&walk, &points, k_max).map_err(err)?;
    let table = |n| -> Result<_, String> {
        let sub = tau_pmf(&coeffs, n, k_max).map_err(err)?;
        kernel_exact_completed(&walk, &analysis, &matrix, &sub).map_err(err)
    };
    let (two, three, five) = (table(2)?, table(3)?, table(5)?);
    let mut ck_excess = f64::NEG_INFINITY;
    for x in -5i64..=5 {
        let half = width - 5;
        let mut conv = 0.0;
        let mut bound = five.error_bounds[(x + width) as usize];
        let mut inside = 0.0;
        for y in -half..=half {
            let a = (y + width) as usize;
            let b = (x - y + width) as usize;
            conv += two.values[a] * three.values[b];
            bound += two.error_bounds[a] * three.values[b] + two.values[a] * three.error_bounds[b];
            inside += two.values[a];
        }
        let sup3 = three.values.iter().cloned().fold(0.0, f64::max);
        bound += (1.0 - inside).max(0.0) * sup3;
        ck_excess = ck_excess.max((five.values[(x + width) as usize] - conv).abs() - bound);
    }
    pass &= ck_excess <= 0.0;
    notes.push(format!("Chapman-Kolmogorov excess {ck_excess:.1e}"));

    // Laplace transform of τ_n.
    let mut laplace_excess = f64::NEG_INFINITY;
    for alpha in [0.5, 1.0, 1.5] {
        let psi = BernsteinSpec::stable(alpha).map_err(err)?;
        let k = 1 << 16;
        let sub = tau_pmf(&psi.coefficients(k).map_err(err)?, 5, k).map_err(err)?;
        for lambda in [0.1f64, 0.5, 1.0] {
            let want = (1.0 - psi.eval(1.0 - (-lambda).exp()).map_err(err)?).powi(5);
            laplace_excess =
                laplace_excess.max((sub.laplace(lambda) - want).abs() - sub.tail_mass() - 1e-14);
        }
    }
    pass &= laplace_excess <= 0.0;
    notes.push(format!("Laplace excess {laplace_excess:.1e}"));

    // Sampler against the table on the first 50 atoms.
    let coeffs = BernsteinSpec::stable(1.0)
        .map_err(err)?
        .coefficients(1 << 16)
        .map_err(err)?;
    let sampler = IncrementSampler::new(&coeffs).map_err(err)?;
    let draws = 1_000_000u64;
    let mut counts = [0u64; 51];
    let mut rejections = 0;
    let mut rng = stream_rng(7, 0);
    for _ in 0..draws {
        let r = sampler.draw(&mut rng, &mut rejections) as usize;
        counts[r.min(51) - 1] += 1;
    }
    let mut chi = 0.0;
    let mut rest = 1.0;
    for (k, &observed) in counts.iter().enumerate().take(50) {
        let p = coeffs.get(k + 1);
        rest -= p;
        let e = p * draws as f64;
        chi += (observed as f64 - e).powi(2) / e;
    }
    let e = rest * draws as f64;
    chi += (counts[50] as f64 - e).powi(2) / e;
    let p_value = chi_square_sf(chi, 50.0);
    pass &= p_value > 1e-3;
    notes.push(format!("sampler chi-square p {p_value:.3}"));

    // Semigroup of τ: pmf(2) ∗ pmf(3) = pmf(5) below the table length.
    let psi = BernsteinSpec::stable(1.0).map_err(err)?;
    let k = 1 << 12;
    let c = psi.coefficients(k).map_err(err)?;
    let (a, b, s) = (
        tau_pmf(&c, 2, k).map_err(err)?,
        tau_pmf(&c, 3, k).map_err(err)?,
        tau_pmf(&c, 5, k).map_err(err)?,
    );
    let conv = convolve(a.pmf(), b.pmf(), k + 1);
    let semigroup = conv
        .iter()
        .zip(s.pmf())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    pass &= semigroup <= 1e-14;
    notes.push(format!("semigroup {semigroup:.1e}"));

    // Unreachable windows are exact zeros.
    let sub = tau_pmf(&c, 1, 8).map_err(err)?;
    let far = TransitionMatrix::new(&walk, &[vec![100]], 8).map_err(err)?;
    pass &= kernel_exact_window(&far, &sub).values[0] == 0.0;

    Ok((pass, notes.join(", ")))
}
