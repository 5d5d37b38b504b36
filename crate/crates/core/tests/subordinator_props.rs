use proptest::prelude::*;
use subwalk_core::bernstein::{BernsteinSpec, CoeffTable};
use subwalk_core::fft::convolve;
use subwalk_core::special::chi_square_sf;
use subwalk_core::subordinator::{
    sample_tau, stream_rng, tail_predictor, tau_pmf, tau_tail, IncrementSampler,
};

fn coeffs(alpha: f64, k: usize) -> CoeffTable {
    BernsteinSpec::stable(alpha)
        .unwrap()
        .coefficients(k)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn semigroup(alpha in 0.2f64..1.9, a in 1usize..6, b in 1usize..6) {
        let k = 512;
        let c = coeffs(alpha, k);
        let (x, y, s) = (tau_pmf(&c, a, k).unwrap(), tau_pmf(&c, b, k).unwrap(), tau_pmf(&c, a + b, k).unwrap());
        let conv = convolve(x.pmf(), y.pmf(), k + 1);
        for (u, v) in conv.iter().zip(s.pmf()) {
            prop_assert!((u - v).abs() <= 1e-14);
        }
        prop_assert!((s.pmf().iter().sum::<f64>() + s.tail_mass() - 1.0).abs() <= 1e-10);
        prop_assert!(s.pmf()[..a + b].iter().all(|p| *p == 0.0));
    }

    #[test]
    fn draws_at_least_n(seed in any::<u64>(), n in 0u64..50) {
        let c = coeffs(1.0, 256);
        let tau = sample_tau(&c, n, seed).unwrap();
        prop_assert!(tau >= n);
        prop_assert_eq!(tau, sample_tau(&c, n, seed).unwrap());
    }
}

#[test]
fn small_compositions() {
    let c = coeffs(1.0, 4);
    assert_eq!(
        tau_pmf(&c, 1, 4).unwrap().pmf()[1..],
        [0.5, 0.125, 0.0625, 5.0 / 128.0]
    );
    let two = tau_pmf(&c, 2, 4).unwrap();
    assert_eq!(two.get(2), 0.25);
    assert_eq!(two.get(3), 0.125);
    assert!(tau_pmf(&c, 5, 4).is_err());
    assert_eq!(sample_tau(&c, 0, 1).unwrap(), 0);
}

#[test]
fn laplace_oracle() {
    for alpha in [0.5, 1.0, 1.5] {
        let psi = BernsteinSpec::stable(alpha).unwrap();
        let k = 1 << 15;
        let sub = tau_pmf(&psi.coefficients(k).unwrap(), 3, k).unwrap();
        for lambda in [0.1, 0.5, 1.0] {
            let want = (1.0 - psi.eval(1.0 - f64::exp(-lambda)).unwrap()).powi(3);
            assert!((sub.laplace(lambda) - want).abs() <= sub.tail_mass() + 1e-14);
        }
    }
}

#[test]
fn tail_examples() {
    let psi = BernsteinSpec::stable(1.0).unwrap();
    let sub = tau_pmf(&psi.coefficients(1 << 12).unwrap(), 1, 1 << 12).unwrap();
    assert_eq!(tau_tail(&sub, 0.5).value, 1.0);
    assert!((tau_tail(&sub, 1.0).value - 0.5).abs() < 1e-15);
    let at_100 = tau_tail(&sub, 100.0);
    // Σ_{k > 100} c(k) = Γ(100.5) / (Γ(0.5) Γ(101)).
    assert!(
        (at_100.value - 0.056_348_479_009_256_42).abs() < 1e-12,
        "{}",
        at_100.value
    );
    assert!((tail_predictor(&psi, 1, 100.0).unwrap() - 0.056_418_958_354_775_63).abs() < 1e-15);
    assert!((tail_predictor(&psi, 4, 1e6).unwrap() - 2.256_758_334_191_025e-3).abs() < 1e-17);
    let p15 = BernsteinSpec::stable(1.5).unwrap();
    assert!((tail_predictor(&p15, 1, 1.0).unwrap() - 0.275_815_662_830_209_3).abs() < 1e-14);
}

#[test]
fn tail_ratio_trend() {
    let psi = BernsteinSpec::stable(1.0).unwrap();
    let k = 1_000_001;
    let sub = tau_pmf(&psi.coefficients(k).unwrap(), 3, k).unwrap();
    let gaps: Vec<f64> = [1e3, 1e4, 1e5, 1e6]
        .iter()
        .map(|t| (tau_tail(&sub, *t).value / tail_predictor(&psi, 3, *t).unwrap() - 1.0).abs())
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn sampler_matches_table() {
    let c = coeffs(1.5, 1 << 14);
    let sampler = IncrementSampler::new(&c).unwrap();
    let draws = 1_000_000u64;
    let mut counts = [0u64; 51];
    let mut rng = stream_rng(99, 1);
    let mut rejections = 0;
    for _ in 0..draws {
        let r = sampler.draw(&mut rng, &mut rejections) as usize;
        counts[r.min(51) - 1] += 1;
    }
    let mut chi = 0.0;
    let mut rest = 1.0;
    for k in 1..=50 {
        let e = c.get(k) * draws as f64;
        rest -= c.get(k);
        chi += (counts[k - 1] as f64 - e).powi(2) / e;
    }
    chi += (counts[50] as f64 - rest * draws as f64).powi(2) / (rest * draws as f64);
    assert!(chi_square_sf(chi, 50.0) > 1e-3);
    assert_eq!(rejections, 0);
}

#[test]
fn exceedance_frequency_matches_tail() {
    // Seeds 0..10^6 through the same stream layout as `sample_tau`.
    let c = coeffs(1.0, 1 << 12);
    let sampler = IncrementSampler::new(&c).unwrap();
    let mut hits = 0u64;
    let mut rejections = 0;
    let seeds = 1_000_000u64;
    for seed in 0..seeds {
        let mut rng = stream_rng(seed, 0);
        if sampler.draw_sum(1, &mut rng, &mut rejections) > 100 {
            hits += 1;
        }
    }
    let freq = hits as f64 / seeds as f64;
    let exact = 0.056_348_479_009_256_42;
    let three_sigma = 3.0 * (exact * (1.0 - exact) / seeds as f64).sqrt();
    assert!((freq - exact).abs() <= three_sigma, "{freq}");
    assert!((freq - 0.0564).abs() <= 3e-4, "{freq}");
}
