use num_complex::Complex64;
use proptest::prelude::*;
use subwalk_core::fft::{forward_nd, Fft};
use subwalk_core::walk::{analyze, WalkSpec};

fn skewed_2d() -> WalkSpec {
    WalkSpec::new(
        2,
        vec![
            (vec![1, 0], 0.2),
            (vec![-1, 0], 0.2),
            (vec![1, 1], 0.15),
            (vec![-1, -1], 0.15),
            (vec![0, 1], 0.15),
            (vec![0, -1], 0.15),
        ],
    )
    .unwrap()
}

proptest! {
    #[test]
    fn covariance_is_second_moment(u0 in -3.0f64..3.0, u1 in -3.0f64..3.0) {
        let walk = skewed_2d();
        let a = analyze(&walk).unwrap();
        let moment: f64 = walk.support().map(|(v, p)| p * (v[0] as f64 * u0 + v[1] as f64 * u1).powi(2)).sum();
        prop_assert!((a.covariance().quadratic_form(&[u0, u1]) - moment).abs() <= 1e-12);
    }

    #[test]
    fn symmetric_tables(n in 1usize..12, x in -12i64..=12, y in -12i64..=12) {
        let walk = skewed_2d();
        let t = walk.convolve_n(n).unwrap();
        prop_assert_eq!(t.get(&[x, y]), t.get(&[-x, -y]));
    }

    #[test]
    fn support_respects_classes(n in 1usize..20, x in -20i64..=20) {
        let walk = WalkSpec::simple(1).unwrap();
        let a = analyze(&walk).unwrap();
        if walk.convolve_n(n).unwrap().get(&[x]) > 0.0 {
            prop_assert_eq!(n % a.period(), a.class_of(&[x]));
        }
    }
}

#[test]
fn covariance_inverse_is_inverse() {
    let a = analyze(&skewed_2d()).unwrap();
    let prod = a.covariance().mul(a.covariance_inverse());
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((prod[(i, j)] - want).abs() < 1e-10);
        }
    }
}

#[test]
fn tables_are_distributions() {
    for walk in [
        WalkSpec::simple(2).unwrap(),
        WalkSpec::lazy_1d(),
        skewed_2d(),
    ] {
        let t = walk.convolve_n(17).unwrap();
        assert!((t.total() - 1.0).abs() < 1e-12);
        assert!(t.iter().all(|(_, p)| p >= 0.0));
    }
}

#[test]
fn grid_inversion_is_exact_for_polynomial_transform() {
    // Φ^n is a trigonometric polynomial, so an M-grid with M > 2n·max step recovers p(·, n).
    let walk = skewed_2d();
    let n = 6;
    let m = 16usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
    for (idx, z) in buf.iter_mut().enumerate() {
        let theta = [
            2.0 * std::f64::consts::PI * (idx % m) as f64 / m as f64,
            2.0 * std::f64::consts::PI * (idx / m) as f64 / m as f64,
        ];
        *z = walk.char_fn(&theta).powi(n);
    }
    forward_nd(&Fft::new(m), 2, &mut buf);
    let table = walk.convolve_n(n as usize).unwrap();
    for x in -6i64..=6 {
        for y in -6i64..=6 {
            let idx = x.rem_euclid(m as i64) as usize + m * y.rem_euclid(m as i64) as usize;
            let got = buf[idx].re / (m * m) as f64;
            assert!((got - table.get(&[x, y])).abs() < 1e-12, "{x} {y}");
        }
    }
}

#[test]
fn local_limit_envelope() {
    let walk = WalkSpec::simple(1).unwrap();
    let a = analyze(&walk).unwrap();
    for m in [100u64, 1000, 5000] {
        let exact = walk.closed_transition(&[0], (2 * m) as f64).unwrap();
        let dp = walk.convolve_n(2 * m as usize).unwrap().get(&[0]);
        assert!((exact - dp).abs() < 1e-14);
        assert!((exact * (std::f64::consts::PI * m as f64).sqrt() - 1.0).abs() <= 3.0 / m as f64);
        let main = a.lclt_estimate(&[0], 2 * m).unwrap();
        assert!((main / exact - 1.0).abs() <= 3.0 / m as f64);
    }
    assert_eq!(a.lclt_estimate(&[1], 200).unwrap(), 0.0);
    assert!(a.lclt_estimate(&[1000], 200).is_err());
    let two = analyze(&WalkSpec::simple(2).unwrap()).unwrap();
    let n = 400;
    let main = two.lclt_estimate(&[0, 0], n).unwrap();
    assert!((main - 2.0 / (std::f64::consts::PI * n as f64)).abs() < 1e-15);
}
