use proptest::prelude::*;
use subwalk_core::asymptotics::{verify_ratio, verify_tail, StableLimit};
use subwalk_core::bernstein::BernsteinSpec;
use subwalk_core::linalg::Matrix;
use subwalk_core::walk::{analyze, WalkSpec};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn density_symmetric_and_self_similar(alpha in 0.3f64..1.95, x in 0.01f64..50.0, t in 0.1f64..10.0) {
        let law = StableLimit::new(1, alpha, Matrix::identity(1)).unwrap();
        let p = law.density(&[x], t).unwrap();
        prop_assert_eq!(p, law.density(&[-x], t).unwrap());
        let s = t.powf(-1.0 / alpha);
        let q = s * law.density(&[s * x], 1.0).unwrap();
        prop_assert!((p / q - 1.0).abs() <= 1e-8, "{p} vs {q}");
    }

    #[test]
    fn cdf_is_monotone(alpha in 0.3f64..1.95, x in -30.0f64..30.0, dx in 0.01f64..5.0) {
        let law = StableLimit::new(1, alpha, Matrix::identity(1)).unwrap();
        let (a, b) = (law.cdf(x, 1.0).unwrap(), law.cdf(x + dx, 1.0).unwrap());
        prop_assert!(a <= b + 1e-12 && (0.0..=1.0).contains(&a));
    }
}

#[test]
fn reports_have_positive_finite_ratios() {
    let psi = BernsteinSpec::stable(0.8).unwrap();
    let tail = verify_tail(&psi, &[(2, 1e3), (2, 1e5)], 0.15).unwrap();
    assert!(tail
        .cells
        .iter()
        .all(|c| c.ratio.is_finite() && c.ratio > 0.0));
    assert_eq!(tail.decisive, 1);
    let walk = WalkSpec::simple(2).unwrap();
    let analysis = analyze(&walk).unwrap();
    let r = verify_ratio(
        &walk,
        &analysis,
        &BernsteinSpec::stable(1.0).unwrap(),
        &[(vec![1, 2], 30)],
        0.01,
    )
    .unwrap();
    assert!(r.cells[0].ratio > 0.0 && r.cells[0].ratio < 1.0);
}
