use proptest::prelude::*;
use subwalk_core::bernstein::BernsteinSpec;
use subwalk_core::kernel::{
    kernel_exact, kernel_exact_completed, simulate_endpoint, smoothed_kernel_exact, FourierGrid,
    TransitionMatrix,
};
use subwalk_core::special::chi_square_sf;
use subwalk_core::subordinator::{stream_rng, tau_pmf, IncrementSampler};
use subwalk_core::walk::{analyze, WalkSpec};

fn window(radius: i64) -> Vec<Vec<i64>> {
    (-radius..=radius).map(|x| vec![x]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fourier_kernel_is_normalized(alpha in 0.3f64..1.95, n in 0usize..40, log_m in 6u32..12) {
        let walk = WalkSpec::simple(1).unwrap();
        let psi = BernsteinSpec::stable(alpha).unwrap();
        let kernel = FourierGrid::new(&walk, &psi, 1 << log_m).unwrap().periodic_kernel(n);
        prop_assert!((kernel.total() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn exact_tables_symmetric_and_bounded(alpha in 0.3f64..1.95, n in 1usize..15) {
        let walk = WalkSpec::simple(1).unwrap();
        let psi = BernsteinSpec::stable(alpha).unwrap();
        let k = 1 << 10;
        let sub = tau_pmf(&psi.coefficients(k).unwrap(), n, k).unwrap();
        let points = window(40);
        let matrix = TransitionMatrix::new(&walk, &points, k).unwrap();
        let t = subwalk_core::kernel::kernel_exact_window(&matrix, &sub);
        let total: f64 = t.values.iter().sum();
        prop_assert!(t.values.iter().all(|v| *v >= 0.0));
        prop_assert!(total + sub.tail_mass() <= 1.0 + t.error_bounds.iter().sum::<f64>() + 1e-12);
        for i in 0..t.len() {
            prop_assert_eq!(t.values[i], t.values[t.len() - 1 - i]);
        }
    }
}

#[test]
fn chapman_kolmogorov() {
    let walk = WalkSpec::simple(1).unwrap();
    let analysis = analyze(&walk).unwrap();
    for alpha in [1.2, 1.8] {
        let psi = BernsteinSpec::stable(alpha).unwrap();
        let k = 1 << 13;
        let c = psi.coefficients(k).unwrap();
        let radius = 300i64;
        let matrix = TransitionMatrix::new(&walk, &window(radius), k).unwrap();
        let table = |n| {
            kernel_exact_completed(&walk, &analysis, &matrix, &tau_pmf(&c, n, k).unwrap()).unwrap()
        };
        let (one, three, four) = (table(1), table(3), table(4));
        let at = |y: i64| (y + radius) as usize;
        let sup3 = three.values.iter().cloned().fold(0.0, f64::max);
        for x in -4i64..=4 {
            let half = radius - 4;
            let mut conv = 0.0;
            let mut inside = 0.0;
            let mut bound = four.error_bounds[at(x)];
            for y in -half..=half {
                conv += one.values[at(y)] * three.values[at(x - y)];
                inside += one.values[at(y)];
                bound += one.error_bounds[at(y)] + three.error_bounds[at(x - y)];
            }
            bound += (1.0 - inside).max(0.0) * sup3;
            assert!(
                (four.values[at(x)] - conv).abs() <= bound,
                "alpha {alpha} x {x}"
            );
        }
    }
}

#[test]
fn subordinated_walk_is_aperiodic() {
    let walk = WalkSpec::simple(1).unwrap();
    let psi = BernsteinSpec::stable(1.0).unwrap();
    let c = psi.coefficients(256).unwrap();
    assert!(c.get(1) > 0.0 && c.get(2) > 0.0);
    for n in 1..=30 {
        let sub = tau_pmf(&c, n, 256).unwrap();
        assert!(kernel_exact(&walk, &sub, &[0]).unwrap().value > 0.0, "{n}");
    }
}

#[test]
fn identity_subordinator_on_generic_walk() {
    let walk = WalkSpec::new(
        2,
        vec![
            (vec![1, 0], 0.3),
            (vec![-1, 0], 0.3),
            (vec![1, 1], 0.2),
            (vec![-1, -1], 0.2),
        ],
    )
    .unwrap();
    let c = BernsteinSpec::identity().coefficients(8).unwrap();
    let sub = tau_pmf(&c, 3, 8).unwrap();
    let table = walk.convolve_n(3).unwrap();
    for (x, p) in table.iter() {
        assert_eq!(kernel_exact(&walk, &sub, &x).unwrap().value, p);
    }
}

#[test]
fn smoothing_for_aperiodic_walk_is_identity() {
    let walk = WalkSpec::lazy_1d();
    let analysis = analyze(&walk).unwrap();
    assert_eq!(analysis.period(), 1);
    let c = BernsteinSpec::stable(0.8)
        .unwrap()
        .coefficients(512)
        .unwrap();
    let sub = tau_pmf(&c, 4, 512).unwrap();
    for x in [-3, 0, 5] {
        let s = smoothed_kernel_exact(&walk, &analysis, &sub, &[x])
            .unwrap()
            .value;
        assert_eq!(s, kernel_exact(&walk, &sub, &[x]).unwrap().value);
    }
}

#[test]
fn simulated_law_matches_exact_kernel() {
    let walk = WalkSpec::simple(1).unwrap();
    let analysis = analyze(&walk).unwrap();
    let psi = BernsteinSpec::stable(1.5).unwrap();
    let k = 1 << 12;
    let c = psi.coefficients(k).unwrap();
    let radius = 500i64;
    let matrix = TransitionMatrix::new(&walk, &window(radius), k).unwrap();
    let exact =
        kernel_exact_completed(&walk, &analysis, &matrix, &tau_pmf(&c, 1, k).unwrap()).unwrap();
    let sampler = IncrementSampler::new(&c).unwrap();
    let seeds = 1_000_000u64;
    let mut counts = vec![0u64; (2 * radius + 1) as usize];
    let mut outside = 0u64;
    for seed in 0..seeds {
        let path = simulate_endpoint(&walk, &sampler, 1, &[1.0], &mut stream_rng(seed, 0)).unwrap();
        let x = path.points[0][0];
        if x.abs() <= radius {
            counts[(x + radius) as usize] += 1;
        } else {
            outside += 1;
        }
    }
    let inside_exact: f64 = exact.values.iter().sum();
    let mut tv = 0.5 * ((1.0 - inside_exact) - outside as f64 / seeds as f64).abs();
    for (count, p) in counts.iter().zip(&exact.values) {
        tv += 0.5 * (*count as f64 / seeds as f64 - p).abs();
    }
    assert!(tv < 5e-3, "{tv}");
}

#[test]
fn increments_over_disjoint_intervals_are_independent() {
    let walk = WalkSpec::simple(1).unwrap();
    let c = BernsteinSpec::stable(1.0)
        .unwrap()
        .coefficients(1 << 12)
        .unwrap();
    let sampler = IncrementSampler::new(&c).unwrap();
    let bucket = |v: i64| (v.clamp(-2, 2) + 2) as usize;
    let mut joint = [[0f64; 5]; 5];
    let replicas = 200_000u64;
    for seed in 0..replicas {
        let path =
            simulate_endpoint(&walk, &sampler, 2, &[0.5, 1.0], &mut stream_rng(seed, 4)).unwrap();
        let (a, b) = (path.points[0][0], path.points[1][0] - path.points[0][0]);
        joint[bucket(a)][bucket(b)] += 1.0;
    }
    let n = replicas as f64;
    let rows: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..5).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
    let mut chi = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            let e = rows[i] * cols[j] / n;
            chi += (joint[i][j] - e).powi(2) / e;
        }
    }
    assert!(chi_square_sf(chi, 16.0) > 1e-3, "{chi}");
}

#[test]
fn origin_at_time_zero() {
    let walk = WalkSpec::simple(3).unwrap();
    let c = BernsteinSpec::stable(1.0)
        .unwrap()
        .coefficients(64)
        .unwrap();
    let sampler = IncrementSampler::new(&c).unwrap();
    let path = simulate_endpoint(&walk, &sampler, 100, &[0.0], &mut stream_rng(1, 0)).unwrap();
    assert_eq!(path.points, vec![vec![0, 0, 0]]);
}
