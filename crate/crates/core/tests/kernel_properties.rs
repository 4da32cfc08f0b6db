use frachk::kernels::{ConvolutionWeights, Scheme, Start, UniformGrid};
use frachk::special::gamma;
use frachk::{rl_integral_left, rl_integral_right};
use proptest::prelude::*;

fn power_integral(p: f64, alpha: f64, t: f64) -> f64 {
    // I^α s^p = Γ(p+1)/Γ(p+α+1) t^{p+α}
    gamma(p + 1.0) / gamma(p + alpha + 1.0) * t.powf(p + alpha)
}

fn max_error(alpha: f64, n: usize, scheme: Scheme) -> f64 {
    let grid = UniformGrid::new(1.0, n).unwrap();
    let f: Vec<f64> = grid.nodes().map(|t| t * t).collect();
    let got = rl_integral_left(&f, alpha, grid, scheme).unwrap();
    grid.nodes()
        .zip(&got)
        .map(|(t, g)| (g - power_integral(2.0, alpha, t)).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn trapezoid_is_exact_on_affine(alpha in 0.05..2.0f64, n in 2usize..80, horizon in 0.1..5.0f64, a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let grid = UniformGrid::new(horizon, n).unwrap();
        let f: Vec<f64> = grid.nodes().map(|t| a + b * t).collect();
        let got = rl_integral_left(&f, alpha, grid, Scheme::Trapezoid).unwrap();
        for (t, g) in grid.nodes().zip(&got) {
            let want = a * power_integral(0.0, alpha, t) + b * power_integral(1.0, alpha, t);
            let scale = a.abs() * power_integral(0.0, alpha, t) + b.abs() * power_integral(1.0, alpha, t);
            prop_assert!((g - want).abs() <= 1e-11 * (1.0 + scale));
        }
    }

    #[test]
    fn right_integral_mirrors_left(alpha in 0.05..1.5f64, samples in proptest::collection::vec(-4.0..4.0f64, 3..60)) {
        let grid = UniformGrid::new(2.0, samples.len() - 1).unwrap();
        for scheme in [Scheme::Rectangle, Scheme::Trapezoid] {
            let w = ConvolutionWeights::new(alpha, grid, scheme).unwrap();
            let reversed: Vec<f64> = samples.iter().rev().copied().collect();
            let left = w.integrate_left(&reversed, Start::Regular).unwrap();
            let right = w.integrate_right(&samples, Start::Regular).unwrap();
            for (r, l) in right.iter().zip(left.iter().rev()) {
                prop_assert_eq!(r.to_bits(), l.to_bits());
            }
        }
    }

    #[test]
    fn weights_are_positive_and_sum_to_integral_of_one(alpha in 0.05..2.0f64, n in 2usize..100) {
        let grid = UniformGrid::new(1.0, n).unwrap();
        let w = ConvolutionWeights::new(alpha, grid, Scheme::Trapezoid).unwrap();
        for k in 1..=n {
            let row = w.row(k, Start::Regular);
            prop_assert!(row.iter().all(|v| *v >= 0.0));
            let total: f64 = row.iter().sum();
            prop_assert!((total - power_integral(0.0, alpha, grid.node(k))).abs() <= 1e-12);
        }
    }
}

#[test]
fn smooth_integrand_orders() {
    for alpha in [0.3, 0.6, 0.9] {
        let rect = (max_error(alpha, 256, Scheme::Rectangle)
            / max_error(alpha, 512, Scheme::Rectangle))
        .log2();
        let trap = (max_error(alpha, 256, Scheme::Trapezoid)
            / max_error(alpha, 512, Scheme::Trapezoid))
        .log2();
        assert!(rect >= 0.9, "alpha {alpha}: rectangle order {rect}");
        assert!(trap >= 1.8, "alpha {alpha}: trapezoid order {trap}");
    }
}

#[test]
fn unit_order_rectangle_is_left_riemann_sum() {
    let grid = UniformGrid::new(3.0, 30).unwrap();
    let w = ConvolutionWeights::new(1.0, grid, Scheme::Rectangle).unwrap();
    for k in 1..=30 {
        for j in 0..k {
            assert!((w.weight(k, j) - grid.step()).abs() < 1e-15);
        }
    }
}

#[test]
fn semigroup_holds_approximately() {
    let grid = UniformGrid::new(1.0, 1024).unwrap();
    let f: Vec<f64> = grid.nodes().map(|t| (2.0 * t).cos()).collect();
    let (a, b) = (0.4, 0.7);
    let inner = rl_integral_left(&f, b, grid, Scheme::Trapezoid).unwrap();
    let nested = rl_integral_left(&inner, a, grid, Scheme::Trapezoid).unwrap();
    let direct = rl_integral_left(&f, a + b, grid, Scheme::Trapezoid).unwrap();
    let gap = nested
        .iter()
        .zip(&direct)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-4, "semigroup gap {gap}");
}

#[test]
fn closed_form_values() {
    let grid = UniformGrid::new(1.0, 40).unwrap();
    let ones = vec![1.0; grid.len()];
    let s: Vec<f64> = grid.nodes().collect();
    let left_one = rl_integral_left(&ones, 0.5, grid, Scheme::Trapezoid).unwrap();
    let left_s = rl_integral_left(&s, 0.5, grid, Scheme::Trapezoid).unwrap();
    assert!((left_one[40] - 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-13);
    assert!((left_s[40] - 1.0 / gamma(2.5)).abs() < 1e-13);
    let rev: Vec<f64> = grid.nodes().map(|t| 1.0 - t).collect();
    let right_one = rl_integral_right(&ones, 0.5, grid, Scheme::Trapezoid).unwrap();
    let right_rev = rl_integral_right(&rev, 0.5, grid, Scheme::Trapezoid).unwrap();
    assert!((right_one[0] - 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-13);
    assert!((right_rev[0] - 1.0 / gamma(2.5)).abs() < 1e-13);
}

#[test]
fn non_finite_samples_name_the_node() {
    let grid = UniformGrid::new(1.0, 4).unwrap();
    let err = rl_integral_left(
        &[0.0, 1.0, f64::NAN, 0.0, 0.0],
        0.5,
        grid,
        Scheme::Trapezoid,
    )
    .unwrap_err();
    assert!(err.to_string().contains('2'), "{err}");
}
