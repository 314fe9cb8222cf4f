use proptest::prelude::*;

use rcs_core::channel::{Order, StandardNoise};
use rcs_core::moments::{
    collision_lower_bound, first_moment, first_moment_r, general_noise_params, second_moment_params,
};
use rcs_core::statmech::{sequence_coeffs, single_qubit_layer_state};

fn order() -> impl Strategy<Value = Order> {
    prop_oneof![Just(Order::AmpThenDep), Just(Order::DepThenAmp)]
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

proptest! {
    #[test]
    fn first_moments_sum_to_one(n in 1usize..=12, q in 0.0..=1.0f64, p in 0.0..=1.0f64, order in order()) {
        let total: f64 = (0..=n).map(|w| binomial(n, w) * first_moment(n, w, order, p, q).unwrap()).sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn first_moment_decreases_with_weight(n in 1usize..=20, q in 0.01..=1.0f64, p in 0.0..0.99f64, order in order()) {
        let r = StandardNoise::new(order, p, q).unwrap().r();
        prop_assume!(r > 1e-9);
        for w in 0..n {
            prop_assert!(first_moment(n, w + 1, order, p, q).unwrap() < first_moment(n, w, order, p, q).unwrap());
        }
    }

    #[test]
    fn standard_and_general_parameters_agree(q in 0.0..=1.0f64, p in 0.0..=1.0f64, order in order()) {
        prop_assume!(q > 0.0 || p > 0.0);
        let noise = StandardNoise::new(order, p, q).unwrap();
        let general = general_noise_params(&noise.ptm());
        let standard = second_moment_params(order, p, q).unwrap();
        prop_assert!((general.c - standard.c).abs() <= 1e-10);
        prop_assert!((general.c - (general.a + 2.0 * general.b)).abs() <= 1e-10);
        prop_assert!((general.a - noise.pair_a()).abs() <= 1e-10);
        prop_assert!((general.b - noise.pair_b()).abs() <= 1e-10);
        if standard.c > 1e-6 {
            prop_assert!((general.mu - standard.mu).abs() <= 1e-8);
            prop_assert!((general.nu - standard.nu).abs() <= 1e-8);
        }
        prop_assert!(general.eta_general >= standard.eta_bias);
    }

    #[test]
    fn recursions_closed_form_and_invariants(q in 0.0..=1.0f64, p in 0.0..=1.0f64, order in order(), m in 0usize..=50) {
        let noise = StandardNoise::new(order, p, q).unwrap();
        let (a, b) = (noise.pair_a(), noise.pair_b());
        let x = single_qubit_layer_state(a, b, m);
        if let Some(closed) = x.x_closed {
            prop_assert!((closed - x.x_iterated).abs() <= 1e-12);
        }
        let s = sequence_coeffs(a, b, m);
        if let Some(closed) = s.closed {
            prop_assert!(closed.max_abs_diff(&s.iterated) <= 1e-12);
        }
        let v = s.value();
        prop_assert!((v.x + v.y / 2.0 - 1.0).abs() <= 1e-12);
        prop_assert!((v.z + v.w / 2.0 - 0.5).abs() <= 1e-12);
        prop_assert!(2.0 * v.v() - v.u() >= -1e-12);
        prop_assert!(2.0 * v.u() - v.v() >= 1.0 - 1e-12);
    }
}

#[test]
fn collision_bound_example() {
    assert!((collision_lower_bound(4, 0.1) - 0.04060401).abs() < 1e-15);
}

#[test]
fn log_domain_for_large_n() {
    let small = first_moment_r(40, 10, 0.3).unwrap();
    assert!(!small.log_domain);
    assert!((small.value.ln() - small.ln_value).abs() < 1e-12);
    let large = first_moment_r(5000, 1200, 0.3).unwrap();
    assert!(large.log_domain);
    assert_eq!(large.value, 0.0);
    let expected = 1200.0 * 0.7f64.ln() + 3800.0 * 1.3f64.ln() - 5000.0 * 2f64.ln();
    assert!((large.ln_value - expected).abs() < 1e-9);
}
