use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rcs_core::channel::{
    iterated_zero_overlap, pair_coefficients, pair_coefficients_from_ptm, ChannelKind, ChannelSpec, KrausChannel,
    Order, StandardNoise,
};
use rcs_core::harness::suites::random_stinespring_channel;
use rcs_core::linalg::{c, identity, max_abs_diff, trace, CMatrix};

fn order() -> impl Strategy<Value = Order> {
    prop_oneof![Just(Order::AmpThenDep), Just(Order::DepThenAmp)]
}

fn hermitian() -> impl Strategy<Value = CMatrix> {
    prop::array::uniform4(-1.0..1.0f64)
        .prop_map(|[a, b, im, d]| CMatrix::from_row_slice(2, 2, &[c(a, 0.0), c(b, im), c(b, -im), c(d, 0.0)]))
}

fn kind_of(order: Order) -> ChannelKind {
    match order {
        Order::AmpThenDep => ChannelKind::AmpThenDep,
        Order::DepThenAmp => ChannelKind::DepThenAmp,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn standard_channels_are_cptp(q in 0.0..=1.0f64, p in 0.0..=1.0f64, order in order()) {
        let ch = ChannelSpec::standard(kind_of(order), q, p).channel().unwrap();
        prop_assert!(ch.completeness_deviation() <= 1e-9);
        prop_assert!(ch.min_choi_eigenvalue() >= -1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn adjoint_duality(q in 0.0..=1.0f64, p in 0.0..=1.0f64, order in order(), a in hermitian(), b in hermitian()) {
        let ch = StandardNoise::new(order, p, q).unwrap().channel();
        let lhs = trace(&(&a * ch.apply(&b).unwrap()));
        let rhs = trace(&(ch.apply_adjoint(&a).unwrap() * &b));
        prop_assert!((lhs - rhs).norm() <= 1e-12);
        prop_assert!(max_abs_diff(&ch.apply_adjoint(&identity(2)).unwrap(), &identity(2)) <= 1e-12);
    }

    #[test]
    fn transfer_matrix_composes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let outer = random_stinespring_channel(&mut rng).unwrap();
        let inner = random_stinespring_channel(&mut rng).unwrap();
        let composed = outer.compose(&inner).unwrap().ptm().unwrap();
        let product = outer.ptm().unwrap().compose(&inner.ptm().unwrap());
        prop_assert!(composed.max_abs_diff(&product) <= 1e-10);
    }

    #[test]
    fn transfer_matrix_round_trip(seed in any::<u64>(), x in hermitian()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_stinespring_channel(&mut rng).unwrap();
        let ptm = ch.ptm().unwrap();
        prop_assert!((ptm.matrix()[0][0] - 1.0).abs() <= 1e-12 && ptm.matrix()[0][1..].iter().all(|v| v.abs() <= 1e-12));
        prop_assert!(max_abs_diff(&ptm.apply(&x).unwrap(), &ch.apply(&x).unwrap()) <= 1e-10);
        prop_assert!(ptm.is_cptp());
        let back = ptm.to_kraus().unwrap().ptm().unwrap();
        prop_assert!(back.max_abs_diff(&ptm) <= 1e-10);
    }

    #[test]
    fn pair_coefficients_consistent(q in 0.0..=1.0f64, p in 0.0..=1.0f64, order in order()) {
        let noise = StandardNoise::new(order, p, q).unwrap();
        let pc = pair_coefficients(&noise.channel()).unwrap();
        let from_ptm = pair_coefficients_from_ptm(&noise.ptm());
        prop_assert!((pc.a - from_ptm.a).abs() <= 1e-10 && (pc.b - from_ptm.b).abs() <= 1e-10);
        prop_assert!(pc.a >= -1e-12 && pc.b >= -1e-12);
        let lambda = 1.0 - pc.c();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&lambda));
        let closed = 1.0 - (1.0 - p).powi(2) * (1.0 - q) * (1.0 - q / 3.0);
        prop_assert!((pc.c() - closed).abs() <= 1e-10);
    }

    #[test]
    fn iterated_fit_matches_sequence(q in 0.0..=1.0f64, p in 0.0..=1.0f64, order in order()) {
        let noise = StandardNoise::new(order, p, q).unwrap();
        let (seq, fit) = iterated_zero_overlap(&noise.ptm(), Some(&noise), 50);
        prop_assert_eq!(seq.len(), 51);
        prop_assert!(fit.valid, "residual {}", fit.max_residual);
    }
}

#[test]
fn general_map_that_is_not_cp_is_reported() {
    let t = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
    ];
    let spec = ChannelSpec::general(t);
    match spec.make().unwrap() {
        rcs_core::channel::MadeChannel::Map(m) => {
            assert!(!m.is_cptp);
            assert!(m.min_choi_eigenvalue < -0.1);
        }
        _ => panic!("expected a map verdict"),
    }
    assert!(spec.channel().is_err());
}

#[test]
fn channel_spec_json_field_names() {
    let spec = ChannelSpec::standard(ChannelKind::AmpThenDep, 0.2, 0.1);
    let text = serde_json::to_string(&spec).unwrap();
    assert_eq!(text, r#"{"kind":"amp_then_dep","q":0.2,"p":0.1}"#);
    let general: ChannelSpec =
        serde_json::from_str(r#"{"kind":"general_ptm","t":[[1,0,0,0],[0,0.5,0,0],[0,0,0.5,0],[0.2,0,0,0.5]]}"#)
            .unwrap();
    assert!(general.channel().is_ok());
}

#[test]
fn named_kinds_are_special_cases() {
    let amp = ChannelSpec::standard(ChannelKind::AmpDamp, 0.3, 0.0).ptm().unwrap();
    let direct = KrausChannel::amplitude_damping(0.3).unwrap().ptm().unwrap();
    assert!(amp.max_abs_diff(&direct) < 1e-15);
    let dep = ChannelSpec::standard(ChannelKind::Depolarizing, 0.0, 0.4)
        .ptm()
        .unwrap();
    let direct = KrausChannel::depolarizing(0.4).unwrap().ptm().unwrap();
    assert!(dep.max_abs_diff(&direct) < 1e-15);
}
