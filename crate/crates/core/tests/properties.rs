use gmetrix::axioms::{
    check_kind, minimal_theta_with, optimal_b_constant, optimal_b_constant_with, optimal_weak_ultra_constant_with,
};
use gmetrix::functions::parse_fn;
use gmetrix::model::{random_space, ClassTag, DistanceTable, Rational};
use gmetrix::par::Exec;
use gmetrix::preservation::pushforward;
use gmetrix::triplets::{is_s_triplet, realize_in_plane, triplet_constant, Extended, Triplet};
use num_bigint::BigInt;
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = Rational> {
    (1i64..=64, 1i64..=16).prop_map(|(p, q)| Rational::new(BigInt::from(p), BigInt::from(q)))
}

fn kind() -> impl Strategy<Value = ClassTag> {
    prop::sample::select(ClassTag::SPACE_KINDS.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generators_satisfy_their_kind(k in kind(), n in 2usize..9, seed in any::<u64>()) {
        let (d, _) = random_space(k, n, seed).unwrap();
        prop_assert!(check_kind(&d, k).is_holds());
    }

    #[test]
    fn identity_pushforward_is_identity(k in kind(), n in 2usize..8, seed in any::<u64>()) {
        let (d, _) = random_space(k, n, seed).unwrap();
        let id = parse_fn("x").unwrap();
        prop_assert_eq!(pushforward(&id, &d).unwrap(), d);
    }

    #[test]
    fn exec_modes_agree(k in kind(), n in 2usize..9, seed in any::<u64>()) {
        let (d, _) = random_space(k, n, seed).unwrap();
        prop_assert_eq!(
            optimal_b_constant_with(&d, Exec::Sequential).unwrap(),
            optimal_b_constant_with(&d, Exec::Parallel).unwrap()
        );
        prop_assert_eq!(
            optimal_weak_ultra_constant_with(&d, Exec::Sequential).unwrap(),
            optimal_weak_ultra_constant_with(&d, Exec::Parallel).unwrap()
        );
        prop_assert_eq!(
            minimal_theta_with(&d, Exec::Sequential).unwrap(),
            minimal_theta_with(&d, Exec::Parallel).unwrap()
        );
    }

    #[test]
    fn b_constant_is_attained(a in rational(), b in rational(), c in rational()) {
        let d = DistanceTable::three_point(a.clone(), b.clone(), c.clone()).unwrap();
        let s = optimal_b_constant(&d).unwrap();
        let t = Triplet::new(a, b, c);
        prop_assert_eq!(triplet_constant(&t), Extended::Finite(s.clone()));
        prop_assert!(is_s_triplet(&t, &s).unwrap());
        if s > Rational::from_integer(1.into()) {
            let smaller = &s - Rational::new(1.into(), 1_000_000.into());
            prop_assert!(!is_s_triplet(&t, &smaller).unwrap());
        }
    }

    #[test]
    fn planar_round_trip(a in 1e-3f64..1e3, b in 1e-3f64..1e3, c in 1e-3f64..1e3) {
        let t = Triplet::new(a, b, c);
        prop_assume!(a <= b + c && b <= a + c && c <= a + b);
        let [u, v, w] = realize_in_plane(&t).unwrap();
        for (got, want) in [(u.dist(&v), a), (u.dist(&w), b), (v.dist(&w), c)] {
            prop_assert!((got - want).abs() <= 1e-9 * want, "{} vs {}", got, want);
        }
    }

    #[test]
    fn affine_expressions_evaluate(p in 0u32..1000, q in 1u32..1000, x in 0f64..100.0) {
        let f = parse_fn(&format!("{p}/{q}*x + {q}")).unwrap();
        let want = p as f64 / q as f64 * x + q as f64;
        let got = f.eval(x).unwrap();
        prop_assert!((got - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn concave_functions_preserve_metrics(n in 2usize..7, seed in any::<u64>(), which in 0usize..3) {
        let src = ["min(x,1)", "x/(1+x)", "min(x,1/2) + min(x,3)/7"][which];
        let f = parse_fn(src).unwrap();
        let (d, _) = random_space(ClassTag::Metric, n, seed).unwrap();
        let image = pushforward(&f, &d).unwrap();
        prop_assert!(check_kind(&image, ClassTag::Metric).is_holds());
    }
}
