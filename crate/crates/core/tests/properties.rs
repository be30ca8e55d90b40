mod oracle;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use oracle::Weights;
use quantalg::distributions::{kantorovich_with_certificate, random_dist};
use quantalg::gmet::{self, validate_space};
use quantalg::parse::{parse_ground_term, parse_space};
use quantalg::terms::enumerate_ground_terms;
use quantalg::theory::extend_by_space;
use quantalg::{fixtures, saturate, KindName, Lifting, MetricKind, SaturationConfig, UnitValue};

fn kind_strategy() -> impl Strategy<Value = KindName> {
    prop::sample::select(KindName::ALL.to_vec())
}

fn unit_strategy() -> impl Strategy<Value = UnitValue> {
    (1i64..=24).prop_flat_map(|d| (0..=d).prop_map(move |n| UnitValue::from_ratio(n, d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unit_interval_arithmetic(a in unit_strategy(), b in unit_strategy()) {
        let s = a.capped_add(&b);
        prop_assert!(s >= a && s >= b && s <= UnitValue::one());
        prop_assert_eq!(s, b.capped_add(&a));
        let m = a.mul(&b);
        prop_assert!(m <= a && m <= b);
        prop_assert_eq!(a.complement().complement(), a.clone());
        prop_assert_eq!(a.is_proper(), !a.is_zero() && !a.is_one());
    }

    #[test]
    fn random_spaces_satisfy_their_kind(name in kind_strategy(), n in 1usize..=5, seed: u64) {
        let kind = MetricKind::named(name);
        let s = gmet::random_space(kind, n, 12, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(validate_space(&s).is_valid());
        let required: Vec<u8> = kind.axioms().iter().map(|a| a.number()).collect();
        let failing = oracle::failing_axioms(&oracle::matrix(&s));
        prop_assert!(failing.iter().all(|a| !required.contains(a)), "{:?} fails {:?}", name, failing);
    }

    #[test]
    fn transport_matches_flow_oracle(n in 1usize..=4, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = gmet::random_space(MetricKind::named(KindName::Met), n, 12, &mut rng);
        let (x, y) = (random_dist(s.points(), 12, &mut rng), random_dist(s.points(), 12, &mut rng));
        let (v, sol) = kantorovich_with_certificate(&s, &x, &y).unwrap();
        prop_assert_eq!(v.as_rational(), &oracle::kantorovich(&s, &oracle::weights(&x), &oracle::weights(&y)));
        // the coupling has the right marginals
        for (i, (_, w)) in x.support().enumerate() {
            prop_assert_eq!(&sol.flow[i].iter().sum::<quantalg::Rational>(), w);
        }
    }

    #[test]
    fn sup_lifting_preserves_the_kind(name in kind_strategy(), n in 1usize..=3, arity in 0usize..=2, seed: u64) {
        let kind = MetricKind::named(name);
        let s = gmet::random_space(kind, n, 8, &mut ChaCha8Rng::seed_from_u64(seed));
        let lifted = Lifting::sup(arity).apply(&s).unwrap();
        prop_assert!(validate_space(&lifted).is_valid());
    }

    #[test]
    fn convex_liftings_keep_symmetry_and_triangle(n in 1usize..=3, k in 0usize..3, seed: u64) {
        let p = UnitValue::new([oracle::r(1, 4), oracle::r(1, 2), oracle::r(2, 3)][k].clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dm = gmet::random_space(MetricKind::named(KindName::DMet), n, 12, &mut rng);
        let m = gmet::random_space(MetricKind::named(KindName::Met), n, 12, &mut rng);
        let lk = Lifting::lk(p.clone()).unwrap().apply(&dm).unwrap();
        let kant = Lifting::kantorovich(p).unwrap().apply(&m).unwrap();
        for lifted in [&lk, &kant] {
            let failing = oracle::failing_axioms(&oracle::matrix(lifted));
            prop_assert!(!failing.contains(&1) && !failing.contains(&4), "{:?}", failing);
        }
        // Kantorovich on a metric is reflexive
        prop_assert!(!oracle::failing_axioms(&oracle::matrix(&kant)).contains(&2));
    }

    #[test]
    fn derived_distances_bound_the_model(n in 1usize..=3, seed: u64) {
        let file = fixtures::load("lk");
        let space = gmet::random_space(MetricKind::named(KindName::DMet), n, 6, &mut ChaCha8Rng::seed_from_u64(seed));
        let th = extend_by_space(&file.theory, &space).unwrap();
        let sat = saturate(&th, &SaturationConfig::with_depth(1)).unwrap();
        let universe = sat.universe();
        let dists: Vec<Weights> = universe.iter().map(|t| oracle::eval(t, &|c| oracle::dirac(c))).collect();
        for (i, s) in universe.iter().enumerate() {
            for (j, t) in universe.iter().enumerate() {
                let derived = sat.derived_distance(s, t).unwrap();
                prop_assert!(derived.as_rational() >= &oracle::lk(&space, &dists[i], &dists[j]), "{} {}", s, t);
                if sat.same_class(s, t).unwrap() {
                    prop_assert_eq!(&dists[i], &dists[j]);
                }
            }
        }
    }
}

#[test]
fn printed_terms_parse_back() {
    for name in ["lk", "semilattice", "discrete"] {
        let th = fixtures::load(name).extended().unwrap();
        for t in enumerate_ground_terms(&th.sig, &[], 2, 100_000).unwrap() {
            assert_eq!(parse_ground_term(&t.to_string(), &th.sig).unwrap(), t);
        }
    }
}

#[test]
fn space_blocks_fill_defaults() {
    let s = parse_space(
        "{ points a, b, c; d a b = 1/3 }",
        MetricKind::named(KindName::Met),
    )
    .unwrap();
    let m = oracle::matrix(&s);
    assert_eq!(m[0][1], oracle::r(1, 3));
    assert_eq!(m[1][0], oracle::r(1, 3));
    assert_eq!(m[0][2], oracle::r(1, 1));
    assert_eq!(m[2][2], oracle::r(0, 1));
}
