//! Symbolic counting and set algebra against brute force over a bounding box.

mod common;

use common::{brute_points, random_set, to_set};
use proptest::prelude::*;
use stackdist::polyhedra::Set;

#[test]
fn symbolic_count_matches_enumeration() {
    for seed in 0..500u64 {
        let r = random_set(seed);
        let s = to_set(&r);
        let expected = brute_points(&r);
        let got = s.cardinality().unwrap();
        assert_eq!(got, (expected.len() as i64).into(), "seed {seed}: {s}");
        let listed: Vec<Vec<i64>> = s.enumerate().unwrap().into_iter().map(|p| p.1).collect();
        assert_eq!(listed, expected, "seed {seed}");
    }
    println!("enumeration fallbacks: {}", stackdist::polyhedra::fallback_count());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn set_axioms(a in 0u64..10_000, b in 0u64..10_000) {
        let (ra, rb) = (random_set(a), random_set(b));
        prop_assume!(ra.n == rb.n);
        let (sa, sb) = (to_set(&ra), to_set(&rb));
        let card = |s: &Set| s.cardinality().unwrap();
        let u = sa.union(&sb).unwrap();
        let i = sa.intersect(&sb).unwrap();
        prop_assert_eq!(card(&u), card(&sa) + card(&sb) - card(&i));
        prop_assert!(u.subtract(&sb).unwrap().is_subset(&sa).unwrap());
        prop_assert!(i.is_subset(&sa).unwrap());
        let d = sa.subtract(&sb).unwrap();
        prop_assert_eq!(card(&d) + card(&i), card(&sa));
    }
}

