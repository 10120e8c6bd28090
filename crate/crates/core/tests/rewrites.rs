//! Floor-eliminating rewrites and partial enumeration on random pieces.

mod common;

use common::{check_rewrites_and_counting, random_floor_piece};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rewrites_are_sound(seed in 0u64..1_000_000) {
        let piece = random_floor_piece(seed);
        let r = check_rewrites_and_counting(&piece);
        prop_assert!(r.is_ok(), "seed {}: {} on {}", seed, r.unwrap_err(), piece.fmt_with_space());
    }
}
