//! Distance pieces evaluated pointwise against simulated stack distances.

mod common;

use common::{check_distances, kernel, small_n, KERNELS};

#[test]
fn running_example_distances() {
    let p = kernel("running", None, 4);
    assert_eq!(check_distances(&p), Ok(4));
}

#[test]
fn kernel_distances_match_simulator() {
    for name in KERNELS {
        for line_size in [8, 64] {
            let p = kernel(name, Some(small_n(name)), line_size);
            if let Err(e) = check_distances(&p) {
                panic!("{name} at {line_size}-byte lines: {e}");
            }
        }
    }
}
