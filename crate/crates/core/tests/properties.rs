//! Randomized invariants over small instances.

mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn labels_are_shift_invariant(cfg in config(), seed in potentials(), delta in -3.0f64..3.0) {
        labels_shift_invariant(cfg, &seed, delta)?;
    }

    #[test]
    fn masses_partition_unity_everywhere(cfg in config(), seed in potentials()) {
        masses_partition_unity(cfg, &seed)?;
    }

    #[test]
    fn raising_a_potential_grows_its_cell(cfg in config(), seed in potentials(), i in 0usize..8, bump in 0.0f64..0.3) {
        cell_grows_with_potential(cfg, &seed, i, bump)?;
    }

    #[test]
    fn superlevel_mass_is_nonincreasing(cfg in config(), k in -2.0f64..2.0, dk in 0.0f64..1.0) {
        superlevel_nonincreasing(cfg, k, dk)?;
    }

    #[test]
    fn weights_lie_in_the_sandwich_and_c_in_its_bounds(cfg in config()) {
        sandwich_and_c_bounds(cfg)?;
    }

    #[test]
    fn jacobian_rows_annihilate_the_gauge_direction(cfg in config(), seed in potentials()) {
        jacobian_kernel(cfg, &seed)?;
    }
}
