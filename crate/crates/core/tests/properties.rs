use proptest::collection::btree_set;
use proptest::prelude::*;
use sumprod::energy::{energy, popular_set, quadruple_count, EnergyProfile, FiberMode, SeparatedFiberChain, Threshold};
use sumprod::uniformize::{extract_uniform, is_uniform, partition_uniform, UniformityParams};
use sumprod::GridSet;

const M: u32 = 12;

fn grid_set(lo: i64, hi: i64, max: usize) -> impl Strategy<Value = GridSet> {
    btree_set(lo..hi, 1..max).prop_map(|c| GridSet::from_cells(M, c).unwrap())
}

fn fiber_mode() -> impl Strategy<Value = FiberMode> {
    prop_oneof![Just(FiberMode::Difference), Just(FiberMode::Sum)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn holder_inequalities(a in grid_set(0, 4096, 80), b in grid_set(-4096, 4096, 80), w in 1u64..5, mode in fiber_mode()) {
        let p = EnergyProfile::compute(&a, &b, mode, w).unwrap();
        for check in p.holder_checks() {
            prop_assert!(check.holds(1e-9), "{} {} {}", check.name, check.lhs, check.rhs);
        }
        prop_assert!(p.cauchy_schwarz_exact());
    }

    #[test]
    fn first_energy_counts_windows(a in grid_set(0, 4096, 60), b in grid_set(0, 4096, 60), w in 0u64..5) {
        let e1 = energy(&a, &b, 1.0, FiberMode::Difference, w).unwrap().exact().unwrap();
        prop_assert_eq!(e1, (2 * w as u128 + 1) * (a.len() * b.len()) as u128);
    }

    #[test]
    fn quadruple_symmetry(a in grid_set(0, 4096, 60), b in grid_set(-2048, 2048, 60), w in 0u64..4) {
        let diff = quadruple_count(&a, &b, FiberMode::Difference, w).unwrap();
        let sum = quadruple_count(&a, &b.negate(), FiberMode::Sum, w).unwrap();
        prop_assert_eq!(diff, sum);
    }

    #[test]
    fn quadruples_bounded_by_energy(a in grid_set(0, 4096, 60), b in grid_set(0, 4096, 60), w in 0u64..4) {
        let q = quadruple_count(&a, &b, FiberMode::Difference, w).unwrap();
        let e2 = energy(&a, &b, 2.0, FiberMode::Difference, w).unwrap().exact().unwrap();
        prop_assert!(q <= e2);
    }

    #[test]
    fn separated_fiber_chain(a in grid_set(0, 4096, 80), b in grid_set(0, 4096, 80), mode in fiber_mode()) {
        let c = SeparatedFiberChain::compute(&a, &b, mode).unwrap();
        prop_assert!(c.mass_bounds_hold());
        prop_assert!(c.cauchy_schwarz_holds());
    }

    #[test]
    fn popular_mass_identity(a in grid_set(2048, 4096, 80), num in 0u128..400, den in 1u128..20, w in 1u64..3) {
        let d = sumprod::grid::arithmetic(&a, &a, sumprod::ArithOp::Diff).unwrap().maximal_separated_subset();
        let t = Threshold::new(num, den).unwrap();
        let pop = popular_set(&a, &a, &d, FiberMode::Difference, t, w, None).unwrap();
        prop_assert!(pop.mass_identity_holds((a.len() * a.len()) as u64));
        prop_assert!(pop.points.is_subset_of(&d));
    }

    #[test]
    fn uniform_extraction(a in grid_set(0, 4096, 200), step in prop_oneof![Just(1u32), Just(2), Just(3), Just(4), Just(6), Just(12)]) {
        let params = UniformityParams::with_step(0.1, M, step).unwrap();
        let u = extract_uniform(&a, &params).unwrap();
        prop_assert!(u.is_subset_of(&a));
        prop_assert!(is_uniform(&u, &params).unwrap().is_uniform());
        let floor = a.len() as f64 / ((a.len() as f64).log2() + 1.0).powi((M / step) as i32);
        prop_assert!(u.len() as f64 >= floor);
        let parts = partition_uniform(&a, &params).unwrap();
        let total: usize = parts.iter().map(|p| p.len()).sum();
        prop_assert_eq!(total, a.len());
        let mut union = GridSet::empty(M).unwrap();
        for p in &parts {
            prop_assert!(is_uniform(p, &params).unwrap().is_uniform());
            union = union.union(p).unwrap();
        }
        prop_assert_eq!(union, a);
    }

    #[test]
    fn separated_subsets_are_separated_and_maximal(a in grid_set(-500, 500, 200)) {
        let s = a.maximal_separated_subset();
        prop_assert!(s.cells().windows(2).all(|p| p[1] - p[0] >= 2));
        prop_assert!(a.neighborhood(1).is_subset_of(&s.neighborhood(2)));
        prop_assert!(a.is_subset_of(&s.neighborhood(1)));
    }
}
