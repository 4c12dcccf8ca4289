use critfpp_core::circuits::oracle::check_hierarchy;
use critfpp_core::circuits::{max_disjoint_closed_circuits, outermost_closed_sequence};
use critfpp_core::estimators::{arm_sample, ArmEventSpec, Geometry};
use critfpp_core::lattice::boundary_sites;
use critfpp_core::passage::{first_passage, path_time, point_to_box, point_to_box_ladder};
use critfpp_core::weights::{low_weight_threshold, required_mass, sample_field};
use critfpp_core::{DistributionSpec, LatticeBox, Site, WeightField, WeightKind};
use proptest::prelude::*;

fn family(i: usize) -> DistributionSpec {
    DistributionSpec::builtin_families()[i].clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_values_depend_only_on_seed_and_site(seed in any::<u64>(), f in 0usize..5, x in -6i32..=6, y in -6i32..=6) {
        let spec = family(f);
        let small = sample_field(&spec, 6, seed).unwrap();
        let big = sample_field(&spec, 20, seed).unwrap();
        let v = Site::new(x, y);
        prop_assert_eq!(small.omega(v), big.omega(v));
        prop_assert_eq!(small.weight(v), big.weight(v));
    }

    #[test]
    fn coupling_dominates(seed in any::<u64>(), f in 0usize..5, n in 1u32..24) {
        let field = sample_field(&family(f), n, seed).unwrap();
        for v in field.bounds().sites() {
            prop_assert!(field.bernoulli_weight(v) <= field.weight(v));
        }
        let t = point_to_box(&field, WeightKind::General, n).unwrap().time;
        let tb = point_to_box(&field, WeightKind::Bernoulli, n).unwrap().time;
        prop_assert!(0.0 <= tb && tb <= t);
    }

    #[test]
    fn geodesic_time_matches_reported_time(seed in any::<u64>(), f in 0usize..5, n in 1u32..20) {
        let field = sample_field(&family(f), n, seed).unwrap();
        let r = first_passage(&field, WeightKind::General, &[Site::ORIGIN], &boundary_sites(LatticeBox::new(n)), true).unwrap();
        let path = r.geodesic.as_ref().expect("geodesic requested");
        prop_assert_eq!(path[0], Site::ORIGIN);
        prop_assert_eq!(path.last().unwrap().linf(), n);
        prop_assert!((path_time(&field, WeightKind::General, path) - r.time).abs() <= 1e-9 * r.time.max(1.0));
    }

    #[test]
    fn passage_ladder_is_nondecreasing(seed in any::<u64>(), f in 0usize..5) {
        let field = sample_field(&family(f), 32, seed).unwrap();
        let ladder = point_to_box_ladder(&field, WeightKind::General);
        prop_assert!(ladder.windows(2).skip(1).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn bernoulli_time_counts_disjoint_closed_circuits(seed in any::<u64>(), n in 1u32..40, i in 1u32..4) {
        let spec = DistributionSpec::bernoulli(i as f64).unwrap();
        let field = sample_field(&spec, n, seed).unwrap();
        let t = point_to_box(&field, WeightKind::Bernoulli, n).unwrap().time;
        let (count, _) = max_disjoint_closed_circuits(&field, n).unwrap();
        prop_assert_eq!(t, i as f64 * count as f64);
    }

    #[test]
    fn hierarchy_passes_oracle(seed in any::<u64>(), n in 2u32..14) {
        let spec = DistributionSpec::bernoulli(1.0).unwrap();
        let field = sample_field(&spec, n, seed).unwrap();
        let h = outermost_closed_sequence(&field, n).unwrap();
        prop_assert!(check_hierarchy(&field, &h).is_ok());
    }

    #[test]
    fn low_weight_tables_meet_mass_and_order(f in 0usize..5, c2 in 0.05f64..0.95) {
        let spec = family(f);
        let p = low_weight_threshold(&spec, c2, 12).unwrap();
        if spec.has_atom_at_infimum() {
            prop_assert!(p.atom_case);
            prop_assert!(p.table.iter().all(|&a| a == 0.0));
        } else {
            for (k, &a) in p.table.iter().enumerate() {
                let j = k as u32 + 1;
                prop_assert!(spec.mass_above_infimum(a) >= required_mass(c2, j));
            }
            prop_assert!(p.table.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn arm_events_shrink_with_outer_radius(seed in any::<u64>(), j in 1u32..5, g in 0usize..3) {
        let geometry = [Geometry::Full, Geometry::Half, Geometry::ThreeQuarter][g];
        let arm = ArmEventSpec::alternating(j, geometry, 1, 2).unwrap();
        let spec = DistributionSpec::bernoulli(1.0).unwrap();
        let hits = arm_sample(&spec, &arm, &[2, 4, 8], seed, 0).unwrap();
        prop_assert!(hits.windows(2).all(|w| w[0] || !w[1]));
    }

    #[test]
    fn all_open_field_has_zero_passage(n in 1u32..30, f in 0usize..5) {
        let field = WeightField::from_omega_fn(&family(f), n, |_| 0.25).unwrap();
        prop_assert_eq!(point_to_box(&field, WeightKind::General, n).unwrap().time, 0.0);
        prop_assert_eq!(max_disjoint_closed_circuits(&field, n).unwrap().0, 0);
    }
}
