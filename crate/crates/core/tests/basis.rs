use proptest::prelude::*;
use windcast::basis::{build_basis_block, evaluate_basis, BasisConfig, ANNUAL_PERIOD, DIURNAL_PERIOD};

#[test]
fn default_expansion_has_35_columns() {
    let cfg = BasisConfig::default();
    assert_eq!(cfg.width(), 35);
    let block = build_basis_block(&cfg, 0, 1).unwrap();
    assert_eq!(block.concatenated().ncols(), 35);
}

#[test]
fn single_row_interaction_is_product() {
    let cfg = BasisConfig::default();
    let b = build_basis_block(&cfg, 12345, 1).unwrap();
    let (kd, ka) = (b.diurnal.ncols(), b.annual.ncols());
    for i in 0..kd {
        for j in 0..ka {
            assert_eq!(b.interaction[(0, i * ka + j)], b.diurnal[(0, i)] * b.annual[(0, j)]);
        }
    }
}

proptest! {
    #[test]
    fn periodic_and_partition_of_unity(t in -1_000_000i64..1_000_000, k in 4usize..12) {
        let m = evaluate_basis(DIURNAL_PERIOD, k, &[t, t + DIURNAL_PERIOD as i64]).unwrap();
        let sum: f64 = m.row(0).iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert_eq!(m.row(0), m.row(1));
        prop_assert!(m.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn shifts_leave_each_period_unchanged(t in 0i64..10_000_000) {
        let cfg = BasisConfig::default();
        let a = cfg.row(t);
        let d = cfg.row(t + DIURNAL_PERIOD as i64);
        let y = cfg.row(t + ANNUAL_PERIOD as i64);
        prop_assert_eq!(a.diurnal(), d.diurnal());
        prop_assert_eq!(a.annual(), y.annual());
    }

    #[test]
    fn interactions_bounded_by_factors(start in 0i64..5_000_000, len in 1usize..20) {
        let b = build_basis_block(&BasisConfig::default(), start, len).unwrap();
        let ka = b.annual.ncols();
        for r in 0..len {
            for (c, v) in b.interaction.row(r).iter().enumerate() {
                let (i, j) = (c / ka, c % ka);
                prop_assert!(*v <= b.diurnal[(r, i)].min(b.annual[(r, j)]));
                prop_assert!(*v >= 0.0);
            }
        }
    }
}
