use proptest::prelude::*;
use sparsesig::detectability::Region;
use sparsesig::distributions::{DetectionModel, ShapeFunction};
use sparsesig::io::{csv_string, parse_csv};
use sparsesig::montecarlo::{
    estimate_power, quantile_type7, wilson_interval, ExperimentConfig, Side, SweepRow, TestKind, WILSON_95,
};

fn config(threads: usize) -> ExperimentConfig {
    let m = DetectionModel::normal(5000, 0.6, 0.3, 1.0).unwrap();
    let mut c = ExperimentConfig::new(m, TestKind::Both, 0.05, 200, 17);
    c.threads = Some(threads);
    c.with_size = true;
    c
}

#[test]
fn estimates_do_not_depend_on_threads() {
    let a = estimate_power(&config(1)).unwrap();
    let b = estimate_power(&config(8)).unwrap();
    assert_eq!(a, b);
    assert_eq!(config(1).hash(), config(8).hash());
}

#[test]
fn seed_changes_the_result() {
    let mut c = config(1);
    let a = estimate_power(&c).unwrap();
    c.seed += 1;
    assert_ne!(a.outcomes[0].critical, estimate_power(&c).unwrap().outcomes[0].critical);
}

#[test]
fn size_is_near_alpha() {
    let m = DetectionModel::chimeric(2000, 0.7, 0.3, ShapeFunction::constant()).unwrap();
    let mut c = ExperimentConfig::new(m, TestKind::Llr, 0.1, 2000, 3);
    c.with_size = true;
    let size = estimate_power(&c).unwrap().outcomes[0].size.clone().unwrap();
    assert!(size.wilson_lo < 0.1 + 0.02 && size.wilson_hi > 0.1 - 0.02, "{size:?}");
}

#[test]
fn too_few_reps_is_rejected() {
    let mut c = config(1);
    c.reps = 50;
    assert!(estimate_power(&c).is_err());
}

fn row() -> impl Strategy<Value = SweepRow> {
    (
        0.0f64..1.0,
        0.0f64..1.0,
        "[a-z ,\"]{0,8}",
        prop::option::of(0.0f64..1.0),
        prop::option::of(0.0f64..1.0),
        0usize..3,
        any::<u64>(),
    )
        .prop_map(|(beta, r, tag, hc, llr, lab, seed)| SweepRow {
            family: "chimeric".into(),
            beta,
            r,
            tag,
            side: [Side::Below, Side::On, Side::Above][lab],
            label: [None, Some(Region::Detectable), Some(Region::Undetectable)][lab],
            hc_power: hc,
            llr_power: llr,
            reps: 100,
            seed,
        })
}

proptest! {
    #[test]
    fn csv_round_trips(rows in prop::collection::vec(row(), 1..12)) {
        let text = csv_string(&rows).unwrap();
        let back = parse_csv(&text).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        prop_assert_eq!(csv_string(&back).unwrap(), text);
    }

    #[test]
    fn wilson_contains_the_estimate(n in 1u64..5000, frac in 0.0f64..=1.0) {
        let k = (frac * n as f64).round() as u64;
        let (lo, hi) = wilson_interval(k, n, WILSON_95);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
    }

    #[test]
    fn quantile_is_monotone(mut v in prop::collection::vec(-1e3f64..1e3, 1..100), q1 in 0.0f64..=1.0, q2 in 0.0f64..=1.0) {
        v.sort_by(f64::total_cmp);
        let (a, b) = (q1.min(q2), q1.max(q2));
        let (x, y) = (quantile_type7(&v, a).unwrap(), quantile_type7(&v, b).unwrap());
        prop_assert!(x <= y);
        prop_assert!(v[0] <= x && y <= v[v.len() - 1]);
    }
}
