use proptest::prelude::*;
use sparsesig::distributions::{DetectionModel, ShapeFunction};
use sparsesig::statistics::{hc_asymptotic_critical, hc_normalizers, hc_statistic, lambda2_cdf, lambda2_quantile, llr_statistic};

#[test]
fn hc_of_a_single_small_pvalue() {
    // k = 1: the supremum is attained at t = p, where F jumps to 1.
    let v = hc_statistic(&[0.01]).unwrap().value;
    let want = (1.0 - 0.01) / (0.01f64 * 0.99).sqrt();
    assert!((v - want).abs() < 1e-9, "{v} vs {want}");
}

#[test]
fn lambda2_round_trip() {
    for q in [0.01, 0.5, 0.95, 0.999] {
        let x = lambda2_quantile(q).unwrap();
        assert!((lambda2_cdf(x) - q).abs() < 1e-12);
    }
}

#[test]
fn asymptotic_critical_uses_normalizers() {
    let (a, b) = hc_normalizers(1_000_000).unwrap();
    let c = hc_asymptotic_critical(1_000_000, 0.05).unwrap();
    assert!((a * c - b - lambda2_quantile(0.95).unwrap()).abs() < 1e-9);
}

#[test]
fn llr_is_zero_when_no_observation_hits_the_signal_block() {
    let m = DetectionModel::chimeric(1000, 0.75, 0.5, ShapeFunction::constant()).unwrap();
    let kappa = m.kappa();
    let obs = vec![0.5 + kappa; 10];
    let v = llr_statistic(&m, &obs).unwrap().value.finite().unwrap();
    let eps = m.epsilon().unwrap();
    assert!((v - 10.0 * (1.0 - eps).ln()).abs() < 1e-12);
}

proptest! {
    #[test]
    fn hc_ignores_order(mut p in prop::collection::vec(1e-9f64..1.0, 1..80), seed in any::<u64>()) {
        let a = hc_statistic(&p).unwrap().value;
        let k = p.len();
        p.rotate_left((seed % k as u64) as usize);
        p.reverse();
        prop_assert_eq!(a, hc_statistic(&p).unwrap().value);
    }

    #[test]
    fn hc_is_non_negative_and_grows_with_a_smaller_minimum(p in prop::collection::vec(1e-6f64..1.0, 2..50)) {
        let a = hc_statistic(&p).unwrap().value;
        prop_assert!(a >= 0.0);
        let mut q = p.clone();
        let i = q.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).unwrap().0;
        q[i] *= 1e-3;
        prop_assert!(hc_statistic(&q).unwrap().value >= a - 1e-12);
    }
}
