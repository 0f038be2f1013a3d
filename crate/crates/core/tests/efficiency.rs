use proptest::prelude::*;
use sparsesig::distributions::{DetectionModel, ShapeFunction};
use sparsesig::efficiency::*;

fn chim(beta: f64, shape: ShapeFunction) -> DetectionModel {
    DetectionModel::chimeric(1000, beta, 2.0 * beta - 1.0, shape).unwrap()
}

#[test]
fn are_constant_versus_linear() {
    let a = chim(0.75, ShapeFunction::constant());
    let b = chim(0.75, ShapeFunction::linear2x());
    let rep = are(&a, &b).unwrap();
    assert!((rep.are - 0.75).abs() < 1e-4, "{rep:?}");
    assert!(!rep.clamped);
    assert!((are_shapes(&ShapeFunction::constant(), &ShapeFunction::linear2x()).unwrap().are - 0.75).abs() < 1e-9);
    let p = mismatched_power(&a, &b, 0.05).unwrap();
    assert!((p - 0.2180).abs() < 1e-3, "{p}");
    let same = are(&a, &a).unwrap();
    assert!((same.are - 1.0).abs() < 1e-12);
}

#[test]
fn disjoint_shapes_have_no_efficiency() {
    let lo = ShapeFunction::tabulated(vec![0.0, 0.5, 0.5000001, 1.0], vec![1.0, 1.0, 0.0, 0.0]).unwrap();
    let hi = ShapeFunction::tabulated(vec![0.0, 0.5, 0.5000001, 1.0], vec![0.0, 0.0, 1.0, 1.0]).unwrap();
    let r = are_shapes(&lo, &hi).unwrap();
    assert!(r.are < 1e-12, "{r:?}");
}

#[test]
fn different_betas_decouple() {
    let a = chim(0.75, ShapeFunction::constant());
    let b = chim(0.7, ShapeFunction::constant());
    let g = gamma_cross(&a, &b).unwrap();
    assert_eq!(g.value, 0.0);
    let mags: Vec<f64> = g.trace.iter().map(|t| t.1.abs()).collect();
    assert!(mags.windows(2).rev().take(4).all(|w| w[1] < w[0]));
}

#[test]
fn outside_gaussian_regime_is_rejected() {
    let a = DetectionModel::chimeric(1000, 0.7, 0.6, ShapeFunction::constant()).unwrap();
    assert!(are(&a, &a).is_err());
}

#[test]
fn normal_linear_boundary_is_gaussian() {
    let m = DetectionModel::normal(1000, 0.6, 0.1, 1.0).unwrap();
    assert!(gaussian_regime(&m).unwrap());
    // Approach to 1 is logarithmic in n: the default 1e-4 rule is not met
    // below n = 1e18, a 1e-3 rule is.
    assert!(matches!(gamma_cross(&m, &m), Err(sparsesig::Error::NoLimit(_))));
    let loose = LimitGrid { rel: 1e-3, ..LimitGrid::default() };
    let g = gamma_cross_with(&m, &m, &loose).unwrap();
    assert!((g.value - 1.0).abs() < 1e-2, "{g:?}");
    let edge = DetectionModel::normal(1000, 0.75, 0.25, 1.0).unwrap();
    let g = gamma_cross(&edge, &edge).unwrap();
    assert!((g.value - 0.5).abs() < 1e-3);
}

fn shape_strategy() -> impl Strategy<Value = ShapeFunction> {
    prop_oneof![
        Just(ShapeFunction::constant()),
        Just(ShapeFunction::linear2x()),
        (0.0..0.45f64).prop_map(|a| ShapeFunction::power_law(a).unwrap()),
        prop::collection::vec(0.0..3.0f64, 4).prop_map(|v| {
            let v: Vec<f64> = v.iter().map(|x| x + 0.01).collect();
            ShapeFunction::tabulated(vec![0.0, 0.3, 0.7, 1.0], v).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]
    #[test]
    fn are_is_a_symmetric_cosine(h1 in shape_strategy(), h2 in shape_strategy()) {
        let a = are_shapes(&h1, &h2).unwrap();
        let b = are_shapes(&h2, &h1).unwrap();
        prop_assert!((a.are - b.are).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a.are));
        prop_assert!(!a.clamped);
        prop_assert!((are_shapes(&h1, &h1).unwrap().are - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_increases_with_are(g11 in 0.1..5.0f64, e1 in 0.0..1.0f64, e2 in 0.0..1.0f64) {
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let p = |are: f64| power_from_gammas((g11 * are).sqrt(), 1.0, 0.05);
        prop_assert!(p(lo) <= p(hi));
    }
}
