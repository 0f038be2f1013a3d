use proptest::prelude::*;
use sparsesig::detectability::{
    boundary_chimeric, boundary_normal_dense, boundary_normal_sparse, boundary_powerlaw, hellinger_sum, i_sums,
    total_variation,
};
use sparsesig::distributions::{DetectionModel, ShapeFunction};

#[test]
fn normal_boundary_is_continuous_across_cases() {
    let s0 = 1.2f64;
    let beta = 1.0 - s0 * s0 / 4.0;
    let at = boundary_normal_sparse(beta, s0).unwrap().r_star;
    let above = boundary_normal_sparse(beta + 1e-9, s0).unwrap().r_star;
    assert!((at - above).abs() < 1e-7);
}

#[test]
fn unit_variance_normal_is_linear_up_to_the_kink() {
    for beta in [0.55, 0.6, 0.7, 0.75] {
        assert!((boundary_normal_sparse(beta, 1.0).unwrap().r_star - (beta - 0.5)).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn boundaries_increase_in_beta(b1 in 0.51f64..0.99, b2 in 0.51f64..0.99, s0 in 0.3f64..3.0, a in 0.5f64..0.95) {
        let (lo, hi) = (b1.min(b2), b1.max(b2));
        prop_assert!(boundary_chimeric(lo).unwrap() <= boundary_chimeric(hi).unwrap());
        prop_assert!(boundary_powerlaw(lo, a).unwrap() <= boundary_powerlaw(hi, a).unwrap());
        prop_assert!(
            boundary_normal_sparse(lo, s0).unwrap().r_star <= boundary_normal_sparse(hi, s0).unwrap().r_star + 1e-12
        );
        prop_assert!(boundary_normal_dense(lo - 0.5).unwrap() >= boundary_normal_dense(hi - 0.5).unwrap());
    }

    #[test]
    fn hellinger_sandwich(n in 100u64..1_000_000, beta in 0.55f64..0.95, r in 0.05f64..0.95, linear in any::<bool>()) {
        let shape = if linear { ShapeFunction::linear2x() } else { ShapeFunction::constant() };
        let m = DetectionModel::chimeric(n, beta, r, shape).unwrap();
        let eps = m.epsilon().unwrap();
        let nf = n as f64;
        let d = hellinger_sum(&m).unwrap();
        let tv = total_variation(&m).unwrap();
        prop_assert!(0.5 * nf * eps * eps * tv * tv <= d * (1.0 + 1e-9));
        prop_assert!(d <= nf * eps * tv * (1.0 + 1e-9));
        let s = i_sums(&m, 1.0).unwrap();
        prop_assert!(d <= ((0.5 + eps) * s.i1 + s.i2) * (1.0 + 1e-9));
    }
}
