use num_complex::Complex64;
use sparsesig::distributions::ShapeFunction;
use sparsesig::limits::*;
use sparsesig::rng::{stream, Domain};
use sparsesig::quadrature::{integrate, Tolerance};
use sparsesig::Extended;

fn draws(pair: &LimitPair, side: Side, n: usize, seed: u64) -> Vec<Extended> {
    let s = LimitSampler::new(pair, side, SamplerConfig::default()).unwrap();
    let mut rng = stream(seed, Domain::Limit, side as u64);
    (0..n).map(|_| s.draw(&mut rng)).collect()
}

fn empirical_cf(xs: &[Extended], t: f64) -> Complex64 {
    let n = xs.len() as f64;
    xs.iter()
        .filter_map(|x| x.finite())
        .map(|x| Complex64::new(0.0, t * x).exp())
        .sum::<Complex64>()
        / n
}

fn pairs() -> Vec<(&'static str, LimitPair)> {
    vec![
        ("gauss", gaussian_pair(1.0).unwrap()),
        ("chimeric linear", triple_chimeric_boundary(1.0, &ShapeFunction::linear2x()).unwrap()),
        ("power 0.75", triple_powerlaw_boundary(0.75).unwrap()),
        ("power 0.6", triple_powerlaw_boundary(0.6).unwrap()),
        ("normal quad", triple_normal_quadratic(0.9, 1.0).unwrap()),
        ("beta1 const", triple_beta1(&ShapeFunction::constant(), 1.0).unwrap()),
        ("beta1 power", triple_beta1(&ShapeFunction::power_law(0.4).unwrap(), 1.0).unwrap()),
        ("beta1 r2", triple_beta1(&ShapeFunction::constant(), 2.0).unwrap()),
        ("normal beta1", triple_normal_beta1(1.0).unwrap()),
    ]
}

#[test]
fn gaussian_pair_means() {
    let LimitPair::Regular { null, alt, a } = gaussian_pair(1.0).unwrap() else {
        panic!()
    };
    assert_eq!((null.gamma, alt.gamma, a), (-0.5, 0.5, 1.0));
    let z = cf_eval(&gaussian_pair(1.0).unwrap(), Side::Null, 1.0).unwrap();
    assert!((z - Complex64::new(0.0, -0.5).exp() * (-0.5f64).exp()).norm() < 1e-15);
}

#[test]
fn chimeric_boundary_variances() {
    for (shape, v) in [
        (ShapeFunction::constant(), 1.0),
        (ShapeFunction::linear2x(), 4.0 / 3.0),
        (ShapeFunction::power_law(0.25).unwrap(), 1.125),
    ] {
        let LimitPair::Regular { null, .. } = triple_chimeric_boundary(1.0, &shape).unwrap() else {
            panic!()
        };
        assert!((null.sigma2 - v).abs() < 1e-10, "{}: {}", shape.label(), null.sigma2);
    }
    assert!(triple_chimeric_boundary(1.0, &ShapeFunction::power_law(0.5).unwrap()).is_err());
}

#[test]
fn alternative_mass_at_infinity() {
    let b = triple_beta1(&ShapeFunction::constant(), 2.0).unwrap();
    assert!((b.mass_at_inf() - (1.0 - (-1f64).exp())).abs() < 1e-15);
    let xs = draws(&b, Side::Alternative, 40_000, 7);
    let frac = xs.iter().filter(|x| **x == Extended::PosInf).count() as f64 / xs.len() as f64;
    assert!((frac - 0.63212).abs() < 0.005, "{frac}");
    let LimitPair::Regular { a, .. } = triple_normal_beta1(1.0).unwrap() else {
        panic!()
    };
    assert!((a - (-0.5f64).exp()).abs() < 1e-15);
}

#[test]
fn cf_at_zero_is_one() {
    for (name, p) in pairs() {
        let z = cf_eval(&p, Side::Null, 0.0).unwrap();
        assert_eq!(z, Complex64::new(1.0, 0.0), "{name}");
    }
}

#[test]
fn exponential_moment_of_null_equals_finite_mass() {
    for (name, p) in pairs() {
        let LimitPair::Regular { a, null, .. } = &p else { panic!() };
        if let LevyMeasure::PowerExcess { .. } = null.eta {
            // e^X has tail index 1/a < 2 here, so the sample mean is useless.
            // Check the exponent at t = -i by direct quadrature in x.
            let LevyMeasure::PowerExcess { k, p: pw } = null.eta else { unreachable!() };
            let d: f64 = 1e-5;
            let head = -k * d.powf(2.0 - pw) / (2.0 * (2.0 - pw));
            let tol = Tolerance::new(1e-12, 1e-10);
            let f = |x: f64| (-x.exp_m1() + x / (1.0 + x * x)) * null.eta.density(x, false).unwrap();
            let body = integrate(f, d, 1.0, tol).unwrap() + integrate(f, 1.0, 200.0, tol).unwrap();
            let phi = null.gamma + 0.5 * null.sigma2 - head - body;
            assert!(phi.abs() < 1e-5, "{name}: {phi}");
            continue;
        }
        // E[e^X] under the null is the alternative's finite mass.
        let xs = draws(&p, Side::Null, 200_000, 11);
        let m = xs.iter().map(|x| x.finite().unwrap().exp()).sum::<f64>() / xs.len() as f64;
        assert!((m - a).abs() < 0.02, "{name}: {m} vs {a}");
    }
}

#[test]
fn empirical_cf_matches() {
    for (name, p) in pairs() {
        for side in [Side::Null, Side::Alternative] {
            let xs = draws(&p, side, 100_000, 3);
            for &t in &[0.25, 0.5, 1.0, 2.0, 4.0] {
                let e = empirical_cf(&xs, t);
                let c = cf_eval(&p, side, t).unwrap();
                assert!((e - c).norm() < 0.01, "{name} {side:?} t={t}: {e} vs {c}");
            }
        }
    }
}

#[test]
fn tilt_is_radon_nikodym() {
    let LimitPair::Regular { null, alt, .. } = triple_powerlaw_boundary(0.75).unwrap() else {
        panic!()
    };
    for &x in &[0.01f64, 0.3, 2.0, 6.0] {
        let r = alt.eta.density(x, alt.tilted).unwrap() / null.eta.density(x, null.tilted).unwrap();
        assert!((r - x.exp()).abs() < 1e-12 * x.exp());
    }
}
