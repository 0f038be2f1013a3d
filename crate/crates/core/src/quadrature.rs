//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! Infinite endpoints are mapped onto the unit interval; algebraic endpoint
//! singularities are left to bisection, which handles `x^-s` with `s < 1`.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-12,
            rel: 1e-10,
            max_intervals: 4000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance {
            abs,
            rel,
            ..Default::default()
        }
    }
}

/// One 15-point Kronrod panel: (estimate, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let est = kron * h;
    let err = ((kron - gauss) * h).abs();
    (est, err)
}

struct Panel {
    a: f64,
    b: f64,
    est: f64,
    err: f64,
}

/// Integrate over a finite interval. Returns (value, error estimate) and
/// fails if the tolerance could not be met.
pub fn integrate_finite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate_finite(f, b, a, tol).map(|v| -v);
    }
    let (est, err) = gk15(&f, a, b);
    if !est.is_finite() {
        return Err(Error::Divergent(format!("non-finite integrand on [{a}, {b}]")));
    }
    let mut panels = vec![Panel { a, b, est, err }];
    let mut total = est;
    let mut total_err = err;
    loop {
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(total);
        }
        if panels.len() >= tol.max_intervals {
            return Err(Error::Quadrature {
                lo: a,
                hi: b,
                err: total_err,
            });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("at least one panel");
        let p = panels.swap_remove(idx);
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // Interval exhausted at machine precision; accept what we have.
            panels.push(Panel { err: 0.0, ..p });
            total_err = panels.iter().map(|q| q.err).sum();
            continue;
        }
        let (e1, r1) = gk15(&f, p.a, m);
        let (e2, r2) = gk15(&f, m, p.b);
        if !(e1.is_finite() && e2.is_finite()) {
            return Err(Error::Divergent(format!(
                "non-finite integrand near [{}, {}]",
                p.a, p.b
            )));
        }
        panels.push(Panel {
            a: p.a,
            b: m,
            est: e1,
            err: r1,
        });
        panels.push(Panel {
            a: m,
            b: p.b,
            est: e2,
            err: r2,
        });
        total = panels.iter().map(|q| q.est).sum();
        total_err = panels.iter().map(|q| q.err).sum();
    }
}

/// Integrate over `[a, b]` where either end may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    integrate_dyn(&f, a, b, tol)
}

fn integrate_dyn(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if a.is_nan() || b.is_nan() {
        return Err(Error::domain("integration limit", f64::NAN, "must not be NaN"));
    }
    if a > b {
        return integrate_dyn(f, b, a, tol).map(|v| -v);
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => integrate_finite(f, a, b, tol),
        (true, false) => integrate_finite(
            |t: f64| {
                let s = 1.0 - t;
                f(a + t / s) / (s * s)
            },
            0.0,
            1.0,
            tol,
        ),
        (false, true) => integrate_finite(
            |t: f64| {
                let s = 1.0 - t;
                f(b - t / s) / (s * s)
            },
            0.0,
            1.0,
            tol,
        ),
        (false, false) => {
            let left = integrate_dyn(f, f64::NEG_INFINITY, 0.0, tol)?;
            let right = integrate_dyn(f, 0.0, f64::INFINITY, tol)?;
            Ok(left + right)
        }
    }
}

/// Integrate across a list of breakpoints (sorted or not; duplicates are
/// ignored). The first and last entries are the limits of integration.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: Tolerance) -> Result<f64> {
    let mut pts: Vec<f64> = points.to_vec();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = 0.0;
    let mut retry = Vec::new();
    for w in pts.windows(2) {
        match integrate_dyn(&f, w[0], w[1], tol) {
            Ok(v) => total += v,
            Err(Error::Quadrature { .. }) => retry.push((w[0], w[1])),
            Err(e) => return Err(e),
        }
    }
    // A piece that is negligible next to the rest only needs absolute
    // accuracy relative to the whole.
    if !retry.is_empty() {
        let loose = Tolerance {
            abs: tol.abs.max(tol.rel * total.abs() / retry.len() as f64),
            ..tol
        };
        for (a, b) in retry {
            total += integrate_dyn(&f, a, b, loose)?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kronrod_rule_is_exact_for_high_degree_polynomials() {
        // Degree 22 is the design exactness of the 15-point Kronrod rule.
        let (est, _) = gk15(&|x: f64| x.powi(22) + 3.0 * x.powi(5), -1.0, 1.0);
        assert_relative_eq!(est, 2.0 / 23.0, max_relative = 1e-13);
    }

    #[test]
    fn gauss_weights_sum_to_two() {
        let s = 2.0 * (WG[0] + WG[1] + WG[2]) + WG[3];
        assert_relative_eq!(s, 2.0, epsilon = 1e-15);
        let k: f64 = 2.0 * WGK[..7].iter().sum::<f64>() + WGK[7];
        assert_relative_eq!(k, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn endpoint_singularity() {
        let v = integrate(|x: f64| x.powf(-0.9), 0.0, 1.0, Tolerance::new(1e-10, 1e-10)).unwrap();
        assert_relative_eq!(v, 10.0, max_relative = 1e-8);
    }

    #[test]
    fn gaussian_over_real_line() {
        let v = integrate(
            |x: f64| (-0.5 * x * x).exp(),
            f64::NEG_INFINITY,
            f64::INFINITY,
            Tolerance::default(),
        )
        .unwrap();
        assert_relative_eq!(v, (2.0 * std::f64::consts::PI).sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let v = integrate(|x: f64| x, 1.0, 0.0, Tolerance::default()).unwrap();
        assert_relative_eq!(v, -0.5, epsilon = 1e-14);
    }

    #[test]
    fn jumps_at_breakpoints() {
        let f = |x: f64| if x < 0.3 { 1.0 } else { 5.0 };
        let v = integrate_pieces(f, &[0.0, 0.3, 1.0], Tolerance::default()).unwrap();
        assert_relative_eq!(v, 0.3 + 3.5, epsilon = 1e-13);
    }
}
