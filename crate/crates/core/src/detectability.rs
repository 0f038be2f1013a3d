//! Detection boundaries and the trichotomy undetectable / detectable /
//! completely detectable, decided through the sums `I1` and `I2`.

use crate::distributions::{
    ls_slope, noise_integral, normal_prob, normal_ratio_set, DetectionModel, NoiseFamily, SignalFamily,
};
use crate::error::{Error, Result};
use crate::normal;
use crate::quadrature::{integrate_pieces, Tolerance};

/// `I1(x) = n eps mu(eps g > x)` and
/// `I2(x) = n eps^2 (E_P0[g^2; eps g <= x] - 1)`, `g = dmu/dP0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ISumReport {
    pub n: u64,
    pub x: f64,
    pub i1: f64,
    pub i2: f64,
}

const FINE: Tolerance = Tolerance {
    abs: 1e-300,
    rel: 1e-11,
    max_intervals: 4000,
};

pub fn i_sums(model: &DetectionModel, x: f64) -> Result<ISumReport> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::domain("x", x, "threshold must be positive"));
    }
    let eps = model.epsilon()?;
    let n = model.n();
    let nf = n as f64;
    if eps == 0.0 {
        return Ok(ISumReport { n, x, i1: 0.0, i2: 0.0 });
    }
    let (i1, i2) = match model.signal() {
        SignalFamily::Chimeric {
            shape,
            perturbation: None,
        } => {
            let kappa = model.kappa();
            // eps g > x  <=>  h > x kappa / eps on the rescaled support.
            let c = x * kappa / eps;
            let mut m1 = 0.0;
            for (lo, hi) in shape.above(c) {
                m1 += shape.integrate_composed(|h| h, lo, hi)?;
            }
            let mut m2 = 0.0;
            for (lo, hi) in shape.at_most(c) {
                m2 += shape.integrate_composed(|h| h * h, lo, hi)?;
            }
            (nf * eps * m1, nf * eps * eps * (m2 / kappa - 1.0))
        }
        SignalFamily::NormalShift { sigma0 } => {
            let sigma0 = *sigma0;
            let theta = model.theta();
            let level = (x / eps).ln();
            let event = normal_ratio_set(theta, sigma0, level, true);
            let mass: f64 = event.iter().map(|&(lo, hi)| normal_prob(lo, hi, theta, sigma0)).sum();
            let second = normal_truncated_second_moment(theta, sigma0, level)?;
            (nf * eps * mass, nf * eps * eps * second)
        }
        signal => {
            let sig = signal.clone();
            let cap = x / eps;
            let m1 = noise_integral(model, &sig, |y| {
                let g = model.signal_density_ratio(y).unwrap_or(0.0);
                if g > cap {
                    g
                } else {
                    0.0
                }
            })?;
            let m2 = noise_integral(model, &sig, |y| {
                let g = model.signal_density_ratio(y).unwrap_or(0.0);
                if g <= cap {
                    g * g
                } else {
                    0.0
                }
            })?;
            (nf * eps * m1, nf * eps * eps * (m2 - 1.0))
        }
    };
    Ok(ISumReport { n, x, i1: i1.max(0.0), i2 })
}

// E_P0[g^2; log g <= level] - 1 for the normal shift, arranged to avoid
// cancellation when g is close to one.
fn normal_truncated_second_moment(theta: f64, sigma0: f64, level: f64) -> Result<f64> {
    let ln_g = |y: f64| crate::distributions::normal_ln_ratio(y, theta, sigma0);
    let s2 = sigma0 * sigma0;
    let w = |y: f64| (2.0 * ln_g(y) + normal::ln_pdf(y)).exp();
    // Peak of g^2 phi when it has one.
    let peak = if s2 < 2.0 { 2.0 * theta / (2.0 - s2) } else { theta };
    let width = if s2 < 2.0 { (s2 / (2.0 - s2)).sqrt() } else { sigma0 };
    let breaks = |lo: f64, hi: f64| -> Vec<f64> {
        let span_lo = lo.max((-40.0f64).min(peak - 40.0 * width)).max(theta - 60.0 * sigma0 - 40.0);
        let span_hi = hi.min(40.0f64.max(peak + 40.0 * width)).min(theta + 60.0 * sigma0 + 40.0);
        let mut pts = vec![span_lo, span_hi];
        for c in [0.0, theta, peak] {
            for k in -6..=6 {
                let p = c + k as f64 * width.max(1.0);
                if p > span_lo && p < span_hi {
                    pts.push(p);
                }
            }
        }
        pts
    };
    let below = normal_ratio_set(theta, sigma0, level, false);
    if s2 >= 2.0 {
        // The kept set is bounded; integrate directly.
        let mut v = 0.0;
        for (lo, hi) in below {
            if hi > lo {
                v += integrate_pieces(w, &breaks(lo, hi), FINE)?;
            }
        }
        return Ok(v - 1.0);
    }
    // E[(g - 1)^2] - E[g^2; log g > level].
    let centered = |y: f64| {
        let l = ln_g(y);
        if l > 40.0 {
            let e = (-l).exp_m1();
            return e * e * (2.0 * l + normal::ln_pdf(y)).exp();
        }
        let e = l.exp_m1();
        e * e * normal::pdf(y)
    };
    let full = integrate_pieces(centered, &breaks(f64::NEG_INFINITY, f64::INFINITY), FINE)?;
    let mut cut = 0.0;
    for (lo, hi) in normal_ratio_set(theta, sigma0, level, true) {
        if hi > lo {
            cut += integrate_pieces(w, &breaks(lo, hi), FINE)?;
        }
    }
    Ok(full - cut)
}

// Integrand of the squared Hellinger distance in terms of t = eps (g - 1):
// 1 - sqrt(1 + t) + t/2, written without cancellation.
fn hellinger_kernel(t: f64) -> f64 {
    let s = 1.0 + (1.0 + t).sqrt();
    t * t / (2.0 * s * s)
}

/// `D_n = n d^2(P0, Q)` with `d^2 = 1/2 int (sqrt dP0 - sqrt dQ)^2`.
pub fn hellinger_sum(model: &DetectionModel) -> Result<f64> {
    let eps = model.epsilon()?;
    if eps == 0.0 {
        return Ok(0.0);
    }
    let nf = model.n() as f64;
    let d2 = match model.signal() {
        SignalFamily::Chimeric {
            shape,
            perturbation: None,
        } => {
            let kappa = model.kappa();
            let inside = shape.integrate_composed(|h| hellinger_kernel(eps * (h / kappa - 1.0)), 0.0, 1.0)?;
            kappa * inside + (1.0 - kappa) * hellinger_kernel(-eps)
        }
        SignalFamily::NormalShift { sigma0 } => {
            let (theta, sigma0) = (model.theta(), *sigma0);
            let f = |y: f64| {
                let ln_g = crate::distributions::normal_ln_ratio(y, theta, sigma0);
                let t = eps * ln_g.exp_m1();
                if t > 1e8 {
                    // kernel ~ t/2 - sqrt(t); keep it in log scale.
                    let ln_t = eps.ln() + ln_g;
                    let k = 0.5 - (-0.5 * ln_t).exp();
                    k * (ln_t + normal::ln_pdf(y)).exp()
                } else {
                    hellinger_kernel(t) * normal::pdf(y)
                }
            };
            let lo = (-40.0f64).min(theta - 40.0 * sigma0);
            let hi = 40.0f64.max(theta + 40.0 * sigma0);
            let mut pts = vec![lo, hi, 0.0, theta];
            for k in 1..40 {
                pts.push(lo + (hi - lo) * k as f64 / 40.0);
            }
            integrate_pieces(f, &pts, FINE)?
        }
        signal => {
            let sig = signal.clone();
            noise_integral(model, &sig, |y| {
                let g = model.signal_density_ratio(y).unwrap_or(1.0);
                hellinger_kernel(eps * (g - 1.0))
            })?
        }
    };
    Ok(nf * d2)
}

/// Variational distance `sup_A |P0(A) - mu(A)|`.
pub fn total_variation(model: &DetectionModel) -> Result<f64> {
    match model.signal() {
        SignalFamily::Chimeric {
            shape,
            perturbation: None,
        } => {
            let kappa = model.kappa();
            let mut v = 0.0;
            for (lo, hi) in shape.above(kappa) {
                v += shape.integrate_composed(|h| h - kappa, lo, hi)?;
            }
            Ok(v.clamp(0.0, 1.0))
        }
        SignalFamily::NormalShift { sigma0 } => {
            let theta = model.theta();
            let v: f64 = normal_ratio_set(theta, *sigma0, 0.0, true)
                .iter()
                .map(|&(lo, hi)| normal_prob(lo, hi, theta, *sigma0) - normal_prob(lo, hi, 0.0, 1.0))
                .sum();
            Ok(v.clamp(0.0, 1.0))
        }
        signal => {
            let sig = signal.clone();
            let v = noise_integral(model, &sig, |y| {
                (model.signal_density_ratio(y).unwrap_or(1.0) - 1.0).max(0.0)
            })?;
            Ok(v.clamp(0.0, 1.0))
        }
    }
}

/// `H_n(v) = (|n eps (mu(0,v] - v)| + |n eps (mu(1-v,1) - v)|) / sqrt(n v)`
/// on the p-value scale.
pub fn hn_v(model: &DetectionModel, v: f64) -> Result<f64> {
    if !(v > 0.0 && v < 0.5) {
        return Err(Error::domain("v", v, "must lie in (0, 1/2)"));
    }
    let eps = model.epsilon()?;
    let nf = model.n() as f64;
    let (lower, upper) = match model.signal() {
        SignalFamily::Chimeric { shape, perturbation } => {
            let kappa = model.kappa();
            let mu_le = |u: f64| {
                let base = shape.cdf((u / kappa).min(1.0));
                let pert = perturbation.as_ref().map_or(0.0, |p| p.integral_to(u, nf));
                base + pert
            };
            (mu_le(v), 1.0 - mu_le(1.0 - v))
        }
        SignalFamily::NormalShift { sigma0 } => {
            let theta = model.theta();
            let qv = normal::quantile(v);
            let lower = normal::sf((-qv - theta) / sigma0);
            let upper = normal::cdf((qv - theta) / sigma0);
            (lower, upper)
        }
        SignalFamily::Truncated { .. } => {
            return Err(Error::InvalidModel(
                "H_n(v) is only available for chimeric and normal signals".into(),
            ))
        }
    };
    let num = (nf * eps * (lower - v)).abs() + (nf * eps * (upper - v)).abs();
    Ok(num / (nf * v).sqrt())
}

pub fn boundary_chimeric(beta: f64) -> Result<f64> {
    if !(beta > 0.5 && beta <= 1.0) {
        return Err(Error::domain("beta", beta, "must lie in (1/2, 1]"));
    }
    Ok(2.0 * beta - 1.0)
}

pub fn boundary_powerlaw(beta: f64, a: f64) -> Result<f64> {
    if !(beta > 0.5 && beta < 1.0) {
        return Err(Error::domain("beta", beta, "must lie in (1/2, 1)"));
    }
    if !(0.5..1.0).contains(&a) {
        return Err(Error::domain("a", a, "must lie in [1/2, 1)"));
    }
    Ok(((beta - a) / (1.0 - a)).max(0.0))
}

/// Which branch of the normal-mixture boundary applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalCase {
    /// `sigma0 < sqrt 2`, `beta <= 1 - sigma0^2/4`.
    I,
    /// `sigma0 < sqrt 2`, `beta > 1 - sigma0^2/4`.
    II,
    /// `sigma0 >= sqrt 2`, `beta <= 1 - 1/sigma0^2`.
    III,
    /// `sigma0 >= sqrt 2`, `beta > 1 - 1/sigma0^2`.
    IV,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalBoundary {
    pub r_star: f64,
    pub case: NormalCase,
    pub log_exponent: f64,
}

pub fn boundary_normal_sparse(beta: f64, sigma0: f64) -> Result<NormalBoundary> {
    if !(beta > 0.5 && beta < 1.0) {
        return Err(Error::domain("beta", beta, "must lie in (1/2, 1)"));
    }
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(Error::domain("sigma0", sigma0, "must be positive"));
    }
    let s2 = sigma0 * sigma0;
    let quad = || (1.0 - sigma0 * (1.0 - beta).sqrt()).powi(2);
    let (r_star, case) = if sigma0 < std::f64::consts::SQRT_2 {
        if beta <= 1.0 - s2 / 4.0 {
            ((2.0 - s2) * (beta - 0.5), NormalCase::I)
        } else {
            (quad(), NormalCase::II)
        }
    } else if beta <= 1.0 - 1.0 / s2 {
        (0.0, NormalCase::III)
    } else {
        (quad(), NormalCase::IV)
    };
    let log_exponent = if case == NormalCase::I {
        0.0
    } else {
        0.5 - (1.0 - beta).sqrt() / (2.0 * sigma0)
    };
    Ok(NormalBoundary {
        r_star,
        case,
        log_exponent,
    })
}

pub fn log_exponent_e(beta: f64, sigma0: f64) -> Result<f64> {
    boundary_normal_sparse(beta, sigma0).map(|b| b.log_exponent)
}

pub fn boundary_normal_dense(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 0.5) {
        return Err(Error::domain("beta", beta, "must lie in (0, 1/2)"));
    }
    Ok(0.5 - beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Undetectable,
    Detectable,
    CompletelyDetectable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionLabel {
    pub kind: Region,
    /// Fitted slope of `log max(I1, |I2|)` against `log n`.
    pub slope: f64,
    /// Raw sums on the grid at the requested threshold.
    pub evidence: Vec<ISumReport>,
    /// Labels obtained at the cross-check thresholds `tau/2` and `2 tau`.
    pub cross_check: Vec<(f64, Region)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    pub n_grid: Vec<u64>,
    pub slope_threshold: f64,
    pub tau: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            n_grid: vec![1_000_000, 1_000_000_000, 1_000_000_000_000, 1_000_000_000_000_000, 1_000_000_000_000_000_000],
            slope_threshold: 0.01,
            tau: 1.0,
        }
    }
}

fn label_at(template: &DetectionModel, tau: f64, cfg: &ClassifierConfig) -> Result<(Region, f64, Vec<ISumReport>)> {
    let mut evidence = Vec::with_capacity(cfg.n_grid.len());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in &cfg.n_grid {
        let m = template.at_n(n)?;
        let rep = i_sums(&m, tau)?;
        let q = rep.i1.max(rep.i2.abs());
        if q > 0.0 && q.is_finite() {
            xs.push((n as f64).ln());
            ys.push(q.ln());
        }
        evidence.push(rep);
    }
    if ys.len() < 2 {
        return Ok((Region::Undetectable, f64::NEG_INFINITY, evidence));
    }
    let slope = ls_slope(&xs, &ys);
    let kind = if slope > cfg.slope_threshold {
        Region::CompletelyDetectable
    } else if slope < -cfg.slope_threshold {
        Region::Undetectable
    } else {
        Region::Detectable
    };
    Ok((kind, slope, evidence))
}

/// Label a parameter point by the growth of `I1` and `I2` along an n-grid.
pub fn classify_region(template: &DetectionModel, cfg: &ClassifierConfig) -> Result<RegionLabel> {
    if !(cfg.tau > 0.0 && cfg.tau.is_finite()) {
        return Err(Error::domain("tau", cfg.tau, "must be positive"));
    }
    if cfg.n_grid.len() < 2 {
        return Err(Error::InvalidModel("classifier needs at least two grid points".into()));
    }
    let (kind, slope, evidence) = label_at(template, cfg.tau, cfg)?;
    let mut cross_check = Vec::new();
    for t in [0.5 * cfg.tau, 2.0 * cfg.tau] {
        let (k, _, _) = label_at(template, t, cfg)?;
        cross_check.push((t, k));
    }
    Ok(RegionLabel {
        kind,
        slope,
        evidence,
        cross_check,
    })
}

/// The analytic boundary `rho` for a model family, when one is known.
pub fn analytic_boundary(model: &DetectionModel) -> Result<f64> {
    use crate::distributions::{Calibration, ShapeKind};
    match (model.signal(), model.noise(), model.calibration()) {
        (SignalFamily::Chimeric { shape, .. }, NoiseFamily::UniformUnit, _) => match shape.kind() {
            ShapeKind::PowerLaw { a } if *a >= 0.5 => boundary_powerlaw(model.beta(), *a),
            _ if shape.int_h2().is_some() => boundary_chimeric(model.beta()),
            _ => Err(Error::InvalidModel("no closed-form boundary for this shape".into())),
        },
        (SignalFamily::NormalShift { sigma0 }, _, Calibration::Sparse) => {
            boundary_normal_sparse(model.beta(), *sigma0).map(|b| b.r_star)
        }
        (SignalFamily::NormalShift { .. }, _, Calibration::Dense) => boundary_normal_dense(model.beta()),
        _ => Err(Error::InvalidModel("no closed-form boundary for this model".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::ShapeFunction;
    use approx::assert_relative_eq;

    #[test]
    fn chimeric_constant_on_boundary() {
        let m = DetectionModel::chimeric(1_000_000, 0.75, 0.5, ShapeFunction::constant()).unwrap();
        let r = i_sums(&m, 1.0).unwrap();
        assert_eq!(r.i1, 0.0);
        assert_relative_eq!(r.i2, 1.0 - 1e-3, max_relative = 1e-10);
    }

    #[test]
    fn power_law_i1_closed_form() {
        let (beta, a) = (0.7, 0.5);
        let r = boundary_powerlaw(beta, a).unwrap();
        for &n in &[10_000u64, 1_000_000, 100_000_000] {
            let m = DetectionModel::chimeric(n, beta, r, ShapeFunction::power_law(a).unwrap()).unwrap();
            for &x in &[0.5, 1.0, 3.0] {
                let rep = i_sums(&m, x).unwrap();
                let nf = n as f64;
                let closed = nf.powf(1.0 - beta).min(
                    nf.powf((a - beta + r * (1.0 - a)) / a) * (x / (1.0 - a)).powf(1.0 - 1.0 / a),
                );
                assert_relative_eq!(rep.i1, closed, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn normal_i2_matches_closed_form() {
        // Without truncation, E[g^2] = exp(theta^2/(2-s^2)) / (s sqrt(2-s^2)).
        let m = DetectionModel::normal(10_000, 0.8, 0.3, 0.8).unwrap();
        let rep = i_sums(&m, 1e12).unwrap();
        let (t, s) = (m.theta(), 0.8f64);
        let eps = m.epsilon().unwrap();
        let eg2 = (t * t / (2.0 - s * s)).exp() / (s * (2.0 - s * s).sqrt());
        assert_relative_eq!(rep.i2, 1e4 * eps * eps * (eg2 - 1.0), max_relative = 1e-8);
        assert_eq!(rep.i1, 1e4 * eps * 0.0);
    }

    #[test]
    fn boundaries() {
        assert_eq!(boundary_chimeric(0.75).unwrap(), 0.5);
        assert_eq!(boundary_chimeric(1.0).unwrap(), 1.0);
        assert!(boundary_chimeric(0.5).is_err());
        assert_relative_eq!(boundary_powerlaw(0.7, 0.5).unwrap(), 0.4, epsilon = 1e-15);
        assert_eq!(boundary_powerlaw(0.6, 0.7).unwrap(), 0.0);
        let b = boundary_normal_sparse(0.9, 1.0).unwrap();
        assert_eq!(b.case, NormalCase::II);
        assert_relative_eq!(b.r_star, (1.0 - 0.1f64.sqrt()).powi(2), epsilon = 1e-15);
        assert_eq!(boundary_normal_sparse(0.6, 2.0).unwrap().case, NormalCase::III);
        assert_relative_eq!(boundary_normal_dense(0.1).unwrap(), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn total_variation_of_uniform_block() {
        for &r in &[0.5, 1.0] {
            let m = DetectionModel::chimeric(1_000_000, 0.7, r, ShapeFunction::constant()).unwrap();
            assert_relative_eq!(total_variation(&m).unwrap(), 1.0 - m.kappa(), max_relative = 1e-12);
        }
    }

    #[test]
    fn hn_on_the_support_edge() {
        let n = 100_000u64;
        let m = DetectionModel::chimeric(n, 0.7, 0.6, ShapeFunction::constant()).unwrap();
        let v = m.kappa();
        assert_relative_eq!(hn_v(&m, v).unwrap(), (n as f64).powf(0.1), max_relative = 1e-9);
    }

    #[test]
    fn classifier_examples() {
        let cfg = ClassifierConfig::default();
        let label = |r: f64| {
            let m = DetectionModel::chimeric(1000, 0.7, r, ShapeFunction::constant()).unwrap();
            classify_region(&m, &cfg).unwrap().kind
        };
        assert_eq!(label(0.2), Region::Undetectable);
        assert_eq!(label(0.6), Region::CompletelyDetectable);
        assert_eq!(label(0.4), Region::Detectable);
    }
}
