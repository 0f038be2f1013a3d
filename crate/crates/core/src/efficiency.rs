//! Pitman efficiency of a mismatched log-likelihood ratio test under
//! Gaussian limits, and its asymptotic power.

use crate::detectability::{classify_region, ClassifierConfig, Region};
use crate::distributions::{ls_slope, DetectionModel, NoiseFamily, ShapeFunction, ShapeKind, SignalFamily};
use crate::error::{Error, Result};
use crate::limits::truncate_model;
use crate::normal;
use crate::quadrature::{integrate, integrate_pieces, Tolerance};

const TOL: Tolerance = Tolerance {
    abs: 1e-300,
    rel: 1e-11,
    max_intervals: 4000,
};

/// Grid used to find the limit of `gamma(theta_j, theta_r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitGrid {
    pub n_grid: Vec<u64>,
    /// Successive values must differ by at most `rel * max(|gamma|, 1)`.
    pub rel: f64,
}

impl Default for LimitGrid {
    fn default() -> Self {
        LimitGrid {
            n_grid: (3..=18).map(|k| 10u64.pow(k)).collect(),
            rel: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaLimit {
    pub value: f64,
    /// `n` at which the value was read off.
    pub n: u64,
    /// True when the limit was identified as zero from a power-law decay
    /// rather than by stabilization.
    pub vanishing: bool,
    pub trace: Vec<(u64, f64)>,
}

/// `n eps_j eps_r Cov_{P0}(dmu_j/dP0, dmu_r/dP0)` at the models' common `n`.
pub fn gamma_at(mj: &DetectionModel, mr: &DetectionModel) -> Result<f64> {
    if mj.noise() != mr.noise() {
        return Err(Error::InvalidModel("models must share the noise family".into()));
    }
    if mj.n() != mr.n() {
        return Err(Error::InvalidModel("models must share n".into()));
    }
    let n = mj.n() as f64;
    let (ej, er) = (mj.epsilon()?, mr.epsilon()?);
    if ej == 0.0 || er == 0.0 {
        return Ok(0.0);
    }
    let cov = match (mj.signal(), mr.signal()) {
        (
            SignalFamily::Chimeric {
                shape: hj,
                perturbation: None,
            },
            SignalFamily::Chimeric {
                shape: hr,
                perturbation: None,
            },
        ) => overlap(hj, mj.kappa(), hr, mr.kappa())? - 1.0,
        _ => generic_cov(mj, mr)?,
    };
    Ok(n * ej * er * cov)
}

/// `int_0^1 g_j g_r du` for two chimeric signal densities.
fn overlap(hj: &ShapeFunction, kj: f64, hr: &ShapeFunction, kr: f64) -> Result<f64> {
    let km = kj.min(kr);
    let (sj, sr) = (km / kj, km / kr);
    let v = integrate(|u: f64| hj.eval(u * sj) * hr.eval(u * sr), 0.0, 1.0, TOL)?;
    Ok(v * km / (kj * kr))
}

fn generic_cov(mj: &DetectionModel, mr: &DetectionModel) -> Result<f64> {
    // (g_j - 1)(g_r - 1) avoids the cancellation in int g_j g_r - 1 when
    // both ratios are close to one.
    let dev = |m: &DetectionModel, y: f64| m.ln_signal_density_ratio(y).map(f64::exp_m1).unwrap_or(0.0);
    let mut pts = Vec::new();
    match mj.noise() {
        NoiseFamily::UniformUnit => {
            pts.extend([0.0, 1.0]);
            for m in [mj, mr] {
                let k = m.kappa();
                pts.extend((1..=64).map(|i| k * i as f64 / 64.0).filter(|&x| x < 1.0));
            }
            let f = |y: f64| dev(mj, y) * dev(mr, y);
            integrate_pieces(f, &pts, TOL)
        }
        NoiseFamily::StandardNormal => {
            let spread = [mj, mr].iter().map(|m| sigma_of(m)).fold(1.0, f64::max);
            let (tj, tr) = (mj.theta(), mr.theta());
            let lo = -40.0 * spread + tj.min(tr).min(0.0);
            let hi = 40.0 * spread + (tj + tr).max(0.0) * spread * spread;
            pts.extend((0..=256).map(|i| lo + (hi - lo) * i as f64 / 256.0));
            pts.extend([tj, tr, tj + tr]);
            for m in [mj, mr] {
                pts.extend(cut_points(m));
            }
            pts.retain(|&p| p >= lo && p <= hi);
            let f = |y: f64| dev(mj, y) * dev(mr, y) * normal::pdf(y);
            integrate_pieces(f, &pts, TOL)
        }
    }
}

fn sigma_of(m: &DetectionModel) -> f64 {
    match m.signal() {
        SignalFamily::NormalShift { sigma0 } => *sigma0,
        SignalFamily::Truncated { inner, .. } => match inner.as_ref() {
            SignalFamily::NormalShift { sigma0 } => *sigma0,
            _ => 1.0,
        },
        _ => 1.0,
    }
}

fn cut_points(m: &DetectionModel) -> Vec<f64> {
    if let SignalFamily::Truncated { inner, cap, .. } = m.signal() {
        if let SignalFamily::NormalShift { sigma0 } = inner.as_ref() {
            return crate::distributions::normal_ratio_set(m.theta(), *sigma0, cap.ln(), true)
                .into_iter()
                .flat_map(|(a, b)| [a, b])
                .filter(|x| x.is_finite())
                .collect();
        }
    }
    Vec::new()
}

/// Normal signals are truncated at `eps dmu/dP0 <= 1` first; in Gaussian
/// regimes this leaves the limit law unchanged and removes the jump part
/// that otherwise inflates `gamma`.
fn prepared(template: &DetectionModel, n: u64) -> Result<DetectionModel> {
    let m = template.at_n(n)?;
    match m.signal() {
        SignalFamily::NormalShift { .. } => truncate_model(&m, 1.0),
        _ => Ok(m),
    }
}

/// Limit of `gamma(theta_j, theta_r)` as `n -> inf`.
pub fn gamma_cross(tj: &DetectionModel, tr: &DetectionModel) -> Result<GammaLimit> {
    gamma_cross_with(tj, tr, &LimitGrid::default())
}

pub fn gamma_cross_with(tj: &DetectionModel, tr: &DetectionModel, grid: &LimitGrid) -> Result<GammaLimit> {
    if grid.n_grid.len() < 2 {
        return Err(Error::InvalidModel("limit grid needs at least two points".into()));
    }
    let mut trace: Vec<(u64, f64)> = Vec::with_capacity(grid.n_grid.len());
    let mut stable = None;
    for &n in &grid.n_grid {
        let g = gamma_at(&prepared(tj, n)?, &prepared(tr, n)?)?;
        let close = trace
            .last()
            .is_some_and(|&(_, a)| (g - a).abs() <= grid.rel * g.abs().max(a.abs()).max(1.0));
        trace.push((n, g));
        if close {
            stable = Some((n, g));
        } else if stable.is_some() {
            break;
        }
    }
    if let Some((n, value)) = stable {
        return Ok(GammaLimit {
            value,
            n,
            vanishing: false,
            trace,
        });
    }
    // No stabilization: accept a clean power-law decay to zero.
    let tail = &trace[trace.len().saturating_sub(5)..];
    if tail.iter().all(|&(_, g)| g != 0.0) && tail.windows(2).all(|w| w[1].1.signum() == w[0].1.signum()) {
        let xs: Vec<f64> = tail.iter().map(|&(n, _)| (n as f64).ln()).collect();
        let ys: Vec<f64> = tail.iter().map(|&(_, g)| g.abs().ln()).collect();
        if ls_slope(&xs, &ys) < -0.01 && tail.windows(2).all(|w| w[1].1.abs() < w[0].1.abs()) {
            let (n, _) = *tail.last().expect("non-empty");
            return Ok(GammaLimit {
                value: 0.0,
                n,
                vanishing: true,
                trace,
            });
        }
    }
    if let Some(&(n, g)) = trace.last() {
        if g == 0.0 && trace.iter().rev().take(3).all(|&(_, v)| v == 0.0) {
            return Ok(GammaLimit {
                value: 0.0,
                n,
                vanishing: false,
                trace,
            });
        }
    }
    let shown: Vec<String> = trace.iter().map(|(n, g)| format!("{n:e}: {g:.6e}")).collect();
    Err(Error::NoLimit(format!("gamma did not stabilize [{}]", shown.join(", "))))
}

/// Whether the model sits in a regime with Gaussian limits: detectable,
/// with the large-jump sum `I1` dying out along the grid.
pub fn gaussian_regime(template: &DetectionModel) -> Result<bool> {
    let label = classify_region(template, &ClassifierConfig::default())?;
    if label.kind != Region::Detectable {
        return Ok(false);
    }
    let last = label.evidence.last().map(|e| e.i1).unwrap_or(0.0);
    if last == 0.0 {
        return Ok(true);
    }
    let pts: Vec<(f64, f64)> = label
        .evidence
        .iter()
        .filter(|e| e.i1 > 0.0)
        .map(|e| ((e.n as f64).ln(), e.i1.ln()))
        .collect();
    if pts.len() < 2 {
        return Ok(true);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Ok(ls_slope(&xs, &ys) < -0.01)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreReport {
    pub gamma11: f64,
    pub gamma22: f64,
    pub gamma12: f64,
    pub are: f64,
    /// The raw ratio fell outside `[0, 1]` by more than `1e-9`.
    pub clamped: bool,
    /// `1 - ARE`, the share of observations read as wasted by the
    /// mismatched test.
    pub wasted_fraction: f64,
    /// `ARE`, the share the matched test needs to reach the mismatched
    /// test's power.
    pub matched_fraction: f64,
}

fn are_from(g11: f64, g22: f64, g12: f64) -> Result<AreReport> {
    if !(g11 > 0.0 && g22 > 0.0) {
        return Err(Error::InvalidModel(format!(
            "degenerate efficiency: gamma11 = {g11}, gamma22 = {g22}"
        )));
    }
    let raw = g12 * g12 / (g11 * g22);
    let clamped = !(-1e-9..=1.0 + 1e-9).contains(&raw);
    let are = raw.clamp(0.0, 1.0);
    Ok(AreReport {
        gamma11: g11,
        gamma22: g22,
        gamma12: g12,
        are,
        clamped,
        wasted_fraction: 1.0 - are,
        matched_fraction: are,
    })
}

/// Pitman ARE `gamma12^2 / (gamma11 gamma22)` of the LLR built for `t2`
/// when `t1` is true.
pub fn are(t1: &DetectionModel, t2: &DetectionModel) -> Result<AreReport> {
    for t in [t1, t2] {
        if !gaussian_regime(t)? {
            return Err(Error::InvalidModel(format!(
                "(beta={}, r={}) is not in a Gaussian-limit regime",
                t.beta(),
                t.r()
            )));
        }
    }
    let g11 = gamma_cross(t1, t1)?.value;
    let g22 = gamma_cross(t2, t2)?.value;
    let g12 = gamma_cross(t1, t2)?.value;
    are_from(g11, g22, g12)
}

/// `int_0^1 h1 h2`, in closed form for the built-in shapes.
pub fn shape_inner(h1: &ShapeFunction, h2: &ShapeFunction) -> Result<f64> {
    use ShapeKind::*;
    let pw = |k: &ShapeKind| match k {
        Constant => Some(0.0),
        PowerLaw { a } => Some(*a),
        _ => None,
    };
    match (h1.kind(), h2.kind()) {
        (Linear2x, Linear2x) => Ok(4.0 / 3.0),
        (Linear2x, k) | (k, Linear2x) if pw(k).is_some() => {
            let a = pw(k).expect("checked");
            Ok(2.0 * (1.0 - a) / (2.0 - a))
        }
        (k1, k2) if pw(k1).is_some() && pw(k2).is_some() => {
            let (a, b) = (pw(k1).expect("checked"), pw(k2).expect("checked"));
            if a + b >= 1.0 {
                return Err(Error::Divergent(format!("int h1 h2 diverges (exponents {a}, {b})")));
            }
            Ok((1.0 - a) * (1.0 - b) / (1.0 - a - b))
        }
        _ => integrate(|u: f64| h1.eval(u) * h2.eval(u), 0.0, 1.0, TOL),
    }
}

/// ARE of two chimeric shapes sharing `(beta, r)` on the boundary.
pub fn are_shapes(h1: &ShapeFunction, h2: &ShapeFunction) -> Result<AreReport> {
    are_from(shape_inner(h1, h1)?, shape_inner(h2, h2)?, shape_inner(h1, h2)?)
}

/// Asymptotic power `Phi(gamma12 / sqrt(gamma22) + u_alpha)` of the LLR
/// built for `t2` when `t1` is true.
pub fn mismatched_power(t1: &DetectionModel, t2: &DetectionModel, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("alpha", alpha, "must lie in (0, 1)"));
    }
    let rep = are(t1, t2)?;
    Ok(power_from_gammas(rep.gamma12, rep.gamma22, alpha))
}

pub fn power_from_gammas(gamma12: f64, gamma22: f64, alpha: f64) -> f64 {
    normal::cdf(gamma12 / gamma22.sqrt() + normal::quantile(alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn chim(shape: ShapeFunction) -> DetectionModel {
        DetectionModel::chimeric(1000, 0.75, 0.5, shape).unwrap()
    }

    #[test]
    fn matched_boundary_gamma_is_int_h2() {
        let g = gamma_cross(&chim(ShapeFunction::constant()), &chim(ShapeFunction::constant())).unwrap();
        assert_relative_eq!(g.value, 1.0, max_relative = 1e-6);
        let g = gamma_cross(&chim(ShapeFunction::constant()), &chim(ShapeFunction::linear2x())).unwrap();
        assert_relative_eq!(g.value, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn separating_scales_give_zero() {
        let a = DetectionModel::chimeric(1000, 0.75, 0.5, ShapeFunction::constant()).unwrap();
        let b = DetectionModel::chimeric(1000, 0.7, 0.4, ShapeFunction::constant()).unwrap();
        let g = gamma_cross(&a, &b).unwrap();
        assert_eq!(g.value, 0.0);
        assert!(g.vanishing);
    }

    #[test]
    fn shape_inner_products() {
        let c = ShapeFunction::constant();
        let l = ShapeFunction::linear2x();
        let p = ShapeFunction::power_law(0.25).unwrap();
        assert_eq!(shape_inner(&c, &l).unwrap(), 1.0);
        assert_relative_eq!(shape_inner(&p, &p).unwrap(), 1.125, max_relative = 1e-15);
        assert_relative_eq!(shape_inner(&p, &l).unwrap(), 1.5 / 1.75, max_relative = 1e-15);
        let t = ShapeFunction::tabulated(vec![0.0, 1.0], vec![0.0, 2.0]).unwrap();
        assert_relative_eq!(shape_inner(&t, &c).unwrap(), 1.0, max_relative = 1e-12);
        assert!(shape_inner(&ShapeFunction::power_law(0.5).unwrap(), &ShapeFunction::power_law(0.5).unwrap()).is_err());
        let r = are_shapes(&c, &l).unwrap();
        assert_relative_eq!(r.are, 0.75, max_relative = 1e-15);
    }

    #[test]
    fn power_examples() {
        assert_relative_eq!(power_from_gammas(1.0, 1.0, 0.05), 0.259_511_022_841_444, max_relative = 1e-12);
        assert_relative_eq!(power_from_gammas(0.0, 1.0, 0.05), 0.05, max_relative = 1e-12);
        let p = power_from_gammas(0.75f64.sqrt(), 1.0, 0.05);
        assert_relative_eq!(p, 0.218_040_454_969_026, max_relative = 1e-12);
    }

    #[test]
    fn normal_edge_truncation_halves_gamma() {
        let m = DetectionModel::normal(1000, 0.75, 0.25, 1.0).unwrap();
        let g = gamma_cross(&m, &m).unwrap();
        assert!((g.value - 0.5).abs() < 1e-3, "{g:?}");
    }
}
