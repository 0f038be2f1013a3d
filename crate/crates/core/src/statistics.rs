//! Higher Criticism, its extreme-value calibration, and the log-likelihood
//! ratio of the mixture against pure noise.

use crate::distributions::DetectionModel;
use crate::error::{Error, Result};
use crate::extended::{CompensatedSum, Extended};

/// Value of the Higher Criticism statistic and where the supremum sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HcValue {
    pub value: f64,
    /// Smallest `t` attaining the supremum.
    pub argmax: f64,
    pub k: usize,
}

/// Restrict the supremum to `t_min <= t <= t_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HcOptions {
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for HcOptions {
    fn default() -> Self {
        HcOptions {
            t_min: 0.0,
            t_max: 1.0,
        }
    }
}

/// `sup_t sqrt(k) |F_k(t) - t| / sqrt(t (1 - t))` over `(0, 1)`.
pub fn hc_statistic(pvals: &[f64]) -> Result<HcValue> {
    hc_statistic_with(pvals, HcOptions::default())
}

pub fn hc_statistic_with(pvals: &[f64], opts: HcOptions) -> Result<HcValue> {
    if pvals.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(&p) = pvals.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::domain("p-value", p, "must lie strictly inside (0, 1)"));
    }
    let mut sorted = pvals.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(hc_sorted(&sorted, opts))
}

/// Exact supremum for p-values already sorted ascending.
///
/// Between order statistics the empirical CDF is flat and the standardized
/// difference is monotone, so only the value at each order statistic and the
/// left limit there can be extremal.
pub fn hc_sorted(sorted: &[f64], opts: HcOptions) -> HcValue {
    let k = sorted.len();
    let kf = k as f64;
    let root_k = kf.sqrt();
    let mut best = f64::NEG_INFINITY;
    let mut arg = f64::NAN;
    for (i, &p) in sorted.iter().enumerate() {
        if p < opts.t_min {
            continue;
        }
        if p > opts.t_max {
            break;
        }
        let at = (i + 1) as f64 / kf - p;
        let left = i as f64 / kf - p;
        let dev = at.abs().max(left.abs());
        let v = root_k * dev / (p * (1.0 - p)).sqrt();
        if v > best {
            best = v;
            arg = p;
        }
    }
    if best == f64::NEG_INFINITY {
        best = 0.0;
    }
    HcValue {
        value: best,
        argmax: arg,
        k,
    }
}

/// Centering and scaling `(a_k, b_k)` so that `a_k HC - b_k` is
/// asymptotically double-Gumbel.
pub fn hc_normalizers(k: usize) -> Result<(f64, f64)> {
    if k < 16 {
        return Err(Error::domain("k", k as f64, "normalizers need k >= 16"));
    }
    let ll = (k as f64).ln().ln();
    let a = (2.0 * ll).sqrt();
    let b = 2.0 * ll + 0.5 * ll.ln() - 0.5 * std::f64::consts::PI.ln();
    Ok((a, b))
}

/// CDF of the limit law `exp(-2 exp(-x))`.
pub fn lambda2_cdf(x: f64) -> f64 {
    (-2.0 * (-x).exp()).exp()
}

pub fn lambda2_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain("q", q, "must lie in (0, 1)"));
    }
    Ok(-(-q.ln() / 2.0).ln())
}

/// Asymptotic level-`alpha` critical value of HC with `k` p-values.
pub fn hc_asymptotic_critical(k: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("alpha", alpha, "must lie in (0, 1)"));
    }
    let (a, b) = hc_normalizers(k)?;
    Ok((lambda2_quantile(1.0 - alpha)? + b) / a)
}

/// Log-likelihood ratio `sum log dQ/dP0 (y_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlrValue {
    pub value: Extended,
    pub terms: usize,
}

/// `log(1 - eps + eps g)` from `log g`, stable for tiny `eps` and huge `g`.
#[inline]
pub fn ln_mixture_term(eps: f64, ln_g: f64) -> f64 {
    if ln_g > 700.0 {
        let lead = eps.ln() + ln_g;
        return lead + ((1.0 - eps) * (-lead).exp()).ln_1p();
    }
    let x = eps * ln_g.exp_m1();
    ln_1p_fast(x)
}

/// `log(1 + x)` with a short series for tiny arguments.
#[inline]
pub fn ln_1p_fast(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        x - 0.5 * x2 + x2 * x * (1.0 / 3.0 - 0.25 * x)
    } else {
        x.ln_1p()
    }
}

pub fn llr_statistic(model: &DetectionModel, obs: &[f64]) -> Result<LlrValue> {
    if obs.is_empty() {
        return Err(Error::Empty);
    }
    let eps = model.epsilon()?;
    let mut sum = CompensatedSum::new();
    for &y in obs {
        let ln_g = model.ln_signal_density_ratio(y)?;
        let t = ln_mixture_term(eps, ln_g);
        if t == f64::NEG_INFINITY {
            return Ok(LlrValue {
                value: Extended::NegInf,
                terms: obs.len(),
            });
        }
        sum.add(t);
    }
    Ok(LlrValue {
        value: Extended::from(sum.value()),
        terms: obs.len(),
    })
}

/// Linear statistic `Z_n = sum eps (dmu/dP0 (y_i) - 1)`.
pub fn zn_statistic(model: &DetectionModel, obs: &[f64]) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::Empty);
    }
    let eps = model.epsilon()?;
    let mut sum = CompensatedSum::new();
    for &y in obs {
        let ln_g = model.ln_signal_density_ratio(y)?;
        sum.add(eps * ln_g.exp_m1());
    }
    Ok(sum.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Brute-force reference: evaluate the standardized difference on a fine
    // grid plus just left and right of every p-value.
    fn hc_grid_oracle(p: &[f64]) -> f64 {
        let k = p.len() as f64;
        let f = |t: f64| p.iter().filter(|&&x| x <= t).count() as f64 / k;
        let mut pts: Vec<f64> = (1..20000).map(|i| i as f64 / 20000.0).collect();
        for &x in p {
            pts.push(x);
            pts.push(x * (1.0 - 1e-12));
        }
        pts.iter()
            .map(|&t| k.sqrt() * (f(t) - t).abs() / (t * (1.0 - t)).sqrt())
            .fold(0.0, f64::max)
    }

    #[test]
    fn hc_agrees_with_grid_oracle() {
        let p = [0.01, 0.2, 0.5, 0.93];
        let v = hc_statistic(&p).unwrap();
        assert_relative_eq!(v.value, hc_grid_oracle(&p), max_relative = 1e-6);
        // sqrt(4) * |1/4 - 0.01| / sqrt(0.01 * 0.99)
        assert_relative_eq!(v.value, 2.0 * 0.24 / (0.0099f64).sqrt(), max_relative = 1e-12);
        assert_eq!(v.argmax, 0.01);
    }

    #[test]
    fn hc_ties_and_extremes() {
        let v = hc_statistic(&[0.5, 0.5]).unwrap();
        // Left limit at 0.5 gives |0 - 0.5|, the value there |1 - 0.5|.
        assert_relative_eq!(v.value, 2f64.sqrt() * 0.5 / 0.5, max_relative = 1e-12);
        let v = hc_statistic(&[1e-15]).unwrap();
        assert!(v.value > 3e7);
    }

    #[test]
    fn hc_rejects_bad_input() {
        assert_eq!(hc_statistic(&[]), Err(Error::Empty));
        assert!(hc_statistic(&[0.2, 1.0]).is_err());
        assert!(hc_statistic(&[0.0]).is_err());
    }

    #[test]
    fn normalizers_and_critical_value() {
        let (a, b) = hc_normalizers(1_000_000).unwrap();
        let ll = (1e6f64).ln().ln();
        assert_relative_eq!(a, (2.0 * ll).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(a, 2.291_633_44, max_relative = 1e-8);
        assert_relative_eq!(b, 2.0 * ll + 0.5 * ll.ln() - 0.5 * std::f64::consts::PI.ln(), max_relative = 1e-15);
        assert!(hc_normalizers(15).is_err());
        let c = hc_asymptotic_critical(1_000_000, 0.05).unwrap();
        assert_relative_eq!(c, (-(-(0.95f64).ln() / 2.0).ln() + b) / a, max_relative = 1e-14);
        assert_relative_eq!(lambda2_cdf(lambda2_quantile(0.95).unwrap()), 0.95, max_relative = 1e-14);
    }

    #[test]
    fn ln_mixture_term_is_stable() {
        let eps = 1e-9;
        assert_relative_eq!(ln_mixture_term(eps, 0.3), (eps * 0.3f64.exp_m1()).ln_1p(), max_relative = 1e-15);
        let big = ln_mixture_term(0.01, 800.0);
        assert_relative_eq!(big, 0.01f64.ln() + 800.0, max_relative = 1e-15);
        assert_relative_eq!(ln_mixture_term(0.5, f64::NEG_INFINITY), 0.5f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn llr_and_zn_on_a_toy_sample() {
        use crate::distributions::ShapeFunction;
        let m = DetectionModel::chimeric(100, 0.5, 0.5, ShapeFunction::constant()).unwrap();
        // eps = 0.1, kappa = 0.1: ratio 10 on (0, 0.1), 0 elsewhere.
        let obs = [0.05, 0.5, 0.7];
        let llr = llr_statistic(&m, &obs).unwrap();
        let expected = (0.9f64 + 1.0).ln() + 2.0 * 0.9f64.ln();
        assert_relative_eq!(llr.value.finite().unwrap(), expected, max_relative = 1e-14);
        let z = zn_statistic(&m, &obs).unwrap();
        assert_relative_eq!(z, 0.1 * 9.0 - 0.2, max_relative = 1e-14);
    }
}
