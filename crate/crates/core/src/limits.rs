//! Limit laws of the log-likelihood ratio: Gaussian pairs, infinitely
//! divisible pairs linked by `d eta_2 / d eta_1 = e^x`, point masses at
//! `+inf`, and the truncation / Lebesgue-decomposition transforms.

use num_complex::Complex64;
use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::distributions::{signal_mass_at_most, DetectionModel, ShapeFunction, SignalFamily};
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::quadrature::{integrate, Tolerance};

const TOL: Tolerance = Tolerance {
    abs: 1e-13,
    rel: 1e-10,
    max_intervals: 4000,
};

/// Lévy measure on `(0, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub enum LevyMeasure {
    Zero,
    /// `(location, mass)` pairs, locations positive.
    Atoms(Vec<(f64, f64)>),
    /// Density `k (e^x - 1)^(-p-1) e^x`: in `u = e^x - 1` this is
    /// `k u^(-p-1) du`.
    PowerExcess { k: f64, p: f64 },
    /// Image of Lebesgue measure on `(0, 1)` under `u -> log(1 + h(u))`.
    ShapeImage(ShapeFunction),
}

fn softplus(w: f64) -> f64 {
    if w > 0.0 {
        w + (-w).exp().ln_1p()
    } else {
        w.exp().ln_1p()
    }
}

/// `1 - e^x + x/(1+x^2)` without cancellation near zero.
fn gamma1_kernel(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        -0.5 * x2 - 7.0 / 6.0 * x2 * x - x2 * x2 / 24.0 + 119.0 / 120.0 * x2 * x2 * x
    } else {
        -x.exp_m1() + x / (1.0 + x * x)
    }
}

/// `e^{itx} - 1 - itx/(1+x^2)` without cancellation near zero.
fn lk_kernel(t: f64, x: f64) -> Complex64 {
    let tx = t * x;
    let half = (0.5 * tx).sin();
    let re = -2.0 * half * half;
    let sin_minus = if tx.abs() < 1e-2 {
        let t3 = tx * tx * tx;
        -t3 / 6.0 + t3 * tx * tx / 120.0
    } else {
        tx.sin() - tx
    };
    let im = sin_minus + tx * x * x / (1.0 + x * x);
    Complex64::new(re, im)
}

impl LevyMeasure {
    /// Density w.r.t. Lebesgue measure, where it exists.
    pub fn density(&self, x: f64, tilted: bool) -> Option<f64> {
        let tilt = if tilted { x.exp() } else { 1.0 };
        match self {
            LevyMeasure::Zero => Some(0.0),
            LevyMeasure::PowerExcess { k, p } => {
                if x <= 0.0 {
                    return Some(0.0);
                }
                Some(k * x.exp_m1().powf(-p - 1.0) * x.exp() * tilt)
            }
            _ => None,
        }
    }

    /// Lévy validity: `int min(x^2, 1) d eta < inf`; with `needs_exp_tail`
    /// also `int_{x > 1} e^x d eta < inf`.
    pub fn validate(&self, needs_exp_tail: bool) -> Result<()> {
        match self {
            LevyMeasure::PowerExcess { k, p } => {
                if !(k.is_finite() && *k > 0.0) {
                    return Err(Error::InvalidModel(format!("Lévy density scale {k} must be positive")));
                }
                if *p >= 2.0 {
                    return Err(Error::Divergent(format!(
                        "int x^2 d eta diverges at 0 (density ~ x^-{})",
                        p + 1.0
                    )));
                }
                if *p <= 0.0 || (needs_exp_tail && *p <= 1.0) {
                    return Err(Error::Divergent(format!(
                        "int e^x d eta diverges at infinity (exponent {p})"
                    )));
                }
                Ok(())
            }
            LevyMeasure::Atoms(a) => {
                if a.iter().any(|&(x, m)| !(x > 0.0 && x.is_finite() && m >= 0.0 && m.is_finite())) {
                    return Err(Error::InvalidModel("atoms need positive finite locations and masses".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `int f d eta` (times `e^x` when tilted). `freq` bounds the
    /// oscillation rate of `f` so panels can be sized accordingly.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, tilted: bool, freq: f64) -> Result<f64> {
        let tilt = if tilted { 1.0 } else { 0.0 };
        match self {
            LevyMeasure::Zero => Ok(0.0),
            LevyMeasure::Atoms(atoms) => Ok(atoms.iter().map(|&(x, m)| m * f(x) * (tilt * x).exp()).sum()),
            LevyMeasure::ShapeImage(shape) => {
                shape.integrate_composed(|h| f(h.ln_1p()) * (1.0 + h).powf(tilt), 0.0, 1.0)
            }
            LevyMeasure::PowerExcess { k, p } => {
                self.validate(tilted)?;
                let (k, p) = (*k, *p);
                // w = log(e^x - 1): d eta = k e^{-p w} (1 + e^w)^tilt dw.
                let g = |w: f64| {
                    let ln_w = k.ln() - p * w + if tilted { softplus(w) } else { 0.0 };
                    if !(ln_w > -745.0) {
                        return 0.0;
                    }
                    let val = f(softplus(w));
                    if val == 0.0 {
                        return 0.0;
                    }
                    val * ln_w.exp()
                };
                let left_edge = -8.0;
                let mut total = integrate(g, f64::NEG_INFINITY, left_edge, TOL)?;
                // Beyond w_r the mass e^{(tilt-p) w} is negligible.
                let decay = p - tilt;
                let w_r = ((1e-15 * decay / k).ln() / -decay).clamp(10.0, 2000.0);
                let width = if freq > 0.0 {
                    (std::f64::consts::PI / (4.0 * freq)).min(1.0)
                } else {
                    2.0
                };
                let pieces = ((w_r - left_edge) / width).ceil() as usize;
                for i in 0..pieces {
                    let a = left_edge + i as f64 * width;
                    let b = (a + width).min(w_r);
                    total += integrate(g, a, b, TOL)?;
                }
                if freq == 0.0 {
                    total += integrate(g, w_r, f64::INFINITY, TOL)?;
                }
                Ok(total)
            }
        }
    }

    /// `eta((x, inf))` (with the `e^x` tilt when asked).
    pub fn tail(&self, x: f64, tilted: bool) -> Result<f64> {
        match self {
            LevyMeasure::Zero => Ok(0.0),
            LevyMeasure::Atoms(atoms) => Ok(atoms
                .iter()
                .filter(|a| a.0 > x)
                .map(|&(y, m)| if tilted { m * y.exp() } else { m })
                .sum()),
            LevyMeasure::PowerExcess { k, p } => {
                let u = x.exp_m1();
                let base = k / p * u.powf(-p);
                if tilted {
                    Ok(base + k / (p - 1.0) * u.powf(1.0 - p))
                } else {
                    Ok(base)
                }
            }
            LevyMeasure::ShapeImage(shape) => {
                let c = x.exp_m1();
                let mut v = 0.0;
                for (lo, hi) in shape.above(c) {
                    v += shape.integrate_composed(|h| if tilted { 1.0 + h } else { 1.0 }, lo, hi)?;
                }
                Ok(v)
            }
        }
    }
}

/// `(gamma, sigma^2, eta)` in the Lévy-Khintchine form with truncation
/// function `x / (1 + x^2)`. When `tilted`, the measure is `e^x eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyTriple {
    pub gamma: f64,
    pub sigma2: f64,
    pub eta: LevyMeasure,
    pub tilted: bool,
}

impl LevyTriple {
    pub fn degenerate(c: f64) -> Self {
        LevyTriple {
            gamma: c,
            sigma2: 0.0,
            eta: LevyMeasure::Zero,
            tilted: false,
        }
    }

    /// Characteristic exponent at `t`.
    pub fn cf_exponent(&self, t: f64) -> Result<Complex64> {
        let mut z = Complex64::new(-0.5 * self.sigma2 * t * t, self.gamma * t);
        if t != 0.0 && self.eta != LevyMeasure::Zero {
            let re = self.eta.integrate(|x| lk_kernel(t, x).re, self.tilted, t.abs())?;
            let im = self.eta.integrate(|x| lk_kernel(t, x).im, self.tilted, t.abs())?;
            z += Complex64::new(re, im);
        }
        Ok(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Null,
    Alternative,
}

/// Limits of the log-likelihood ratio under null and alternative.
#[derive(Debug, Clone, PartialEq)]
pub enum LimitPair {
    /// Null law at `-inf`, alternative at `+inf`.
    FullyInformative,
    /// Alternative law `a rho + (1 - a) delta_{+inf}` with `rho` given by
    /// the alternative triple.
    Regular {
        null: LevyTriple,
        alt: LevyTriple,
        a: f64,
    },
}

impl LimitPair {
    /// Mass the alternative limit puts at `+inf`.
    pub fn mass_at_inf(&self) -> f64 {
        match self {
            LimitPair::FullyInformative => 1.0,
            LimitPair::Regular { a, .. } => 1.0 - a,
        }
    }

    pub fn triple(&self, side: Side) -> Option<&LevyTriple> {
        match (self, side) {
            (LimitPair::Regular { null, .. }, Side::Null) => Some(null),
            (LimitPair::Regular { alt, .. }, Side::Alternative) => Some(alt),
            _ => None,
        }
    }

    /// True when both limits are the same point mass.
    pub fn is_uninformative(&self) -> bool {
        match self {
            LimitPair::Regular { null, alt, a } => {
                null == alt && null.sigma2 == 0.0 && null.eta == LevyMeasure::Zero && *a == 1.0
            }
            _ => false,
        }
    }
}

/// `(gamma_1, gamma_2)` from the null Lévy measure, the Gaussian variance
/// and the alternative's mass at infinity.
pub fn gamma_from_eta(eta1: &LevyMeasure, sigma2: f64, mass_at_inf: f64) -> Result<(f64, f64)> {
    if sigma2 < 0.0 {
        return Err(Error::domain("sigma^2", sigma2, "must be non-negative"));
    }
    if mass_at_inf < 0.0 {
        return Err(Error::domain("mass at infinity", mass_at_inf, "must be non-negative"));
    }
    eta1.validate(true)?;
    let i1 = eta1.integrate(gamma1_kernel, false, 0.0)?;
    let i2 = eta1.integrate(|x| x.exp_m1() * x / (1.0 + x * x), false, 0.0)?;
    let g1 = -mass_at_inf - 0.5 * sigma2 + i1;
    Ok((g1, g1 + sigma2 + i2))
}

/// Build a pair from its null Lévy measure.
pub fn pair_from_eta(eta1: LevyMeasure, sigma2: f64, mass_at_inf: f64) -> Result<LimitPair> {
    let (g1, g2) = gamma_from_eta(&eta1, sigma2, mass_at_inf)?;
    Ok(LimitPair::Regular {
        null: LevyTriple {
            gamma: g1,
            sigma2,
            eta: eta1.clone(),
            tilted: false,
        },
        alt: LevyTriple {
            gamma: g2,
            sigma2,
            eta: eta1,
            tilted: true,
        },
        a: (-mass_at_inf).exp(),
    })
}

pub fn gaussian_pair(sigma2: f64) -> Result<LimitPair> {
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::domain("sigma^2", sigma2, "must be finite and non-negative"));
    }
    pair_from_eta(LevyMeasure::Zero, sigma2, 0.0)
}

pub fn triple_chimeric_boundary(k: f64, shape: &ShapeFunction) -> Result<LimitPair> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::domain("K", k, "must lie in (0, inf)"));
    }
    let m2 = shape
        .int_h2()
        .ok_or_else(|| Error::Divergent(format!("int h^2 is infinite for {}", shape.label())))?;
    gaussian_pair(k * m2)
}

/// Limit on the power-law boundary; the null measure has density
/// `((1-a)^(1/a) / a) e^x (e^x - 1)^(-1/a - 1)`.
pub fn triple_powerlaw_boundary(a: f64) -> Result<LimitPair> {
    if !(0.5..1.0).contains(&a) {
        return Err(Error::domain("a", a, "must lie in [1/2, 1)"));
    }
    let eta = LevyMeasure::PowerExcess {
        k: (1.0 - a).powf(1.0 / a) / a,
        p: 1.0 / a,
    };
    pair_from_eta(eta, 0.0, 0.0)
}

/// Constants `(c1, c2, c3, c4)` of the quadratic-log normal limit.
pub fn normal_quadratic_constants(beta: f64, sigma0: f64) -> (f64, f64, f64, f64) {
    let s = (1.0 - beta).sqrt();
    let c4 = sigma0 - s;
    let c3 = sigma0 / c4 - s;
    let c2 = (sigma0 - 2.0 * s) / c4;
    let c1 = 2.0 * std::f64::consts::PI.sqrt() * sigma0.powf(c3) * c4;
    (c1, c2, c3, c4)
}

pub fn triple_normal_quadratic(beta: f64, sigma0: f64) -> Result<LimitPair> {
    use crate::detectability::{boundary_normal_sparse, NormalCase};
    let b = boundary_normal_sparse(beta, sigma0)?;
    if matches!(b.case, NormalCase::I | NormalCase::III) {
        return Err(Error::InvalidModel(format!(
            "(beta={beta}, sigma0={sigma0}) is not on a quadratic branch of the boundary"
        )));
    }
    let (c1, c2, _, _) = normal_quadratic_constants(beta, sigma0);
    let eta = LevyMeasure::PowerExcess { k: 1.0 / c1, p: 2.0 - c2 };
    pair_from_eta(eta, 0.0, 0.0)
}

fn near_one(r: f64) -> bool {
    (r - 1.0).abs() < 1e-12
}

/// Chimeric limits at `beta = 1`.
pub fn triple_beta1(shape: &ShapeFunction, r: f64) -> Result<LimitPair> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain("r", r, "must be positive"));
    }
    if near_one(r) {
        pair_from_eta(LevyMeasure::ShapeImage(shape.clone()), 0.0, 0.0)
    } else if r < 1.0 {
        gaussian_pair(0.0)
    } else {
        pair_from_eta(LevyMeasure::Zero, 0.0, 1.0)
    }
}

/// Normal-mixture limits at `beta = 1`.
pub fn triple_normal_beta1(r: f64) -> Result<LimitPair> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain("r", r, "must be positive"));
    }
    if near_one(r) {
        pair_from_eta(LevyMeasure::Zero, 0.0, 0.5)
    } else if r < 1.0 {
        gaussian_pair(0.0)
    } else {
        pair_from_eta(LevyMeasure::Zero, 0.0, 1.0)
    }
}

/// Characteristic function of one side. For the alternative this is
/// `E[e^{itX}; X finite]`.
pub fn cf_eval(pair: &LimitPair, side: Side, t: f64) -> Result<Complex64> {
    match pair {
        LimitPair::FullyInformative => Err(Error::InvalidModel(
            "fully informative limits have no finite part".into(),
        )),
        LimitPair::Regular { null, alt, a } => match side {
            Side::Null => Ok(null.cf_exponent(t)?.exp()),
            Side::Alternative => Ok(alt.cf_exponent(t)?.exp() * *a),
        },
    }
}

/// Shift by the limit `c` of the singular part's mass.
pub fn lebesgue_shift(pair: &LimitPair, c: f64) -> Result<LimitPair> {
    if c.is_nan() || c < 0.0 {
        return Err(Error::domain("c", c, "must be non-negative"));
    }
    if c == f64::INFINITY {
        return Ok(LimitPair::FullyInformative);
    }
    match pair {
        LimitPair::FullyInformative => Ok(LimitPair::FullyInformative),
        LimitPair::Regular { null, alt, a } => {
            let mut null = null.clone();
            let mut alt = alt.clone();
            null.gamma -= c;
            alt.gamma -= c;
            Ok(LimitPair::Regular {
                null,
                alt,
                a: a * (-c).exp(),
            })
        }
    }
}

/// Truncate the signal at `eps dmu/dP0 <= tau`, returning the model with
/// `eps~ = eps mu(kept)` and `mu` conditioned on the kept set.
pub fn truncate_model(model: &DetectionModel, tau: f64) -> Result<DetectionModel> {
    if !(tau > 0.0) {
        return Err(Error::domain("tau", tau, "must be positive"));
    }
    let eps = model.epsilon()?;
    if eps == 0.0 {
        return Ok(model.clone());
    }
    let cap = tau / eps;
    let kept = signal_mass_at_most(model.signal(), model, cap)?;
    if kept >= 1.0 {
        return Ok(model.clone());
    }
    let signal = SignalFamily::Truncated {
        inner: Box::new(model.signal().clone()),
        cap,
        kept_mass: kept,
    };
    model.clone().with_signal(signal).with_epsilon(eps * kept)
}

/// Controls the small-jump approximation of [`LimitSampler`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    /// Jumps below this size are replaced by a Gaussian.
    pub cutoff: f64,
    /// Upper bound on the expected number of exact jumps per draw; the cutoff
    /// is raised until it holds.
    pub max_rate: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            cutoff: 1e-4,
            max_rate: 64.0,
        }
    }
}

/// Precomputed sampler for one side of a limit pair.
#[derive(Debug, Clone)]
pub struct LimitSampler {
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Constant(Extended),
    Levy {
        p_finite: f64,
        shift: f64,
        sd: f64,
        rate: f64,
        jumps: JumpLaw,
    },
}

#[derive(Debug, Clone)]
enum JumpLaw {
    None,
    Atoms { cum: Vec<f64>, locs: Vec<f64> },
    Power { u_cut: f64, p: f64, w_first: f64 },
    Shape { shape: ShapeFunction, tilted: bool },
}

impl LimitSampler {
    pub fn new(pair: &LimitPair, side: Side, cfg: SamplerConfig) -> Result<Self> {
        let (triple, a) = match pair {
            LimitPair::FullyInformative => {
                let v = match side {
                    Side::Null => Extended::NegInf,
                    Side::Alternative => Extended::PosInf,
                };
                return Ok(LimitSampler {
                    kind: SamplerKind::Constant(v),
                });
            }
            LimitPair::Regular { null, alt, a } => match side {
                Side::Null => (null, 1.0),
                Side::Alternative => (alt, *a),
            },
        };
        let tilted = triple.tilted;
        let eta = &triple.eta;
        eta.validate(false)?;
        let mut var = triple.sigma2;
        let mut shift = triple.gamma;
        let (rate, jumps) = match eta {
            LevyMeasure::Zero => (0.0, JumpLaw::None),
            LevyMeasure::Atoms(atoms) => {
                let weights: Vec<f64> = atoms
                    .iter()
                    .map(|&(x, m)| if tilted { m * x.exp() } else { m })
                    .collect();
                let total: f64 = weights.iter().sum();
                let mut acc = 0.0;
                let cum = weights
                    .iter()
                    .map(|w| {
                        acc += w / total;
                        acc
                    })
                    .collect();
                shift -= eta.integrate(|x| x / (1.0 + x * x), tilted, 0.0)?;
                (
                    total,
                    JumpLaw::Atoms {
                        cum,
                        locs: atoms.iter().map(|a| a.0).collect(),
                    },
                )
            }
            LevyMeasure::ShapeImage(shape) => {
                let total = eta.tail(0.0, tilted)?;
                shift -= eta.integrate(|x| x / (1.0 + x * x), tilted, 0.0)?;
                (
                    total,
                    JumpLaw::Shape {
                        shape: shape.clone(),
                        tilted,
                    },
                )
            }
            LevyMeasure::PowerExcess { k, p } => {
                let (k, p) = (*k, *p);
                // Raise the cutoff until the big-jump rate is affordable.
                let mut delta = cfg.cutoff.max(1e-12);
                if eta.tail(delta, tilted)? > cfg.max_rate {
                    let (mut lo, mut hi) = (delta, 50.0);
                    for _ in 0..200 {
                        let mid = (lo * hi).sqrt();
                        if eta.tail(mid, tilted)? > cfg.max_rate {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    delta = hi;
                }
                let below = |x: f64| x <= delta;
                let small_mean = eta.integrate(|x| if below(x) { x * x * x / (1.0 + x * x) } else { 0.0 }, tilted, 0.0)?;
                let small_var = eta.integrate(|x| if below(x) { x * x } else { 0.0 }, tilted, 0.0)?;
                let big_comp = eta.integrate(|x| if below(x) { 0.0 } else { x / (1.0 + x * x) }, tilted, 0.0)?;
                shift += small_mean - big_comp;
                var += small_var;
                let u_cut = delta.exp_m1();
                let first = k / p * u_cut.powf(-p);
                let rate = eta.tail(delta, tilted)?;
                (
                    rate,
                    JumpLaw::Power {
                        u_cut,
                        p,
                        w_first: if tilted { first / rate } else { 1.0 },
                    },
                )
            }
        };
        Ok(LimitSampler {
            kind: SamplerKind::Levy {
                p_finite: a,
                shift,
                sd: var.sqrt(),
                rate,
                jumps,
            },
        })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Extended {
        match &self.kind {
            SamplerKind::Constant(v) => *v,
            SamplerKind::Levy {
                p_finite,
                shift,
                sd,
                rate,
                jumps,
            } => {
                if *p_finite < 1.0 && rng.random::<f64>() >= *p_finite {
                    return Extended::PosInf;
                }
                let mut x = *shift;
                if *sd > 0.0 {
                    let z: f64 = rng.sample(StandardNormal);
                    x += sd * z;
                }
                if *rate > 0.0 {
                    let count = Poisson::new(*rate).map(|d| d.sample(rng) as u64).unwrap_or(0);
                    for _ in 0..count {
                        x += jumps.draw(rng);
                    }
                }
                Extended::Finite(x)
            }
        }
    }
}

impl JumpLaw {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JumpLaw::None => 0.0,
            JumpLaw::Atoms { cum, locs } => {
                let u: f64 = rng.random();
                let i = cum.partition_point(|&c| c < u).min(locs.len() - 1);
                locs[i]
            }
            JumpLaw::Power { u_cut, p, w_first } => {
                let v: f64 = rng.sample(Open01);
                let expo = if rng.random::<f64>() < *w_first { *p } else { p - 1.0 };
                (u_cut * v.powf(-1.0 / expo)).ln_1p()
            }
            JumpLaw::Shape { shape, tilted } => {
                // Tilted image: (1 + h) du = du + h du, each of mass one.
                let u: f64 = rng.sample(Open01);
                let pos = if *tilted && rng.random::<bool>() { shape.quantile(u) } else { u };
                shape.eval(pos).ln_1p()
            }
        }
    }
}

/// One draw; builds the sampler each time, so prefer [`LimitSampler`] for
/// repeated use.
pub fn sample_limit<R: Rng + ?Sized>(pair: &LimitPair, side: Side, rng: &mut R) -> Result<Extended> {
    Ok(LimitSampler::new(pair, side, SamplerConfig::default())?.draw(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_of_a_unit_atom() {
        let l2 = 2f64.ln();
        let (g1, g2) = gamma_from_eta(&LevyMeasure::Atoms(vec![(l2, 1.0)]), 0.0, 0.0).unwrap();
        assert_relative_eq!(g1, -1.0 + l2 / (1.0 + l2 * l2), max_relative = 1e-14);
        assert_relative_eq!(g1, -0.531_800_621_807_344, max_relative = 1e-12);
        assert_relative_eq!(g2, g1 + l2 / (1.0 + l2 * l2), max_relative = 1e-14);
    }

    #[test]
    fn gamma_trivial_cases() {
        let (g1, g2) = gamma_from_eta(&LevyMeasure::Zero, 1.0, 0.0).unwrap();
        assert_eq!((g1, g2), (-0.5, 0.5));
        let (g1, _) = gamma_from_eta(&LevyMeasure::Zero, 0.0, 1.0).unwrap();
        assert_eq!(g1, -1.0);
    }

    #[test]
    fn shape_image_of_constant_is_the_log2_atom() {
        let a = triple_beta1(&ShapeFunction::constant(), 1.0).unwrap();
        let l2 = 2f64.ln();
        let b = pair_from_eta(LevyMeasure::Atoms(vec![(l2, 1.0)]), 0.0, 0.0).unwrap();
        let (LimitPair::Regular { null: na, .. }, LimitPair::Regular { null: nb, .. }) = (&a, &b) else {
            panic!()
        };
        assert_relative_eq!(na.gamma, nb.gamma, max_relative = 1e-12);
        for &t in &[0.3, 1.0, 2.5] {
            let ca = cf_eval(&a, Side::Alternative, t).unwrap();
            let cb = cf_eval(&b, Side::Alternative, t).unwrap();
            assert!((ca - cb).norm() < 1e-12);
        }
    }

    #[test]
    fn cf_of_atom() {
        let l2 = 2f64.ln();
        let t = LevyTriple {
            gamma: 0.0,
            sigma2: 0.0,
            eta: LevyMeasure::Atoms(vec![(l2, 1.0)]),
            tilted: false,
        };
        let z = t.cf_exponent(1.0).unwrap().exp();
        let i = Complex64::i();
        let expected = ((i * l2).exp() - 1.0 - i * l2 / (1.0 + l2 * l2)).exp();
        assert!((z - expected).norm() < 1e-14);
        assert_eq!(t.cf_exponent(0.0).unwrap().exp(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn power_law_tail_matches_quadrature() {
        let a = 0.75;
        let LimitPair::Regular { null, .. } = triple_powerlaw_boundary(a).unwrap() else {
            panic!()
        };
        for &x in &[0.05f64, 0.5, 2.0] {
            let closed = (x.exp_m1() / (1.0 - a)).powf(-1.0 / a);
            let quad = null.eta.integrate(|y| if y > x { 1.0 } else { 0.0 }, false, 0.0).unwrap();
            assert_relative_eq!(null.eta.tail(x, false).unwrap(), closed, max_relative = 1e-12);
            assert_relative_eq!(quad, closed, max_relative = 1e-8);
            let m_closed = (x.exp_m1() / (1.0 - a)).powf(1.0 - 1.0 / a);
            let m_quad = null.eta.integrate(|y| if y > x { y.exp_m1() } else { 0.0 }, false, 0.0).unwrap();
            assert_relative_eq!(m_quad, m_closed, max_relative = 1e-8);
        }
    }

    #[test]
    fn half_power_law_is_not_a_levy_measure() {
        assert!(matches!(triple_powerlaw_boundary(0.5), Err(Error::Divergent(_))));
    }

    #[test]
    fn normal_quadratic_constants_at_beta_09() {
        let (c1, c2, c3, c4) = normal_quadratic_constants(0.9, 1.0);
        let s = 0.1f64.sqrt();
        assert_relative_eq!(c4, 1.0 - s, max_relative = 1e-15);
        assert_relative_eq!(c4, 0.683_772_233_983_162, max_relative = 1e-14);
        assert_relative_eq!(c2, 0.537_524_704_425_736, max_relative = 1e-12);
        assert_relative_eq!(c3, 1.0 / c4 - s, max_relative = 1e-15);
        assert_relative_eq!(c1, 2.0 * std::f64::consts::PI.sqrt() * c4, max_relative = 1e-15);
        assert!(triple_normal_quadratic(0.6, 1.0).is_err());
        assert!(triple_normal_quadratic(0.9, 1.0).is_ok());
    }

    #[test]
    fn lebesgue_shift_cases() {
        let p = gaussian_pair(0.0).unwrap();
        assert_eq!(lebesgue_shift(&p, 0.0).unwrap(), p);
        let s = lebesgue_shift(&p, 1.0).unwrap();
        let b = triple_beta1(&ShapeFunction::constant(), 2.0).unwrap();
        let (LimitPair::Regular { null: n1, alt: a1, a: m1 }, LimitPair::Regular { null: n2, alt: a2, a: m2 }) = (&s, &b)
        else {
            panic!()
        };
        assert_eq!(n1.gamma, n2.gamma);
        assert_eq!(a1.gamma, a2.gamma);
        assert_relative_eq!(*m1, *m2, max_relative = 1e-15);
        assert_eq!(lebesgue_shift(&p, f64::INFINITY).unwrap(), LimitPair::FullyInformative);
        assert!(lebesgue_shift(&p, -1.0).is_err());
    }

    #[test]
    fn truncation_branches() {
        let m = DetectionModel::chimeric(10_000, 0.6, 0.5, ShapeFunction::constant()).unwrap();
        // eps / kappa = 10^-0.4 < 1: nothing is cut.
        assert_eq!(truncate_model(&m, 1.0).unwrap(), m);
        let eps = m.epsilon().unwrap();
        let tau = 0.5 * eps / m.kappa();
        let t = truncate_model(&m, tau).unwrap();
        assert_eq!(t.epsilon().unwrap(), 0.0);
        assert_eq!(t.signal_density_ratio(0.003).unwrap(), 1.0);
    }
}
