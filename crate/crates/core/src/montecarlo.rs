//! Monte Carlo harness: critical values, size and power, phase sweeps and
//! Kolmogorov-Smirnov checks. Every replication draws from its own
//! `(seed, domain, index)` stream, so results do not depend on the number
//! of worker threads.

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::detectability::{analytic_boundary, classify_region, ClassifierConfig, Region};
use crate::distributions::{DetectionModel, NoiseFamily, ShapeFunction, SignalFamily, PVALUE_FLOOR};
use crate::error::{Error, Result};
use crate::extended::{CompensatedSum, Extended};
use crate::normal;
use crate::rng::{stream, Domain, Stream};
use crate::statistics::{hc_asymptotic_critical, hc_sorted, ln_mixture_term, HcOptions};

pub const MIN_REPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistic {
    Hc,
    Llr,
}

impl Statistic {
    pub fn label(self) -> &'static str {
        match self {
            Statistic::Hc => "hc",
            Statistic::Llr => "llr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    Hc,
    Llr,
    Both,
}

impl TestKind {
    pub fn statistics(self) -> Vec<Statistic> {
        match self {
            TestKind::Hc => vec![Statistic::Hc],
            TestKind::Llr => vec![Statistic::Llr],
            TestKind::Both => vec![Statistic::Hc, Statistic::Llr],
        }
    }
}

/// Where the data come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    Null,
    Alternative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// The alternative the data are drawn from.
    pub model: DetectionModel,
    /// The alternative the LLR is built for; `None` means `model`.
    pub llr_model: Option<DetectionModel>,
    pub test: TestKind,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    /// Also estimate the size on fresh null replications.
    pub with_size: bool,
}

impl ExperimentConfig {
    pub fn new(model: DetectionModel, test: TestKind, alpha: f64, reps: usize, seed: u64) -> Self {
        ExperimentConfig {
            model,
            llr_model: None,
            test,
            alpha,
            reps,
            seed,
            threads: None,
            with_size: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < MIN_REPS {
            return Err(Error::domain("reps", self.reps as f64, "must be at least 100"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain("alpha", self.alpha, "must lie in (0, 1)"));
        }
        if let Some(m) = &self.llr_model {
            if m.n() != self.model.n() || m.noise() != self.model.noise() {
                return Err(Error::InvalidModel("LLR model must share n and noise with the data model".into()));
            }
        }
        Ok(())
    }

    /// FNV-1a hash of everything that determines the output except threads.
    pub fn hash(&self) -> u64 {
        let text = format!(
            "{:?}|{:?}|{:?}|{:e}|{}|{}|{}",
            self.model, self.llr_model, self.test, self.alpha, self.reps, self.seed, self.with_size
        );
        fnv1a(text.as_bytes())
    }

    fn stat_model(&self) -> &DetectionModel {
        self.llr_model.as_ref().unwrap_or(&self.model)
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerEstimate {
    pub rejections: u64,
    pub reps: u64,
    pub estimate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub seed: u64,
    pub config_hash: u64,
}

impl PowerEstimate {
    fn new(rejections: u64, reps: u64, seed: u64, config_hash: u64) -> Self {
        let (lo, hi) = wilson_interval(rejections, reps, WILSON_95);
        PowerEstimate {
            rejections,
            reps,
            estimate: rejections as f64 / reps as f64,
            wilson_lo: lo,
            wilson_hi: hi,
            seed,
            config_hash,
        }
    }
}

pub const WILSON_95: f64 = 1.959_963_984_540_054;
pub const WILSON_99: f64 = 2.575_829_303_548_900_4;

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Type-7 sample quantile of values sorted ascending.
pub fn quantile_type7(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::Empty);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain("q", q, "must lie in [0, 1]"));
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let (a, b) = (sorted[lo], sorted[hi]);
    if a == b {
        return Ok(a);
    }
    Ok(a + (h - lo as f64) * (b - a))
}

fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(job()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::InvalidModel(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// `reps` values of a statistic, replication `i` drawn from stream
/// `(seed, domain, i)`; returned in replication order.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    data: &DetectionModel,
    stat_model: &DetectionModel,
    stat: Statistic,
    hypothesis: Hypothesis,
    domain: Domain,
    reps: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<f64>> {
    let one = |i: usize| -> Result<f64> {
        let mut rng = stream(seed, domain, i as u64);
        replicate(data, stat_model, stat, hypothesis, &mut rng)
    };
    with_pool(threads, || (0..reps).into_par_iter().map(one).collect::<Result<Vec<f64>>>())?
}

/// One statistic value on one fresh sample.
pub fn replicate(
    data: &DetectionModel,
    stat_model: &DetectionModel,
    stat: Statistic,
    hypothesis: Hypothesis,
    rng: &mut Stream,
) -> Result<f64> {
    let signals = match hypothesis {
        Hypothesis::Null => 0,
        Hypothesis::Alternative => data.sample_signal_count(rng)?,
    };
    match stat {
        Statistic::Hc => hc_replicate(data, signals, rng),
        Statistic::Llr => llr_replicate(data, stat_model, signals, rng),
    }
}

/// `count` sorted uniforms from normalized exponential spacings.
fn sorted_uniforms(count: usize, rng: &mut Stream) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut acc = 0.0;
    for _ in 0..count {
        let e: f64 = rng.sample(Exp1);
        acc += e;
        out.push(acc);
    }
    let e: f64 = rng.sample(Exp1);
    let total = acc + e;
    for v in &mut out {
        *v /= total;
    }
    out
}

fn hc_replicate(data: &DetectionModel, signals: u64, rng: &mut Stream) -> Result<f64> {
    let n = data.n() as usize;
    let s = signals as usize;
    let noise = sorted_uniforms(n - s, rng);
    let mut sig: Vec<f64> = (0..s).map(|_| data.draw_signal(rng)).collect();
    sig = data.to_pvalues(&sig)?;
    sig.sort_unstable_by(f64::total_cmp);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, 0);
    while i < noise.len() || j < sig.len() {
        if j >= sig.len() || (i < noise.len() && noise[i] <= sig[j]) {
            merged.push(noise[i].clamp(PVALUE_FLOOR, 1.0 - PVALUE_FLOOR));
            i += 1;
        } else {
            merged.push(sig[j]);
            j += 1;
        }
    }
    Ok(hc_sorted(&merged, HcOptions::default()).value)
}

fn llr_replicate(data: &DetectionModel, stat: &DetectionModel, signals: u64, rng: &mut Stream) -> Result<f64> {
    let eps = stat.epsilon()?;
    if eps == 0.0 {
        return Ok(0.0);
    }
    let n = data.n();
    let noise = n - signals;
    let mut sum = CompensatedSum::new();
    let term = |y: f64| -> Result<f64> { Ok(ln_mixture_term(eps, stat.ln_signal_density_ratio(y)?)) };
    match (stat.signal(), stat.noise()) {
        (
            SignalFamily::Chimeric {
                perturbation: None, ..
            },
            NoiseFamily::UniformUnit,
        ) => {
            // Only points below kappa carry information; the rest each add
            // log(1 - eps).
            let kappa = stat.kappa();
            let inside = crate::distributions::binomial(noise, kappa, rng)?;
            let mut outside = noise - inside;
            for _ in 0..inside {
                let u: f64 = rng.sample(Open01);
                sum.add(term(u * kappa)?);
            }
            for _ in 0..signals {
                let y = data.draw_signal(rng);
                if y < kappa {
                    sum.add(term(y)?);
                } else {
                    outside += 1;
                }
            }
            sum.add(outside as f64 * (-eps).ln_1p());
        }
        (SignalFamily::NormalShift { sigma0 }, NoiseFamily::StandardNormal) => {
            // log ratio = a y^2 + b y + c
            let s2 = sigma0 * sigma0;
            let theta = stat.theta();
            let a = 0.5 - 0.5 / s2;
            let b = theta / s2;
            let c = -0.5 * theta * theta / s2 - sigma0.ln();
            let t = |y: f64| ln_mixture_term(eps, (a * y + b) * y + c);
            for _ in 0..noise {
                let z: f64 = rng.sample(StandardNormal);
                sum.add(t(z));
            }
            for _ in 0..signals {
                sum.add(t(data.draw_signal(rng)));
            }
        }
        _ => {
            for _ in 0..noise {
                let y = data.draw_noise(rng);
                sum.add(term(y)?);
            }
            for _ in 0..signals {
                let y = data.draw_signal(rng);
                sum.add(term(y)?);
            }
        }
    }
    Ok(sum.value())
}

/// Empirical `(1 - alpha)`-quantile of a statistic under the null.
pub fn mc_critical_value(
    model: &DetectionModel,
    stat: Statistic,
    alpha: f64,
    reps: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<f64> {
    if reps < MIN_REPS {
        return Err(Error::domain("reps", reps as f64, "must be at least 100"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("alpha", alpha, "must lie in (0, 1)"));
    }
    let mut v = simulate(model, model, stat, Hypothesis::Null, Domain::Null, reps, seed, threads)?;
    v.sort_unstable_by(f64::total_cmp);
    quantile_type7(&v, 1.0 - alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub statistic: Statistic,
    pub critical: f64,
    /// Extreme-value critical value for HC, for comparison only.
    pub asymptotic_critical: Option<f64>,
    pub power: PowerEstimate,
    pub size: Option<PowerEstimate>,
    pub null_mean: f64,
    pub null_var: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport {
    pub outcomes: Vec<TestOutcome>,
    pub config_hash: u64,
}

pub fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Power (and optionally size) of the MC-calibrated tests in `cfg`.
pub fn estimate_power(cfg: &ExperimentConfig) -> Result<PowerReport> {
    cfg.validate()?;
    let hash = cfg.hash();
    let mut outcomes = Vec::new();
    for stat in cfg.test.statistics() {
        let sm = match stat {
            Statistic::Llr => cfg.stat_model(),
            Statistic::Hc => &cfg.model,
        };
        let mut null = simulate(sm, sm, stat, Hypothesis::Null, Domain::Null, cfg.reps, cfg.seed, cfg.threads)?;
        let (null_mean, null_var) = mean_var(&null);
        null.sort_unstable_by(f64::total_cmp);
        let critical = quantile_type7(&null, 1.0 - cfg.alpha)?;
        let alt = simulate(&cfg.model, sm, stat, Hypothesis::Alternative, Domain::Alternative, cfg.reps, cfg.seed, cfg.threads)?;
        let rej = alt.iter().filter(|&&x| x > critical).count() as u64;
        let size = if cfg.with_size {
            let s = simulate(sm, sm, stat, Hypothesis::Null, Domain::Size, cfg.reps, cfg.seed, cfg.threads)?;
            let k = s.iter().filter(|&&x| x > critical).count() as u64;
            Some(PowerEstimate::new(k, cfg.reps as u64, cfg.seed, hash))
        } else {
            None
        };
        let asymptotic_critical = match stat {
            Statistic::Hc => hc_asymptotic_critical(cfg.model.n() as usize, cfg.alpha).ok(),
            Statistic::Llr => None,
        };
        outcomes.push(TestOutcome {
            statistic: stat,
            critical,
            asymptotic_critical,
            power: PowerEstimate::new(rej, cfg.reps as u64, cfg.seed, hash),
            size,
            null_mean,
            null_var,
        });
    }
    Ok(PowerReport {
        outcomes,
        config_hash: hash,
    })
}

/// Model family swept over a `(beta, r)` grid.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepFamily {
    Chimeric(ShapeFunction),
    Normal { sigma0: f64 },
    NormalDense { sigma0: f64 },
}

impl SweepFamily {
    pub fn label(&self) -> &'static str {
        match self {
            SweepFamily::Chimeric(_) => "chimeric",
            SweepFamily::Normal { .. } => "normal",
            SweepFamily::NormalDense { .. } => "normal-dense",
        }
    }

    pub fn tag(&self) -> String {
        match self {
            SweepFamily::Chimeric(h) => h.label(),
            SweepFamily::Normal { sigma0 } | SweepFamily::NormalDense { sigma0 } => format!("sigma0={sigma0}"),
        }
    }

    pub fn model(&self, n: u64, beta: f64, r: f64) -> Result<DetectionModel> {
        match self {
            SweepFamily::Chimeric(h) => DetectionModel::chimeric(n, beta, r, h.clone()),
            SweepFamily::Normal { sigma0 } => DetectionModel::normal(n, beta, r, *sigma0),
            SweepFamily::NormalDense { sigma0 } => DetectionModel::normal_dense(n, beta, r, *sigma0),
        }
    }

    /// Analytic boundary at `beta`, if the family has one there.
    pub fn boundary(&self, beta: f64) -> Option<f64> {
        let m = self.model(1000, beta, 0.0).ok()?;
        analytic_boundary(&m).ok()
    }

    /// `samples + 1` points of the boundary, endpoints included.
    pub fn boundary_curve(&self, samples: usize) -> Vec<(f64, f64)> {
        let samples = samples.max(2);
        let (lo, hi, at_lo, at_hi) = match self {
            SweepFamily::NormalDense { .. } => (0.0, 0.5, 0.5, 0.0),
            _ => (0.5, 1.0, 0.0, 1.0),
        };
        (0..=samples)
            .filter_map(|i| {
                let b = lo + (hi - lo) * i as f64 / samples as f64;
                if i == 0 {
                    Some((b, at_lo))
                } else if i == samples {
                    Some((b, at_hi))
                } else {
                    self.boundary(b).map(|r| (b, r))
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Below,
    On,
    Above,
    Unknown,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::Below => "below",
            Side::On => "boundary",
            Side::Above => "above",
            Side::Unknown => "n/a",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub family: String,
    pub beta: f64,
    pub r: f64,
    pub tag: String,
    pub side: Side,
    pub label: Option<Region>,
    pub hc_power: Option<f64>,
    pub llr_power: Option<f64>,
    pub reps: usize,
    pub seed: u64,
}

/// Monte Carlo settings for a sweep; `None` skips simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMc {
    pub n: u64,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub threads: Option<usize>,
}

pub fn phase_sweep(
    family: &SweepFamily,
    betas: &[f64],
    rs: &[f64],
    classifier: &ClassifierConfig,
    mc: Option<&SweepMc>,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(betas.len() * rs.len());
    for &beta in betas {
        for &r in rs {
            let template = family.model(1000, beta, r)?;
            let side = match family.boundary(beta) {
                Some(b) if (r - b).abs() <= 1e-9 => Side::On,
                Some(b) if r > b => Side::Above,
                Some(_) => Side::Below,
                None => Side::Unknown,
            };
            let label = classify_region(&template, classifier).ok().map(|l| l.kind);
            let (mut hc_power, mut llr_power) = (None, None);
            if let Some(mc) = mc {
                let mut cfg = ExperimentConfig::new(template.at_n(mc.n)?, TestKind::Both, mc.alpha, mc.reps, mc.seed);
                cfg.threads = mc.threads;
                let rep = estimate_power(&cfg)?;
                for o in rep.outcomes {
                    match o.statistic {
                        Statistic::Hc => hc_power = Some(o.power.estimate),
                        Statistic::Llr => llr_power = Some(o.power.estimate),
                    }
                }
            }
            rows.push(SweepRow {
                family: family.label().to_string(),
                beta,
                r,
                tag: family.tag(),
                side,
                label,
                hc_power,
                llr_power,
                reps: mc.map_or(0, |m| m.reps),
                seed: mc.map_or(0, |m| m.seed),
            });
        }
    }
    rows.sort_by(|a, b| a.beta.total_cmp(&b.beta).then(a.r.total_cmp(&b.r)));
    Ok(rows)
}

/// A reference law for KS checks: a possibly defective CDF on the reals,
/// its left limits, and the mass it leaves for `+inf`.
pub struct Reference<'a> {
    pub cdf: &'a dyn Fn(f64) -> f64,
    pub cdf_left: &'a dyn Fn(f64) -> f64,
    /// Mass on the finite reals; the rest sits at `+inf`.
    pub finite_mass: f64,
}

impl<'a> Reference<'a> {
    pub fn continuous(cdf: &'a dyn Fn(f64) -> f64) -> Self {
        Reference {
            cdf,
            cdf_left: cdf,
            finite_mass: 1.0,
        }
    }
}

/// One-sample KS distance. Draws at `+inf` count towards the mass deficit
/// rather than the finite part; `-inf` draws sit below every real.
pub fn ks_distance(draws: &[Extended], reference: &Reference<'_>) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::Empty);
    }
    let total = draws.len() as f64;
    let below = draws.iter().filter(|d| **d == Extended::NegInf).count() as f64;
    let mut xs: Vec<f64> = draws.iter().filter_map(|d| d.finite()).collect();
    xs.sort_unstable_by(f64::total_cmp);
    let mut d: f64 = below / total;
    let mut i = 0;
    let mut seen = below;
    while i < xs.len() {
        let x = xs[i];
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        let left = seen / total;
        seen += (j - i) as f64;
        let at = seen / total;
        d = d.max((left - (reference.cdf_left)(x)).abs()).max((at - (reference.cdf)(x)).abs());
        i = j;
    }
    d = d.max((seen / total - reference.finite_mass).abs());
    Ok(d)
}

/// Draw `count` values from `source` on stream `(seed, Custom(0x6b73), i)`
/// and return their KS distance to `reference`.
pub fn ecdf_ks<F>(source: F, reference: &Reference<'_>, count: usize, seed: u64) -> Result<f64>
where
    F: Fn(&mut Stream) -> Extended + Sync,
{
    if count < 1000 {
        return Err(Error::domain("count", count as f64, "must be at least 1000"));
    }
    let draws: Vec<Extended> = (0..count)
        .into_par_iter()
        .map(|i| source(&mut stream(seed, Domain::Custom(0x6b73), i as u64)))
        .collect();
    ks_distance(&draws, reference)
}

/// Two-sample KS distance between the finite parts, with `+inf` draws
/// treated as one atom above every real.
pub fn ks_two_sample(a: &[Extended], b: &[Extended]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty);
    }
    let key = |x: &Extended| match x {
        Extended::NegInf => f64::NEG_INFINITY,
        Extended::Finite(v) => *v,
        Extended::PosInf => f64::INFINITY,
    };
    let mut xa: Vec<f64> = a.iter().map(key).collect();
    let mut xb: Vec<f64> = b.iter().map(key).collect();
    xa.sort_unstable_by(f64::total_cmp);
    xb.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() || j < xb.len() {
        let x = match (xa.get(i), xb.get(j)) {
            (Some(&p), Some(&q)) => p.min(q),
            (Some(&p), None) => p,
            (None, Some(&q)) => q,
            (None, None) => break,
        };
        while i < xa.len() && xa[i] == x {
            i += 1;
        }
        while j < xb.len() && xb[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Empirical CDF points `(x, F(x))` of the finite draws, one per distinct
/// value, with `F` relative to all draws.
pub fn ecdf(draws: &[Extended]) -> Vec<(f64, f64)> {
    let total = draws.len() as f64;
    let below = draws.iter().filter(|d| **d == Extended::NegInf).count();
    let mut xs: Vec<f64> = draws.iter().filter_map(|d| d.finite()).collect();
    xs.sort_unstable_by(f64::total_cmp);
    let mut out = Vec::new();
    let mut seen = below;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        while i < xs.len() && xs[i] == x {
            i += 1;
            seen += 1;
        }
        out.push((x, seen as f64 / total));
    }
    out
}

/// `Lambda^2` reference for the normalized null HC statistic.
pub fn lambda2_reference_cdf(x: f64) -> f64 {
    crate::statistics::lambda2_cdf(x)
}

/// Standard normal CDF, convenient for KS checks of Gaussian limits.
pub fn normal_reference_cdf(x: f64) -> f64 {
    normal::cdf(x)
}
