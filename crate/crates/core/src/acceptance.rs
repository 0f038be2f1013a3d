//! End-to-end checks of the library against reference values, shared by the
//! `acceptance` test target and the `selftest` subcommand.

use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::detectability::{
    boundary_chimeric, boundary_normal_dense, boundary_normal_sparse, boundary_powerlaw, classify_region,
    hellinger_sum, i_sums, total_variation, ClassifierConfig, NormalCase, Region,
};
use crate::distributions::{DetectionModel, ShapeFunction};
use crate::efficiency::{are, are_shapes, power_from_gammas};
use crate::error::Result;
use crate::extended::Extended;
use crate::limits::{
    cf_eval, triple_beta1, triple_normal_quadratic, triple_powerlaw_boundary, LimitPair, LimitSampler,
    SamplerConfig, Side,
};
use crate::montecarlo::{
    ks_distance, ks_two_sample, mc_critical_value, mean_var, simulate, ExperimentConfig, Hypothesis, Reference,
    Statistic, TestKind,
};
use crate::rng::{stream, Domain};
use crate::statistics::{hc_normalizers, hc_statistic, lambda2_cdf};

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:>2} {}: {} [{:.1} s]",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            seed: 20_240_601,
            threads: None,
        }
    }
}

pub const IDS: [u32; 11] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

pub fn name(id: u32) -> &'static str {
    match id {
        1 => "boundary formulas",
        2 => "region classifier",
        3 => "complete detection above boundary",
        4 => "undetectable below boundary",
        5 => "LLR power on the boundary",
        6 => "HC powerless on the boundary",
        7 => "beta = 1 extremes",
        8 => "ARE and mismatched power",
        9 => "limit-law machinery",
        10 => "HC null limit trend",
        11 => "inequalities and reproducibility",
        _ => "unknown",
    }
}

pub fn run(id: u32, opts: &Options) -> Outcome {
    let start = Instant::now();
    let res = match id {
        1 => boundaries(),
        2 => classifier(),
        3 => above_boundary(opts),
        4 => below_boundary(opts),
        5 => boundary_llr(opts),
        6 => boundary_hc(opts),
        7 => beta_one(opts),
        8 => efficiency(opts),
        9 => limit_laws(opts),
        10 => hc_trend(opts),
        11 => inequalities(opts),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let (passed, detail) = res.unwrap_or_else(|e| (false, format!("error: {e}")));
    Outcome {
        id,
        name: name(id),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all(opts: &Options) -> Vec<Outcome> {
    IDS.iter().map(|&id| run(id, opts)).collect()
}

type Check = Result<(bool, String)>;

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn boundaries() -> Check {
    let mut vals: Vec<(String, f64, f64)> = vec![
        ("chimeric 0.75".into(), boundary_chimeric(0.75)?, 0.5),
        ("chimeric 1".into(), boundary_chimeric(1.0)?, 1.0),
        ("chimeric 0.5+1e-9".into(), boundary_chimeric(0.5 + 1e-9)?, 2e-9),
        ("power-law 0.7/0.5".into(), boundary_powerlaw(0.7, 0.5)?, 0.4),
        ("power-law 0.6/0.7".into(), boundary_powerlaw(0.6, 0.7)?, 0.0),
        ("power-law 0.75/0.75".into(), boundary_powerlaw(0.75, 0.75)?, 0.0),
        ("dense 0.25".into(), boundary_normal_dense(0.25)?, 0.25),
        ("dense 0.1".into(), boundary_normal_dense(0.1)?, 0.4),
        ("dense 0.5-1e-9".into(), boundary_normal_dense(0.5 - 1e-9)?, 1e-9),
    ];
    let mut bad = Vec::new();
    let cases = [
        (0.6, 1.0, 0.1, Some(0.0), NormalCase::I),
        (0.9, 1.0, 0.467_544_467_966_324_1, Some(0.341_886_116_991_581_03), NormalCase::II),
        (0.6, 2.0, 0.0, None, NormalCase::III),
        (0.9, 2.0, 0.135_088_935_932_648_27, Some(0.420_943_058_495_790_5), NormalCase::IV),
    ];
    for (beta, s0, r, e, case) in cases {
        let b = boundary_normal_sparse(beta, s0)?;
        vals.push((format!("normal {beta}/{s0}"), b.r_star, r));
        if let Some(e) = e {
            vals.push((format!("normal E {beta}/{s0}"), b.log_exponent, e));
        }
        if b.case != case {
            bad.push(format!("normal {beta}/{s0}: case {:?}", b.case));
        }
    }
    for (label, got, want) in &vals {
        if !within(*got, *want, 1e-12) {
            bad.push(format!("{label}: {got} vs {want}"));
        }
    }
    Ok((
        bad.is_empty(),
        format!("{} values and 4 normal cases checked at 1e-12 {}", vals.len(), bad.join("; ")),
    ))
}

fn classifier() -> Check {
    let cfg = ClassifierConfig::default();
    let sparse_b = [0.55, 0.65, 0.75, 0.85, 0.95];
    let sparse_r = [0.1, 0.3, 0.5, 0.7];
    let dense_b = [0.05, 0.15, 0.25, 0.35, 0.45];
    let dense_r = [0.05, 0.15, 0.25, 0.35];
    type Make = Box<dyn Fn(f64, f64) -> Result<DetectionModel>>;
    let families: Vec<(&str, &[f64], &[f64], Make)> = vec![
        ("chimeric const", &sparse_b, &sparse_r, Box::new(|b, r| DetectionModel::chimeric(1000, b, r, ShapeFunction::constant()))),
        ("chimeric linear", &sparse_b, &sparse_r, Box::new(|b, r| DetectionModel::chimeric(1000, b, r, ShapeFunction::linear2x()))),
        ("power-law 0.75", &sparse_b, &sparse_r, Box::new(|b, r| DetectionModel::chimeric(1000, b, r, ShapeFunction::power_law(0.75)?))),
        ("normal s0=1", &sparse_b, &sparse_r, Box::new(|b, r| DetectionModel::normal(1000, b, r, 1.0))),
        ("normal s0=2", &sparse_b, &sparse_r, Box::new(|b, r| DetectionModel::normal(1000, b, r, 2.0))),
        ("normal dense", &dense_b, &dense_r, Box::new(|b, r| DetectionModel::normal_dense(1000, b, r, 1.0))),
    ];
    let mut total = 0;
    let mut wrong = Vec::new();
    for (label, bs, rs, make) in &families {
        for &b in bs.iter() {
            for &r in rs.iter() {
                let m = make(b, r)?;
                let rho = crate::detectability::analytic_boundary(&m)?;
                if (r - rho).abs() < 0.02 {
                    continue;
                }
                total += 1;
                // Dense signals shrink as r grows, so detection lies below the curve.
                let detectable = if *label == "normal dense" { r < rho } else { r > rho };
                let want = if detectable { Region::CompletelyDetectable } else { Region::Undetectable };
                let got = classify_region(&m, &cfg)?.kind;
                if got != want {
                    wrong.push(format!("{label} ({b}, {r}): {got:?}"));
                }
            }
        }
    }
    Ok((
        wrong.is_empty(),
        format!("{}/{total} grid points agree {}", total - wrong.len(), wrong.join("; ")),
    ))
}

fn powers(model: DetectionModel, test: TestKind, reps: usize, opts: &Options) -> Result<Vec<(Statistic, f64, f64, f64)>> {
    let mut cfg = ExperimentConfig::new(model, test, 0.05, reps, opts.seed);
    cfg.threads = opts.threads;
    let rep = crate::montecarlo::estimate_power(&cfg)?;
    Ok(rep
        .outcomes
        .iter()
        .map(|o| (o.statistic, o.power.estimate, o.null_mean, o.null_var))
        .collect())
}

fn above_boundary(opts: &Options) -> Check {
    let m = DetectionModel::chimeric(100_000, 0.7, 0.6, ShapeFunction::constant())?;
    let p = powers(m, TestKind::Both, 2000, opts)?;
    let (hc, llr) = (p[0].1, p[1].1);
    Ok((
        hc >= 0.95 && llr >= 0.99,
        format!("HC power {hc:.4} (need >= 0.95), LLR power {llr:.4} (need >= 0.99)"),
    ))
}

fn below_boundary(opts: &Options) -> Check {
    let m = DetectionModel::chimeric(100_000, 0.7, 0.2, ShapeFunction::constant())?;
    let p = powers(m, TestKind::Llr, 2000, opts)?;
    let llr = p[0].1;
    Ok(((0.02..=0.10).contains(&llr), format!("LLR power {llr:.4} (need in [0.02, 0.10])")))
}

fn boundary_llr(opts: &Options) -> Check {
    let m = DetectionModel::chimeric(1_000_000, 0.75, 0.5, ShapeFunction::constant())?;
    let p = powers(m, TestKind::Llr, 5000, opts)?;
    let (_, pw, mean, var) = p[0];
    let ok = within(pw, 0.2595, 0.03) && within(mean, -0.5, 0.05) && within(var, 1.0, 0.1);
    Ok((
        ok,
        format!("LLR power {pw:.4} (0.2595 +- 0.03), null mean {mean:.4} (-0.5 +- 0.05), null var {var:.4} (1 +- 0.1)"),
    ))
}

fn boundary_hc(opts: &Options) -> Check {
    let c = DetectionModel::chimeric(1_000_000, 0.75, 0.5, ShapeFunction::constant())?;
    let n = DetectionModel::normal(1_000_000, 0.6, 0.1, 1.0)?;
    let pc = powers(c, TestKind::Hc, 2000, opts)?[0].1;
    let pn = powers(n, TestKind::Hc, 2000, opts)?[0].1;
    Ok((
        pc <= 0.08 && pn <= 0.08,
        format!("HC power chimeric {pc:.4}, normal {pn:.4} (need <= 0.08)"),
    ))
}

fn beta_one(opts: &Options) -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for (r, null_target, frac_target) in [(1.0, -0.5, 1.0 - (-0.5f64).exp()), (1.5, -1.0, 1.0 - (-1f64).exp())] {
        let m = DetectionModel::normal(1_000_000, 1.0, r, 1.0)?;
        let null = simulate(&m, &m, Statistic::Llr, Hypothesis::Null, Domain::Null, 2000, opts.seed, opts.threads)?;
        let alt = simulate(&m, &m, Statistic::Llr, Hypothesis::Alternative, Domain::Alternative, 2000, opts.seed, opts.threads)?;
        let (mean, _) = mean_var(&null);
        let frac = alt.iter().filter(|&&t| t > 5.0).count() as f64 / alt.len() as f64;
        ok &= within(mean, null_target, 0.05) && within(frac, frac_target, 0.02);
        parts.push(format!(
            "r={r}: null mean {mean:.4} ({null_target} +- 0.05), P(T>5) {frac:.4} ({frac_target:.4} +- 0.02)"
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn efficiency(opts: &Options) -> Check {
    let c = ShapeFunction::constant();
    let l = ShapeFunction::linear2x();
    let closed = are_shapes(&c, &l)?.are;
    let m1 = DetectionModel::chimeric(1_000_000, 0.75, 0.5, c)?;
    let m2 = DetectionModel::chimeric(1_000_000, 0.75, 0.5, l)?;
    let quad = are(&m1, &m2)?;
    let asym = power_from_gammas(quad.gamma12, quad.gamma22, 0.05);
    let mut cfg = ExperimentConfig::new(m1, TestKind::Llr, 0.05, 5000, opts.seed);
    cfg.llr_model = Some(m2);
    cfg.threads = opts.threads;
    let sim = crate::montecarlo::estimate_power(&cfg)?.outcomes[0].power.estimate;
    let ok = within(closed, 0.75, 1e-9) && within(quad.are, 0.75, 1e-4) && within(sim, 0.2180, 0.03);
    Ok((
        ok,
        format!(
            "ARE closed form {closed:.12}, quadrature {:.8}; asymptotic power {asym:.4}; simulated {sim:.4} (0.2180 +- 0.03)",
            quad.are
        ),
    ))
}

fn draw_many(pair: &LimitPair, side: Side, count: usize, seed: u64) -> Result<Vec<Extended>> {
    let s = LimitSampler::new(pair, side, SamplerConfig::default())?;
    let chunk = 10_000;
    let mut out = Vec::with_capacity(count);
    for c in 0..count.div_ceil(chunk) {
        let mut rng = stream(seed, Domain::Limit, (side as u64) << 32 | c as u64);
        for _ in 0..chunk.min(count - c * chunk) {
            out.push(s.draw(&mut rng));
        }
    }
    Ok(out)
}

fn cf_gap(pair: &LimitPair, seed: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for side in [Side::Null, Side::Alternative] {
        let xs = draw_many(pair, side, 1_000_000, seed)?;
        for t in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let emp: Complex64 = xs
                .iter()
                .filter_map(|x| x.finite())
                .map(|x| Complex64::new(0.0, t * x).exp())
                .sum::<Complex64>()
                / xs.len() as f64;
            worst = worst.max((emp - cf_eval(pair, side, t)?).norm());
        }
    }
    Ok(worst)
}

fn limit_laws(opts: &Options) -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    match triple_powerlaw_boundary(0.5) {
        Ok(p) => {
            let g = cf_gap(&p, opts.seed)?;
            ok &= g <= 0.01;
            parts.push(format!("power-law a=0.5 cf gap {g:.4}"));
        }
        Err(e) => {
            ok = false;
            parts.push(format!("power-law a=0.5: {e}"));
        }
    }
    let q = triple_normal_quadratic(0.9, 1.0)?;
    let g = cf_gap(&q, opts.seed ^ 1)?;
    ok &= g <= 0.01;
    parts.push(format!("normal quadratic cf gap {g:.4}"));
    // Null limit at beta = r = 1: Lévy sampler against a direct compound
    // Poisson sum of log(1 + h(U)) jumps minus the mean jump of h.
    let h = ShapeFunction::linear2x();
    let pair = triple_beta1(&h, 1.0)?;
    let count = 200_000;
    let limit = draw_many(&pair, Side::Null, count, opts.seed ^ 2)?;
    let pois = Poisson::new(1.0).expect("positive rate");
    let mut rng = stream(opts.seed ^ 2, Domain::Custom(9), 0);
    let direct: Vec<Extended> = (0..count)
        .map(|_| {
            let k = pois.sample(&mut rng) as u64;
            let s: f64 = (0..k).map(|_| h.eval(rng.random::<f64>()).ln_1p()).sum();
            Extended::Finite(s - 1.0)
        })
        .collect();
    // The sampler's drift comes out of quadrature, so its atom at -1 can sit
    // an ulp away from the direct one; compare on a 1e-9 grid.
    let snap = |v: &[Extended]| -> Vec<Extended> {
        v.iter()
            .map(|x| match x.finite() {
                Some(f) => Extended::Finite((f * 1e9).round() / 1e9),
                None => *x,
            })
            .collect()
    };
    let ks = ks_two_sample(&snap(&limit), &snap(&direct))?;
    ok &= ks <= 0.01;
    parts.push(format!("beta=r=1 null limit vs direct log(1+h(U)) sum KS {ks:.4}"));
    Ok((ok, parts.join("; ")))
}

fn hc_trend(opts: &Options) -> Check {
    let mut ks = Vec::new();
    for n in [1_000u64, 10_000, 100_000, 1_000_000] {
        let m = DetectionModel::chimeric(n, 0.75, 0.5, ShapeFunction::constant())?;
        let (a, b) = hc_normalizers(n as usize)?;
        let v = simulate(&m, &m, Statistic::Hc, Hypothesis::Null, Domain::Null, 2000, opts.seed, opts.threads)?;
        let draws: Vec<Extended> = v.iter().map(|&x| Extended::Finite(a * x - b)).collect();
        ks.push(ks_distance(&draws, &Reference::continuous(&lambda2_cdf))?);
    }
    let ok = ks.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = ks.iter().map(|k| format!("{k:.4}")).collect();
    Ok((ok, format!("KS at n=1e3..1e6: {} (need strictly decreasing)", shown.join(", "))))
}

fn random_model(rng: &mut impl Rng) -> Result<DetectionModel> {
    let n = 10f64.powf(rng.random_range(2.0..6.0)) as u64;
    let beta = rng.random_range(0.52..0.98);
    let r = rng.random_range(0.02..0.98);
    match rng.random_range(0..4) {
        0 => DetectionModel::chimeric(n, beta, r, ShapeFunction::constant()),
        1 => DetectionModel::chimeric(n, beta, r, ShapeFunction::linear2x()),
        2 => DetectionModel::chimeric(n, beta, r, ShapeFunction::power_law(rng.random_range(0.0..0.9))?),
        _ => DetectionModel::normal(n, beta, r, rng.random_range(0.5..2.5)),
    }
}

fn hc_oracle(p: &[f64]) -> f64 {
    let k = p.len() as f64;
    let f = |t: f64| p.iter().filter(|&&x| x <= t).count() as f64 / k;
    let mut pts: Vec<f64> = (1..20_000).map(|i| i as f64 / 20_000.0).collect();
    for &x in p {
        pts.push(x);
        pts.push(x * (1.0 - 1e-12));
    }
    pts.iter()
        .map(|&t| k.sqrt() * (f(t) - t).abs() / (t * (1.0 - t)).sqrt())
        .fold(0.0, f64::max)
}

fn inequalities(opts: &Options) -> Check {
    let mut rng = stream(opts.seed, Domain::Custom(11), 0);
    let mut bad = Vec::new();
    for i in 0..50 {
        let m = random_model(&mut rng)?;
        let nf = m.n() as f64;
        let eps = m.epsilon()?;
        let d = hellinger_sum(&m)?;
        let tv = total_variation(&m)?;
        let slack = 1e-9 * d.max(1e-300);
        if !(0.5 * nf * eps * eps * tv * tv <= d + slack && d <= nf * eps * tv + slack) {
            bad.push(format!("sandwich #{i} {m:?}"));
        }
        let s = i_sums(&m, 1.0)?;
        if d > (0.5 + eps) * s.i1 + s.i2 + slack {
            bad.push(format!("upper bound #{i}: D={d} I1={} I2={}", s.i1, s.i2));
        }
    }
    for seed in 0..100u64 {
        let mut r = stream(seed, Domain::Custom(12), 0);
        let k = r.random_range(5..60);
        let p: Vec<f64> = (0..k).map(|_| r.random_range(1e-6..1.0 - 1e-6)).collect();
        let fast = hc_statistic(&p)?.value;
        let slow = hc_oracle(&p);
        if (fast - slow).abs() > 1e-6 * slow.max(1.0) {
            bad.push(format!("HC seed {seed}: {fast} vs {slow}"));
        }
    }
    let m = DetectionModel::chimeric(10_000, 0.7, 0.5, ShapeFunction::linear2x())?;
    let runs: Vec<(Vec<f64>, f64)> = [1, 4, 16]
        .iter()
        .map(|&t| -> Result<_> {
            let v = simulate(&m, &m, Statistic::Hc, Hypothesis::Alternative, Domain::Alternative, 300, opts.seed, Some(t))?;
            let c = mc_critical_value(&m, Statistic::Llr, 0.05, 300, opts.seed, Some(t))?;
            Ok((v, c))
        })
        .collect::<Result<_>>()?;
    let same = runs.windows(2).all(|w| {
        w[0].1.to_bits() == w[1].1.to_bits() && w[0].0.iter().zip(&w[1].0).all(|(a, b)| a.to_bits() == b.to_bits())
    });
    if !same {
        bad.push("outputs differ across 1/4/16 workers".into());
    }
    Ok((
        bad.is_empty(),
        if bad.is_empty() {
            "Hellinger sandwich and D_n upper bound on 50 models, HC oracle on 100 seeds, bitwise equal across 1/4/16 workers".into()
        } else {
            bad.join("; ")
        },
    ))
}
