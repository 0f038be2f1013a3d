use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use sparsesig::acceptance;
use sparsesig::detectability::{
    analytic_boundary, boundary_chimeric, boundary_normal_dense, boundary_normal_sparse, boundary_powerlaw,
    classify_region, ClassifierConfig,
};
use sparsesig::distributions::{DetectionModel, ShapeFunction};
use sparsesig::efficiency::{are, are_shapes, mismatched_power};
use sparsesig::io::{fmt_f64, read_config, region_label, write_csv, write_svg_phase, write_xy_csv};
use sparsesig::limits::{
    cf_eval, triple_beta1, triple_chimeric_boundary, triple_normal_beta1, triple_normal_quadratic,
    triple_powerlaw_boundary, LimitPair, LimitSampler, SamplerConfig, Side,
};
use sparsesig::montecarlo::{ecdf, estimate_power, mc_critical_value, phase_sweep, ExperimentConfig, Statistic, SweepFamily, SweepMc, TestKind};
use sparsesig::rng::{stream, Domain};
use sparsesig::statistics::hc_asymptotic_critical;
use sparsesig::Extended;

/// Sparse mixture detection: boundaries, limit laws and Monte Carlo power.
///
/// Settings may also come from a flat `key = value` file passed with
/// --config; flags win over the file. Defaults: seed 1, reps 1000, n 1e6,
/// alpha 0.05, out ".", family chimeric, shape const, sigma0 1.
#[derive(Parser, Debug)]
#[command(name = "sparsesig", version)]
struct Cli {
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    reps: Option<usize>,
    #[arg(long, global = true)]
    n: Option<u64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Output directory for CSV and SVG files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone, Default)]
struct ModelArgs {
    /// chimeric, normal or dense.
    #[arg(long)]
    family: Option<String>,
    /// const, linear, power:<a> or table:<x1>/<v1>,<x2>/<v2>,...
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    /// Power of ln n multiplying the signal fraction.
    #[arg(long)]
    log_exponent: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Print the detection boundary r*(beta).
    Boundary {
        /// chimeric, powerlaw, normal or dense.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        sigma0: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
    },
    /// Label a point with the I-sum classifier.
    Classify {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Monte Carlo critical value of HC or LLR.
    Critical {
        #[command(flatten)]
        model: ModelArgs,
        /// hc or llr.
        #[arg(long)]
        stat: Option<String>,
    },
    /// Simulated power of HC and/or the LLR test.
    Power {
        #[command(flatten)]
        model: ModelArgs,
        /// hc, llr or both.
        #[arg(long)]
        test: Option<String>,
        /// Build the LLR for this shape instead of the data's.
        #[arg(long)]
        llr_shape: Option<String>,
        #[arg(long)]
        size: bool,
    },
    /// Classify (and optionally simulate) a (beta, r) grid; writes CSV and SVG.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated beta values.
        #[arg(long)]
        betas: Option<String>,
        /// Comma-separated r values.
        #[arg(long)]
        rs: Option<String>,
        /// Also estimate HC and LLR power at each point.
        #[arg(long)]
        mc: bool,
    },
    /// Sample a limit law; writes ECDF CSVs and prints a CF check.
    Limits {
        /// gaussian, powerlaw, normal-quadratic, beta1 or normal-beta1.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        shape: Option<String>,
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        sigma0: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
    },
    /// Gamma matrix, ARE and mismatched power of two chimeric shapes.
    Are {
        /// Shape the data are drawn from.
        #[arg(long, alias = "shape1")]
        h1: Option<String>,
        /// Shape the LLR is built for.
        #[arg(long, alias = "shape2")]
        h2: Option<String>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
    },
    /// Run the acceptance checks.
    Selftest {
        /// Comma-separated criterion ids; all when absent.
        #[arg(long)]
        only: Option<String>,
    },
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<sparsesig::Error> for Failure {
    fn from(e: sparsesig::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

type Out<T> = std::result::Result<T, Failure>;

/// Flag, then config file, then default; remembers what it resolved.
struct Settings {
    file: BTreeMap<String, String>,
    used: Vec<(String, String)>,
}

impl Settings {
    fn get<T: FromStr + ToString>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> Out<Option<T>> {
        let v = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(s) => Some(
                    s.parse()
                        .map_err(|_| Failure::Usage(format!("config key {key}: cannot parse {s:?}")))?,
                ),
                None => default,
            },
        };
        if let Some(v) = &v {
            self.used.push((key.to_string(), v.to_string()));
        }
        Ok(v)
    }

    fn need<T: FromStr + ToString>(&mut self, key: &str, flag: Option<T>, default: Option<T>) -> Out<T> {
        self.get(key, flag, default)?
            .ok_or_else(|| Failure::Usage(format!("missing --{}", key.replace('_', "-"))))
    }

    fn header(&self, cmd: &str) {
        println!("# sparsesig {cmd}");
        for (k, v) in &self.used {
            println!("# {k} = {v}");
        }
    }
}

struct Global {
    seed: u64,
    reps: usize,
    n: u64,
    alpha: f64,
    out: PathBuf,
    threads: Option<usize>,
}

fn parse_shape(s: &str) -> Out<ShapeFunction> {
    let bad = || Failure::Usage(format!("unknown shape {s:?}"));
    match s {
        "const" | "constant" => Ok(ShapeFunction::constant()),
        "linear" | "linear2x" => Ok(ShapeFunction::linear2x()),
        _ => {
            if let Some(a) = s.strip_prefix("power:") {
                Ok(ShapeFunction::power_law(a.parse().map_err(|_| bad())?)?)
            } else if let Some(t) = s.strip_prefix("table:") {
                let mut grid = Vec::new();
                let mut vals = Vec::new();
                for pair in t.split(',') {
                    let (x, v) = pair.split_once('/').ok_or_else(bad)?;
                    grid.push(x.trim().parse().map_err(|_| bad())?);
                    vals.push(v.trim().parse().map_err(|_| bad())?);
                }
                Ok(ShapeFunction::tabulated(grid, vals)?)
            } else {
                Err(bad())
            }
        }
    }
}

fn parse_list(s: &str, what: &str) -> Out<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("--{what}: not a number: {x:?}")))
        })
        .collect()
}

fn family(st: &mut Settings, m: &ModelArgs) -> Out<SweepFamily> {
    let fam = st.need("family", m.family.clone(), Some("chimeric".into()))?;
    match fam.as_str() {
        "chimeric" => {
            let shape = st.need("shape", m.shape.clone(), Some("const".into()))?;
            Ok(SweepFamily::Chimeric(parse_shape(&shape)?))
        }
        "normal" => Ok(SweepFamily::Normal {
            sigma0: st.need("sigma0", m.sigma0, Some(1.0))?,
        }),
        "dense" => Ok(SweepFamily::NormalDense {
            sigma0: st.need("sigma0", m.sigma0, Some(1.0))?,
        }),
        other => Err(Failure::Usage(format!("unknown family {other:?}"))),
    }
}

fn model(st: &mut Settings, m: &ModelArgs, n: u64) -> Out<DetectionModel> {
    let fam = family(st, m)?;
    let beta = st.need("beta", m.beta, None)?;
    let r = st.need("r", m.r, None)?;
    let mut model = fam.model(n, beta, r)?;
    if let Some(e) = st.get("log_exponent", m.log_exponent, None)? {
        model = model.with_log_exponent(e)?;
    }
    Ok(model)
}

fn threads_label(t: Option<usize>) -> String {
    t.map_or("auto".into(), |t| t.to_string())
}

fn run(cli: Cli) -> Out<()> {
    let file = match &cli.config {
        Some(p) => read_config(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        None => BTreeMap::new(),
    };
    let mut st = Settings { file, used: Vec::new() };
    let g = Global {
        seed: st.need("seed", cli.seed, Some(1))?,
        reps: st.need("reps", cli.reps, Some(1000))?,
        n: st.need("n", cli.n, Some(1_000_000))?,
        alpha: st.need("alpha", cli.alpha, Some(0.05))?,
        out: PathBuf::from(st.need("out", cli.out.map(|p| p.display().to_string()), Some(".".into()))?),
        threads: st.get("threads", cli.threads, None)?,
    };
    if g.threads.is_none() {
        st.used.push(("threads".into(), threads_label(None)));
    }

    match cli.cmd {
        Cmd::Boundary { family, beta, sigma0, a } => {
            let fam = st.need("family", family, Some("chimeric".into()))?;
            let beta = st.need("beta", beta, None)?;
            match fam.as_str() {
                "chimeric" => {
                    st.header("boundary");
                    println!("r* = {}", fmt_f64(boundary_chimeric(beta)?));
                }
                "powerlaw" => {
                    let a = st.need("a", a, None)?;
                    st.header("boundary");
                    println!("r* = {}", fmt_f64(boundary_powerlaw(beta, a)?));
                }
                "normal" => {
                    let s0 = st.need("sigma0", sigma0, Some(1.0))?;
                    st.header("boundary");
                    let b = boundary_normal_sparse(beta, s0)?;
                    println!("r* = {}", fmt_f64(b.r_star));
                    println!("case = {:?}", b.case);
                    println!("log exponent E = {}", fmt_f64(b.log_exponent));
                }
                "dense" => {
                    st.header("boundary");
                    println!("r* = {}", fmt_f64(boundary_normal_dense(beta)?));
                }
                other => return Err(Failure::Usage(format!("unknown family {other:?}"))),
            }
        }
        Cmd::Classify { model: m, tau } => {
            let template = model(&mut st, &m, g.n)?;
            let cfg = ClassifierConfig {
                tau: st.need("tau", tau, Some(1.0))?,
                ..ClassifierConfig::default()
            };
            st.header("classify");
            let label = classify_region(&template, &cfg)?;
            println!("label = {}", region_label(label.kind));
            println!("slope = {}", fmt_f64(label.slope));
            if let Ok(rho) = analytic_boundary(&template) {
                println!("analytic boundary = {}", fmt_f64(rho));
            }
            for (t, k) in &label.cross_check {
                println!("tau = {t}: {}", region_label(*k));
            }
            println!("n,i1,i2");
            for e in &label.evidence {
                println!("{},{},{}", e.n, fmt_f64(e.i1), fmt_f64(e.i2));
            }
        }
        Cmd::Critical { model: m, stat } => {
            let model = model(&mut st, &m, g.n)?;
            let stat = match st.need("stat", stat, Some("hc".into()))?.as_str() {
                "hc" => Statistic::Hc,
                "llr" => Statistic::Llr,
                other => return Err(Failure::Usage(format!("unknown statistic {other:?}"))),
            };
            st.header("critical");
            let c = mc_critical_value(&model, stat, g.alpha, g.reps, g.seed, g.threads)?;
            println!("critical = {}", fmt_f64(c));
            if stat == Statistic::Hc {
                if let Ok(a) = hc_asymptotic_critical(g.n as usize, g.alpha) {
                    println!("asymptotic critical = {}", fmt_f64(a));
                }
            }
        }
        Cmd::Power { model: m, test, llr_shape, size } => {
            let model = model(&mut st, &m, g.n)?;
            let test = match st.need("test", test, Some("both".into()))?.as_str() {
                "hc" => TestKind::Hc,
                "llr" => TestKind::Llr,
                "both" => TestKind::Both,
                other => return Err(Failure::Usage(format!("unknown test {other:?}"))),
            };
            let mut cfg = ExperimentConfig::new(model.clone(), test, g.alpha, g.reps, g.seed);
            cfg.threads = g.threads;
            cfg.with_size = size;
            if let Some(s) = st.get("llr_shape", llr_shape, None)? {
                cfg.llr_model = Some(DetectionModel::chimeric(model.n(), model.beta(), model.r(), parse_shape(&s)?)?);
            }
            st.header("power");
            let rep = estimate_power(&cfg)?;
            println!("# config hash = {:016x}", rep.config_hash);
            println!("statistic,critical,power,wilson_lo,wilson_hi,size,null_mean,null_var");
            for o in rep.outcomes {
                println!(
                    "{},{},{},{},{},{},{},{}",
                    o.statistic.label(),
                    fmt_f64(o.critical),
                    fmt_f64(o.power.estimate),
                    fmt_f64(o.power.wilson_lo),
                    fmt_f64(o.power.wilson_hi),
                    o.size.map(|s| fmt_f64(s.estimate)).unwrap_or_default(),
                    fmt_f64(o.null_mean),
                    fmt_f64(o.null_var)
                );
            }
        }
        Cmd::Sweep { model: m, betas, rs, mc } => {
            let fam = family(&mut st, &m)?;
            let (db, dr) = match fam {
                SweepFamily::NormalDense { .. } => ("0.05,0.15,0.25,0.35,0.45", "0.05,0.15,0.25,0.35"),
                _ => ("0.55,0.65,0.75,0.85,0.95", "0.1,0.3,0.5,0.7"),
            };
            let betas = parse_list(&st.need("betas", betas, Some(db.into()))?, "betas")?;
            let rs = parse_list(&st.need("rs", rs, Some(dr.into()))?, "rs")?;
            st.header("sweep");
            let sim = SweepMc {
                n: g.n,
                reps: g.reps,
                alpha: g.alpha,
                seed: g.seed,
                threads: g.threads,
            };
            let rows = phase_sweep(&fam, &betas, &rs, &ClassifierConfig::default(), mc.then_some(&sim))?;
            std::fs::create_dir_all(&g.out).map_err(|e| Failure::Domain(e.to_string()))?;
            let csv = g.out.join("sweep.csv");
            let svg = g.out.join("sweep.svg");
            write_csv(&rows, &csv)?;
            write_svg_phase(&rows, &fam.boundary_curve(200), &svg)?;
            for row in &rows {
                println!(
                    "beta = {}, r = {}: {} ({})",
                    row.beta,
                    row.r,
                    row.label.map(region_label).unwrap_or("unlabelled"),
                    row.side.label()
                );
            }
            println!("wrote {} and {}", csv.display(), svg.display());
        }
        Cmd::Limits { kind, shape, k, a, beta, sigma0, r } => {
            let kind = st.need("kind", kind, Some("gaussian".into()))?;
            let pair = match kind.as_str() {
                "gaussian" => {
                    let h = parse_shape(&st.need("shape", shape, Some("const".into()))?)?;
                    triple_chimeric_boundary(st.need("k", k, Some(1.0))?, &h)?
                }
                "powerlaw" => triple_powerlaw_boundary(st.need("a", a, None)?)?,
                "normal-quadratic" => {
                    let beta = st.need("beta", beta, None)?;
                    triple_normal_quadratic(beta, st.need("sigma0", sigma0, Some(1.0))?)?
                }
                "beta1" => {
                    let h = parse_shape(&st.need("shape", shape, Some("const".into()))?)?;
                    triple_beta1(&h, st.need("r", r, Some(1.0))?)?
                }
                "normal-beta1" => triple_normal_beta1(st.need("r", r, Some(1.0))?)?,
                other => return Err(Failure::Usage(format!("unknown limit kind {other:?}"))),
            };
            st.header("limits");
            limits_report(&pair, &g)?;
        }
        Cmd::Are { h1, h2, beta, r } => {
            let h1 = parse_shape(&st.need("h1", h1, Some("const".into()))?)?;
            let h2 = parse_shape(&st.need("h2", h2, Some("linear".into()))?)?;
            let beta = st.need("beta", beta, Some(0.75))?;
            let r = st.need("r", r, Some(2.0 * beta - 1.0))?;
            st.header("are");
            let closed = are_shapes(&h1, &h2)?;
            let m1 = DetectionModel::chimeric(g.n, beta, r, h1)?;
            let m2 = DetectionModel::chimeric(g.n, beta, r, h2)?;
            let rep = are(&m1, &m2)?;
            println!("gamma11 = {}", fmt_f64(rep.gamma11));
            println!("gamma12 = {}", fmt_f64(rep.gamma12));
            println!("gamma22 = {}", fmt_f64(rep.gamma22));
            println!("ARE = {}", fmt_f64(rep.are));
            println!("ARE (closed form) = {}", fmt_f64(closed.are));
            println!("wasted fraction = {}", fmt_f64(rep.wasted_fraction));
            println!("mismatched power = {}", fmt_f64(mismatched_power(&m1, &m2, g.alpha)?));
        }
        Cmd::Selftest { only } => {
            let ids: Vec<u32> = match st.get("only", only, None)? {
                Some(s) => s
                    .split(',')
                    .map(|x| x.trim().parse().map_err(|_| Failure::Usage(format!("--only: bad id {x:?}"))))
                    .collect::<Out<_>>()?,
                None => acceptance::IDS.to_vec(),
            };
            st.header("selftest");
            let opts = acceptance::Options {
                seed: g.seed,
                threads: g.threads,
            };
            let mut failed = 0;
            for id in ids {
                let o = acceptance::run(id, &opts);
                println!("{o}");
                failed += usize::from(!o.passed);
            }
            if failed > 0 {
                return Err(Failure::Domain(format!("{failed} criteria failed")));
            }
        }
    }
    Ok(())
}

fn limits_report(pair: &LimitPair, g: &Global) -> Out<()> {
    let draws = g.reps.max(1000);
    std::fs::create_dir_all(&g.out).map_err(|e| Failure::Domain(e.to_string()))?;
    println!("mass at +inf under the alternative = {}", fmt_f64(pair.mass_at_inf()));
    for side in [Side::Null, Side::Alternative] {
        let s = LimitSampler::new(pair, side, SamplerConfig::default())?;
        let mut rng = stream(g.seed, Domain::Limit, side as u64);
        let xs: Vec<Extended> = (0..draws).map(|_| s.draw(&mut rng)).collect();
        let name = match side {
            Side::Null => "null",
            Side::Alternative => "alternative",
        };
        let path = g.out.join(format!("limit_{name}_ecdf.csv"));
        write_xy_csv(["x", "ecdf"], &ecdf(&xs), &path)?;
        println!("{name}: wrote {}", path.display());
        println!("t,empirical_re,empirical_im,exact_re,exact_im,abs_diff");
        for t in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let emp: Complex64 = xs
                .iter()
                .filter_map(|x| x.finite())
                .map(|x| Complex64::new(0.0, t * x).exp())
                .sum::<Complex64>()
                / draws as f64;
            let exact = cf_eval(pair, side, t)?;
            println!(
                "{t},{},{},{},{},{}",
                fmt_f64(emp.re),
                fmt_f64(emp.im),
                fmt_f64(exact.re),
                fmt_f64(exact.im),
                fmt_f64((emp - exact).norm())
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `sparsesig --help` for usage");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
