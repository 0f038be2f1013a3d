//! Noise laws, signal families and the sparse mixture model
//! `Q = (1 - eps) P0 + eps mu`.

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::normal;
use crate::quadrature::{self, integrate, integrate_pieces, Tolerance};

const SHAPE_TOL: Tolerance = Tolerance {
    abs: 1e-13,
    rel: 1e-11,
    max_intervals: 4000,
};

/// Smallest and largest p-value handed to statistics.
pub const PVALUE_FLOOR: f64 = 1e-15;

/// Shape `h` of a chimeric signal: a probability density on `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeKind {
    /// `h = 1`.
    Constant,
    /// `h(x) = (1 - a) x^-a`, `0 <= a < 1`.
    PowerLaw { a: f64 },
    /// `h(x) = 2x`.
    Linear2x,
    /// Piecewise-linear density through `(grid[i], values[i])`.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeFunction {
    kind: ShapeKind,
    // Prefix integrals at the grid nodes, tabulated shapes only.
    prefix: Vec<f64>,
    int_h2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Monotone {
    Flat,
    Decreasing,
    Increasing,
    Neither,
}

impl ShapeFunction {
    pub fn constant() -> Self {
        Self::finish(ShapeKind::Constant, Vec::new())
    }

    pub fn power_law(a: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&a) {
            return Err(Error::domain("a", a, "power-law exponent must lie in [0, 1)"));
        }
        if a == 0.0 {
            return Ok(Self::constant());
        }
        Ok(Self::finish(ShapeKind::PowerLaw { a }, Vec::new()))
    }

    pub fn linear2x() -> Self {
        Self::finish(ShapeKind::Linear2x, Vec::new())
    }

    /// Piecewise-linear density; the values are rescaled to integrate to one.
    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::InvalidModel(
                "tabulated shape needs matching grid and values with at least two nodes".into(),
            ));
        }
        if grid[0] != 0.0 || *grid.last().unwrap() != 1.0 {
            return Err(Error::InvalidModel("tabulated grid must run from 0 to 1".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidModel("tabulated grid must be strictly increasing".into()));
        }
        if let Some(&v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::domain("shape value", v, "must be finite and non-negative"));
        }
        let mass: f64 = grid
            .windows(2)
            .zip(values.windows(2))
            .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
            .sum();
        if mass <= 0.0 {
            return Err(Error::InvalidModel("tabulated shape has zero mass".into()));
        }
        let values: Vec<f64> = values.iter().map(|v| v / mass).collect();
        let mut prefix = vec![0.0];
        for (g, v) in grid.windows(2).zip(values.windows(2)) {
            let last = *prefix.last().unwrap();
            prefix.push(last + 0.5 * (g[1] - g[0]) * (v[0] + v[1]));
        }
        Ok(Self::finish(ShapeKind::Tabulated { grid, values }, prefix))
    }

    fn finish(kind: ShapeKind, prefix: Vec<f64>) -> Self {
        let mut s = ShapeFunction {
            kind,
            prefix,
            int_h2: None,
        };
        s.int_h2 = s.compute_int_h2();
        s
    }

    fn compute_int_h2(&self) -> Option<f64> {
        if let ShapeKind::PowerLaw { a } = self.kind {
            if a >= 0.5 {
                return None;
            }
        }
        self.integrate_composed(|h| h * h, 0.0, 1.0).ok()
    }

    pub fn kind(&self) -> &ShapeKind {
        &self.kind
    }

    /// A short name used in reports and file names.
    pub fn label(&self) -> String {
        match &self.kind {
            ShapeKind::Constant => "constant".into(),
            ShapeKind::PowerLaw { a } => format!("powerlaw(a={a})"),
            ShapeKind::Linear2x => "linear2x".into(),
            ShapeKind::Tabulated { grid, .. } => format!("tabulated({} nodes)", grid.len()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if !(x > 0.0 && x < 1.0) {
            return 0.0;
        }
        match &self.kind {
            ShapeKind::Constant => 1.0,
            ShapeKind::PowerLaw { a } => (1.0 - a) * x.powf(-a),
            ShapeKind::Linear2x => 2.0 * x,
            ShapeKind::Tabulated { grid, values } => {
                let i = segment(grid, x);
                let t = (x - grid[i]) / (grid[i + 1] - grid[i]);
                values[i] + t * (values[i + 1] - values[i])
            }
        }
    }

    /// `H(x) = int_0^x h`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        match &self.kind {
            ShapeKind::Constant => x,
            ShapeKind::PowerLaw { a } => x.powf(1.0 - a),
            ShapeKind::Linear2x => x * x,
            ShapeKind::Tabulated { grid, values } => {
                let i = segment(grid, x);
                let len = grid[i + 1] - grid[i];
                let s = x - grid[i];
                self.prefix[i] + values[i] * s + 0.5 * (values[i + 1] - values[i]) / len * s * s
            }
        }
    }

    /// Inverse of [`cdf`](Self::cdf).
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match &self.kind {
            ShapeKind::Constant => u,
            ShapeKind::PowerLaw { a } => u.powf(1.0 / (1.0 - a)),
            ShapeKind::Linear2x => u.sqrt(),
            ShapeKind::Tabulated { grid, values } => {
                let i = match self.prefix.partition_point(|&p| p <= u) {
                    0 => 0,
                    k => (k - 1).min(grid.len() - 2),
                };
                let len = grid[i + 1] - grid[i];
                let v0 = values[i];
                let slope = (values[i + 1] - v0) / len;
                let target = u - self.prefix[i];
                // Solve v0 s + slope s^2 / 2 = target without cancellation.
                let s = if slope.abs() < 1e-300 {
                    if v0 > 0.0 {
                        target / v0
                    } else {
                        0.0
                    }
                } else {
                    let disc = (v0 * v0 + 2.0 * slope * target).max(0.0);
                    2.0 * target / (v0 + disc.sqrt())
                };
                (grid[i] + s.clamp(0.0, len)).min(1.0)
            }
        }
    }

    /// `sup h`, `None` when unbounded.
    pub fn sup(&self) -> Option<f64> {
        match &self.kind {
            ShapeKind::Constant => Some(1.0),
            ShapeKind::PowerLaw { .. } => None,
            ShapeKind::Linear2x => Some(2.0),
            ShapeKind::Tabulated { values, .. } => values.iter().copied().reduce(f64::max),
        }
    }

    /// `int h^2`, `None` when it diverges.
    pub fn int_h2(&self) -> Option<f64> {
        self.int_h2
    }

    /// `int_lo^hi F(h(x)) dx`.
    ///
    /// For the power law the substitution `u = x^(1-a)` turns `h dx` into
    /// `du`, which removes the singularity at the origin for integrands that
    /// grow no faster than `h`.
    pub fn integrate_composed<F: Fn(f64) -> f64>(&self, f: F, lo: f64, hi: f64) -> Result<f64> {
        let lo = lo.clamp(0.0, 1.0);
        let hi = hi.clamp(0.0, 1.0);
        if hi <= lo {
            return Ok(0.0);
        }
        match &self.kind {
            ShapeKind::Constant => Ok(f(1.0) * (hi - lo)),
            ShapeKind::PowerLaw { a } => {
                let a = *a;
                let q = 1.0 - a;
                let h_of_u = |u: f64| q * u.powf(-a / q);
                integrate(
                    |u: f64| {
                        let h = h_of_u(u);
                        f(h) / h
                    },
                    lo.powf(q),
                    hi.powf(q),
                    SHAPE_TOL,
                )
            }
            ShapeKind::Linear2x => integrate(|x: f64| f(2.0 * x), lo, hi, SHAPE_TOL),
            ShapeKind::Tabulated { grid, .. } => {
                let mut pts: Vec<f64> = grid.iter().copied().filter(|&g| g > lo && g < hi).collect();
                pts.push(lo);
                pts.push(hi);
                integrate_pieces(|x: f64| f(self.eval(x)), &pts, SHAPE_TOL)
            }
        }
    }

    fn monotone(&self) -> Monotone {
        match &self.kind {
            ShapeKind::Constant => Monotone::Flat,
            ShapeKind::PowerLaw { .. } => Monotone::Decreasing,
            ShapeKind::Linear2x => Monotone::Increasing,
            ShapeKind::Tabulated { .. } => Monotone::Neither,
        }
    }

    /// Disjoint sub-intervals of `(0, 1)` on which `h > c`.
    pub fn above(&self, c: f64) -> Vec<(f64, f64)> {
        match self.monotone() {
            Monotone::Flat => {
                if 1.0 > c {
                    vec![(0.0, 1.0)]
                } else {
                    vec![]
                }
            }
            Monotone::Decreasing => {
                let x = self.crossing(c, true);
                if x > 0.0 {
                    vec![(0.0, x)]
                } else {
                    vec![]
                }
            }
            Monotone::Increasing => {
                let x = self.crossing(c, false);
                if x < 1.0 {
                    vec![(x, 1.0)]
                } else {
                    vec![]
                }
            }
            Monotone::Neither => self.tabulated_above(c),
        }
    }

    /// Complement of [`above`](Self::above) in `(0, 1)`.
    pub fn at_most(&self, c: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut start = 0.0;
        for (lo, hi) in self.above(c) {
            if lo > start {
                out.push((start, lo));
            }
            start = hi;
        }
        if start < 1.0 {
            out.push((start, 1.0));
        }
        out
    }

    // Level crossing of a monotone shape by bisection in log scale.
    fn crossing(&self, c: f64, decreasing: bool) -> f64 {
        let above = |x: f64| self.eval(x) > c;
        let (near0, near1) = (f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
        // `inside` is the endpoint where the set {h > c} lives.
        let (mut inside, mut outside) = if decreasing { (near0, near1) } else { (near1, near0) };
        if !above(inside) {
            return if decreasing { 0.0 } else { 1.0 };
        }
        if above(outside) {
            return if decreasing { 1.0 } else { 0.0 };
        }
        for _ in 0..2000 {
            let mid = (inside.ln() + outside.ln()).mul_add(0.5, 0.0).exp();
            let mid = if mid == inside || mid == outside { 0.5 * (inside + outside) } else { mid };
            if mid == inside || mid == outside {
                break;
            }
            if above(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        0.5 * (inside + outside)
    }

    fn tabulated_above(&self, c: f64) -> Vec<(f64, f64)> {
        let ShapeKind::Tabulated { grid, values } = &self.kind else {
            unreachable!()
        };
        let mut pieces: Vec<(f64, f64)> = Vec::new();
        for i in 0..grid.len() - 1 {
            let (x0, x1, v0, v1) = (grid[i], grid[i + 1], values[i], values[i + 1]);
            let piece = match (v0 > c, v1 > c) {
                (true, true) => Some((x0, x1)),
                (false, false) => None,
                (true, false) => Some((x0, x0 + (x1 - x0) * (v0 - c) / (v0 - v1))),
                (false, true) => Some((x0 + (x1 - x0) * (c - v0) / (v1 - v0), x1)),
            };
            if let Some((a, b)) = piece {
                match pieces.last_mut() {
                    Some(last) if last.1 == a => last.1 = b,
                    _ => pieces.push((a, b)),
                }
            }
        }
        pieces
    }
}

fn segment(grid: &[f64], x: f64) -> usize {
    grid.partition_point(|&g| g <= x).saturating_sub(1).min(grid.len() - 2)
}

/// Tabulated mean-zero perturbation `r(u)` of a chimeric signal density,
/// optionally scaled by `n^growth`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    grid: Vec<f64>,
    values: Vec<f64>,
    growth: f64,
}

impl Perturbation {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::with_growth(grid, values, 0.0)
    }

    /// `r_n(u) = n^growth r(u)`.
    pub fn with_growth(grid: Vec<f64>, values: Vec<f64>, growth: f64) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::InvalidModel(
                "perturbation needs matching grid and values with at least two nodes".into(),
            ));
        }
        if grid[0] != 0.0 || *grid.last().unwrap() != 1.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidModel(
                "perturbation grid must increase strictly from 0 to 1".into(),
            ));
        }
        if !growth.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("perturbation must be finite".into()));
        }
        let p = Perturbation {
            grid,
            values,
            growth,
        };
        let mean = p.integral();
        if mean.abs() > 1e-9 {
            return Err(Error::domain("int r", mean, "perturbation must integrate to zero"));
        }
        Ok(p)
    }

    fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
            .sum()
    }

    fn scale(&self, n: f64) -> f64 {
        if self.growth == 0.0 {
            1.0
        } else {
            n.powf(self.growth)
        }
    }

    pub fn eval(&self, u: f64, n: f64) -> f64 {
        if !(u > 0.0 && u < 1.0) {
            return 0.0;
        }
        let i = segment(&self.grid, u);
        let t = (u - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        self.scale(n) * (self.values[i] + t * (self.values[i + 1] - self.values[i]))
    }

    /// `int r_n^2`.
    pub fn int_sq(&self, n: f64) -> f64 {
        let base: f64 = self
            .grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(g, v)| (g[1] - g[0]) * (v[0] * v[0] + v[0] * v[1] + v[1] * v[1]) / 3.0)
            .sum();
        base * self.scale(n).powi(2)
    }

    /// `int_0^u r_n`.
    pub fn integral_to(&self, u: f64, n: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let mut acc = 0.0;
        for (g, v) in self.grid.windows(2).zip(self.values.windows(2)) {
            if u <= g[0] {
                break;
            }
            let hi = u.min(g[1]);
            let vh = v[0] + (v[1] - v[0]) * (hi - g[0]) / (g[1] - g[0]);
            acc += 0.5 * (hi - g[0]) * (v[0] + vh);
        }
        acc * self.scale(n)
    }

    pub fn sup_abs(&self, n: f64) -> f64 {
        self.scale(n) * self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.grid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseFamily {
    /// Uniform on `(0, 1)`; observations are their own p-values.
    UniformUnit,
    StandardNormal,
}

/// How the normal shift scales with `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Calibration {
    /// `theta = sqrt(2 r log n)`.
    Sparse,
    /// `theta = n^-r`.
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SignalFamily {
    /// Density `(1/kappa) h(u/kappa)` on `(0, kappa)` plus an optional
    /// perturbation, with `kappa = n^-r`.
    Chimeric {
        shape: ShapeFunction,
        perturbation: Option<Perturbation>,
    },
    /// `N(theta, sigma0^2)`.
    NormalShift { sigma0: f64 },
    /// `inner` conditioned on `{ratio <= cap}`; when that event has no mass
    /// the conditioned law is taken to be the noise law itself.
    Truncated {
        inner: Box<SignalFamily>,
        cap: f64,
        kept_mass: f64,
    },
}

/// One parameter point `theta = (n, beta, r, ...)` of a detection problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionModel {
    n: u64,
    beta: f64,
    r: f64,
    log_exponent: f64,
    noise: NoiseFamily,
    signal: SignalFamily,
    calibration: Calibration,
    epsilon_override: Option<f64>,
}

impl DetectionModel {
    pub fn chimeric(n: u64, beta: f64, r: f64, shape: ShapeFunction) -> Result<Self> {
        Self::build(
            n,
            beta,
            r,
            NoiseFamily::UniformUnit,
            SignalFamily::Chimeric {
                shape,
                perturbation: None,
            },
            Calibration::Sparse,
        )
    }

    pub fn normal(n: u64, beta: f64, r: f64, sigma0: f64) -> Result<Self> {
        Self::normal_with(n, beta, r, sigma0, Calibration::Sparse)
    }

    pub fn normal_dense(n: u64, beta: f64, r: f64, sigma0: f64) -> Result<Self> {
        Self::normal_with(n, beta, r, sigma0, Calibration::Dense)
    }

    fn normal_with(n: u64, beta: f64, r: f64, sigma0: f64, cal: Calibration) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::domain("sigma0", sigma0, "must be positive"));
        }
        Self::build(
            n,
            beta,
            r,
            NoiseFamily::StandardNormal,
            SignalFamily::NormalShift { sigma0 },
            cal,
        )
    }

    fn build(
        n: u64,
        beta: f64,
        r: f64,
        noise: NoiseFamily,
        signal: SignalFamily,
        calibration: Calibration,
    ) -> Result<Self> {
        if n < 3 {
            return Err(Error::domain("n", n as f64, "need n >= 3"));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::domain("beta", beta, "must lie in (0, 1]"));
        }
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::domain("r", r, "must be finite and non-negative"));
        }
        let m = DetectionModel {
            n,
            beta,
            r,
            log_exponent: 0.0,
            noise,
            signal,
            calibration,
            epsilon_override: None,
        };
        m.epsilon()?;
        Ok(m)
    }

    /// Multiply the mixing weight by `(log n)^e`.
    pub fn with_log_exponent(mut self, e: f64) -> Result<Self> {
        if !e.is_finite() {
            return Err(Error::domain("log exponent", e, "must be finite"));
        }
        self.log_exponent = e;
        self.epsilon()?;
        Ok(self)
    }

    /// Replace `n^-beta (log n)^E` by a fixed mixing weight in `[0, 1)`.
    pub fn with_epsilon(mut self, eps: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::domain("epsilon", eps, "must lie in [0, 1)"));
        }
        self.epsilon_override = Some(eps);
        Ok(self)
    }

    pub fn with_perturbation(mut self, p: Perturbation) -> Result<Self> {
        let SignalFamily::Chimeric { shape, .. } = &self.signal else {
            return Err(Error::InvalidModel("only chimeric signals take a perturbation".into()));
        };
        let kappa = self.kappa();
        let nf = self.n as f64;
        // The perturbed signal density must stay non-negative. It is
        // piecewise monotone between these nodes.
        let mut nodes: Vec<f64> = p.nodes().to_vec();
        nodes.push(kappa);
        if let ShapeKind::Tabulated { grid, .. } = shape.kind() {
            nodes.extend(grid.iter().map(|g| g * kappa));
        }
        for &u in &nodes {
            for v in [u * (1.0 - 1e-12), u * (1.0 + 1e-12)] {
                if v <= 0.0 || v >= 1.0 {
                    continue;
                }
                let d = shape.eval(v / kappa) / kappa + p.eval(v, nf);
                if d < -1e-12 {
                    return Err(Error::InvalidModel(format!(
                        "perturbed signal density is negative ({d}) at u = {v}"
                    )));
                }
            }
        }
        let shape = shape.clone();
        self.signal = SignalFamily::Chimeric {
            shape,
            perturbation: Some(p),
        };
        Ok(self)
    }

    /// The same problem at a different sample size.
    pub fn at_n(&self, n: u64) -> Result<Self> {
        let mut m = self.clone();
        m.n = n;
        if n < 3 {
            return Err(Error::domain("n", n as f64, "need n >= 3"));
        }
        m.epsilon()?;
        Ok(m)
    }

    pub(crate) fn with_signal(mut self, signal: SignalFamily) -> Self {
        self.signal = signal;
        self
    }

    pub fn n(&self) -> u64 {
        self.n
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn log_exponent(&self) -> f64 {
        self.log_exponent
    }
    pub fn noise(&self) -> NoiseFamily {
        self.noise
    }
    pub fn signal(&self) -> &SignalFamily {
        &self.signal
    }
    pub fn calibration(&self) -> Calibration {
        self.calibration
    }

    /// `eps_n = n^-beta (log n)^E`.
    pub fn epsilon(&self) -> Result<f64> {
        if let Some(e) = self.epsilon_override {
            return Ok(e);
        }
        if self.n < 3 {
            return Err(Error::domain("n", self.n as f64, "need n >= 3"));
        }
        let ln_n = (self.n as f64).ln();
        let eps = (-self.beta * ln_n + self.log_exponent * ln_n.ln()).exp();
        if eps >= 1.0 {
            return Err(Error::domain("epsilon", eps, "mixing weight must stay below 1"));
        }
        Ok(eps)
    }

    /// Support scale `kappa = n^-r` of chimeric signals.
    pub fn kappa(&self) -> f64 {
        (self.n as f64).powf(-self.r)
    }

    /// Location of normal signals.
    pub fn theta(&self) -> f64 {
        let n = self.n as f64;
        match self.calibration {
            Calibration::Sparse => (2.0 * self.r * n.ln()).sqrt(),
            Calibration::Dense => n.powf(-self.r),
        }
    }

    fn check_support(&self, y: f64) -> Result<()> {
        let ok = match self.noise {
            NoiseFamily::UniformUnit => y > 0.0 && y < 1.0,
            NoiseFamily::StandardNormal => y.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::OutsideSupport(y))
        }
    }

    /// `d mu / d P0 (y)`.
    pub fn signal_density_ratio(&self, y: f64) -> Result<f64> {
        self.check_support(y)?;
        Ok(ratio_of(&self.signal, self, y))
    }

    /// `log d mu / d P0 (y)`; `-inf` off the signal support.
    pub fn ln_signal_density_ratio(&self, y: f64) -> Result<f64> {
        self.check_support(y)?;
        Ok(ln_ratio_of(&self.signal, self, y))
    }

    /// `dQ / dP0 (y) = 1 - eps + eps * dmu/dP0 (y)`.
    pub fn mixture_density_ratio(&self, y: f64) -> Result<f64> {
        let eps = self.epsilon()?;
        let g = self.signal_density_ratio(y)?;
        Ok(1.0 - eps + eps * g)
    }

    pub fn sample_null<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        (0..count).map(|_| self.draw_noise(rng)).collect()
    }

    /// `n` draws from the mixture and the number that came from the signal.
    pub fn sample_alternative<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Vec<f64>, usize)> {
        let eps = self.epsilon()?;
        let n = self.n as usize;
        let mut out = Vec::with_capacity(n);
        let mut signals = 0;
        for _ in 0..n {
            if eps > 0.0 && rng.random::<f64>() < eps {
                signals += 1;
                out.push(self.draw_signal(rng));
            } else {
                out.push(self.draw_noise(rng));
            }
        }
        Ok((out, signals))
    }

    /// Number of signal observations in one alternative sample.
    pub fn sample_signal_count<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        let eps = self.epsilon()?;
        binomial(self.n, eps, rng)
    }

    pub fn draw_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.noise {
            NoiseFamily::UniformUnit => rng.sample(Open01),
            NoiseFamily::StandardNormal => rng.sample(StandardNormal),
        }
    }

    /// One draw from the signal law `mu`.
    pub fn draw_signal<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        draw_from(&self.signal, self, rng)
    }

    /// Right-tail p-values under the noise law, clamped away from 0 and 1.
    pub fn to_pvalues(&self, obs: &[f64]) -> Result<Vec<f64>> {
        obs.iter()
            .map(|&y| {
                self.check_support(y)?;
                let p = match self.noise {
                    NoiseFamily::UniformUnit => y,
                    NoiseFamily::StandardNormal => normal::sf(y),
                };
                Ok(p.clamp(PVALUE_FLOOR, 1.0 - PVALUE_FLOOR))
            })
            .collect()
    }

    /// Whether `n eps_n^2 int r_n^2` decays along `n_grid`; the second value
    /// is that quantity at the largest grid point.
    pub fn perturbation_admissible(&self, n_grid: &[u64]) -> Result<(bool, f64)> {
        let p = match &self.signal {
            SignalFamily::Chimeric {
                perturbation: Some(p),
                ..
            } => p,
            _ => return Ok((true, 0.0)),
        };
        if n_grid.len() < 2 {
            return Err(Error::InvalidModel("admissibility needs at least two grid points".into()));
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut last = 0.0;
        for &n in n_grid {
            let m = self.at_n(n)?;
            let eps = m.epsilon()?;
            let v = n as f64 * eps * eps * p.int_sq(n as f64);
            last = v;
            if v > 0.0 {
                xs.push((n as f64).ln());
                ys.push(v.ln());
            }
        }
        if ys.len() < 2 {
            return Ok((true, last));
        }
        let slope = ls_slope(&xs, &ys);
        Ok((slope < -0.02, last))
    }
}

pub(crate) fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub(crate) fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> Result<u64> {
    if p <= 0.0 || n == 0 {
        return Ok(0);
    }
    if p >= 1.0 {
        return Ok(n);
    }
    let b = Binomial::new(n, p).map_err(|_| Error::domain("binomial p", p, "must lie in [0, 1]"))?;
    Ok(b.sample(rng))
}

/// `log` of the normal-shift likelihood ratio.
pub(crate) fn normal_ln_ratio(y: f64, theta: f64, sigma0: f64) -> f64 {
    let s2 = sigma0 * sigma0;
    0.5 * y * y * (1.0 - 1.0 / s2) + theta * (y - 0.5 * theta) / s2 - sigma0.ln()
}

fn ratio_of(signal: &SignalFamily, m: &DetectionModel, y: f64) -> f64 {
    match signal {
        SignalFamily::Chimeric {
            shape,
            perturbation,
        } => {
            let kappa = m.kappa();
            let base = if y < kappa { shape.eval(y / kappa) / kappa } else { 0.0 };
            match perturbation {
                Some(p) => base + p.eval(y, m.n as f64),
                None => base,
            }
        }
        SignalFamily::NormalShift { sigma0 } => normal_ln_ratio(y, m.theta(), *sigma0).exp(),
        SignalFamily::Truncated {
            inner,
            cap,
            kept_mass,
        } => {
            if *kept_mass <= 0.0 {
                return 1.0;
            }
            let g = ratio_of(inner, m, y);
            if g <= *cap {
                g / kept_mass
            } else {
                0.0
            }
        }
    }
}

fn ln_ratio_of(signal: &SignalFamily, m: &DetectionModel, y: f64) -> f64 {
    match signal {
        SignalFamily::NormalShift { sigma0 } => normal_ln_ratio(y, m.theta(), *sigma0),
        _ => ratio_of(signal, m, y).ln(),
    }
}

fn draw_from<R: Rng + ?Sized>(signal: &SignalFamily, m: &DetectionModel, rng: &mut R) -> f64 {
    match signal {
        SignalFamily::Chimeric {
            shape,
            perturbation,
        } => {
            let kappa = m.kappa();
            let base = |rng: &mut R| kappa * shape.quantile(rng.sample(Open01));
            let Some(p) = perturbation else {
                return base(rng);
            };
            // Rejection from the mixture of the unperturbed signal (weight
            // 1/(1+R)) and uniform noise (weight R/(1+R)), R = sup|r|.
            let n = m.n as f64;
            let big_r = p.sup_abs(n);
            loop {
                let u = if rng.random::<f64>() * (1.0 + big_r) < 1.0 {
                    base(rng)
                } else {
                    rng.sample(Open01)
                };
                let unpert = if u < kappa { shape.eval(u / kappa) / kappa } else { 0.0 };
                let target = unpert + p.eval(u, n);
                let envelope = unpert + big_r;
                if envelope <= 0.0 || rng.random::<f64>() * envelope <= target {
                    return u;
                }
            }
        }
        SignalFamily::NormalShift { sigma0 } => {
            let z: f64 = rng.sample(StandardNormal);
            m.theta() + sigma0 * z
        }
        SignalFamily::Truncated {
            inner,
            cap,
            kept_mass,
        } => {
            if *kept_mass <= 0.0 {
                return m.draw_noise(rng);
            }
            loop {
                let y = draw_from(inner, m, rng);
                if ratio_of(inner, m, y) <= *cap {
                    return y;
                }
            }
        }
    }
}

/// `mu({ratio <= cap})` for the given signal at the model's `n`.
pub(crate) fn signal_mass_at_most(signal: &SignalFamily, m: &DetectionModel, cap: f64) -> Result<f64> {
    match signal {
        SignalFamily::Chimeric {
            shape,
            perturbation: None,
        } => {
            let kappa = m.kappa();
            let mut mass = 0.0;
            for (lo, hi) in shape.at_most(cap * kappa) {
                mass += shape.integrate_composed(|h| h, lo, hi)?;
            }
            Ok(mass.clamp(0.0, 1.0))
        }
        SignalFamily::NormalShift { sigma0 } => {
            let theta = m.theta();
            let set = normal_ratio_set(theta, *sigma0, cap.ln(), false);
            Ok(set
                .iter()
                .map(|&(lo, hi)| normal_prob(lo, hi, theta, *sigma0))
                .sum::<f64>()
                .clamp(0.0, 1.0))
        }
        _ => {
            // Generic: integrate the signal density against the noise law.
            let f = |y: f64| {
                let g = ratio_of(signal, m, y);
                if g <= cap {
                    g
                } else {
                    0.0
                }
            };
            let v = noise_integral(m, signal, f)?;
            Ok(v.clamp(0.0, 1.0))
        }
    }
}

/// `P(theta + sigma0 Z in (lo, hi))`.
pub(crate) fn normal_prob(lo: f64, hi: f64, theta: f64, sigma0: f64) -> f64 {
    let a = (lo - theta) / sigma0;
    let b = (hi - theta) / sigma0;
    if a > 0.0 {
        normal::sf(a) - normal::sf(b)
    } else {
        normal::cdf(b) - normal::cdf(a)
    }
}

/// The set `{y : log ratio(y) > level}` (or `<=` when `above` is false) as
/// a list of intervals.
pub(crate) fn normal_ratio_set(theta: f64, sigma0: f64, level: f64, above: bool) -> Vec<(f64, f64)> {
    // log ratio = A y^2 + B y + C.
    let s2 = sigma0 * sigma0;
    let a = 0.5 - 0.5 / s2;
    let b = theta / s2;
    let c = -sigma0.ln() - 0.5 * theta * theta / s2 - level;
    let inf = f64::INFINITY;
    let ninf = f64::NEG_INFINITY;
    let sup_set: Vec<(f64, f64)> = if a.abs() < 1e-15 {
        if b > 0.0 {
            vec![(-c / b, inf)]
        } else if b < 0.0 {
            vec![(ninf, -c / b)]
        } else if c > 0.0 {
            vec![(ninf, inf)]
        } else {
            vec![]
        }
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc <= 0.0 {
            if a > 0.0 {
                vec![(ninf, inf)]
            } else {
                vec![]
            }
        } else {
            let sq = disc.sqrt();
            let q = -0.5 * (b + b.signum() * sq);
            let (mut r1, mut r2) = if q != 0.0 { (q / a, c / q) } else { (-sq / (2.0 * a), sq / (2.0 * a)) };
            if r1 > r2 {
                std::mem::swap(&mut r1, &mut r2);
            }
            if a > 0.0 {
                vec![(ninf, r1), (r2, inf)]
            } else {
                vec![(r1, r2)]
            }
        }
    };
    if above {
        return sup_set;
    }
    let mut out = Vec::new();
    let mut start = ninf;
    for (lo, hi) in sup_set {
        if lo > start {
            out.push((start, lo));
        }
        start = hi;
    }
    if start < inf {
        out.push((start, inf));
    }
    out
}

/// `int f dP0` for the model's noise law, splitting at the places where a
/// signal density ratio is likely to jump or peak.
pub(crate) fn noise_integral<F: Fn(f64) -> f64>(m: &DetectionModel, signal: &SignalFamily, f: F) -> Result<f64> {
    let tol = Tolerance::new(1e-14, 1e-10);
    match m.noise {
        NoiseFamily::UniformUnit => {
            let mut pts = vec![0.0, 1.0];
            collect_breaks(signal, m, &mut pts);
            let pts = refine_scan(&f, &pts);
            quadrature::integrate_pieces(&f, &pts, tol)
        }
        NoiseFamily::StandardNormal => {
            let theta = m.theta();
            let sigma0 = inner_sigma(signal).unwrap_or(1.0);
            let lo = (-40.0f64).min(theta - 40.0 * sigma0);
            let hi = 40.0f64.max(theta + 40.0 * sigma0);
            let mut pts = vec![lo, 0.0, theta, hi];
            let pts0 = pts.clone();
            pts.extend(pts0.windows(2).flat_map(|w| (1..64).map(move |k| w[0] + (w[1] - w[0]) * k as f64 / 64.0)));
            let g = |y: f64| f(y) * normal::pdf(y);
            let pts = refine_scan(&g, &pts);
            quadrature::integrate_pieces(g, &pts, tol)
        }
    }
}

fn inner_sigma(signal: &SignalFamily) -> Option<f64> {
    match signal {
        SignalFamily::NormalShift { sigma0 } => Some(*sigma0),
        SignalFamily::Truncated { inner, .. } => inner_sigma(inner),
        _ => None,
    }
}

fn collect_breaks(signal: &SignalFamily, m: &DetectionModel, pts: &mut Vec<f64>) {
    match signal {
        SignalFamily::Chimeric {
            shape,
            perturbation,
        } => {
            let kappa = m.kappa();
            if kappa < 1.0 {
                pts.push(kappa);
            }
            for k in 1..64 {
                pts.push(kappa * k as f64 / 64.0);
            }
            if let ShapeKind::Tabulated { grid, .. } = shape.kind() {
                pts.extend(grid.iter().map(|g| g * kappa));
            }
            if let Some(p) = perturbation {
                pts.extend_from_slice(p.nodes());
            }
        }
        SignalFamily::Truncated { inner, .. } => collect_breaks(inner, m, pts),
        SignalFamily::NormalShift { .. } => {}
    }
}

// Locate jumps of an integrand that is piecewise smooth between unknown
// points: scan each piece and bisect where the value changes abruptly.
fn refine_scan<F: Fn(f64) -> f64>(f: &F, pts: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = pts.iter().copied().filter(|p| p.is_finite()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut out = pts.clone();
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let k = 16;
        let xs: Vec<f64> = (0..=k).map(|i| a + (b - a) * i as f64 / k as f64).collect();
        let interior = |x: f64| x.clamp(a + (b - a) * 1e-9, b - (b - a) * 1e-9);
        let vals: Vec<f64> = xs.iter().map(|&x| f(interior(x))).collect();
        for i in 0..k {
            let (v0, v1) = (vals[i], vals[i + 1]);
            let zero_switch = (v0 == 0.0) != (v1 == 0.0);
            if zero_switch {
                let (mut lo, mut hi) = (xs[i], xs[i + 1]);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if (f(interior(mid)) == 0.0) == (v0 == 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn epsilon_matches_definition() {
        let m = DetectionModel::chimeric(1000, 0.7, 0.3, ShapeFunction::constant()).unwrap();
        assert_relative_eq!(m.epsilon().unwrap(), 1000f64.powf(-0.7), max_relative = 1e-14);
        let m = m.with_log_exponent(1.5).unwrap();
        assert_relative_eq!(
            m.epsilon().unwrap(),
            1000f64.powf(-0.7) * 1000f64.ln().powf(1.5),
            max_relative = 1e-13
        );
    }

    #[test]
    fn epsilon_rejects_small_n_and_weights_above_one() {
        assert!(DetectionModel::chimeric(2, 0.7, 0.3, ShapeFunction::constant()).is_err());
        let m = DetectionModel::chimeric(10, 0.1, 0.3, ShapeFunction::constant()).unwrap();
        assert!(m.with_log_exponent(5.0).is_err());
    }

    #[test]
    fn chimeric_ratio_is_support_scaled_shape() {
        let m = DetectionModel::chimeric(10_000, 0.7, 0.5, ShapeFunction::constant()).unwrap();
        assert_relative_eq!(m.signal_density_ratio(0.005).unwrap(), 100.0, max_relative = 1e-12);
        assert_eq!(m.signal_density_ratio(0.5).unwrap(), 0.0);
        assert!(matches!(m.signal_density_ratio(1.5), Err(Error::OutsideSupport(_))));
    }

    #[test]
    fn normal_ratio_at_theta() {
        let m = DetectionModel::normal(10_000, 0.7, 0.5, 1.0).unwrap();
        let t = m.theta();
        assert_relative_eq!(m.signal_density_ratio(t).unwrap(), (0.5 * t * t).exp(), max_relative = 1e-12);
    }

    #[test]
    fn tabulated_quantile_inverts_cdf() {
        let s = ShapeFunction::tabulated(vec![0.0, 0.25, 0.6, 1.0], vec![3.0, 0.5, 0.0, 2.0]).unwrap();
        for k in 1..100 {
            let u = k as f64 / 100.0;
            assert_relative_eq!(s.cdf(s.quantile(u)), u, epsilon = 1e-12);
        }
        assert_relative_eq!(s.cdf(1.0), 1.0);
    }

    #[test]
    fn power_law_bisection_matches_closed_form() {
        let s = ShapeFunction::power_law(0.6).unwrap();
        for &c in &[0.5, 3.0, 1e3] {
            let x = s.above(c)[0].1;
            let exact = (0.4_f64 / c).powf(1.0 / 0.6);
            assert_relative_eq!(x, exact.min(1.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn int_h2_values() {
        assert_relative_eq!(ShapeFunction::linear2x().int_h2().unwrap(), 4.0 / 3.0, max_relative = 1e-11);
        let a = 0.3;
        let s = ShapeFunction::power_law(a).unwrap();
        assert_relative_eq!(s.int_h2().unwrap(), (1.0 - a) * (1.0 - a) / (1.0 - 2.0 * a), max_relative = 1e-9);
        assert!(ShapeFunction::power_law(0.5).unwrap().int_h2().is_none());
    }

    #[test]
    fn perturbation_must_have_mean_zero() {
        assert!(Perturbation::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(Perturbation::new(vec![0.0, 1.0], vec![-1.0, 1.0]).is_ok());
    }

    #[test]
    fn normal_ratio_sets_partition_the_line() {
        for &s in &[0.5, 1.0, 2.0] {
            let above = normal_ratio_set(1.3, s, 0.2, true);
            let below = normal_ratio_set(1.3, s, 0.2, false);
            let total: f64 = above
                .iter()
                .chain(below.iter())
                .map(|&(lo, hi)| normal_prob(lo, hi, 0.0, 1.0))
                .sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-14);
            for &(lo, hi) in &above {
                let y = if lo.is_finite() && hi.is_finite() {
                    0.5 * (lo + hi)
                } else if lo.is_finite() {
                    lo + 1.0
                } else {
                    hi - 1.0
                };
                assert!(normal_ln_ratio(y, 1.3, s) > 0.2);
            }
        }
    }
}
