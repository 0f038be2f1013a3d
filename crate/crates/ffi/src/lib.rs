//! C interface to `sparsesig`.
//!
//! Every function returns an [`SsStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read with
//! [`ss_last_error`]. Models and limit laws are opaque handles released with
//! their `_free` functions.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use sparsesig::detectability::{
    boundary_chimeric, boundary_normal_dense, boundary_normal_sparse, boundary_powerlaw, classify_region,
    ClassifierConfig, NormalCase, Region,
};
use sparsesig::distributions::{DetectionModel, ShapeFunction};
use sparsesig::efficiency::are_shapes;
use sparsesig::limits::{
    cf_eval, triple_beta1, triple_normal_quadratic, triple_powerlaw_boundary, LimitPair, LimitSampler,
    SamplerConfig, Side,
};
use sparsesig::montecarlo::{estimate_power, ExperimentConfig, Statistic, TestKind};
use sparsesig::rng::{stream, Domain};
use sparsesig::statistics::hc_statistic;
use sparsesig::{Error, Extended};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    InvalidModel = 3,
    Divergent = 4,
    NoLimit = 5,
    Numerical = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsShape {
    Constant = 0,
    Linear2x = 1,
    /// Uses the `param` argument as the exponent `a`.
    PowerLaw = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsRegion {
    Undetectable = 0,
    Detectable = 1,
    CompletelyDetectable = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsSide {
    Null = 0,
    Alternative = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsTest {
    Hc = 0,
    Llr = 1,
    Both = 2,
}

/// Opaque detection model.
pub struct SsModel(DetectionModel);

/// Opaque pair of limit laws.
pub struct SsLimit(LimitPair);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(SsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain { .. } | Error::OutsideSupport(_) | Error::Empty => SsStatus::Domain,
            Error::InvalidModel(_) | Error::Parse(_) | Error::Io(_) => SsStatus::InvalidModel,
            Error::Divergent(_) => SsStatus::Divergent,
            Error::NoLimit(_) => SsStatus::NoLimit,
            Error::Quadrature { .. } => SsStatus::Numerical,
        };
        Fail(code, e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> SsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SsStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            SsStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(SsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn give<T>(out: *mut *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(Box::into_raw(Box::new(v)));
    Ok(())
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn shape(kind: SsShape, param: f64) -> Result<ShapeFunction, Fail> {
    Ok(match kind {
        SsShape::Constant => ShapeFunction::constant(),
        SsShape::Linear2x => ShapeFunction::linear2x(),
        SsShape::PowerLaw => ShapeFunction::power_law(param)?,
    })
}

fn side(s: SsSide) -> Side {
    match s {
        SsSide::Null => Side::Null,
        SsSide::Alternative => Side::Alternative,
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ss_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ss_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_boundary_chimeric(beta: f64, out: *mut f64) -> SsStatus {
    guard(|| write(out, boundary_chimeric(beta)?, "out"))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_boundary_powerlaw(beta: f64, a: f64, out: *mut f64) -> SsStatus {
    guard(|| write(out, boundary_powerlaw(beta, a)?, "out"))
}

/// `case_out` receives 1 to 4 for the four branches of the boundary.
///
/// # Safety
/// All out-pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_boundary_normal(
    beta: f64,
    sigma0: f64,
    r_out: *mut f64,
    log_exponent_out: *mut f64,
    case_out: *mut i32,
) -> SsStatus {
    guard(|| {
        if r_out.is_null() || log_exponent_out.is_null() || case_out.is_null() {
            return Err(null("out-pointer"));
        }
        let b = boundary_normal_sparse(beta, sigma0)?;
        write(r_out, b.r_star, "r_out")?;
        write(log_exponent_out, b.log_exponent, "log_exponent_out")?;
        let case = match b.case {
            NormalCase::I => 1,
            NormalCase::II => 2,
            NormalCase::III => 3,
            NormalCase::IV => 4,
        };
        write(case_out, case, "case_out")
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_boundary_dense(beta: f64, out: *mut f64) -> SsStatus {
    guard(|| write(out, boundary_normal_dense(beta)?, "out"))
}

/// Higher criticism of `len` p-values.
///
/// # Safety
/// `pvals` must point to `len` readable doubles and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_hc(pvals: *const f64, len: usize, out: *mut f64) -> SsStatus {
    guard(|| {
        if pvals.is_null() {
            return Err(null("pvals"));
        }
        let p = std::slice::from_raw_parts(pvals, len);
        write(out, hc_statistic(p)?.value, "out")
    })
}

/// # Safety
/// `out` must be valid for writes; on success `*out` owns a new model.
#[no_mangle]
pub unsafe extern "C" fn ss_model_chimeric(
    n: u64,
    beta: f64,
    r: f64,
    kind: SsShape,
    param: f64,
    out: *mut *mut SsModel,
) -> SsStatus {
    guard(|| {
        let m = DetectionModel::chimeric(n, beta, r, shape(kind, param)?)?;
        give(out, SsModel(m))
    })
}

/// Normal location mixture; `dense != 0` selects the dense calibration.
///
/// # Safety
/// `out` must be valid for writes; on success `*out` owns a new model.
#[no_mangle]
pub unsafe extern "C" fn ss_model_normal(
    n: u64,
    beta: f64,
    r: f64,
    sigma0: f64,
    dense: i32,
    out: *mut *mut SsModel,
) -> SsStatus {
    guard(|| {
        let m = if dense != 0 {
            DetectionModel::normal_dense(n, beta, r, sigma0)?
        } else {
            DetectionModel::normal(n, beta, r, sigma0)?
        };
        give(out, SsModel(m))
    })
}

/// # Safety
/// `model` must be null or a handle from `ss_model_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_model_free(model: *mut SsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_model_epsilon(model: *const SsModel, out: *mut f64) -> SsStatus {
    guard(|| write(out, borrow(model, "model")?.0.epsilon()?, "out"))
}

/// Region label from the I-sum classifier with default settings.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_classify(model: *const SsModel, out: *mut SsRegion) -> SsStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        let label = match classify_region(&m.0, &ClassifierConfig::default())?.kind {
            Region::Undetectable => SsRegion::Undetectable,
            Region::Detectable => SsRegion::Detectable,
            Region::CompletelyDetectable => SsRegion::CompletelyDetectable,
        };
        write(out, label, "out")
    })
}

/// Monte Carlo power at level `alpha`. A statistic not covered by `test`
/// leaves its out-pointer untouched, which may then be null.
/// `threads == 0` uses the default pool.
///
/// # Safety
/// `model` must be a live handle; non-null out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_power(
    model: *const SsModel,
    test: SsTest,
    alpha: f64,
    reps: usize,
    seed: u64,
    threads: usize,
    hc_out: *mut f64,
    llr_out: *mut f64,
) -> SsStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        let kind = match test {
            SsTest::Hc => TestKind::Hc,
            SsTest::Llr => TestKind::Llr,
            SsTest::Both => TestKind::Both,
        };
        let mut cfg = ExperimentConfig::new(m.0.clone(), kind, alpha, reps, seed);
        cfg.threads = (threads > 0).then_some(threads);
        let rep = estimate_power(&cfg)?;
        for o in rep.outcomes {
            match o.statistic {
                Statistic::Hc => write(hc_out, o.power.estimate, "hc_out")?,
                Statistic::Llr => write(llr_out, o.power.estimate, "llr_out")?,
            }
        }
        Ok(())
    })
}

/// ARE of the LLR built for shape 2 against data from shape 1.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_are_shapes(
    kind1: SsShape,
    param1: f64,
    kind2: SsShape,
    param2: f64,
    out: *mut f64,
) -> SsStatus {
    guard(|| write(out, are_shapes(&shape(kind1, param1)?, &shape(kind2, param2)?)?.are, "out"))
}

unsafe fn new_limit(pair: LimitPair, out: *mut *mut SsLimit) -> Result<(), Fail> {
    give(out, SsLimit(pair))
}

/// # Safety
/// `out` must be valid for writes; on success `*out` owns a new limit.
#[no_mangle]
pub unsafe extern "C" fn ss_limit_powerlaw(a: f64, out: *mut *mut SsLimit) -> SsStatus {
    guard(|| new_limit(triple_powerlaw_boundary(a)?, out))
}

/// # Safety
/// `out` must be valid for writes; on success `*out` owns a new limit.
#[no_mangle]
pub unsafe extern "C" fn ss_limit_normal_quadratic(beta: f64, sigma0: f64, out: *mut *mut SsLimit) -> SsStatus {
    guard(|| new_limit(triple_normal_quadratic(beta, sigma0)?, out))
}

/// # Safety
/// `out` must be valid for writes; on success `*out` owns a new limit.
#[no_mangle]
pub unsafe extern "C" fn ss_limit_beta1(kind: SsShape, param: f64, r: f64, out: *mut *mut SsLimit) -> SsStatus {
    guard(|| new_limit(triple_beta1(&shape(kind, param)?, r)?, out))
}

/// # Safety
/// `limit` must be null or a handle from `ss_limit_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ss_limit_free(limit: *mut SsLimit) {
    if !limit.is_null() {
        drop(Box::from_raw(limit));
    }
}

/// Mass the alternative limit puts at `+inf`.
///
/// # Safety
/// `limit` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_limit_mass_at_inf(limit: *const SsLimit, out: *mut f64) -> SsStatus {
    guard(|| write(out, borrow(limit, "limit")?.0.mass_at_inf(), "out"))
}

/// Characteristic function at `t`; for the alternative, restricted to the
/// finite part.
///
/// # Safety
/// `limit` must be a live handle and both out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn ss_limit_cf(
    limit: *const SsLimit,
    side_: SsSide,
    t: f64,
    re_out: *mut f64,
    im_out: *mut f64,
) -> SsStatus {
    guard(|| {
        if re_out.is_null() || im_out.is_null() {
            return Err(null("out-pointer"));
        }
        let z = cf_eval(&borrow(limit, "limit")?.0, side(side_), t)?;
        write(re_out, z.re, "re_out")?;
        write(im_out, z.im, "im_out")
    })
}

/// Fill `buf` with `count` draws; infinite draws are stored as `±INFINITY`.
///
/// # Safety
/// `limit` must be a live handle and `buf` writable for `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn ss_limit_sample(
    limit: *const SsLimit,
    side_: SsSide,
    seed: u64,
    count: usize,
    buf: *mut f64,
) -> SsStatus {
    guard(|| {
        let l = borrow(limit, "limit")?;
        if buf.is_null() && count > 0 {
            return Err(null("buf"));
        }
        let s = LimitSampler::new(&l.0, side(side_), SamplerConfig::default())?;
        let mut rng = stream(seed, Domain::Limit, side_ as u64);
        let out = if count == 0 {
            &mut [][..]
        } else {
            std::slice::from_raw_parts_mut(buf, count)
        };
        for slot in out.iter_mut() {
            *slot = match s.draw(&mut rng) {
                Extended::Finite(x) => x,
                Extended::PosInf => f64::INFINITY,
                Extended::NegInf => f64::NEG_INFINITY,
            };
        }
        Ok(())
    })
}
