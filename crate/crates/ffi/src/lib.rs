//! C ABI for `otsu-bisect`.
//!
//! Every fallible call returns an [`OtsuStatus`]; on failure the message is
//! available from [`otsu_last_error_message`] on the same thread. Objects
//! are opaque heap handles released with the matching `*_free` function.
//! Panics are caught at the boundary and reported as `OTSU_STATUS_PANIC`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use otsu_bisect::analysis::compare_histogram;
use otsu_bisect::histogram::{build_moments, compute_histogram, Histogram, MomentTable, LEVELS};
use otsu_bisect::imageio::{
    binarize, decode_bytes, write_pgm, GrayImage, MaskPolarity, PgmEncoding,
};
use otsu_bisect::rootfind::bisect_root;
use otsu_bisect::search::{
    bisection_otsu, exhaustive_otsu, BisectionConfig, Decision, Method, SearchTrace,
    ThresholdResult,
};
use otsu_bisect::{Error, VarianceEvaluator};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtsuStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    MalformedImage = 3,
    UnsupportedFormat = 4,
    DegenerateHistogram = 5,
    InvalidConfig = 6,
    InvalidBracket = 7,
    MaxIterations = 8,
    Io = 9,
    Panic = 10,
}

impl From<&Error> for OtsuStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::MalformedHeader(_)
            | Error::UnsupportedMaxval(_)
            | Error::TruncatedData { .. }
            | Error::InvalidImage(_) => OtsuStatus::MalformedImage,
            Error::UnsupportedBitDepth(_) | Error::UnsupportedFormat(_) => {
                OtsuStatus::UnsupportedFormat
            }
            Error::DegenerateHistogram => OtsuStatus::DegenerateHistogram,
            Error::InvalidConfig(_) => OtsuStatus::InvalidConfig,
            Error::InvalidBracket { .. } => OtsuStatus::InvalidBracket,
            Error::MaxIterationsExceeded(_) => OtsuStatus::MaxIterations,
            Error::InvalidHistogram(_) | Error::InvalidArgument(_) | Error::EmptyInput(_) => {
                OtsuStatus::InvalidArgument
            }
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => OtsuStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

struct Failure(OtsuStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(OtsuStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(OtsuStatus::NullPointer, format!("{what} must not be null"))
}

fn guard<F>(f: F) -> OtsuStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OtsuStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside otsu-bisect".into());
            OtsuStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: caller passes either null or a live pointer obtained from this library.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null and, per the API contract, valid for writes.
    unsafe { p.write(value) };
    Ok(())
}

/// Opaque 8-bit grayscale image.
pub struct OtsuImage(GrayImage);

/// Opaque histogram together with its cumulative moment table.
pub struct OtsuHistogram {
    hist: Histogram,
    moments: MomentTable,
}

/// Opaque bisection trace.
pub struct OtsuTrace(SearchTrace);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtsuMethod {
    Exhaustive = 0,
    Bisection = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtsuDecision {
    KeepMiddle = 0,
    MoveLower = 1,
    MoveUpper = 2,
    Converged = 3,
}

impl From<Decision> for OtsuDecision {
    fn from(d: Decision) -> Self {
        match d {
            Decision::KeepMiddle => OtsuDecision::KeepMiddle,
            Decision::MoveLower => OtsuDecision::MoveLower,
            Decision::MoveUpper => OtsuDecision::MoveUpper,
            Decision::Converged => OtsuDecision::Converged,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtsuBisectionConfig {
    pub low: u8,
    pub mid: u8,
    pub high: u8,
    pub width_stop: u8,
    /// When false, `plateau_epsilon` is ignored.
    pub use_plateau_epsilon: bool,
    pub plateau_epsilon: f64,
}

impl From<&OtsuBisectionConfig> for BisectionConfig {
    fn from(c: &OtsuBisectionConfig) -> Self {
        BisectionConfig {
            low: c.low,
            mid: c.mid,
            high: c.high,
            width_stop: c.width_stop,
            plateau_epsilon: c.use_plateau_epsilon.then_some(c.plateau_epsilon),
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OtsuThresholdResult {
    pub threshold: u8,
    pub iterations: u32,
    pub reported_cost: u32,
    pub raw_evaluations: u64,
    pub method: OtsuMethod,
}

impl From<&ThresholdResult> for OtsuThresholdResult {
    fn from(r: &ThresholdResult) -> Self {
        OtsuThresholdResult {
            threshold: r.threshold,
            iterations: r.iterations,
            reported_cost: r.reported_cost,
            raw_evaluations: r.raw_evaluations,
            method: match r.method {
                Method::Exhaustive => OtsuMethod::Exhaustive,
                Method::Bisection => OtsuMethod::Bisection,
            },
        }
    }
}

/// One trace row. Missing probe values are NaN and `has_probes` is false on
/// a width-based converged row.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtsuTraceStep {
    pub iteration: u32,
    pub t_low: u8,
    pub t_mid: u8,
    pub t_high: u8,
    pub has_probes: bool,
    pub t1: u8,
    pub t2: u8,
    pub sigma_low: f64,
    pub sigma_t1: f64,
    pub sigma_mid: f64,
    pub sigma_t2: f64,
    pub sigma_high: f64,
    pub decision: OtsuDecision,
    pub raw_evaluations: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtsuComparison {
    pub t_exhaustive: u8,
    pub t_bisection: u8,
    pub deviation: u8,
    pub iterations_bisection: u32,
    pub cost_bisection: u32,
    pub raw_evaluations_bisection: u64,
    pub reduction_percent: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OtsuRootResult {
    pub root: f64,
    pub iterations: usize,
}

/// Scalar callback for [`otsu_bisect_root`].
pub type OtsuScalarFn = Option<unsafe extern "C" fn(x: f64, user_data: *mut c_void) -> f64>;

static VERSION: &CStr =
    match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version contains a nul byte"),
    };

#[no_mangle]
pub extern "C" fn otsu_version() -> *const c_char {
    VERSION.as_ptr()
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn otsu_status_message(status: OtsuStatus) -> *const c_char {
    let s: &'static CStr = match status {
        OtsuStatus::Ok => c"ok",
        OtsuStatus::NullPointer => c"null pointer argument",
        OtsuStatus::InvalidArgument => c"invalid argument",
        OtsuStatus::MalformedImage => c"malformed image",
        OtsuStatus::UnsupportedFormat => c"unsupported image format",
        OtsuStatus::DegenerateHistogram => c"degenerate histogram",
        OtsuStatus::InvalidConfig => c"invalid bisection config",
        OtsuStatus::InvalidBracket => c"invalid root bracket",
        OtsuStatus::MaxIterations => c"maximum iterations exceeded",
        OtsuStatus::Io => c"i/o error",
        OtsuStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn otsu_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn otsu_default_bisection_config() -> OtsuBisectionConfig {
    let d = BisectionConfig::default();
    OtsuBisectionConfig {
        low: d.low,
        mid: d.mid,
        high: d.high,
        width_stop: d.width_stop,
        use_plateau_epsilon: false,
        plateau_epsilon: 0.0,
    }
}

/// Decode a PGM (P2/P5, maxval 255) or PNG held in memory.
#[no_mangle]
pub unsafe extern "C" fn otsu_image_decode(
    data: *const u8,
    len: usize,
    out: *mut *mut OtsuImage,
) -> OtsuStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        // SAFETY: caller guarantees `data` points to `len` readable bytes.
        let bytes = unsafe { std::slice::from_raw_parts(data, len) };
        let img = decode_bytes(bytes, None)?;
        unsafe { write_out(out, Box::into_raw(Box::new(OtsuImage(img))), "out") }
    })
}

/// Copy `width * height` row-major pixels into a new image.
#[no_mangle]
pub unsafe extern "C" fn otsu_image_new(
    width: u32,
    height: u32,
    pixels: *const u8,
    out: *mut *mut OtsuImage,
) -> OtsuStatus {
    guard(|| {
        if pixels.is_null() {
            return Err(null("pixels"));
        }
        let n = width as usize * height as usize;
        // SAFETY: caller guarantees `width * height` readable bytes.
        let px = unsafe { std::slice::from_raw_parts(pixels, n) }.to_vec();
        let img = GrayImage::new(width, height, px)?;
        unsafe { write_out(out, Box::into_raw(Box::new(OtsuImage(img))), "out") }
    })
}

#[no_mangle]
pub unsafe extern "C" fn otsu_image_free(image: *mut OtsuImage) {
    if !image.is_null() {
        // SAFETY: pointer came from Box::into_raw in this library.
        drop(unsafe { Box::from_raw(image) });
    }
}

#[no_mangle]
pub unsafe extern "C" fn otsu_image_width(image: *const OtsuImage) -> u32 {
    unsafe { image.as_ref() }.map_or(0, |i| i.0.width())
}

#[no_mangle]
pub unsafe extern "C" fn otsu_image_height(image: *const OtsuImage) -> u32 {
    unsafe { image.as_ref() }.map_or(0, |i| i.0.height())
}

/// Borrowed pixel buffer, valid while the image lives.
#[no_mangle]
pub unsafe extern "C" fn otsu_image_pixels(image: *const OtsuImage, len: *mut usize) -> *const u8 {
    match unsafe { image.as_ref() } {
        Some(img) => {
            if !len.is_null() {
                unsafe { len.write(img.0.len()) };
            }
            img.0.pixels().as_ptr()
        }
        None => ptr::null(),
    }
}

/// Mask with `p >= threshold` white, or black when `invert` is set.
#[no_mangle]
pub unsafe extern "C" fn otsu_image_binarize(
    image: *const OtsuImage,
    threshold: u8,
    invert: bool,
    out: *mut *mut OtsuImage,
) -> OtsuStatus {
    guard(|| {
        let img = unsafe { as_ref(image, "image") }?;
        let polarity = if invert {
            MaskPolarity::ForegroundBlack
        } else {
            MaskPolarity::ForegroundWhite
        };
        let mask = OtsuImage(binarize(&img.0, threshold, polarity));
        unsafe { write_out(out, Box::into_raw(Box::new(mask)), "out") }
    })
}

/// Encode as PGM into a new buffer released with [`otsu_buffer_free`].
#[no_mangle]
pub unsafe extern "C" fn otsu_image_encode_pgm(
    image: *const OtsuImage,
    plain: bool,
    out_data: *mut *mut u8,
    out_len: *mut usize,
) -> OtsuStatus {
    guard(|| {
        let img = unsafe { as_ref(image, "image") }?;
        if out_data.is_null() || out_len.is_null() {
            return Err(null("out_data/out_len"));
        }
        let mut buf = Vec::new();
        let enc = if plain {
            PgmEncoding::Plain
        } else {
            PgmEncoding::Raw
        };
        write_pgm(&img.0, enc, &mut buf)?;
        let boxed = buf.into_boxed_slice();
        let len = boxed.len();
        let data = Box::into_raw(boxed) as *mut u8;
        unsafe {
            out_data.write(data);
            out_len.write(len);
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn otsu_buffer_free(data: *mut u8, len: usize) {
    if !data.is_null() {
        // SAFETY: (data, len) came from otsu_image_encode_pgm.
        drop(unsafe { Box::from_raw(ptr::slice_from_raw_parts_mut(data, len)) });
    }
}

fn new_histogram(hist: Histogram) -> *mut OtsuHistogram {
    let moments = build_moments(&hist);
    Box::into_raw(Box::new(OtsuHistogram { hist, moments }))
}

#[no_mangle]
pub unsafe extern "C" fn otsu_histogram_from_image(
    image: *const OtsuImage,
    out: *mut *mut OtsuHistogram,
) -> OtsuStatus {
    guard(|| {
        let img = unsafe { as_ref(image, "image") }?;
        unsafe { write_out(out, new_histogram(compute_histogram(&img.0)), "out") }
    })
}

/// Build from 256 counts.
#[no_mangle]
pub unsafe extern "C" fn otsu_histogram_from_counts(
    counts: *const u64,
    out: *mut *mut OtsuHistogram,
) -> OtsuStatus {
    guard(|| {
        if counts.is_null() {
            return Err(null("counts"));
        }
        let mut arr = [0u64; LEVELS];
        // SAFETY: caller provides 256 readable counts.
        arr.copy_from_slice(unsafe { std::slice::from_raw_parts(counts, LEVELS) });
        let hist = Histogram::from_counts(arr)?;
        unsafe { write_out(out, new_histogram(hist), "out") }
    })
}

#[no_mangle]
pub unsafe extern "C" fn otsu_histogram_free(hist: *mut OtsuHistogram) {
    if !hist.is_null() {
        drop(unsafe { Box::from_raw(hist) });
    }
}

/// Copy the 256 counts into `out`.
#[no_mangle]
pub unsafe extern "C" fn otsu_histogram_counts(
    hist: *const OtsuHistogram,
    out: *mut u64,
) -> OtsuStatus {
    guard(|| {
        let h = unsafe { as_ref(hist, "hist") }?;
        if out.is_null() {
            return Err(null("out"));
        }
        unsafe { ptr::copy_nonoverlapping(h.hist.counts().as_ptr(), out, LEVELS) };
        Ok(())
    })
}

/// Between-class variance at `t`.
#[no_mangle]
pub unsafe extern "C" fn otsu_sigma(
    hist: *const OtsuHistogram,
    t: u8,
    out: *mut f64,
) -> OtsuStatus {
    guard(|| {
        let h = unsafe { as_ref(hist, "hist") }?;
        let v = VarianceEvaluator::new(&h.moments).evaluate(t);
        unsafe { write_out(out, v, "out") }
    })
}

#[no_mangle]
pub unsafe extern "C" fn otsu_exhaustive(
    hist: *const OtsuHistogram,
    out: *mut OtsuThresholdResult,
) -> OtsuStatus {
    guard(|| {
        let h = unsafe { as_ref(hist, "hist") }?;
        let r = exhaustive_otsu(&mut VarianceEvaluator::new(&h.moments))?;
        unsafe { write_out(out, OtsuThresholdResult::from(&r), "out") }
    })
}

/// Bisection search. `config` may be null for the defaults; `trace_out` may
/// be null when no trace is wanted.
#[no_mangle]
pub unsafe extern "C" fn otsu_bisection(
    hist: *const OtsuHistogram,
    config: *const OtsuBisectionConfig,
    out: *mut OtsuThresholdResult,
    trace_out: *mut *mut OtsuTrace,
) -> OtsuStatus {
    guard(|| {
        let h = unsafe { as_ref(hist, "hist") }?;
        let cfg = unsafe { config.as_ref() }.map_or_else(BisectionConfig::default, Into::into);
        let (r, trace) = bisection_otsu(&mut VarianceEvaluator::new(&h.moments), &cfg)?;
        unsafe { write_out(out, OtsuThresholdResult::from(&r), "out") }?;
        if !trace_out.is_null() {
            unsafe { trace_out.write(Box::into_raw(Box::new(OtsuTrace(trace)))) };
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn otsu_trace_len(trace: *const OtsuTrace) -> usize {
    unsafe { trace.as_ref() }.map_or(0, |t| t.0.steps.len())
}

#[no_mangle]
pub unsafe extern "C" fn otsu_trace_step(
    trace: *const OtsuTrace,
    index: usize,
    out: *mut OtsuTraceStep,
) -> OtsuStatus {
    guard(|| {
        let t = unsafe { as_ref(trace, "trace") }?;
        let s = t.0.steps.get(index).ok_or_else(|| {
            Failure(
                OtsuStatus::InvalidArgument,
                format!("step {index} out of range ({} steps)", t.0.steps.len()),
            )
        })?;
        let step = OtsuTraceStep {
            iteration: s.iteration,
            t_low: s.t_low,
            t_mid: s.t_mid,
            t_high: s.t_high,
            has_probes: s.t1.is_some(),
            t1: s.t1.unwrap_or(0),
            t2: s.t2.unwrap_or(0),
            sigma_low: s.sigma_low.unwrap_or(f64::NAN),
            sigma_t1: s.sigma_t1.unwrap_or(f64::NAN),
            sigma_mid: s.sigma_mid.unwrap_or(f64::NAN),
            sigma_t2: s.sigma_t2.unwrap_or(f64::NAN),
            sigma_high: s.sigma_high.unwrap_or(f64::NAN),
            decision: s.decision.into(),
            raw_evaluations: s.raw_evaluations,
        };
        unsafe { write_out(out, step, "out") }
    })
}

#[no_mangle]
pub unsafe extern "C" fn otsu_trace_free(trace: *mut OtsuTrace) {
    if !trace.is_null() {
        drop(unsafe { Box::from_raw(trace) });
    }
}

/// Run both searches on independent evaluators.
#[no_mangle]
pub unsafe extern "C" fn otsu_compare(
    hist: *const OtsuHistogram,
    config: *const OtsuBisectionConfig,
    out: *mut OtsuComparison,
) -> OtsuStatus {
    guard(|| {
        let h = unsafe { as_ref(hist, "hist") }?;
        let cfg = unsafe { config.as_ref() }.map_or_else(BisectionConfig::default, Into::into);
        let r = compare_histogram("", &h.hist, &cfg)?;
        let c = OtsuComparison {
            t_exhaustive: r.t_exhaustive,
            t_bisection: r.t_bisection,
            deviation: r.deviation,
            iterations_bisection: r.iterations_bisection,
            cost_bisection: r.cost_bisection,
            raw_evaluations_bisection: r.raw_evaluations_bisection,
            reduction_percent: r.reduction_percent,
        };
        unsafe { write_out(out, c, "out") }
    })
}

/// Sign-change bisection of `f` on `[a, b]`.
#[no_mangle]
pub unsafe extern "C" fn otsu_bisect_root(
    f: OtsuScalarFn,
    user_data: *mut c_void,
    a: f64,
    b: f64,
    tol: f64,
    max_iter: usize,
    out: *mut OtsuRootResult,
) -> OtsuStatus {
    guard(|| {
        let f = f.ok_or_else(|| null("f"))?;
        // SAFETY: the callback contract is the caller's.
        let r = bisect_root(|x| unsafe { f(x, user_data) }, a, b, tol, max_iter)?;
        unsafe {
            write_out(
                out,
                OtsuRootResult {
                    root: r.root,
                    iterations: r.iterations,
                },
                "out",
            )
        }
    })
}
