use std::ffi::{c_void, CStr};
use std::ptr;

use otsu_bisect_ffi::*;

fn last_error() -> String {
    let p = otsu_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn two_delta() -> *mut OtsuHistogram {
    let mut counts = [0u64; 256];
    counts[50] = 500;
    counts[200] = 500;
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { otsu_histogram_from_counts(counts.as_ptr(), &mut h) },
        OtsuStatus::Ok
    );
    h
}

#[test]
fn sigma_and_exhaustive_on_two_delta() {
    let h = two_delta();
    let mut s = 0.0;
    assert_eq!(unsafe { otsu_sigma(h, 120, &mut s) }, OtsuStatus::Ok);
    assert_eq!(s, 5625.0);

    let mut r = std::mem::MaybeUninit::<OtsuThresholdResult>::uninit();
    assert_eq!(
        unsafe { otsu_exhaustive(h, r.as_mut_ptr()) },
        OtsuStatus::Ok
    );
    let r = unsafe { r.assume_init() };
    assert_eq!(
        (r.threshold, r.reported_cost, r.method),
        (51, 256, OtsuMethod::Exhaustive)
    );
    unsafe { otsu_histogram_free(h) };
}

#[test]
fn bisection_trace_round_trip() {
    let h = two_delta();
    let cfg = otsu_default_bisection_config();
    assert_eq!(
        (cfg.low, cfg.mid, cfg.high, cfg.width_stop),
        (0, 127, 255, 2)
    );

    let mut r = std::mem::MaybeUninit::<OtsuThresholdResult>::uninit();
    let mut trace = ptr::null_mut();
    assert_eq!(
        unsafe { otsu_bisection(h, &cfg, r.as_mut_ptr(), &mut trace) },
        OtsuStatus::Ok
    );
    let r = unsafe { r.assume_init() };
    let n = unsafe { otsu_trace_len(trace) };
    assert_eq!(n as u32, r.iterations);
    assert_eq!(r.reported_cost, 3 * r.iterations);

    let mut step = std::mem::MaybeUninit::<OtsuTraceStep>::uninit();
    assert_eq!(
        unsafe { otsu_trace_step(trace, 0, step.as_mut_ptr()) },
        OtsuStatus::Ok
    );
    let first = unsafe { step.assume_init() };
    assert_eq!((first.t_low, first.t_mid, first.t_high), (0, 127, 255));
    assert!(first.has_probes);
    assert_eq!((first.t1, first.t2), (63, 191));

    assert_eq!(
        unsafe { otsu_trace_step(trace, n - 1, step.as_mut_ptr()) },
        OtsuStatus::Ok
    );
    assert_eq!(
        unsafe { step.assume_init() }.decision,
        OtsuDecision::Converged
    );

    let mut step = std::mem::MaybeUninit::<OtsuTraceStep>::uninit();
    assert_eq!(
        unsafe { otsu_trace_step(trace, n, step.as_mut_ptr()) },
        OtsuStatus::InvalidArgument
    );
    assert!(last_error().contains("out of range"));

    // Null config means defaults; null trace_out means no trace.
    let mut r2 = std::mem::MaybeUninit::<OtsuThresholdResult>::uninit();
    assert_eq!(
        unsafe { otsu_bisection(h, ptr::null(), r2.as_mut_ptr(), ptr::null_mut()) },
        OtsuStatus::Ok
    );
    assert_eq!(unsafe { r2.assume_init() }, r);

    unsafe {
        otsu_trace_free(trace);
        otsu_histogram_free(h);
    }
}

#[test]
fn errors_are_reported() {
    let zeros = [0u64; 256];
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { otsu_histogram_from_counts(zeros.as_ptr(), &mut h) },
        OtsuStatus::InvalidArgument
    );
    assert!(h.is_null());

    let mut counts = [0u64; 256];
    counts[9] = 4;
    assert_eq!(
        unsafe { otsu_histogram_from_counts(counts.as_ptr(), &mut h) },
        OtsuStatus::Ok
    );
    let mut r = std::mem::MaybeUninit::<OtsuThresholdResult>::uninit();
    assert_eq!(
        unsafe { otsu_bisection(h, ptr::null(), r.as_mut_ptr(), ptr::null_mut()) },
        OtsuStatus::DegenerateHistogram
    );
    unsafe { otsu_histogram_free(h) };

    let h = two_delta();
    let mut cfg = otsu_default_bisection_config();
    cfg.mid = 0;
    assert_eq!(
        unsafe { otsu_bisection(h, &cfg, r.as_mut_ptr(), ptr::null_mut()) },
        OtsuStatus::InvalidConfig
    );
    assert_eq!(
        unsafe { otsu_sigma(h, 0, ptr::null_mut()) },
        OtsuStatus::NullPointer
    );
    assert_eq!(
        unsafe { otsu_sigma(ptr::null(), 0, ptr::null_mut()) },
        OtsuStatus::NullPointer
    );
    unsafe { otsu_histogram_free(h) };

    let msg = unsafe { CStr::from_ptr(otsu_status_message(OtsuStatus::InvalidBracket)) };
    assert_eq!(msg.to_str().unwrap(), "invalid root bracket");
}

#[test]
fn image_pipeline() {
    let pgm = b"P2\n# tiny\n4 1\n255\n10 20 200 210\n";
    let mut img = ptr::null_mut();
    assert_eq!(
        unsafe { otsu_image_decode(pgm.as_ptr(), pgm.len(), &mut img) },
        OtsuStatus::Ok
    );
    assert_eq!(
        unsafe { (otsu_image_width(img), otsu_image_height(img)) },
        (4, 1)
    );

    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { otsu_histogram_from_image(img, &mut h) },
        OtsuStatus::Ok
    );
    let mut counts = [0u64; 256];
    assert_eq!(
        unsafe { otsu_histogram_counts(h, counts.as_mut_ptr()) },
        OtsuStatus::Ok
    );
    assert_eq!(counts.iter().sum::<u64>(), 4);

    let mut cmp = std::mem::MaybeUninit::<OtsuComparison>::uninit();
    assert_eq!(
        unsafe { otsu_compare(h, ptr::null(), cmp.as_mut_ptr()) },
        OtsuStatus::Ok
    );
    let cmp = unsafe { cmp.assume_init() };
    assert_eq!(cmp.t_exhaustive, 21);
    assert!(cmp.reduction_percent >= 90.6);

    let mut mask = ptr::null_mut();
    assert_eq!(
        unsafe { otsu_image_binarize(img, cmp.t_exhaustive, false, &mut mask) },
        OtsuStatus::Ok
    );
    let mut len = 0usize;
    let px = unsafe { otsu_image_pixels(mask, &mut len) };
    assert_eq!(
        unsafe { std::slice::from_raw_parts(px, len) },
        &[0, 0, 255, 255]
    );

    let (mut data, mut n) = (ptr::null_mut(), 0usize);
    assert_eq!(
        unsafe { otsu_image_encode_pgm(mask, false, &mut data, &mut n) },
        OtsuStatus::Ok
    );
    let bytes = unsafe { std::slice::from_raw_parts(data, n) };
    assert!(bytes.starts_with(b"P5\n"));
    assert!(bytes.ends_with(&[0, 0, 255, 255]));

    let bad = b"P7\n";
    let mut other = ptr::null_mut();
    let status = unsafe { otsu_image_decode(bad.as_ptr(), bad.len(), &mut other) };
    assert_ne!(status, OtsuStatus::Ok);

    unsafe {
        otsu_buffer_free(data, n);
        otsu_image_free(mask);
        otsu_histogram_free(h);
        otsu_image_free(img);
    }
}

unsafe extern "C" fn shifted(x: f64, user: *mut c_void) -> f64 {
    let k = unsafe { *(user as *const f64) };
    x.exp() - 3.0 * x - k
}

#[test]
fn root_callback() {
    let mut k = 2.0f64;
    let mut r = std::mem::MaybeUninit::<OtsuRootResult>::uninit();
    let status = unsafe {
        otsu_bisect_root(
            Some(shifted),
            (&mut k as *mut f64).cast(),
            2.0,
            3.0,
            1e-9,
            100,
            r.as_mut_ptr(),
        )
    };
    assert_eq!(status, OtsuStatus::Ok);
    let r = unsafe { r.assume_init() };
    assert!((2.12..2.13).contains(&r.root));

    let mut out = r;
    let status = unsafe {
        otsu_bisect_root(
            Some(shifted),
            (&mut k as *mut f64).cast(),
            0.0,
            0.5,
            1e-9,
            100,
            &mut out,
        )
    };
    assert_eq!(status, OtsuStatus::InvalidBracket);
    let status = unsafe { otsu_bisect_root(None, ptr::null_mut(), 2.0, 3.0, 1e-9, 100, &mut out) };
    assert_eq!(status, OtsuStatus::NullPointer);
    assert_eq!(out, r);
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(otsu_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
