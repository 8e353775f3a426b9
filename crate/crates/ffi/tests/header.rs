//! The generated header must compile as C and as C++ when a compiler is
//! available.

use std::path::Path;
use std::process::Command;

const PROGRAM: &str = r#"
#include "otsu_bisect.h"

int use_api(void) {
    uint64_t counts[256] = {0};
    counts[50] = 500;
    counts[200] = 500;
    OtsuHistogram *h = NULL;
    if (otsu_histogram_from_counts(counts, &h) != OTSU_STATUS_OK) return 1;
    OtsuBisectionConfig cfg = otsu_default_bisection_config();
    OtsuThresholdResult r;
    OtsuTrace *trace = NULL;
    OtsuStatus s = otsu_bisection(h, &cfg, &r, &trace);
    OtsuTraceStep step;
    if (s == OTSU_STATUS_OK && otsu_trace_len(trace) > 0) {
        otsu_trace_step(trace, 0, &step);
    }
    otsu_trace_free(trace);
    otsu_histogram_free(h);
    return step.decision == OTSU_DECISION_CONVERGED ? 0 : (int)r.threshold;
}
"#;

fn compiles(compiler: &str, lang: &str) -> Option<bool> {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().ok()?;
    let src = dir.path().join("use_api.c");
    std::fs::write(&src, PROGRAM).ok()?;
    let out = Command::new(compiler)
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .output()
        .ok()?;
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    Some(out.status.success())
}

#[test]
fn header_compiles() {
    for (cc, lang) in [("cc", "c"), ("c++", "c++")] {
        match compiles(cc, lang) {
            Some(ok) => assert!(ok, "{cc} rejected the header"),
            None => eprintln!("skipping: {cc} not available"),
        }
    }
}
