//! Sign-change bisection for scalar roots.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// One bisection iteration: the bracket entering it, its midpoint and the
/// bracket kept afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketRow {
    pub iteration: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub fc: f64,
    pub next_a: f64,
    pub next_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootResult {
    pub root: f64,
    pub iterations: usize,
    pub bracket_history: Vec<BracketRow>,
}

/// Halve `[a, b]` until the half-width or `|f(c)|` drops to `tol`.
///
/// Requires `f(a) · f(b) < 0`. The midpoint is `a + (b − a) / 2`.
// The negated comparisons also reject NaN.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn bisect_root<F>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> Result<RootResult>
where
    F: FnMut(f64) -> f64,
{
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::InvalidArgument(format!(
            "need finite a < b, got [{a}, {b}]"
        )));
    }
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let fb = f(b);
    if !(fa * fb < 0.0) {
        return Err(Error::InvalidBracket { fa, fb });
    }

    let mut history = Vec::new();
    for iteration in 1..=max_iter {
        let half = (b - a) / 2.0;
        let c = a + half;
        let fc = f(c);
        let done = fc == 0.0 || half <= tol || fc.abs() <= tol;
        let (next_a, next_b) = if done {
            (a, b)
        } else if fa.signum() == fc.signum() {
            (c, b)
        } else {
            (a, c)
        };
        history.push(BracketRow {
            iteration,
            a,
            b,
            c,
            fc,
            next_a,
            next_b,
        });
        if done {
            return Ok(RootResult {
                root: c,
                iterations: iteration,
                bracket_history: history,
            });
        }
        if next_a == c {
            fa = fc;
        }
        a = next_a;
        b = next_b;
    }
    Err(Error::MaxIterationsExceeded(max_iter))
}

/// `e^x − 3x − 2`.
pub fn transcendental_demo(x: f64) -> f64 {
    x.exp() - 3.0 * x - 2.0
}

impl RootResult {
    /// Fixed-width iteration table: `Iteration a b c f(c) New Interval`.
    pub fn write_table<W: Write>(&self, mut sink: W, digits: usize) -> Result<()> {
        writeln!(
            sink,
            "{:>9}  {:>w$}  {:>w$}  {:>w$}  {:>w$}  New Interval",
            "Iteration",
            "a",
            "b",
            "c",
            "f(c)",
            w = digits + 4
        )?;
        for r in &self.bracket_history {
            writeln!(
                sink,
                "{:>9}  {:>w$.d$}  {:>w$.d$}  {:>w$.d$}  {:>w$.d$}  [{:.d$}, {:.d$}]",
                r.iteration,
                r.a,
                r.b,
                r.c,
                r.fc,
                r.next_a,
                r.next_b,
                w = digits + 4,
                d = digits
            )?;
        }
        Ok(())
    }
}
