//! Threshold searches over σ_B²: the exhaustive argmax baseline and the
//! bracketing bisection maximiser.
//!
//! The bisection search keeps a bracket `(low, mid, high)` with
//! `mid = ⌊(low + high) / 2⌋`. Each iteration probes the quarter points
//! `t1 = ⌊(low + mid) / 2⌋` and `t2 = ⌊(mid + high) / 2⌋` and compares
//! σ_B² at `t1`, `mid`, `t2`:
//!
//! | condition                               | decision     | next bracket    |
//! |-----------------------------------------|--------------|-----------------|
//! | `σ(mid) >= σ(t1)` and `σ(mid) >= σ(t2)` | `KeepMiddle` | `[t1, t2]`      |
//! | otherwise, `σ(t1) >= σ(t2)`             | `MoveLower`  | `[low, mid]`    |
//! | otherwise                               | `MoveUpper`  | `[mid, high]`   |
//!
//! Once `high - low <= width_stop` a final `Converged` step picks the
//! member of the triplet with the largest σ_B² (lowest on ties). From the
//! default `(0, 127, 255)` with `width_stop = 2` this takes at most 8
//! iterations, reported as `3 × iterations` variance evaluations.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram::LEVELS;
use crate::variance::VarianceEvaluator;

/// Evaluations charged by the exhaustive scan.
pub const EXHAUSTIVE_COST: u32 = LEVELS as u32;

/// Reported evaluations per bisection iteration.
pub const EVALS_PER_ITERATION: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exhaustive,
    Bisection,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Exhaustive => "exhaustive",
            Method::Bisection => "bisection",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub threshold: u8,
    pub iterations: u32,
    /// Cost in the `3k` convention for bisection, 256 for exhaustive.
    pub reported_cost: u32,
    /// Evaluator calls actually made; bisection caches repeated points.
    pub raw_evaluations: u64,
    pub method: Method,
}

impl ThresholdResult {
    pub fn reduction_factor(&self) -> f64 {
        reduction_factor(self)
    }

    /// `100 · (1 − reported_cost / 256)`.
    pub fn reduction_percent(&self) -> f64 {
        100.0 * (1.0 - f64::from(self.reported_cost) / f64::from(EXHAUSTIVE_COST))
    }
}

/// `256 / reported_cost`.
pub fn reduction_factor(result: &ThresholdResult) -> f64 {
    f64::from(EXHAUSTIVE_COST) / f64::from(result.reported_cost)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    KeepMiddle,
    MoveLower,
    MoveUpper,
    Converged,
}

impl Decision {
    pub fn label(self) -> &'static str {
        match self {
            Decision::KeepMiddle => "Keep middle",
            Decision::MoveLower => "Move lower",
            Decision::MoveUpper => "Move upper",
            Decision::Converged => "Converged",
        }
    }
}

/// The three-way comparison at the heart of each iteration. Ties favour
/// `KeepMiddle`, then `MoveLower`.
pub fn decide(sigma_t1: f64, sigma_mid: f64, sigma_t2: f64) -> Decision {
    if sigma_mid >= sigma_t1 && sigma_mid >= sigma_t2 {
        Decision::KeepMiddle
    } else if sigma_t1 >= sigma_t2 {
        Decision::MoveLower
    } else {
        Decision::MoveUpper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bracket {
    pub low: u8,
    pub mid: u8,
    pub high: u8,
}

fn floor_mid(a: u8, b: u8) -> u8 {
    ((u16::from(a) + u16::from(b)) / 2) as u8
}

impl Bracket {
    pub fn new(low: u8, mid: u8, high: u8) -> Result<Self> {
        if !(low < mid && mid < high) {
            return Err(Error::InvalidConfig(format!(
                "triplet must satisfy low < mid < high, got ({low}, {mid}, {high})"
            )));
        }
        Ok(Self { low, mid, high })
    }

    /// Bracket over `[low, high]` with the floor midpoint.
    pub fn spanning(low: u8, high: u8) -> Self {
        Self {
            low,
            mid: floor_mid(low, high),
            high,
        }
    }

    pub fn width(&self) -> u8 {
        self.high - self.low
    }

    /// Quarter points `(t1, t2)`.
    pub fn probes(&self) -> (u8, u8) {
        (
            floor_mid(self.low, self.mid),
            floor_mid(self.mid, self.high),
        )
    }

    /// Next bracket, or `None` for `Converged`.
    pub fn apply(&self, decision: Decision) -> Option<Self> {
        let (t1, t2) = self.probes();
        match decision {
            Decision::KeepMiddle => Some(Self::spanning(t1, t2)),
            Decision::MoveLower => Some(Self::spanning(self.low, self.mid)),
            Decision::MoveUpper => Some(Self::spanning(self.mid, self.high)),
            Decision::Converged => None,
        }
    }

    fn members(&self) -> [u8; 3] {
        [self.low, self.mid, self.high]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionConfig {
    pub low: u8,
    pub mid: u8,
    pub high: u8,
    /// Stop once `high - low <= width_stop`.
    pub width_stop: u8,
    /// Stop early when the three probed values agree to within
    /// `plateau_epsilon · max`. Off by default.
    pub plateau_epsilon: Option<f64>,
}

impl Default for BisectionConfig {
    fn default() -> Self {
        Self {
            low: 0,
            mid: 127,
            high: 255,
            width_stop: 2,
            plateau_epsilon: None,
        }
    }
}

impl BisectionConfig {
    pub fn with_plateau_epsilon(mut self, eps: Option<f64>) -> Self {
        self.plateau_epsilon = eps;
        self
    }

    pub fn validate(&self) -> Result<Bracket> {
        let bracket = Bracket::new(self.low, self.mid, self.high)?;
        if self.width_stop == 0 {
            return Err(Error::InvalidConfig("width_stop must be at least 1".into()));
        }
        if let Some(eps) = self.plateau_epsilon {
            if !eps.is_finite() || eps < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "plateau_epsilon must be a finite non-negative number, got {eps}"
                )));
            }
        }
        Ok(bracket)
    }
}

/// One row of a bisection run. Probe columns are empty on a width-based
/// `Converged` row; `sigma_low`/`sigma_high` are only filled there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub iteration: u32,
    pub t_low: u8,
    pub t_mid: u8,
    pub t_high: u8,
    pub t1: Option<u8>,
    pub t2: Option<u8>,
    pub sigma_low: Option<f64>,
    pub sigma_t1: Option<f64>,
    pub sigma_mid: Option<f64>,
    pub sigma_t2: Option<f64>,
    pub sigma_high: Option<f64>,
    pub decision: Decision,
    /// Evaluator calls made so far in the run.
    pub raw_evaluations: u64,
}

impl TraceStep {
    pub fn bracket(&self) -> Bracket {
        Bracket {
            low: self.t_low,
            mid: self.t_mid,
            high: self.t_high,
        }
    }

    fn bare(iteration: u32, b: Bracket, probes: Option<(u8, u8)>, decision: Decision) -> Self {
        Self {
            iteration,
            t_low: b.low,
            t_mid: b.mid,
            t_high: b.high,
            t1: probes.map(|p| p.0),
            t2: probes.map(|p| p.1),
            sigma_low: None,
            sigma_t1: None,
            sigma_mid: None,
            sigma_t2: None,
            sigma_high: None,
            decision,
            raw_evaluations: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub steps: Vec<TraceStep>,
}

impl SearchTrace {
    pub fn decisions(&self) -> Vec<Decision> {
        self.steps.iter().map(|s| s.decision).collect()
    }

    /// One JSON object per line.
    pub fn write_json_lines<W: Write>(&self, mut sink: W) -> Result<()> {
        for step in &self.steps {
            serde_json::to_writer(&mut sink, step)?;
            sink.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn ensure_separable(ev: &VarianceEvaluator<'_>) -> Result<()> {
    if ev.moments().is_degenerate() {
        Err(Error::DegenerateHistogram)
    } else {
        Ok(())
    }
}

/// Scan every threshold; the smallest maximiser wins.
pub fn exhaustive_otsu(ev: &mut VarianceEvaluator<'_>) -> Result<ThresholdResult> {
    ensure_separable(ev)?;
    let start = ev.eval_count();
    let (mut best_t, mut best) = (0u8, f64::NEG_INFINITY);
    for t in 0..=u8::MAX {
        let s = ev.evaluate(t);
        if s > best {
            best = s;
            best_t = t;
        }
    }
    Ok(ThresholdResult {
        threshold: best_t,
        iterations: EXHAUSTIVE_COST,
        reported_cost: EXHAUSTIVE_COST,
        raw_evaluations: ev.eval_count() - start,
        method: Method::Exhaustive,
    })
}

struct CachedSigma<'e, 'a> {
    ev: &'e mut VarianceEvaluator<'a>,
    cache: [Option<f64>; LEVELS],
    start: u64,
}

impl<'e, 'a> CachedSigma<'e, 'a> {
    fn new(ev: &'e mut VarianceEvaluator<'a>) -> Self {
        let start = ev.eval_count();
        Self {
            ev,
            cache: [None; LEVELS],
            start,
        }
    }

    fn get(&mut self, t: u8) -> f64 {
        match self.cache[t as usize] {
            Some(v) => v,
            None => {
                let v = self.ev.evaluate(t);
                self.cache[t as usize] = Some(v);
                v
            }
        }
    }

    fn calls(&self) -> u64 {
        self.ev.eval_count() - self.start
    }
}

/// First maximiser among ascending candidates.
fn pick_max(candidates: &[(u8, f64)]) -> u8 {
    let mut best = candidates[0];
    for &c in &candidates[1..] {
        if c.1 > best.1 || (c.1 == best.1 && c.0 < best.0) {
            best = c;
        }
    }
    best.0
}

pub fn bisection_otsu(
    ev: &mut VarianceEvaluator<'_>,
    cfg: &BisectionConfig,
) -> Result<(ThresholdResult, SearchTrace)> {
    let mut bracket = cfg.validate()?;
    ensure_separable(ev)?;
    let mut sigma = CachedSigma::new(ev);
    let mut trace = SearchTrace::default();
    let mut iteration = 0u32;

    let threshold = loop {
        iteration += 1;
        if bracket.width() <= cfg.width_stop {
            let [lo, mid, hi] = bracket.members();
            let (s_lo, s_mid, s_hi) = (sigma.get(lo), sigma.get(mid), sigma.get(hi));
            let mut step = TraceStep::bare(iteration, bracket, None, Decision::Converged);
            step.sigma_low = Some(s_lo);
            step.sigma_mid = Some(s_mid);
            step.sigma_high = Some(s_hi);
            step.raw_evaluations = sigma.calls();
            trace.steps.push(step);
            break pick_max(&[(lo, s_lo), (mid, s_mid), (hi, s_hi)]);
        }

        let (t1, t2) = bracket.probes();
        let (s1, sm, s2) = (sigma.get(t1), sigma.get(bracket.mid), sigma.get(t2));
        let plateau = cfg.plateau_epsilon.is_some_and(|eps| {
            let hi = s1.max(sm).max(s2);
            let lo = s1.min(sm).min(s2);
            hi - lo <= eps * hi
        });
        let decision = if plateau {
            Decision::Converged
        } else {
            decide(s1, sm, s2)
        };
        let mut step = TraceStep::bare(iteration, bracket, Some((t1, t2)), decision);
        step.sigma_t1 = Some(s1);
        step.sigma_mid = Some(sm);
        step.sigma_t2 = Some(s2);
        step.raw_evaluations = sigma.calls();
        trace.steps.push(step);

        match bracket.apply(decision) {
            Some(next) => bracket = next,
            None => break pick_max(&[(t1, s1), (bracket.mid, sm), (t2, s2)]),
        }
    };

    let result = ThresholdResult {
        threshold,
        iterations: iteration,
        reported_cost: EVALS_PER_ITERATION * iteration,
        raw_evaluations: sigma.calls(),
        method: Method::Bisection,
    };
    Ok((result, trace))
}

/// Drive the bracket mechanics with a fixed decision sequence instead of
/// variance comparisons. A `Converged` row is appended once the stopping
/// width is reached; supplying decisions past that point is an error.
pub fn replay_decisions(cfg: &BisectionConfig, decisions: &[Decision]) -> Result<SearchTrace> {
    let mut bracket = cfg.validate()?;
    let mut trace = SearchTrace::default();
    let mut pending = decisions.iter().copied();
    let mut iteration = 0;
    loop {
        iteration += 1;
        if bracket.width() <= cfg.width_stop {
            trace.steps.push(TraceStep::bare(
                iteration,
                bracket,
                None,
                Decision::Converged,
            ));
            if let Some(extra) = pending.find(|d| *d != Decision::Converged) {
                return Err(Error::InvalidConfig(format!(
                    "decision {extra:?} supplied after convergence at iteration {iteration}"
                )));
            }
            return Ok(trace);
        }
        let Some(decision) = pending.next() else {
            return Ok(trace);
        };
        trace.steps.push(TraceStep::bare(
            iteration,
            bracket,
            Some(bracket.probes()),
            decision,
        ));
        match bracket.apply(decision) {
            Some(next) => bracket = next,
            None => return Ok(trace),
        }
    }
}
