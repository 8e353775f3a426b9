//! Between-class variance `σ_B²(t) = ω₀ω₁(μ₁ − μ₀)²`.

use std::io::Write;

use crate::error::Result;
use crate::histogram::{Histogram, MomentTable, LEVELS};

/// Counts every σ_B² evaluation so searches can be compared by work done.
///
/// One evaluator per search run; the moment table underneath can be shared.
#[derive(Debug, Clone)]
pub struct VarianceEvaluator<'a> {
    moments: &'a MomentTable,
    eval_count: u64,
}

impl<'a> VarianceEvaluator<'a> {
    pub fn new(moments: &'a MomentTable) -> Self {
        Self {
            moments,
            eval_count: 0,
        }
    }

    pub fn moments(&self) -> &'a MomentTable {
        self.moments
    }

    pub fn eval_count(&self) -> u64 {
        self.eval_count
    }

    /// σ_B²(t), with 0 whenever either class is empty.
    pub fn evaluate(&mut self, t: u8) -> f64 {
        self.eval_count += 1;
        sigma_from_moments(self.moments, t as usize)
    }

    pub fn full_profile(&mut self) -> VarianceProfile {
        let mut values = [0.0; LEVELS];
        for (t, v) in values.iter_mut().enumerate() {
            *v = self.evaluate(t as u8);
        }
        VarianceProfile { values }
    }
}

fn sigma_from_moments(m: &MomentTable, t: usize) -> f64 {
    match (m.mu0(t), m.mu1(t)) {
        (Some(mu0), Some(mu1)) => {
            let diff = mu1 - mu0;
            m.omega0(t) * m.omega1(t) * diff * diff
        }
        _ => 0.0,
    }
}

/// Naive O(L) summation of σ_B²(t) straight from the histogram. Test oracle;
/// not counted by any evaluator.
pub fn direct_sigma(hist: &Histogram, t: u8) -> f64 {
    let n = hist.total() as f64;
    let (mut w0, mut w1, mut s0, mut s1) = (0.0, 0.0, 0.0, 0.0);
    for (i, &c) in hist.counts().iter().enumerate() {
        let p = c as f64 / n;
        if i < t as usize {
            w0 += p;
            s0 += i as f64 * p;
        } else {
            w1 += p;
            s1 += i as f64 * p;
        }
    }
    if w0 == 0.0 || w1 == 0.0 {
        return 0.0;
    }
    let (mu0, mu1) = (s0 / w0, s1 / w1);
    w0 * w1 * (mu1 - mu0) * (mu1 - mu0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceProfile {
    values: [f64; LEVELS],
}

impl VarianceProfile {
    pub fn from_values(values: [f64; LEVELS]) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64; LEVELS] {
        &self.values
    }

    pub fn get(&self, t: u8) -> f64 {
        self.values[t as usize]
    }

    /// Smallest threshold attaining the maximum.
    pub fn argmax(&self) -> u8 {
        let mut best = 0;
        for t in 1..LEVELS {
            if self.values[t] > self.values[best] {
                best = t;
            }
        }
        best as u8
    }

    /// `t,sigma` rows with a header line.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(sink);
        wtr.write_record(["t", "sigma"])?;
        for (t, v) in self.values.iter().enumerate() {
            wtr.write_record([t.to_string(), format!("{v:.17e}")])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histogram::build_moments;
    use proptest::prelude::*;

    fn hist(pairs: &[(usize, u64)]) -> Histogram {
        let mut c = [0u64; LEVELS];
        for &(i, n) in pairs {
            c[i] = n;
        }
        Histogram::from_counts(c).unwrap()
    }

    fn rel_close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()) || (a - b).abs() <= 1e-300
    }

    #[test]
    fn two_delta_closed_form() {
        let h = hist(&[(50, 5), (200, 5)]);
        let m = build_moments(&h);
        let mut ev = VarianceEvaluator::new(&m);
        assert_eq!(ev.evaluate(100), 5625.0);
        assert_eq!(direct_sigma(&h, 100), 5625.0);
        assert_eq!(ev.evaluate(0), 0.0);
        assert_eq!(ev.eval_count(), 2);
    }

    #[test]
    fn two_delta_profile_plateau() {
        let h = hist(&[(50, 2), (200, 2)]);
        let m = build_moments(&h);
        let mut ev = VarianceEvaluator::new(&m);
        let p = ev.full_profile();
        assert_eq!(ev.eval_count(), 256);
        for t in 0..=255u8 {
            let expected = if (51..=200).contains(&t) { 5625.0 } else { 0.0 };
            assert_eq!(p.get(t), expected, "t = {t}");
        }
        assert_eq!(p.argmax(), 51);
    }

    #[test]
    fn constant_image_profile_is_zero() {
        let h = hist(&[(7, 100)]);
        let m = build_moments(&h);
        let p = VarianceEvaluator::new(&m).full_profile();
        assert!(p.values().iter().all(|&v| v == 0.0));
        assert!((0..=255).all(|t| direct_sigma(&h, t) == 0.0));
    }

    #[test]
    fn profile_csv_rows() {
        let h = hist(&[(1, 1), (2, 1)]);
        let m = build_moments(&h);
        let mut out = Vec::new();
        VarianceEvaluator::new(&m)
            .full_profile()
            .write_csv(&mut out)
            .unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 257);
        assert!(text.starts_with("t,sigma\n0,"));
    }

    proptest! {
        #[test]
        fn evaluate_matches_direct_summation(
            counts in proptest::collection::vec(prop_oneof![2 => Just(0u64), 3 => 0u64..5000], LEVELS)
        ) {
            prop_assume!(counts.iter().sum::<u64>() > 0);
            let h = Histogram::from_counts(counts.try_into().unwrap()).unwrap();
            let m = build_moments(&h);
            let mut ev = VarianceEvaluator::new(&m);
            for t in 0..=255u8 {
                let fast = ev.evaluate(t);
                let slow = direct_sigma(&h, t);
                prop_assert!(fast >= 0.0);
                prop_assert!(rel_close(fast, slow, 1e-9), "t={} fast={} slow={}", t, fast, slow);
            }
            prop_assert_eq!(ev.eval_count(), 256);
        }
    }
}
