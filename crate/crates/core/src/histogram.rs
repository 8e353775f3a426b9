//! Intensity histograms and the prefix-sum moment tables behind O(1)
//! between-class variance evaluation.

use std::io::Write;

use crate::error::{Error, Result};
use crate::imageio::GrayImage;

/// Number of intensity levels of an 8-bit image.
pub const LEVELS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: [u64; LEVELS],
    total: u64,
}

impl Histogram {
    pub fn from_counts(counts: [u64; LEVELS]) -> Result<Self> {
        let total = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::InvalidHistogram("count total overflows u64".into()))?;
        if total == 0 {
            return Err(Error::InvalidHistogram("histogram is empty".into()));
        }
        // Σ i·h(i) must fit as well
        if total.checked_mul(LEVELS as u64 - 1).is_none() {
            return Err(Error::InvalidHistogram("histogram total too large".into()));
        }
        Ok(Self { counts, total })
    }

    pub fn counts(&self) -> &[u64; LEVELS] {
        &self.counts
    }

    pub fn count(&self, level: u8) -> u64 {
        self.counts[level as usize]
    }

    /// Pixel count N.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn occupied_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// A single occupied level leaves no threshold that separates anything.
    pub fn is_degenerate(&self) -> bool {
        self.occupied_bins() < 2
    }

    /// `index,count` rows with a header line.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(sink);
        wtr.write_record(["index", "count"])?;
        for (i, c) in self.counts.iter().enumerate() {
            wtr.write_record([i.to_string(), c.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn compute_histogram(image: &GrayImage) -> Histogram {
    let mut counts = [0u64; LEVELS];
    for &p in image.pixels() {
        counts[p as usize] += 1;
    }
    Histogram {
        counts,
        total: image.len() as u64,
    }
}

/// Cumulative zeroth and first moments indexed by threshold `t ∈ [0, 256]`,
/// where entry `t` sums the levels strictly below `t`.
///
/// Sums are accumulated exactly in integers and divided by N once.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    cum_prob: Vec<f64>,
    cum_mean: Vec<f64>,
    global_mean: f64,
    cum_count: Vec<u64>,
    cum_weighted: Vec<u64>,
    total: u64,
    occupied_bins: usize,
}

impl MomentTable {
    /// ω₀(t): probability mass of levels `< t`.
    pub fn cum_prob(&self) -> &[f64] {
        &self.cum_prob
    }

    /// Σ_{i<t} i·p(i).
    pub fn cum_mean(&self) -> &[f64] {
        &self.cum_mean
    }

    /// μ_T.
    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_degenerate(&self) -> bool {
        self.occupied_bins < 2
    }

    /// Number of pixels with intensity `< t`.
    pub fn count_below(&self, t: usize) -> u64 {
        self.cum_count[t]
    }

    pub fn omega0(&self, t: usize) -> f64 {
        self.cum_prob[t]
    }

    /// ω₁(t) = 1 − ω₀(t), taken from the integer complement `N − count_below(t)`.
    pub fn omega1(&self, t: usize) -> f64 {
        (self.total - self.cum_count[t]) as f64 / self.total as f64
    }

    /// Background mean μ₀(t), `None` when the background class is empty.
    pub fn mu0(&self, t: usize) -> Option<f64> {
        (self.cum_count[t] > 0).then(|| self.cum_weighted[t] as f64 / self.cum_count[t] as f64)
    }

    /// Foreground mean μ₁(t), `None` when the foreground class is empty.
    pub fn mu1(&self, t: usize) -> Option<f64> {
        let count = self.total - self.cum_count[t];
        let weighted = self.cum_weighted[LEVELS] - self.cum_weighted[t];
        (count > 0).then(|| weighted as f64 / count as f64)
    }
}

pub fn build_moments(hist: &Histogram) -> MomentTable {
    let n = hist.total as f64;
    let mut cum_count = Vec::with_capacity(LEVELS + 1);
    let mut cum_weighted = Vec::with_capacity(LEVELS + 1);
    let mut cum_prob = Vec::with_capacity(LEVELS + 1);
    let mut cum_mean = Vec::with_capacity(LEVELS + 1);
    let (mut count, mut weighted) = (0u64, 0u64);
    for t in 0..=LEVELS {
        cum_count.push(count);
        cum_weighted.push(weighted);
        cum_prob.push(count as f64 / n);
        cum_mean.push(weighted as f64 / n);
        if t < LEVELS {
            count += hist.counts[t];
            weighted += t as u64 * hist.counts[t];
        }
    }
    MomentTable {
        global_mean: cum_mean[LEVELS],
        cum_prob,
        cum_mean,
        cum_count,
        cum_weighted,
        total: hist.total,
        occupied_bins: hist.occupied_bins(),
    }
}
