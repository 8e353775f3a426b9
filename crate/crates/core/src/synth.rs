//! Seeded synthetic histograms and images.
//!
//! Everything here is driven by [`SplitMix64`] so that outputs can be
//! reproduced bit for bit from another language:
//!
//! ```text
//! state = state + 0x9E3779B97F4A7C15          (wrapping)
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9    (wrapping)
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB    (wrapping)
//! return z ^ (z >> 31)
//! ```
//!
//! Uniform reals are `(next >> 11) · 2⁻⁵³ ∈ [0, 1)`. Normals use the cosine
//! branch of Box–Muller, `sqrt(−2 ln(1 − u₁)) · cos(2π u₂)`, drawing `u₁`
//! then `u₂`. A bimodal sample draws the component uniform first, then the
//! normal, and rounds half away from zero before clamping to `[0, 255]`.
//! Shuffles are Fisher–Yates from the back with `j = next % (i + 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram::{Histogram, LEVELS};
use crate::imageio::GrayImage;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BimodalSpec {
    pub mean0: f64,
    pub mean1: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    /// Probability of drawing from the first component.
    pub mix: f64,
    pub total: u64,
    pub seed: u64,
}

impl BimodalSpec {
    pub fn validate(&self) -> Result<()> {
        let in_range = |m: f64| (0.0..=255.0).contains(&m);
        if !(in_range(self.mean0) && in_range(self.mean1) && self.mean0 < self.mean1) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= mean0 < mean1 <= 255, got {} and {}",
                self.mean0, self.mean1
            )));
        }
        if !(self.sigma0 > 0.0 && self.sigma1 > 0.0)
            || !(self.sigma0.is_finite() && self.sigma1.is_finite())
        {
            return Err(Error::InvalidArgument("sigmas must be positive".into()));
        }
        if !(self.mix > 0.0 && self.mix < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "mix must lie in (0, 1), got {}",
                self.mix
            )));
        }
        if self.total == 0 {
            return Err(Error::InvalidArgument("total must be positive".into()));
        }
        Ok(())
    }
}

pub fn bimodal_histogram(spec: &BimodalSpec) -> Result<Histogram> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let mut counts = [0u64; LEVELS];
    for _ in 0..spec.total {
        let (mean, sigma) = if rng.next_f64() < spec.mix {
            (spec.mean0, spec.sigma0)
        } else {
            (spec.mean1, spec.sigma1)
        };
        let x = (mean + sigma * rng.next_normal()).round().clamp(0.0, 255.0);
        counts[x as usize] += 1;
    }
    Histogram::from_counts(counts)
}

/// Half of `total` at `a`, half at `b`.
pub fn two_delta_histogram(a: u8, b: u8, total: u64) -> Result<Histogram> {
    if a >= b {
        return Err(Error::InvalidArgument(format!(
            "need a < b, got {a} and {b}"
        )));
    }
    if total == 0 || !total.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "total must be positive and even, got {total}"
        )));
    }
    let mut counts = [0u64; LEVELS];
    counts[a as usize] = total / 2;
    counts[b as usize] = total / 2;
    Histogram::from_counts(counts)
}

/// Lay the histogram's multiset out in a seeded random order.
pub fn image_from_histogram(
    hist: &Histogram,
    width: u32,
    height: u32,
    seed: u64,
) -> Result<GrayImage> {
    let n = u64::from(width) * u64::from(height);
    if n != hist.total() {
        return Err(Error::InvalidArgument(format!(
            "{width}x{height} = {n} pixels but histogram holds {}",
            hist.total()
        )));
    }
    let mut pixels = Vec::with_capacity(n as usize);
    for (level, &count) in hist.counts().iter().enumerate() {
        pixels.extend(std::iter::repeat_n(level as u8, count as usize));
    }
    let mut rng = SplitMix64::new(seed);
    for i in (1..pixels.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        pixels.swap(i, j);
    }
    GrayImage::new(width, height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histogram::{build_moments, compute_histogram};
    use crate::search::exhaustive_otsu;
    use crate::variance::VarianceEvaluator;

    fn spec(mix: f64, seed: u64) -> BimodalSpec {
        BimodalSpec {
            mean0: 50.0,
            mean1: 200.0,
            sigma0: 10.0,
            sigma1: 10.0,
            mix,
            total: 10_000,
            seed,
        }
    }

    #[test]
    fn splitmix_reference_values() {
        // published reference outputs for seed 1234567
        let mut rng = SplitMix64::new(1_234_567);
        let got: Vec<u64> = (0..3).map(|_| rng.next_u64()).collect();
        assert_eq!(
            got,
            vec![
                6_457_827_717_110_365_317,
                3_203_168_211_198_807_973,
                9_817_491_932_198_370_423
            ]
        );
    }

    #[test]
    fn bimodal_is_deterministic() {
        let a = bimodal_histogram(&spec(0.5, 1)).unwrap();
        let b = bimodal_histogram(&spec(0.5, 1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total(), 10_000);
        assert_ne!(a, bimodal_histogram(&spec(0.5, 2)).unwrap());
    }

    #[test]
    fn heavy_mix_concentrates_near_first_mode() {
        let h = bimodal_histogram(&spec(0.999, 3)).unwrap();
        let near: u64 = h.counts()[10..=90].iter().sum();
        assert!(near as f64 >= 0.99 * h.total() as f64);
    }

    #[test]
    fn separated_modes_put_threshold_between_them() {
        for seed in 0..20 {
            let h = bimodal_histogram(&spec(0.3 + 0.02 * seed as f64, seed)).unwrap();
            let m = build_moments(&h);
            let t = exhaustive_otsu(&mut VarianceEvaluator::new(&m))
                .unwrap()
                .threshold;
            assert!((50..=200).contains(&t), "seed {seed}: {t}");
        }
    }

    #[test]
    fn invalid_specs() {
        let mut s = spec(0.5, 1);
        s.mean0 = 210.0;
        assert!(bimodal_histogram(&s).is_err());
        assert!(bimodal_histogram(&spec(1.0, 1)).is_err());
        assert!(two_delta_histogram(9, 9, 4).is_err());
        assert!(two_delta_histogram(1, 9, 3).is_err());
    }

    #[test]
    fn two_delta_counts() {
        let h = two_delta_histogram(50, 200, 4).unwrap();
        assert_eq!((h.count(50), h.count(200), h.total()), (2, 2, 4));
    }

    #[test]
    fn image_round_trip_and_seeding() {
        let h = bimodal_histogram(&BimodalSpec {
            total: 64 * 48,
            ..spec(0.4, 9)
        })
        .unwrap();
        let a = image_from_histogram(&h, 64, 48, 5).unwrap();
        let b = image_from_histogram(&h, 64, 48, 5).unwrap();
        let c = image_from_histogram(&h, 64, 48, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(compute_histogram(&a), h);
        assert_eq!(compute_histogram(&c), h);
        assert!(image_from_histogram(&h, 64, 47, 5).is_err());
    }
}
