//! Unimodality certification and exhaustive-vs-bisection comparisons,
//! per image and aggregated over a corpus.

mod bench;
mod report;

pub use bench::{discover_images, image_id, load_category_map, run_bench, BenchItem};
pub use report::{render_report, ReportFormat};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram::{build_moments, compute_histogram, Histogram, LEVELS};
use crate::imageio::GrayImage;
use crate::search::{bisection_otsu, exhaustive_otsu, BisectionConfig, EXHAUSTIVE_COST};
use crate::variance::{VarianceEvaluator, VarianceProfile};

/// Maximal run of equal values in a variance profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub start: u8,
    pub end: u8,
    pub value: f64,
}

impl Plateau {
    pub fn contains(&self, t: u8) -> bool {
        (self.start..=self.end).contains(&t)
    }

    pub fn len(&self) -> usize {
        usize::from(self.end - self.start) + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnimodalityReport {
    /// Exactly one local-maximum plateau.
    pub is_unimodal: bool,
    /// Strictly increasing up to a single maximiser and strictly decreasing
    /// after it.
    pub is_strict: bool,
    pub local_maxima: Vec<Plateau>,
    /// Lowest plateau attaining the global maximum.
    pub argmax_plateau: Plateau,
    /// `σ(127) > max(σ(0), σ(255))`.
    pub init_condition_holds: bool,
}

fn plateaus(values: &[f64; LEVELS]) -> Vec<Plateau> {
    let mut runs: Vec<Plateau> = Vec::new();
    for (t, &v) in values.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if run.value == v => run.end = t as u8,
            _ => runs.push(Plateau {
                start: t as u8,
                end: t as u8,
                value: v,
            }),
        }
    }
    runs
}

/// Plateau-aware local maxima: a run counts when it is strictly above each
/// neighbouring run that exists.
pub fn check_unimodal(profile: &VarianceProfile) -> UnimodalityReport {
    let values = profile.values();
    let runs = plateaus(values);
    let local_maxima: Vec<Plateau> = runs
        .iter()
        .enumerate()
        .filter(|(i, run)| {
            let above_left = i.checked_sub(1).is_none_or(|j| run.value > runs[j].value);
            let above_right = runs.get(i + 1).is_none_or(|r| run.value > r.value);
            above_left && above_right
        })
        .map(|(_, run)| *run)
        .collect();

    let peak = profile.argmax();
    let argmax_plateau = *runs
        .iter()
        .find(|r| r.contains(peak))
        .expect("runs cover every threshold");

    let p = peak as usize;
    let is_strict =
        values[..=p].windows(2).all(|w| w[0] < w[1]) && values[p..].windows(2).all(|w| w[0] > w[1]);

    UnimodalityReport {
        is_unimodal: local_maxima.len() == 1,
        is_strict,
        local_maxima,
        argmax_plateau,
        init_condition_holds: values[127] > values[0].max(values[255]),
    }
}

/// Profile of a histogram, evaluated on a throwaway evaluator.
pub fn profile_of(hist: &Histogram) -> VarianceProfile {
    let moments = build_moments(hist);
    VarianceEvaluator::new(&moments).full_profile()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub image_id: String,
    pub t_exhaustive: u8,
    pub t_bisection: u8,
    /// `|t_exhaustive − t_bisection|` in gray levels.
    pub deviation: u8,
    pub iterations_exhaustive: u32,
    pub iterations_bisection: u32,
    pub cost_exhaustive: u32,
    pub cost_bisection: u32,
    /// Evaluator calls the cached bisection actually made.
    pub raw_evaluations_bisection: u64,
    /// `100 · (1 − cost_bisection / 256)`.
    pub reduction_percent: f64,
}

pub fn compare(
    image_id: &str,
    image: &GrayImage,
    cfg: &BisectionConfig,
) -> Result<ComparisonRecord> {
    compare_histogram(image_id, &compute_histogram(image), cfg)
}

pub fn compare_histogram(
    image_id: &str,
    hist: &Histogram,
    cfg: &BisectionConfig,
) -> Result<ComparisonRecord> {
    let moments = build_moments(hist);
    let exhaustive = exhaustive_otsu(&mut VarianceEvaluator::new(&moments))?;
    let (bisection, _) = bisection_otsu(&mut VarianceEvaluator::new(&moments), cfg)?;
    Ok(ComparisonRecord {
        image_id: image_id.to_owned(),
        t_exhaustive: exhaustive.threshold,
        t_bisection: bisection.threshold,
        deviation: exhaustive.threshold.abs_diff(bisection.threshold),
        iterations_exhaustive: exhaustive.iterations,
        iterations_bisection: bisection.iterations,
        cost_exhaustive: exhaustive.reported_cost,
        cost_bisection: bisection.reported_cost,
        raw_evaluations_bisection: bisection.raw_evaluations,
        reduction_percent: bisection.reduction_percent(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation (0 for a single value).
    pub std_dev: f64,
    pub min: u32,
    pub max: u32,
}

impl Summary {
    /// Integer sums keep the result independent of input order.
    fn of(values: impl Iterator<Item = u32>) -> Self {
        let (mut n, mut sum, mut sum_sq) = (0u64, 0u128, 0u128);
        let (mut min, mut max) = (u32::MAX, 0);
        for v in values {
            n += 1;
            sum += u128::from(v);
            sum_sq += u128::from(v) * u128::from(v);
            min = min.min(v);
            max = max.max(v);
        }
        let nf = n as f64;
        let mean = sum as f64 / nf;
        let std_dev = if n > 1 {
            // n·Σx² − (Σx)² is exact in integers
            let spread = (u128::from(n) * sum_sq - sum * sum) as f64;
            (spread / (nf * (nf - 1.0))).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_dev,
            min,
            max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationBucket {
    pub label: String,
    pub min: u8,
    /// Inclusive upper edge; `None` is unbounded.
    pub max: Option<u8>,
    pub count: usize,
    pub cumulative_percent: f64,
}

const BUCKETS: [(&str, u8, Option<u8>); 5] = [
    ("Exact match (0 levels)", 0, Some(0)),
    ("1-2 levels deviation", 1, Some(2)),
    ("3-5 levels deviation", 3, Some(5)),
    ("6-10 levels deviation", 6, Some(10)),
    (">10 levels deviation", 11, None),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub images: usize,
    pub computations: Summary,
    pub iterations: Summary,
    /// Mean reduction in reported variance evaluations.
    pub mean_reduction_percent: f64,
    /// Reduction at the cheapest and the most expensive bisection run.
    pub best_reduction_percent: f64,
    pub worst_reduction_percent: f64,
    /// `100 · (1 − mean iterations / 256)`.
    pub mean_iteration_reduction_percent: f64,
    pub deviation_buckets: Vec<DeviationBucket>,
    pub exact_matches: usize,
    pub mean_abs_deviation: f64,
    pub max_deviation: u8,
}

fn reduction(cost: f64) -> f64 {
    100.0 * (1.0 - cost / f64::from(EXHAUSTIVE_COST))
}

pub fn aggregate(records: &[ComparisonRecord]) -> Result<AggregateStats> {
    if records.is_empty() {
        return Err(Error::EmptyInput(
            "no comparison records to aggregate".into(),
        ));
    }
    let n = records.len();
    let computations = Summary::of(records.iter().map(|r| r.cost_bisection));
    let iterations = Summary::of(records.iter().map(|r| r.iterations_bisection));

    let mut cumulative = 0;
    let deviation_buckets = BUCKETS
        .iter()
        .map(|&(label, min, max)| {
            let count = records
                .iter()
                .filter(|r| r.deviation >= min && max.is_none_or(|m| r.deviation <= m))
                .count();
            cumulative += count;
            DeviationBucket {
                label: label.to_owned(),
                min,
                max,
                count,
                cumulative_percent: 100.0 * cumulative as f64 / n as f64,
            }
        })
        .collect::<Vec<_>>();

    let total_dev: u64 = records.iter().map(|r| u64::from(r.deviation)).sum();
    Ok(AggregateStats {
        images: n,
        mean_reduction_percent: reduction(computations.mean),
        best_reduction_percent: reduction(f64::from(computations.min)),
        worst_reduction_percent: reduction(f64::from(computations.max)),
        mean_iteration_reduction_percent: reduction(iterations.mean),
        computations,
        iterations,
        exact_matches: deviation_buckets[0].count,
        deviation_buckets,
        mean_abs_deviation: total_dev as f64 / n as f64,
        max_deviation: records.iter().map(|r| r.deviation).max().unwrap_or(0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub category: String,
    pub count: usize,
    pub mean_iterations: f64,
    pub mean_deviation: f64,
    pub efficiency_percent: f64,
}

pub const UNCATEGORIZED: &str = "uncategorized";

/// Per-category summaries, ordered by category name. Images missing from
/// `categories` are grouped under [`UNCATEGORIZED`].
pub fn category_breakdown(
    records: &[ComparisonRecord],
    categories: &BTreeMap<String, String>,
) -> Vec<CategoryStats> {
    let mut groups: BTreeMap<&str, Vec<&ComparisonRecord>> = BTreeMap::new();
    for r in records {
        let cat = categories
            .get(&r.image_id)
            .map_or(UNCATEGORIZED, String::as_str);
        groups.entry(cat).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(category, rs)| {
            let n = rs.len() as f64;
            let iters: u64 = rs.iter().map(|r| u64::from(r.iterations_bisection)).sum();
            let devs: u64 = rs.iter().map(|r| u64::from(r.deviation)).sum();
            let cost: u64 = rs.iter().map(|r| u64::from(r.cost_bisection)).sum();
            CategoryStats {
                category: category.to_owned(),
                count: rs.len(),
                mean_iterations: iters as f64 / n,
                mean_deviation: devs as f64 / n,
                efficiency_percent: reduction(cost as f64 / n),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::two_delta_histogram;
    use proptest::prelude::*;

    fn profile(f: impl Fn(usize) -> f64) -> VarianceProfile {
        let mut v = [0.0; LEVELS];
        for (t, x) in v.iter_mut().enumerate() {
            *x = f(t);
        }
        VarianceProfile::from_values(v)
    }

    pub(crate) fn record(id: &str, dev: u8, iters: u32) -> ComparisonRecord {
        ComparisonRecord {
            image_id: id.into(),
            t_exhaustive: 100,
            t_bisection: 100 + dev,
            deviation: dev,
            iterations_exhaustive: 256,
            iterations_bisection: iters,
            cost_exhaustive: 256,
            cost_bisection: 3 * iters,
            raw_evaluations_bisection: u64::from(2 * iters),
            reduction_percent: reduction(f64::from(3 * iters)),
        }
    }

    #[test]
    fn single_peak_is_unimodal() {
        let r = check_unimodal(&profile(|t| 1000.0 - (t as f64 - 118.0).powi(2)));
        assert!(r.is_unimodal && r.is_strict);
        assert_eq!(r.local_maxima.len(), 1);
        assert_eq!((r.argmax_plateau.start, r.argmax_plateau.end), (118, 118));
        assert!(r.init_condition_holds);
    }

    #[test]
    fn two_peaks_are_not_unimodal() {
        let r = check_unimodal(&profile(|t| {
            let t = t as f64;
            (-(t - 60.0).powi(2) / 200.0).exp() + (-(t - 180.0).powi(2) / 200.0).exp()
        }));
        assert!(!r.is_unimodal && !r.is_strict);
        let peaks: Vec<_> = r.local_maxima.iter().map(|p| p.start).collect();
        assert_eq!(peaks, vec![60, 180]);
    }

    #[test]
    fn two_delta_plateau() {
        let r = check_unimodal(&profile_of(&two_delta_histogram(50, 200, 4).unwrap()));
        assert!(r.is_unimodal);
        assert!(!r.is_strict);
        assert_eq!(r.local_maxima.len(), 1);
        assert_eq!((r.argmax_plateau.start, r.argmax_plateau.end), (51, 200));
        assert_eq!(r.argmax_plateau.value, 5625.0);
        assert!(r.init_condition_holds);
    }

    #[test]
    fn boundary_runs_compare_one_sided() {
        let r = check_unimodal(&profile(|t| 255.0 - t as f64));
        assert!(r.is_unimodal && r.is_strict);
        assert_eq!(r.argmax_plateau.start, 0);
        assert!(!r.init_condition_holds);
    }

    #[test]
    fn compare_two_delta_is_well_formed() {
        let h = two_delta_histogram(50, 200, 8).unwrap();
        let rec = compare_histogram("delta", &h, &BisectionConfig::default()).unwrap();
        assert_eq!(rec.t_exhaustive, 51);
        assert!((51..=200).contains(&rec.t_bisection));
        assert_eq!(rec.deviation, rec.t_bisection - 51);
        assert_eq!(rec.cost_exhaustive, 256);
        assert_eq!(rec.cost_bisection, 3 * rec.iterations_bisection);
        assert!(rec.reduction_percent >= 90.6);
    }

    #[test]
    fn compare_degenerate_image() {
        let img = GrayImage::filled(4, 4, 3).unwrap();
        assert!(matches!(
            compare("c", &img, &BisectionConfig::default()),
            Err(Error::DegenerateHistogram)
        ));
    }

    #[test]
    fn aggregate_single_exact() {
        let s = aggregate(&[record("a", 0, 8)]).unwrap();
        assert_eq!(s.deviation_buckets[0].count, 1);
        assert_eq!(s.deviation_buckets[0].cumulative_percent, 100.0);
        assert!(s
            .deviation_buckets
            .iter()
            .all(|b| b.cumulative_percent == 100.0));
        assert_eq!(s.exact_matches, 1);
        assert_eq!(s.computations.std_dev, 0.0);
    }

    #[test]
    fn aggregate_cost_arithmetic() {
        let s = aggregate(&[record("a", 0, 8), record("b", 1, 8), record("c", 17, 3)]).unwrap();
        assert_eq!(s.computations.mean, 19.0);
        assert_eq!((s.computations.min, s.computations.max), (9, 24));
        assert!((s.best_reduction_percent - 96.484375).abs() < 1e-12);
        assert!((s.worst_reduction_percent - 90.625).abs() < 1e-12);
        assert_eq!(s.max_deviation, 17);
        assert!((s.mean_abs_deviation - 6.0).abs() < 1e-12);
        let counts: Vec<_> = s.deviation_buckets.iter().map(|b| b.count).collect();
        assert_eq!(counts, vec![1, 1, 0, 0, 1]);
    }

    #[test]
    fn aggregate_rejects_empty() {
        assert!(matches!(aggregate(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn categories_group_and_default() {
        let recs = [record("a", 0, 8), record("b", 2, 6), record("c", 1, 7)];
        let map: BTreeMap<_, _> = [("a", "natural"), ("b", "natural")]
            .into_iter()
            .map(|(k, v)| (k.to_owned(), v.to_owned()))
            .collect();
        let cats = category_breakdown(&recs, &map);
        assert_eq!(cats.len(), 2);
        assert_eq!(cats[0].category, "natural");
        assert_eq!(cats[0].count, 2);
        assert_eq!(cats[0].mean_iterations, 7.0);
        assert_eq!(cats[0].mean_deviation, 1.0);
        assert_eq!(cats[1].category, UNCATEGORIZED);
    }

    fn arb_profile() -> impl Strategy<Value = VarianceProfile> {
        proptest::collection::vec(0u8..6, LEVELS).prop_map(|v| {
            let mut arr = [0.0; LEVELS];
            for (a, x) in arr.iter_mut().zip(v) {
                *a = f64::from(x);
            }
            VarianceProfile::from_values(arr)
        })
    }

    proptest! {
        #[test]
        fn global_maxima_are_exactly_the_top_plateaus(p in arb_profile()) {
            let r = check_unimodal(&p);
            let top = p.values().iter().cloned().fold(f64::MIN, f64::max);
            let argmax: Vec<u8> = (0..=255u8).filter(|&t| p.get(t) == top).collect();
            let covered: Vec<u8> = r.local_maxima.iter()
                .filter(|pl| pl.value == top)
                .flat_map(|pl| pl.start..=pl.end)
                .collect();
            prop_assert_eq!(covered, argmax);
            prop_assert_eq!(r.is_unimodal, r.local_maxima.len() == 1);
            prop_assert!(r.argmax_plateau.contains(p.argmax()));
        }

        #[test]
        fn aggregate_is_permutation_invariant(
            recs in proptest::collection::vec((0u8..30, 1u32..=8), 1..40),
            seed in any::<u64>(),
        ) {
            let records: Vec<_> = recs.iter().enumerate()
                .map(|(i, &(d, k))| record(&i.to_string(), d, k))
                .collect();
            let mut shuffled = records.clone();
            let mut rng = crate::synth::SplitMix64::new(seed);
            for i in (1..shuffled.len()).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                shuffled.swap(i, j);
            }
            let a = aggregate(&records).unwrap();
            let b = aggregate(&shuffled).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.deviation_buckets.iter().map(|b| b.count).sum::<usize>(), records.len());
            prop_assert!(a.deviation_buckets.windows(2).all(|w| w[0].cumulative_percent <= w[1].cumulative_percent));
            prop_assert!((a.deviation_buckets[4].cumulative_percent - 100.0).abs() < 1e-9);
            prop_assert!(records.iter().all(|r| r.reduction_percent >= 90.6));
        }
    }
}
