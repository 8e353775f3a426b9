//! Global image thresholding by Otsu's between-class variance criterion.
//!
//! Two searches are provided over the same O(1) variance evaluator:
//!
//! * [`search::exhaustive_otsu`] scans all 256 thresholds.
//! * [`search::bisection_otsu`] shrinks a `(low, mid, high)` bracket by
//!   comparing the variance at the bracket centre against the two
//!   quarter points, needing at most 8 iterations from `(0, 127, 255)`.
//!
//! Around those sit PGM/PNG loading ([`imageio`]), cumulative moment tables
//! ([`histogram`]), unimodality checks and benchmark reports ([`analysis`]),
//! deterministic synthetic inputs ([`synth`]) and a scalar root bisector
//! ([`rootfind`]).

pub mod analysis;
pub mod cli;
pub mod error;
pub mod histogram;
pub mod imageio;
pub mod rootfind;
pub mod search;
pub mod synth;
pub mod variance;

pub use error::{Error, Result};
pub use histogram::{Histogram, MomentTable, LEVELS};
pub use imageio::GrayImage;
pub use search::{BisectionConfig, Decision, Method, SearchTrace, ThresholdResult};
pub use variance::{VarianceEvaluator, VarianceProfile};
