//! Outcome records for statistical procedures.

use serde::{Deserialize, Serialize};

/// Decision of a statistical test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// Null hypothesis not rejected at the given level.
    Accept,
    /// Null hypothesis rejected.
    Reject,
    /// The procedure could not produce a decision (degenerate input).
    Inconclusive,
}

/// Outcome of a statistical procedure (Kolmogorov-Smirnov, bootstrap, ...).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestReport {
    /// Test statistic value.
    pub statistic: f64,
    /// Rejection threshold the statistic was compared against.
    pub threshold: f64,
    /// Significance level used to derive the threshold.
    pub alpha: f64,
    pub verdict: Verdict,
    /// Primary sample size.
    pub n: usize,
    /// Number of bootstrap resamples, if the procedure resamples.
    pub n_resamples: Option<usize>,
    /// Resample size `m` for m-out-of-n schemes.
    pub subsample: Option<usize>,
    /// Seed of the stream that drove the procedure, when randomized.
    pub seed: Option<u64>,
}

impl TestReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Accept
    }
}
