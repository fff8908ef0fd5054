//! Conformal p-values, credible-region membership, the ball-score baseline,
//! and concentration-bound certificates.
//!
//! A candidate belongs to the `1 - alpha` credible region when its conformal
//! p-value `(#{calibration scores <= candidate score} + 1) / (N + 1)` is at
//! least `alpha`. Ties count toward the numerator. The equivalent threshold
//! is the `k`-th order statistic of the calibration scores with
//! `k = ceil(alpha (N + 1) - 1)`; degenerate `alpha` / `N` combinations where
//! `k < 1` admit every candidate and are flagged rather than rejected.

use serde::{Deserialize, Serialize};

use crate::metric::{distance, MetricSpec, Parameter};
use crate::scoring::{score_candidate, ParamFilter, SampleSet, ScoreTable, ScoringError};

/// Errors raised by conformal-region construction.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConformalError {
    #[error("miscoverage level alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("certificate confidence delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("calibration score table is empty")]
    EmptyTable,
    #[error("candidate parameter fails the conditioning filter")]
    FilterViolation,
    #[error("filter passes no calibration sample")]
    NoCandidate,
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

/// Miscoverage level for credible-region construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalConfig {
    alpha: f64,
}

impl ConformalConfig {
    pub fn new(alpha: f64) -> Result<Self, ConformalError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ConformalError::InvalidAlpha(alpha));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Outcome of one region-membership test.
///
/// For score-based regions `threshold_score` is the score order statistic a
/// candidate must reach; for ball regions it is the distance quantile a
/// candidate must stay under (`+inf` when the region degenerates to all of
/// the space). `in_region` always equals `p_value >= alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalReport {
    pub p_value: f64,
    pub threshold_rank: usize,
    pub threshold_score: f64,
    pub in_region: bool,
    pub degenerate: bool,
}

/// The three-term high-probability bound on `|coverage - (1 - alpha)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationCertificate {
    pub alpha: f64,
    pub n: usize,
    pub delta: f64,
    /// Deterministic rank error `max(alpha, 1 - alpha) / N`.
    pub term_rank: f64,
    /// Empirical jump at the threshold order statistic: multiplicity of the
    /// threshold score divided by `N` (equals `1/N` for distinct scores).
    pub term_jump: f64,
    /// DKW error `sqrt(ln(2 / delta) / (2 N))`.
    pub term_dkw: f64,
    pub total_bound: f64,
}

/// Threshold rank `ceil(alpha (N + 1) - 1)` before clamping; values below 1
/// mark a degenerate region containing every candidate.
fn raw_threshold_rank(alpha: f64, n: usize) -> i64 {
    (alpha * (n as f64 + 1.0) - 1.0).ceil() as i64
}

fn count_at_most(sorted: &[f64], value: f64) -> usize {
    sorted.partition_point(|&s| s <= value)
}

fn count_below(sorted: &[f64], value: f64) -> usize {
    sorted.partition_point(|&s| s < value)
}

/// Conformal p-value of a new score against ascending calibration scores.
pub fn p_value_from_sorted(new_score: f64, sorted: &[f64]) -> f64 {
    (count_at_most(sorted, new_score) + 1) as f64 / (sorted.len() + 1) as f64
}

/// Membership report for a new score against ascending calibration scores.
fn membership_from_sorted(new_score: f64, sorted: &[f64], alpha: f64) -> ConformalReport {
    let n = sorted.len();
    let p_value = p_value_from_sorted(new_score, sorted);
    let k = raw_threshold_rank(alpha, n);
    let degenerate = k < 1;
    let threshold_rank = k.clamp(1, n as i64) as usize;
    let threshold_score = if degenerate {
        f64::NEG_INFINITY
    } else {
        sorted[threshold_rank - 1]
    };
    ConformalReport {
        p_value,
        threshold_rank,
        threshold_score,
        in_region: p_value >= alpha,
        degenerate,
    }
}

/// Conformal p-value of a new score against a calibration table. Equal
/// scores count toward the numerator.
pub fn conformal_p_value(new_score: f64, table: &ScoreTable) -> Result<f64, ConformalError> {
    if table.is_empty() {
        return Err(ConformalError::EmptyTable);
    }
    Ok(p_value_from_sorted(new_score, table.sorted_scores()))
}

fn check_aligned(samples: &SampleSet, table: &ScoreTable) -> Result<(), ConformalError> {
    if table.is_empty() {
        return Err(ConformalError::EmptyTable);
    }
    if table.len() != samples.n_calibration() {
        return Err(ConformalError::Scoring(ScoringError::Misaligned {
            expected: samples.n_calibration(),
            actual: table.len(),
        }));
    }
    Ok(())
}

/// Tests whether a candidate belongs to the `1 - alpha` credible region.
///
/// The candidate is scored against the training set with the same bandwidth
/// and subsampling policy that produced the table.
pub fn region_membership(
    theta: &Parameter,
    samples: &SampleSet,
    table: &ScoreTable,
    config: &ConformalConfig,
    spec: &MetricSpec,
) -> Result<ConformalReport, ConformalError> {
    check_aligned(samples, table)?;
    let new_score = score_candidate(theta, samples, spec, table)?;
    Ok(membership_from_sorted(
        new_score,
        table.sorted_scores(),
        config.alpha(),
    ))
}

/// Region membership conditional on a subregion: the p-value and threshold
/// are computed over the filtered calibration subset only.
pub fn conditional_region(
    theta: &Parameter,
    samples: &SampleSet,
    table: &ScoreTable,
    config: &ConformalConfig,
    spec: &MetricSpec,
    filter: &ParamFilter,
) -> Result<ConformalReport, ConformalError> {
    check_aligned(samples, table)?;
    if !filter.passes(theta) {
        return Err(ConformalError::FilterViolation);
    }
    let mut filtered: Vec<f64> = samples
        .calibration()
        .iter()
        .zip(table.scores())
        .filter(|(theta, _)| filter.passes(theta))
        .map(|(_, &s)| s)
        .collect();
    if filtered.is_empty() {
        return Err(ConformalError::NoCandidate);
    }
    filtered.sort_unstable_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
    let new_score = score_candidate(theta, samples, spec, table)?;
    Ok(membership_from_sorted(new_score, &filtered, config.alpha()))
}

/// Ball-shaped credible region around a fixed center.
///
/// The center must be chosen from the training set alone (for instance the
/// training-set kernel-score maximizer). Membership is the conformal verdict
/// under the score `-D(., center)`, so it agrees exactly with
/// `region_membership` run on negated distances; `threshold_score` reports
/// the matching distance quantile of the calibration samples, or `+inf` when
/// the region degenerates to the whole space.
pub fn ball_region(
    theta: &Parameter,
    center: &Parameter,
    samples: &SampleSet,
    config: &ConformalConfig,
    spec: &MetricSpec,
) -> Result<ConformalReport, ConformalError> {
    let calibration = samples.calibration();
    if calibration.is_empty() {
        return Err(ConformalError::EmptyTable);
    }
    let n = calibration.len();
    let mut distances = Vec::with_capacity(n);
    for sample in calibration {
        distances.push(distance(spec, sample, center).map_err(ScoringError::from)?);
    }
    distances.sort_unstable_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
    let new_distance = distance(spec, theta, center).map_err(ScoringError::from)?;

    let alpha = config.alpha();
    // p-value under the score -D(., center): ties again count toward the
    // numerator, so the count is #{d_i >= d_new}.
    let count_ge = n - count_below(&distances, new_distance);
    let p_value = (count_ge + 1) as f64 / (n + 1) as f64;
    let k = raw_threshold_rank(alpha, n);
    let degenerate = k < 1;
    let (threshold_rank, threshold_score) = if degenerate {
        // Region admits everything; report the empirical quantile rank when
        // it exists, +inf otherwise.
        let paper_rank = ((n as f64 + 1.0) * (1.0 - alpha)).ceil() as i64;
        if paper_rank >= 1 && paper_rank <= n as i64 {
            (paper_rank as usize, distances[paper_rank as usize - 1])
        } else {
            (n, f64::INFINITY)
        }
    } else {
        // Rank consistent with the p-value rule: d_new <= d_(N + 1 - k).
        let rank = n + 1 - k as usize;
        (rank, distances[rank - 1])
    };
    Ok(ConformalReport {
        p_value,
        threshold_rank,
        threshold_score,
        in_region: p_value >= alpha,
        degenerate,
    })
}

/// Assembles the three-term concentration certificate for the coverage of
/// the `1 - alpha` region built from this table.
pub fn concentration_certificate(
    table: &ScoreTable,
    config: &ConformalConfig,
    delta: f64,
) -> Result<ConcentrationCertificate, ConformalError> {
    if table.is_empty() {
        return Err(ConformalError::EmptyTable);
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(ConformalError::InvalidDelta(delta));
    }
    let alpha = config.alpha();
    let n = table.len();
    let sorted = table.sorted_scores();
    let k = raw_threshold_rank(alpha, n).clamp(1, n as i64) as usize;
    let threshold = sorted[k - 1];
    // Multiplicity under exact float equality: scores are reproducible
    // deterministic floats, so exact ties are meaningful.
    let multiplicity = count_at_most(sorted, threshold) - count_below(sorted, threshold);
    let term_rank = alpha.max(1.0 - alpha) / n as f64;
    let term_jump = multiplicity as f64 / n as f64;
    let term_dkw = ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt();
    Ok(ConcentrationCertificate {
        alpha,
        n,
        delta,
        term_rank,
        term_jump,
        term_dkw,
        total_bound: term_rank + term_jump + term_dkw,
    })
}
