//! Kernel pseudo-density scores for calibration samples and the resulting
//! point estimate.
//!
//! The score of a parameter against the training set is the mean of
//! `exp(-gamma * D(theta, theta_t))` over training samples. Scores are
//! accumulated with compensated summation in ascending training-index order,
//! so results are bit-identical no matter how many threads run the
//! calibration pass.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::metric::{distance, MetricError, MetricSpec, Parameter};

/// Default kernel bandwidth for VI scoring on partitions.
pub const DEFAULT_GAMMA: f64 = 0.5;

/// Errors raised by score computation.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScoringError {
    #[error("kernel bandwidth must be positive, got {0}")]
    InvalidBandwidth(f64),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("subsample size {requested} exceeds training size {available} or is zero")]
    InvalidSubsample { requested: usize, available: usize },
    #[error("sample set needs 1 <= split < total, got split {split} of {total}")]
    InvalidSplit { split: usize, total: usize },
    #[error("sample set mixes parameter representations")]
    MixedRepresentations,
    #[error("score table has {actual} scores but the sample set has {expected} calibration samples")]
    Misaligned { expected: usize, actual: usize },
    #[error("score {value} at calibration index {index} is outside (0, 1]")]
    InvalidScore { index: usize, value: f64 },
    #[error("no calibration sample passes the filter")]
    NoCandidate,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Ordered Monte Carlo samples with a training / calibration split.
///
/// The first `split_index` parameters form the training set, the rest the
/// calibration set. Immutable after construction.
#[derive(Debug, Clone)]
pub struct SampleSet {
    parameters: Vec<Parameter>,
    split_index: usize,
}

impl SampleSet {
    /// Builds a sample set, requiring `1 <= split_index < parameters.len()`
    /// and a homogeneous parameter representation.
    pub fn new(parameters: Vec<Parameter>, split_index: usize) -> Result<Self, ScoringError> {
        if split_index < 1 || split_index >= parameters.len() {
            return Err(ScoringError::InvalidSplit {
                split: split_index,
                total: parameters.len(),
            });
        }
        let homogeneous = parameters
            .windows(2)
            .all(|w| std::mem::discriminant(&w[0]) == std::mem::discriminant(&w[1]));
        if !homogeneous {
            return Err(ScoringError::MixedRepresentations);
        }
        Ok(Self {
            parameters,
            split_index,
        })
    }

    /// Training subset (the first `S` parameters).
    pub fn train(&self) -> &[Parameter] {
        &self.parameters[..self.split_index]
    }

    /// Calibration subset (the remaining `N` parameters).
    pub fn calibration(&self) -> &[Parameter] {
        &self.parameters[self.split_index..]
    }

    pub fn n_train(&self) -> usize {
        self.split_index
    }

    pub fn n_calibration(&self) -> usize {
        self.parameters.len() - self.split_index
    }

    pub fn total(&self) -> usize {
        self.parameters.len()
    }
}

/// Declarative parameter predicate, safe to ship through configs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamFilter {
    /// Keep partitions with at most this many clusters. Non-partition
    /// parameters never pass.
    MaxClusters(usize),
}

impl ParamFilter {
    pub fn passes(&self, parameter: &Parameter) -> bool {
        match self {
            ParamFilter::MaxClusters(limit) => {
                parameter.n_clusters().is_some_and(|k| k <= *limit)
            }
        }
    }
}

/// Per-calibration-sample scores plus the policy that produced them.
///
/// Sorted order statistics are cached at construction for the quantile
/// machinery downstream.
#[derive(Debug, Clone)]
pub struct ScoreTable {
    scores: Vec<f64>,
    sorted: Vec<f64>,
    gamma: f64,
    subsample_size: Option<usize>,
    seed: Option<u64>,
}

impl ScoreTable {
    /// Wraps precomputed scores, enforcing the `(0, 1]` range invariant.
    pub fn from_scores(
        scores: Vec<f64>,
        gamma: f64,
        subsample_size: Option<usize>,
        seed: Option<u64>,
    ) -> Result<Self, ScoringError> {
        if gamma <= 0.0 || !gamma.is_finite() {
            return Err(ScoringError::InvalidBandwidth(gamma));
        }
        for (index, &value) in scores.iter().enumerate() {
            if !(value > 0.0 && value <= 1.0) {
                return Err(ScoringError::InvalidScore { index, value });
            }
        }
        let mut sorted = scores.clone();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
        Ok(Self {
            scores,
            sorted,
            gamma,
            subsample_size,
            seed,
        })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Calibration scores in ascending order.
    pub fn sorted_scores(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn subsample_size(&self) -> Option<usize> {
        self.subsample_size
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// Exponential kernel `exp(-gamma * d)`.
pub fn kernel(gamma: f64, d: f64) -> Result<f64, ScoringError> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(ScoringError::InvalidBandwidth(gamma));
    }
    Ok((-gamma * d).exp())
}

/// Kahan-compensated mean of kernel values over the given training samples,
/// visited in slice order.
fn kernel_mean(
    theta: &Parameter,
    train: &[Parameter],
    spec: &MetricSpec,
    gamma: f64,
) -> Result<f64, ScoringError> {
    if train.is_empty() {
        return Err(ScoringError::EmptyTrainingSet);
    }
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for sample in train {
        let d = distance(spec, theta, sample)?;
        let value = kernel(gamma, d)?;
        let y = value - compensation;
        let t = sum + y;
        compensation = (t - sum) - y;
        sum = t;
    }
    Ok(sum / train.len() as f64)
}

/// Pseudo-density score of `theta` against a training set: the mean of
/// `exp(-gamma * D(theta, theta_t))` over all training samples.
pub fn score(
    theta: &Parameter,
    train: &[Parameter],
    spec: &MetricSpec,
    gamma: f64,
) -> Result<f64, ScoringError> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(ScoringError::InvalidBandwidth(gamma));
    }
    kernel_mean(theta, train, spec, gamma)
}

/// One score under a fixed subsampling stream. Subsampled training indices
/// are sorted ascending before accumulation so the summation order does not
/// depend on the draw order.
fn score_with_stream(
    theta: &Parameter,
    train: &[Parameter],
    spec: &MetricSpec,
    gamma: f64,
    subsample_size: Option<usize>,
    seed: u64,
    stream: u64,
) -> Result<f64, ScoringError> {
    match subsample_size {
        None => kernel_mean(theta, train, spec, gamma),
        Some(size) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let mut picked = rand::seq::index::sample(&mut rng, train.len(), size).into_vec();
            picked.sort_unstable();
            let subset: Vec<Parameter> = picked.iter().map(|&t| train[t].clone()).collect();
            kernel_mean(theta, &subset, spec, gamma)
        }
    }
}

/// Scores every calibration sample against the training set, in parallel over
/// calibration indices.
///
/// When `subsample_size` is set, each calibration index draws its own
/// uniform-without-replacement training subset from an independent stream of
/// the seeded generator, so results do not depend on thread count.
pub fn score_calibration(
    samples: &SampleSet,
    spec: &MetricSpec,
    gamma: f64,
    subsample_size: Option<usize>,
    seed: Option<u64>,
) -> Result<ScoreTable, ScoringError> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(ScoringError::InvalidBandwidth(gamma));
    }
    if let Some(size) = subsample_size {
        if size == 0 || size > samples.n_train() {
            return Err(ScoringError::InvalidSubsample {
                requested: size,
                available: samples.n_train(),
            });
        }
    }
    let train = samples.train();
    let seed_value = seed.unwrap_or(0);
    let scores: Vec<f64> = samples
        .calibration()
        .par_iter()
        .enumerate()
        .map(|(i, theta)| {
            score_with_stream(theta, train, spec, gamma, subsample_size, seed_value, i as u64)
        })
        .collect::<Result<_, _>>()?;
    ScoreTable::from_scores(scores, gamma, subsample_size, seed)
}

/// Scores a new candidate under the same bandwidth and subsampling policy as
/// an existing table. Candidates use the stream one past the calibration
/// indices, so repeated calls are deterministic and never collide with the
/// calibration streams.
pub fn score_candidate(
    theta: &Parameter,
    samples: &SampleSet,
    spec: &MetricSpec,
    table: &ScoreTable,
) -> Result<f64, ScoringError> {
    score_with_stream(
        theta,
        samples.train(),
        spec,
        table.gamma(),
        table.subsample_size(),
        table.seed().unwrap_or(0),
        table.len() as u64,
    )
}

/// Highest-scoring training sample, scored against the whole training set
/// (its own zero-distance term included). The usual choice of ball-region
/// center. Ties break toward the lowest training index.
pub fn train_point_estimate<'a>(
    samples: &'a SampleSet,
    spec: &MetricSpec,
    gamma: f64,
) -> Result<(usize, &'a Parameter), ScoringError> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(ScoringError::InvalidBandwidth(gamma));
    }
    let train = samples.train();
    let scores: Vec<f64> = train
        .par_iter()
        .map(|theta| kernel_mean(theta, train, spec, gamma))
        .collect::<Result<_, _>>()?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    Ok((best, &train[best]))
}

/// Index and parameter of the highest-scoring calibration sample, optionally
/// restricted to samples passing a filter. Ties break toward the lowest
/// calibration index.
pub fn point_estimate<'a>(
    samples: &'a SampleSet,
    table: &ScoreTable,
    filter: Option<&ParamFilter>,
) -> Result<(usize, &'a Parameter), ScoringError> {
    if table.len() != samples.n_calibration() {
        return Err(ScoringError::Misaligned {
            expected: samples.n_calibration(),
            actual: table.len(),
        });
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, (theta, &s)) in samples
        .calibration()
        .iter()
        .zip(table.scores())
        .enumerate()
    {
        if filter.is_some_and(|f| !f.passes(theta)) {
            continue;
        }
        if best.is_none_or(|(_, best_score)| s > best_score) {
            best = Some((i, s));
        }
    }
    let (index, _) = best.ok_or(ScoringError::NoCandidate)?;
    Ok((index, &samples.calibration()[index]))
}
