//! Synthetic partition generators for tests and diagnostics.
//!
//! Two fixtures: random partitions drawn by sampling a cluster count and
//! assigning items uniformly (for credible-set size checks), and mixtures of
//! perturbed base partitions (a multimodal posterior stand-in with known
//! ground truth).

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::metric::Parameter;
use crate::partition::Partition;
use crate::scoring::{SampleSet, ScoringError};

/// Errors raised by the generators.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SynthError {
    #[error("item count must be at least 1")]
    ZeroItems,
    #[error("probability vector must be non-negative and sum to 1 (got sum {0})")]
    InvalidDistribution(f64),
    #[error("cluster-count support {support} exceeds item count {n}")]
    SupportTooWide { support: usize, n: usize },
    #[error("need one weight per base partition: {bases} bases, {weights} weights")]
    WeightMismatch { bases: usize, weights: usize },
    #[error("flip count {flips} must be smaller than item count {n}")]
    TooManyFlips { flips: usize, n: usize },
    #[error("base partitions must all cover the same items")]
    MixedBaseSizes,
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

/// Random-partition protocol: draw a cluster count from a distribution, then
/// assign every item uniformly at random.
#[derive(Debug, Clone)]
pub struct RandomPartitionSpec {
    n: usize,
    /// `k_weights[i]` is the probability of drawing `K = i + 1`.
    k_weights: Vec<f64>,
    seed: u64,
}

const PROBABILITY_TOLERANCE: f64 = 1e-9;

fn validate_weights(weights: &[f64]) -> Result<(), SynthError> {
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite())
        || (sum - 1.0).abs() > PROBABILITY_TOLERANCE
    {
        return Err(SynthError::InvalidDistribution(sum));
    }
    Ok(())
}

fn draw_weighted(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

impl RandomPartitionSpec {
    /// `k_weights[i]` is the probability of `K = i + 1` clusters; support
    /// must stay within the item count.
    pub fn new(n: usize, k_weights: Vec<f64>, seed: u64) -> Result<Self, SynthError> {
        if n == 0 {
            return Err(SynthError::ZeroItems);
        }
        if k_weights.is_empty() || k_weights.len() > n {
            return Err(SynthError::SupportTooWide {
                support: k_weights.len(),
                n,
            });
        }
        validate_weights(&k_weights)?;
        Ok(Self { n, k_weights, seed })
    }

    /// Empirical cluster-count distribution of a parameter sequence, for
    /// size checks against a posterior sample.
    pub fn from_observed(
        n: usize,
        parameters: &[Parameter],
        seed: u64,
    ) -> Result<Self, SynthError> {
        let counts: Vec<usize> = parameters
            .iter()
            .filter_map(|p| p.n_clusters())
            .collect();
        if counts.is_empty() {
            return Err(SynthError::InvalidDistribution(0.0));
        }
        let max_k = counts.iter().copied().max().expect("non-empty");
        let mut weights = vec![0.0; max_k];
        for k in &counts {
            weights[k - 1] += 1.0;
        }
        let total = counts.len() as f64;
        for w in &mut weights {
            *w /= total;
        }
        Self::new(n, weights, seed)
    }
}

/// Draws `count` random partitions under the spec.
///
/// Uniform assignment can leave some of the drawn `K` clusters empty; draws
/// are canonicalized as-is, so the realized cluster count may be smaller
/// than the drawn one. Generation is sequential, so a fixed seed yields a
/// bit-identical sequence.
pub fn random_partitions(spec: &RandomPartitionSpec, count: usize) -> Vec<Partition> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..count)
        .map(|_| {
            let k = draw_weighted(&mut rng, &spec.k_weights) + 1;
            let raw: Vec<i64> = (0..spec.n)
                .map(|_| rng.random_range(0..k as i64))
                .collect();
            Partition::canonicalize(&raw).expect("n >= 1")
        })
        .collect()
}

/// Samples a multimodal posterior stand-in: each draw picks a base partition
/// by weight, then reassigns `flip_count` distinct items to uniformly chosen
/// existing clusters of that base.
///
/// Flips never create new clusters, so the modes stay well separated. The
/// result is a [`SampleSet`] split at `split_index`.
pub fn perturbed_posterior(
    bases: &[Partition],
    weights: &[f64],
    flip_count: usize,
    size: usize,
    seed: u64,
    split_index: usize,
) -> Result<SampleSet, SynthError> {
    if bases.len() != weights.len() {
        return Err(SynthError::WeightMismatch {
            bases: bases.len(),
            weights: weights.len(),
        });
    }
    if bases.is_empty() {
        return Err(SynthError::WeightMismatch {
            bases: 0,
            weights: weights.len(),
        });
    }
    validate_weights(weights)?;
    let n = bases[0].n_items();
    if bases.iter().any(|b| b.n_items() != n) {
        return Err(SynthError::MixedBaseSizes);
    }
    if flip_count >= n {
        return Err(SynthError::TooManyFlips {
            flips: flip_count,
            n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parameters = Vec::with_capacity(size);
    for _ in 0..size {
        let base = &bases[draw_weighted(&mut rng, weights)];
        let mut raw: Vec<i64> = base.labels().iter().map(|&l| l as i64).collect();
        if flip_count > 0 {
            let k = base.n_clusters() as i64;
            let items = rand::seq::index::sample(&mut rng, n, flip_count);
            for item in items {
                raw[item] = rng.random_range(0..k);
            }
        }
        parameters.push(Parameter::Partition(
            Partition::canonicalize(&raw).expect("n >= 1"),
        ));
    }
    Ok(SampleSet::new(parameters, split_index)?)
}
