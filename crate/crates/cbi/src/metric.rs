//! Uniform discrepancy contract over heterogeneous parameter representations.
//!
//! A [`MetricSpec`] selects how parameters are compared: the VI metric on
//! partitions, the Euclidean norm on real vectors, or lookups into an
//! externally computed distance matrix (for discrepancies this crate does not
//! implement natively, e.g. Wasserstein or operator-norm distances).

use std::sync::Arc;

use rayon::prelude::*;

use crate::partition::{vi_distance, Partition, PartitionError};

/// Errors raised by distance evaluation and matrix validation.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricError {
    /// Parameter representation not admissible under the metric spec.
    #[error("parameter representation does not match metric kind {expected}")]
    MetricMismatch { expected: &'static str },
    /// Two parameters with the same representation but incompatible shapes.
    #[error(transparent)]
    Partition(#[from] PartitionError),
    /// Euclidean vectors of different lengths.
    #[error("vector length mismatch: {left} vs {right}")]
    VectorLengthMismatch { left: usize, right: usize },
    /// Sample index outside a precomputed matrix.
    #[error("index {index} out of bounds for {size}x{size} distance matrix")]
    IndexError { index: usize, size: usize },
    /// A matrix failed the symmetry / zero-diagonal / non-negativity checks.
    #[error("invalid distance matrix: {reason}")]
    ValidationError { reason: String },
}

/// A sampled parameter value, in one of the supported representations.
#[derive(Debug, Clone, PartialEq)]
pub enum Parameter {
    /// A data partition, compared under the VI metric.
    Partition(Partition),
    /// A real vector, compared under the Euclidean norm.
    Vector(Vec<f64>),
    /// An opaque sample index into a precomputed distance matrix.
    Index(usize),
}

impl Parameter {
    /// Cluster count when the parameter is a partition.
    pub fn n_clusters(&self) -> Option<usize> {
        match self {
            Parameter::Partition(p) => Some(p.n_clusters()),
            _ => None,
        }
    }
}

/// Which discrepancy to use and over which representation.
#[derive(Debug, Clone)]
pub enum MetricSpec {
    /// Variation-of-information metric on partitions (bits).
    ViPartition,
    /// Euclidean norm of the difference of real vectors.
    EuclideanVector,
    /// Lookup into an externally computed distance matrix; parameters are
    /// sample indices in matrix order.
    Precomputed(Arc<DistanceMatrix>),
}

impl MetricSpec {
    fn kind_name(&self) -> &'static str {
        match self {
            MetricSpec::ViPartition => "vi_partition",
            MetricSpec::EuclideanVector => "euclidean_vector",
            MetricSpec::Precomputed(_) => "precomputed",
        }
    }
}

/// Symmetric matrix of pairwise distances with zero diagonal.
///
/// Immutable after construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    size: usize,
    entries: Vec<f64>,
}

/// Tolerance for accepting externally supplied matrices as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

impl DistanceMatrix {
    /// Validates and canonicalizes a dense matrix supplied row by row.
    ///
    /// Rejects non-square input, asymmetry beyond [`SYMMETRY_TOLERANCE`],
    /// nonzero diagonals and negative or non-finite entries. The upper
    /// triangle is mirrored onto the lower one so the stored matrix is
    /// exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MetricError> {
        let size = rows.len();
        if size == 0 {
            return Err(MetricError::ValidationError {
                reason: "matrix has no rows".to_string(),
            });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != size {
                return Err(MetricError::ValidationError {
                    reason: format!("row {} has {} columns, expected {}", i + 1, row.len(), size),
                });
            }
        }
        let mut entries = vec![0.0; size * size];
        for i in 0..size {
            let diag = rows[i][i];
            if !diag.is_finite() || diag.abs() > SYMMETRY_TOLERANCE {
                return Err(MetricError::ValidationError {
                    reason: format!("diagonal entry ({i},{i}) = {diag} is not zero"),
                });
            }
            for j in (i + 1)..size {
                let upper = rows[i][j];
                let lower = rows[j][i];
                if !upper.is_finite() || !lower.is_finite() || upper < 0.0 || lower < 0.0 {
                    return Err(MetricError::ValidationError {
                        reason: format!("entry ({i},{j}) is negative or non-finite"),
                    });
                }
                if (upper - lower).abs() > SYMMETRY_TOLERANCE {
                    return Err(MetricError::ValidationError {
                        reason: format!(
                            "asymmetry at ({i},{j}): {upper} vs {lower} exceeds {SYMMETRY_TOLERANCE:e}"
                        ),
                    });
                }
                entries[i * size + j] = upper;
                entries[j * size + i] = upper;
            }
        }
        Ok(Self { size, entries })
    }

    /// Number of rows (= columns).
    pub fn size(&self) -> usize {
        self.size
    }

    /// Distance between samples `i` and `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    /// Rows of the matrix, for serialization.
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.size)
    }

    fn checked_get(&self, i: usize, j: usize) -> Result<f64, MetricError> {
        let size = self.size;
        for index in [i, j] {
            if index >= size {
                return Err(MetricError::IndexError { index, size });
            }
        }
        Ok(self.get(i, j))
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::VectorLengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let sum_sq: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum();
    Ok(sum_sq.sqrt())
}

/// Discrepancy `D(a, b) >= 0` under the given spec.
pub fn distance(spec: &MetricSpec, a: &Parameter, b: &Parameter) -> Result<f64, MetricError> {
    match (spec, a, b) {
        (MetricSpec::ViPartition, Parameter::Partition(pa), Parameter::Partition(pb)) => {
            Ok(vi_distance(pa, pb)?)
        }
        (MetricSpec::EuclideanVector, Parameter::Vector(va), Parameter::Vector(vb)) => {
            euclidean(va, vb)
        }
        (MetricSpec::Precomputed(matrix), Parameter::Index(i), Parameter::Index(j)) => {
            matrix.checked_get(*i, *j)
        }
        _ => Err(MetricError::MetricMismatch {
            expected: spec.kind_name(),
        }),
    }
}

/// Full pairwise distance matrix over a parameter sequence.
///
/// Only the upper triangle is computed (rows in parallel); the lower triangle
/// is mirrored. Each entry comes from one independent `distance` call, so the
/// result is bit-identical regardless of thread count.
pub fn pairwise_distances(
    spec: &MetricSpec,
    items: &[Parameter],
) -> Result<DistanceMatrix, MetricError> {
    let size = items.len();
    if size == 0 {
        return Err(MetricError::ValidationError {
            reason: "cannot build a distance matrix over zero items".to_string(),
        });
    }
    let upper: Vec<Vec<f64>> = (0..size)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..size)
                .map(|j| distance(spec, &items[i], &items[j]))
                .collect::<Result<Vec<f64>, MetricError>>()
        })
        .collect::<Result<_, _>>()?;
    let mut entries = vec![0.0; size * size];
    for (i, row) in upper.iter().enumerate() {
        for (offset, &d) in row.iter().enumerate() {
            let j = i + 1 + offset;
            entries[i * size + j] = d;
            entries[j * size + i] = d;
        }
    }
    Ok(DistanceMatrix { size, entries })
}
