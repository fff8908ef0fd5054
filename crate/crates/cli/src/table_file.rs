//! The score-table artifact handed between pipeline stages, plus sample
//! loading for each metric kind.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use cbi::io::{
    load_distance_csv, load_partition_csv, load_vector_csv, split_samples, SplitSpec,
};
use cbi::{MetricSpec, Parameter, SampleSet, ScoreTable};

use crate::error::CliError;

/// Which metric the run uses; decides the sample file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Variation-of-information on partitions; input rows are label vectors.
    Vi,
    /// Euclidean distance; input rows are real vectors.
    Euclidean,
    /// Externally computed distances; samples are row indices of the matrix.
    Precomputed,
}

/// Serialized scoring run: the policy plus one score per calibration sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreFile {
    pub metric: MetricKind,
    pub gamma: f64,
    pub split: SplitSpec,
    pub subsample_size: Option<usize>,
    pub seed: Option<u64>,
    pub n_train: usize,
    pub n_calibration: usize,
    pub scores: Vec<f64>,
}

impl ScoreFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }

    pub fn table(&self) -> Result<ScoreTable, CliError> {
        Ok(ScoreTable::from_scores(
            self.scores.clone(),
            self.gamma,
            self.subsample_size,
            self.seed,
        )?)
    }
}

/// Loads raw parameters and the metric spec for a run.
///
/// For the precomputed kind the distance matrix is the sample source: sample
/// `i` is row `i` of the matrix.
pub fn load_parameters(
    kind: MetricKind,
    input: Option<&Path>,
    matrix: Option<&Path>,
    header: bool,
) -> Result<(Vec<Parameter>, MetricSpec), CliError> {
    match kind {
        MetricKind::Vi => {
            let path = input.ok_or_else(|| {
                CliError::Validation("--input is required for the vi metric".to_string())
            })?;
            let partitions = load_partition_csv(path, header)?;
            Ok((
                partitions.into_iter().map(Parameter::Partition).collect(),
                MetricSpec::ViPartition,
            ))
        }
        MetricKind::Euclidean => {
            let path = input.ok_or_else(|| {
                CliError::Validation("--input is required for the euclidean metric".to_string())
            })?;
            let vectors = load_vector_csv(path, header)?;
            Ok((
                vectors.into_iter().map(Parameter::Vector).collect(),
                MetricSpec::EuclideanVector,
            ))
        }
        MetricKind::Precomputed => {
            let path = matrix.ok_or_else(|| {
                CliError::Validation(
                    "--distance-matrix is required for the precomputed metric".to_string(),
                )
            })?;
            let matrix = load_distance_csv(path, header)?;
            let parameters = (0..matrix.size()).map(Parameter::Index).collect();
            Ok((parameters, MetricSpec::Precomputed(Arc::new(matrix))))
        }
    }
}

/// Candidate parameters for region testing, in the run's representation.
pub fn load_candidates(
    kind: MetricKind,
    path: &Path,
    header: bool,
) -> Result<Vec<Parameter>, CliError> {
    match kind {
        MetricKind::Vi => Ok(load_partition_csv(path, header)?
            .into_iter()
            .map(Parameter::Partition)
            .collect()),
        MetricKind::Euclidean => Ok(load_vector_csv(path, header)?
            .into_iter()
            .map(Parameter::Vector)
            .collect()),
        MetricKind::Precomputed => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
            let mut out = Vec::new();
            for (i, line) in text.lines().enumerate().skip(usize::from(header)) {
                if line.trim().is_empty() {
                    continue;
                }
                let index: usize = line.trim().parse().map_err(|_| {
                    CliError::Format(format!(
                        "format error at line {}: candidate index '{line}' is not an integer",
                        i + 1
                    ))
                })?;
                out.push(Parameter::Index(index));
            }
            if out.is_empty() {
                return Err(CliError::Format("candidate file holds no rows".to_string()));
            }
            Ok(out)
        }
    }
}

/// Rebuilds the sample set exactly as the scoring stage split it and checks
/// the sizes recorded in the score file.
pub fn rebuild_samples(
    file: &ScoreFile,
    parameters: Vec<Parameter>,
) -> Result<SampleSet, CliError> {
    let samples = split_samples(parameters, file.split)?;
    if samples.n_train() != file.n_train || samples.n_calibration() != file.n_calibration {
        return Err(CliError::Validation(format!(
            "input yields a {}/{} split but the score file records {}/{}; \
             was it produced from a different input?",
            samples.n_train(),
            samples.n_calibration(),
            file.n_train,
            file.n_calibration
        )));
    }
    Ok(samples)
}

/// JSON rendering of a parameter for reports.
pub fn parameter_to_json(parameter: &Parameter) -> serde_json::Value {
    match parameter {
        Parameter::Partition(p) => serde_json::json!(p.labels()),
        Parameter::Vector(v) => serde_json::json!(v),
        Parameter::Index(i) => serde_json::json!(i),
    }
}
