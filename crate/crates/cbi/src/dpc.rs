//! Density-peak multimodality analysis over calibration samples.
//!
//! Every calibration sample gets a separation value `delta`: the minimum
//! distance to any other sample of strictly higher score. Ties are ordered by
//! index (equal score with lower index counts as higher), so the lowest-index
//! global score maximizer is the unique top sample; it receives the maximum
//! distance to any other sample as its default separation. Samples that pair
//! a high score with a large separation are the candidate posterior modes.

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::metric::DistanceMatrix;
use crate::scoring::{SampleSet, ScoreTable};

/// Errors raised by the multimodality analysis.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DpcError {
    #[error("distance matrix covers {actual} samples but the score table has {expected}")]
    Misaligned { expected: usize, actual: usize },
    #[error("requested {requested} modes from {available} samples")]
    InvalidModeCount { requested: usize, available: usize },
    #[error("mode index {index} out of range for {len} samples, or duplicated")]
    InvalidModeIndex { index: usize, len: usize },
    #[error("mode list is empty")]
    EmptyModes,
    #[error("outlier quantile {0} outside (0, 1)")]
    InvalidQuantile(f64),
    #[error("decision graph parse error at line {line}: {reason}")]
    ParseError { line: usize, reason: String },
}

/// One calibration sample in the decision graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPoint {
    pub index: usize,
    pub score: f64,
    pub delta: f64,
    /// Index of the nearest sample ranked higher (by score, then by lower
    /// index on exact ties); `None` exactly for the top-ranked sample.
    pub nearest_higher: Option<usize>,
}

/// Separations for every calibration sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSet {
    pub points: Vec<GraphPoint>,
    /// Set when the calibration set has a single sample, whose separation is
    /// zero by convention.
    pub degenerate: bool,
}

/// Mode-detection policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModePolicy {
    /// Keep the `m` samples with the largest normalized score-separation
    /// products.
    TopM(usize),
    /// Sort the normalized products descending and cut at the largest
    /// relative gap within the top `ceil(sqrt(N))` candidates.
    AutoGap,
}

/// Assignment, weight and outlier configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DpcOptions {
    pub policy: ModePolicy,
    /// Assign each sample to the cluster of its nearest-higher neighbor
    /// (chained, as in classic density-peak clustering) instead of directly
    /// to the nearest mode.
    pub chained: bool,
    /// Separation quantile above which a sample can be flagged an outlier.
    pub outlier_delta_q: f64,
    /// Score quantile below which a sample can be flagged an outlier.
    pub outlier_score_q: f64,
}

impl Default for DpcOptions {
    fn default() -> Self {
        Self {
            policy: ModePolicy::AutoGap,
            chained: false,
            outlier_delta_q: 0.9,
            outlier_score_q: 0.5,
        }
    }
}

/// Cluster assignments with per-mode weights and outlier flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    /// Position into the mode list for every sample.
    pub assignments: Vec<usize>,
    /// Fraction of calibration samples assigned to each mode.
    pub weights: Vec<f64>,
    pub outlier_flags: Vec<bool>,
}

/// Full multimodality summary for one calibration set.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionGraph {
    pub points: Vec<GraphPoint>,
    /// Calibration indices of the detected modes, strongest first.
    pub modes: Vec<usize>,
    /// Position into `modes` per sample; `None` when no assignment was run.
    pub assignments: Vec<Option<usize>>,
    pub weights: Vec<f64>,
    pub outlier_flags: Vec<bool>,
    /// Cluster count per calibration sample when parameters are partitions.
    pub k_clusters: Vec<Option<usize>>,
    pub degenerate: bool,
}

/// `j` outranks `i` when its score is strictly higher, or equal with a lower
/// index.
fn outranks(scores: &[f64], j: usize, i: usize) -> bool {
    scores[j] > scores[i] || (scores[j] == scores[i] && j < i)
}

/// Computes the separation and nearest-higher neighbor of every sample.
///
/// Row scans are independent and run in parallel; the result does not depend
/// on thread count.
pub fn compute_deltas(
    table: &ScoreTable,
    distances: &DistanceMatrix,
) -> Result<DeltaSet, DpcError> {
    let n = table.len();
    if distances.size() != n {
        return Err(DpcError::Misaligned {
            expected: n,
            actual: distances.size(),
        });
    }
    let scores = table.scores();
    if n == 1 {
        return Ok(DeltaSet {
            points: vec![GraphPoint {
                index: 0,
                score: scores[0],
                delta: 0.0,
                nearest_higher: None,
            }],
            degenerate: true,
        });
    }
    let points: Vec<GraphPoint> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best: Option<(f64, usize)> = None;
            let mut max_distance = 0.0f64;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = distances.get(i, j);
                max_distance = max_distance.max(d);
                if outranks(scores, j, i)
                    && best.is_none_or(|(best_d, _)| d < best_d)
                {
                    best = Some((d, j));
                }
            }
            match best {
                Some((delta, j)) => GraphPoint {
                    index: i,
                    score: scores[i],
                    delta,
                    nearest_higher: Some(j),
                },
                None => GraphPoint {
                    index: i,
                    score: scores[i],
                    delta: max_distance,
                    nearest_higher: None,
                },
            }
        })
        .collect();
    Ok(DeltaSet {
        points,
        degenerate: false,
    })
}

fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max > min {
        values.iter().map(|v| (v - min) / (max - min)).collect()
    } else {
        vec![0.0; values.len()]
    }
}

/// Normalized score-separation products, strongest first with index
/// tie-breaking.
fn ranked_products(points: &[GraphPoint]) -> (Vec<f64>, Vec<usize>) {
    let scores: Vec<f64> = points.iter().map(|p| p.score).collect();
    let deltas: Vec<f64> = points.iter().map(|p| p.delta).collect();
    let s_norm = min_max_normalize(&scores);
    let d_norm = min_max_normalize(&deltas);
    let products: Vec<f64> = s_norm.iter().zip(&d_norm).map(|(s, d)| s * d).collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        products[b]
            .partial_cmp(&products[a])
            .expect("products are finite")
            .then(a.cmp(&b))
    });
    (products, order)
}

/// Detects mode candidates from the decision graph.
///
/// The top-ranked sample (the global score maximizer) is always a mode.
pub fn detect_modes(points: &[GraphPoint], policy: &ModePolicy) -> Result<Vec<usize>, DpcError> {
    let n = points.len();
    if n == 0 {
        return Err(DpcError::InvalidModeCount {
            requested: 0,
            available: 0,
        });
    }
    let (products, order) = ranked_products(points);
    match policy {
        ModePolicy::TopM(m) => {
            if *m == 0 || *m > n {
                return Err(DpcError::InvalidModeCount {
                    requested: *m,
                    available: n,
                });
            }
            Ok(order[..*m].iter().map(|&pos| points[pos].index).collect())
        }
        ModePolicy::AutoGap => {
            let candidates = ((n as f64).sqrt().ceil() as usize).min(n);
            let mut best_m = 1;
            let mut best_gap = f64::NEG_INFINITY;
            for m in 1..candidates {
                let high = products[order[m - 1]];
                let low = products[order[m]];
                let gap = if high > 0.0 { (high - low) / high } else { 0.0 };
                if gap > best_gap {
                    best_gap = gap;
                    best_m = m;
                }
            }
            Ok(order[..best_m].iter().map(|&pos| points[pos].index).collect())
        }
    }
}

fn quantile_by_rank(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("values are finite"));
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Assigns every sample to a mode, estimates mode weights as assignment
/// proportions, and flags high-separation low-score samples as outliers.
pub fn assign_clusters(
    points: &[GraphPoint],
    modes: &[usize],
    distances: &DistanceMatrix,
    options: &DpcOptions,
) -> Result<ClusterAssignment, DpcError> {
    let n = points.len();
    if modes.is_empty() {
        return Err(DpcError::EmptyModes);
    }
    if distances.size() != n {
        return Err(DpcError::Misaligned {
            expected: n,
            actual: distances.size(),
        });
    }
    let mut seen = vec![false; n];
    for &m in modes {
        if m >= n || seen[m] {
            return Err(DpcError::InvalidModeIndex { index: m, len: n });
        }
        seen[m] = true;
    }
    for q in [options.outlier_delta_q, options.outlier_score_q] {
        if !(q > 0.0 && q < 1.0) {
            return Err(DpcError::InvalidQuantile(q));
        }
    }

    let nearest_mode = |i: usize| -> usize {
        let mut best_pos = 0;
        let mut best = (distances.get(i, modes[0]), modes[0]);
        for (pos, &m) in modes.iter().enumerate().skip(1) {
            let d = distances.get(i, m);
            if d < best.0 || (d == best.0 && m < best.1) {
                best = (d, m);
                best_pos = pos;
            }
        }
        best_pos
    };

    let assignments: Vec<usize> = if options.chained {
        let mut mode_of = vec![None::<usize>; n];
        for (pos, &m) in modes.iter().enumerate() {
            mode_of[m] = Some(pos);
        }
        let scores: Vec<f64> = points.iter().map(|p| p.score).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .expect("scores are finite")
                .then(a.cmp(&b))
        });
        let mut assigned = vec![usize::MAX; n];
        for &i in &order {
            assigned[i] = match (mode_of[i], points[i].nearest_higher) {
                (Some(pos), _) => pos,
                // Parents precede their children in rank order, so they are
                // already assigned. A rankless non-mode sample can only occur
                // with a hand-picked mode list; fall back to direct
                // assignment for it.
                (None, Some(parent)) => assigned[parent],
                (None, None) => nearest_mode(i),
            };
        }
        assigned
    } else {
        (0..n).map(nearest_mode).collect()
    };

    let mut counts = vec![0usize; modes.len()];
    for &pos in &assignments {
        counts[pos] += 1;
    }
    let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();

    let deltas: Vec<f64> = points.iter().map(|p| p.delta).collect();
    let scores: Vec<f64> = points.iter().map(|p| p.score).collect();
    let delta_cut = quantile_by_rank(&deltas, options.outlier_delta_q);
    let score_cut = quantile_by_rank(&scores, options.outlier_score_q);
    let outlier_flags: Vec<bool> = points
        .iter()
        .map(|p| p.delta > delta_cut && p.score < score_cut)
        .collect();

    Ok(ClusterAssignment {
        assignments,
        weights,
        outlier_flags,
    })
}

fn cluster_counts(samples: Option<&SampleSet>, n: usize) -> Result<Vec<Option<usize>>, DpcError> {
    match samples {
        None => Ok(vec![None; n]),
        Some(set) => {
            if set.n_calibration() != n {
                return Err(DpcError::Misaligned {
                    expected: n,
                    actual: set.n_calibration(),
                });
            }
            Ok(set.calibration().iter().map(|p| p.n_clusters()).collect())
        }
    }
}

impl DecisionGraph {
    /// Runs the full pipeline: separations, mode detection, assignment.
    pub fn build(
        table: &ScoreTable,
        distances: &DistanceMatrix,
        samples: Option<&SampleSet>,
        options: &DpcOptions,
    ) -> Result<Self, DpcError> {
        let delta_set = compute_deltas(table, distances)?;
        let modes = detect_modes(&delta_set.points, &options.policy)?;
        let assignment = assign_clusters(&delta_set.points, &modes, distances, options)?;
        let k_clusters = cluster_counts(samples, delta_set.points.len())?;
        Ok(Self {
            points: delta_set.points,
            modes,
            assignments: assignment.assignments.into_iter().map(Some).collect(),
            weights: assignment.weights,
            outlier_flags: assignment.outlier_flags,
            k_clusters,
            degenerate: delta_set.degenerate,
        })
    }

    /// Wraps separations without running detection or assignment.
    pub fn unassigned(
        delta_set: DeltaSet,
        samples: Option<&SampleSet>,
    ) -> Result<Self, DpcError> {
        let n = delta_set.points.len();
        let k_clusters = cluster_counts(samples, n)?;
        Ok(Self {
            points: delta_set.points,
            modes: Vec::new(),
            assignments: vec![None; n],
            weights: Vec::new(),
            outlier_flags: vec![false; n],
            k_clusters,
            degenerate: delta_set.degenerate,
        })
    }

    /// One exportable record per sample.
    pub fn to_records(&self) -> Vec<DecisionGraphRecord> {
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| DecisionGraphRecord {
                index: p.index,
                score: p.score,
                delta: p.delta,
                k_clusters: self.k_clusters[i],
                is_mode: self.modes.contains(&p.index),
                assignment: self.assignments[i],
                is_outlier: self.outlier_flags[i],
            })
            .collect()
    }
}

/// Flat per-sample record for plotting and re-analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionGraphRecord {
    pub index: usize,
    pub score: f64,
    pub delta: f64,
    pub k_clusters: Option<usize>,
    pub is_mode: bool,
    pub assignment: Option<usize>,
    pub is_outlier: bool,
}

/// Fixed decision-graph CSV header.
pub const DECISION_GRAPH_HEADER: &str = "index,score,delta,k_clusters,is_mode,assignment,is_outlier";

/// Formats a float with 17 significant digits, enough to round-trip exactly.
pub(crate) fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Renders records as CSV with the fixed header.
pub fn records_to_csv(records: &[DecisionGraphRecord]) -> String {
    let mut out = String::from(DECISION_GRAPH_HEADER);
    out.push('\n');
    for r in records {
        let k = r.k_clusters.map(|k| k.to_string()).unwrap_or_default();
        let a = r.assignment.map(|a| a.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.index,
            format_f64(r.score),
            format_f64(r.delta),
            k,
            r.is_mode,
            a,
            r.is_outlier
        ));
    }
    out
}

/// Parses decision-graph CSV produced by [`records_to_csv`].
pub fn records_from_csv(text: &str) -> Result<Vec<DecisionGraphRecord>, DpcError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == DECISION_GRAPH_HEADER => {}
        _ => {
            return Err(DpcError::ParseError {
                line: 1,
                reason: format!("expected header '{DECISION_GRAPH_HEADER}'"),
            })
        }
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(DpcError::ParseError {
                line: line_no,
                reason: format!("expected 7 fields, got {}", fields.len()),
            });
        }
        let parse_err = |what: &str| DpcError::ParseError {
            line: line_no,
            reason: format!("invalid {what}"),
        };
        records.push(DecisionGraphRecord {
            index: fields[0].parse().map_err(|_| parse_err("index"))?,
            score: fields[1].parse().map_err(|_| parse_err("score"))?,
            delta: fields[2].parse().map_err(|_| parse_err("delta"))?,
            k_clusters: if fields[3].is_empty() {
                None
            } else {
                Some(fields[3].parse().map_err(|_| parse_err("k_clusters"))?)
            },
            is_mode: fields[4].parse().map_err(|_| parse_err("is_mode"))?,
            assignment: if fields[5].is_empty() {
                None
            } else {
                Some(fields[5].parse().map_err(|_| parse_err("assignment"))?)
            },
            is_outlier: fields[6].parse().map_err(|_| parse_err("is_outlier"))?,
        });
    }
    Ok(records)
}

/// Renders records as JSON lines.
pub fn records_to_jsonl(records: &[DecisionGraphRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Parses JSON-lines decision-graph records.
pub fn records_from_jsonl(text: &str) -> Result<Vec<DecisionGraphRecord>, DpcError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| DpcError::ParseError {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn table_from(scores: Vec<f64>) -> ScoreTable {
        ScoreTable::from_scores(scores, 0.5, None, None).unwrap()
    }

    fn matrix(rows: &[Vec<f64>]) -> DistanceMatrix {
        DistanceMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn deltas_for_two_samples() {
        let table = table_from(vec![0.9, 0.5]);
        let distances = matrix(&[vec![0.0, 1.3], vec![1.3, 0.0]]);
        let set = compute_deltas(&table, &distances).unwrap();
        assert!(!set.degenerate);
        assert_eq!(set.points[0].delta, 1.3);
        assert_eq!(set.points[0].nearest_higher, None);
        assert_eq!(set.points[1].delta, 1.3);
        assert_eq!(set.points[1].nearest_higher, Some(0));
    }

    #[test]
    fn equal_scores_fall_back_to_index_order() {
        let table = table_from(vec![0.5, 0.5, 0.5]);
        let d = 0.8;
        let distances = matrix(&[
            vec![0.0, d, d],
            vec![d, 0.0, d],
            vec![d, d, 0.0],
        ]);
        let set = compute_deltas(&table, &distances).unwrap();
        // Lowest index gets the max-distance default; the others treat
        // lower-index ties as higher.
        assert_eq!(set.points[0].delta, d);
        assert_eq!(set.points[0].nearest_higher, None);
        assert_eq!(set.points[1].delta, d);
        assert_eq!(set.points[1].nearest_higher, Some(0));
        assert_eq!(set.points[2].delta, d);
        assert!(matches!(set.points[2].nearest_higher, Some(0)));
    }

    #[test]
    fn single_sample_is_degenerate() {
        let table = table_from(vec![0.4]);
        let distances = matrix(&[vec![0.0]]);
        let set = compute_deltas(&table, &distances).unwrap();
        assert!(set.degenerate);
        assert_eq!(set.points[0].delta, 0.0);
        assert_eq!(set.points[0].nearest_higher, None);
    }

    #[test]
    fn deltas_match_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(89);
        for _ in 0..30 {
            let n = rng.random_range(2..=15);
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0f64)).collect();
            let mut rows = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = rng.random_range(0.01..3.0);
                    rows[i][j] = d;
                    rows[j][i] = d;
                }
            }
            let table = table_from(scores.clone());
            let distances = matrix(&rows);
            let set = compute_deltas(&table, &distances).unwrap();
            for i in 0..n {
                // Brute force with the documented tie rule.
                let mut best: Option<(f64, usize)> = None;
                for j in 0..n {
                    if j == i || !outranks(&scores, j, i) {
                        continue;
                    }
                    if best.is_none() || rows[i][j] < best.unwrap().0 {
                        best = Some((rows[i][j], j));
                    }
                }
                match best {
                    Some((d, _)) => {
                        assert_eq!(set.points[i].delta, d);
                        let nh = set.points[i].nearest_higher.unwrap();
                        assert_eq!(rows[i][nh], d);
                        assert!(outranks(&scores, nh, i));
                    }
                    None => {
                        let max = rows[i].iter().cloned().fold(0.0, f64::max);
                        assert_eq!(set.points[i].delta, max);
                        assert_eq!(set.points[i].nearest_higher, None);
                    }
                }
            }
            // Exactly one sample has no higher-ranked neighbor.
            let tops = set.points.iter().filter(|p| p.nearest_higher.is_none()).count();
            assert_eq!(tops, 1);
        }
    }

    #[test]
    fn auto_gap_finds_a_planted_two_mode_landscape() {
        // Two points with both coordinates high, the rest low on both.
        let mut scores = vec![0.95, 0.75];
        let mut deltas = vec![2.0, 1.8];
        let mut rng = ChaCha8Rng::seed_from_u64(97);
        for _ in 0..48 {
            scores.push(rng.random_range(0.3..0.6));
            deltas.push(rng.random_range(0.05..0.3));
        }
        let points: Vec<GraphPoint> = scores
            .iter()
            .zip(&deltas)
            .enumerate()
            .map(|(i, (&s, &d))| GraphPoint {
                index: i,
                score: s,
                delta: d,
                nearest_higher: if i == 0 { None } else { Some(0) },
            })
            .collect();
        let modes = detect_modes(&points, &ModePolicy::AutoGap).unwrap();
        assert_eq!(modes, vec![0, 1]);
    }

    #[test]
    fn top_one_is_the_global_score_argmax() {
        let points = vec![
            GraphPoint { index: 0, score: 0.4, delta: 0.5, nearest_higher: Some(2) },
            GraphPoint { index: 1, score: 0.6, delta: 0.2, nearest_higher: Some(2) },
            GraphPoint { index: 2, score: 0.9, delta: 1.5, nearest_higher: None },
        ];
        let modes = detect_modes(&points, &ModePolicy::TopM(1)).unwrap();
        assert_eq!(modes, vec![2]);
    }

    #[test]
    fn identical_points_yield_one_mode() {
        let points: Vec<GraphPoint> = (0..9)
            .map(|i| GraphPoint {
                index: i,
                score: 0.5,
                delta: 0.7,
                nearest_higher: if i == 0 { None } else { Some(0) },
            })
            .collect();
        let modes = detect_modes(&points, &ModePolicy::AutoGap).unwrap();
        assert_eq!(modes, vec![0]);
    }

    #[test]
    fn mode_count_is_validated() {
        let points = vec![GraphPoint { index: 0, score: 0.5, delta: 0.1, nearest_higher: None }];
        assert_eq!(
            detect_modes(&points, &ModePolicy::TopM(2)).unwrap_err(),
            DpcError::InvalidModeCount { requested: 2, available: 1 }
        );
    }

    #[test]
    fn single_mode_takes_all_weight() {
        let table = table_from(vec![0.9, 0.6, 0.5]);
        let distances = matrix(&[
            vec![0.0, 0.3, 0.6],
            vec![0.3, 0.0, 0.4],
            vec![0.6, 0.4, 0.0],
        ]);
        let set = compute_deltas(&table, &distances).unwrap();
        let assignment =
            assign_clusters(&set.points, &[0], &distances, &DpcOptions::default()).unwrap();
        assert_eq!(assignment.assignments, vec![0, 0, 0]);
        assert_eq!(assignment.weights, vec![1.0]);
    }

    #[test]
    fn sample_coinciding_with_a_mode_joins_it() {
        let table = table_from(vec![0.9, 0.7, 0.8]);
        // Sample 1 sits at zero distance from mode 2.
        let distances = matrix(&[
            vec![0.0, 2.0, 2.0],
            vec![2.0, 0.0, 0.0],
            vec![2.0, 0.0, 0.0],
        ]);
        let set = compute_deltas(&table, &distances).unwrap();
        let assignment =
            assign_clusters(&set.points, &[0, 2], &distances, &DpcOptions::default()).unwrap();
        assert_eq!(assignment.assignments[1], 1);
        assert_eq!(assignment.weights, vec![1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn chained_assignment_follows_nearest_higher_links() {
        // Two obvious centers (0 and 3); samples 1, 2 chain to 0 and 4, 5
        // chain to 3.
        let scores = vec![0.95, 0.8, 0.7, 0.9, 0.75, 0.65];
        let mut rows = vec![vec![0.0; 6]; 6];
        let pairs: &[(usize, usize, f64)] = &[
            (0, 1, 0.1), (0, 2, 0.4), (1, 2, 0.1),
            (3, 4, 0.1), (3, 5, 0.4), (4, 5, 0.1),
            (0, 3, 2.0), (0, 4, 2.0), (0, 5, 2.2),
            (1, 3, 2.0), (1, 4, 1.9), (1, 5, 2.1),
            (2, 3, 2.1), (2, 4, 1.8), (2, 5, 2.0),
        ];
        for &(i, j, d) in pairs {
            rows[i][j] = d;
            rows[j][i] = d;
        }
        let table = table_from(scores);
        let distances = matrix(&rows);
        let set = compute_deltas(&table, &distances).unwrap();
        let mut options = DpcOptions::default();
        options.chained = true;
        let chained =
            assign_clusters(&set.points, &[0, 3], &distances, &options).unwrap();
        assert_eq!(chained.assignments, vec![0, 0, 0, 1, 1, 1]);
        options.chained = false;
        let direct = assign_clusters(&set.points, &[0, 3], &distances, &options).unwrap();
        assert_eq!(direct.assignments, vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn outliers_sit_in_the_high_delta_low_score_corner() {
        // Sample 3: large separation, low score.
        let table = table_from(vec![0.9, 0.8, 0.7, 0.2]);
        let distances = matrix(&[
            vec![0.0, 0.1, 0.1, 3.0],
            vec![0.1, 0.0, 0.1, 3.0],
            vec![0.1, 0.1, 0.0, 3.0],
            vec![3.0, 3.0, 3.0, 0.0],
        ]);
        let set = compute_deltas(&table, &distances).unwrap();
        // The score argmax carries the max-distance default separation, which
        // ties with the far sample's; a 0.5 delta quantile separates both
        // from the tight cluster, and the score cut then keeps only the far
        // low-score sample.
        let mut options = DpcOptions::default();
        options.outlier_delta_q = 0.5;
        let assignment = assign_clusters(&set.points, &[0], &distances, &options).unwrap();
        assert_eq!(assignment.outlier_flags, vec![false, false, false, true]);
    }

    #[test]
    fn record_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let records: Vec<DecisionGraphRecord> = (0..25)
            .map(|i| DecisionGraphRecord {
                index: i,
                score: rng.random_range(0.0..1.0),
                delta: rng.random_range(0.0..3.0),
                k_clusters: if i % 3 == 0 { None } else { Some(i % 5 + 1) },
                is_mode: i == 0,
                assignment: if i % 4 == 0 { None } else { Some(i % 2) },
                is_outlier: i % 7 == 0,
            })
            .collect();
        let csv = records_to_csv(&records);
        let parsed = records_from_csv(&csv).unwrap();
        assert_eq!(records, parsed);
        for (a, b) in records.iter().zip(&parsed) {
            assert_eq!(a.score.to_bits(), b.score.to_bits());
            assert_eq!(a.delta.to_bits(), b.delta.to_bits());
        }
        let jsonl = records_to_jsonl(&records);
        let parsed = records_from_jsonl(&jsonl).unwrap();
        assert_eq!(records, parsed);
    }

    #[test]
    fn unassigned_graph_exports_empty_assignments() {
        let table = table_from(vec![0.9, 0.5]);
        let distances = matrix(&[vec![0.0, 1.3], vec![1.3, 0.0]]);
        let set = compute_deltas(&table, &distances).unwrap();
        let graph = DecisionGraph::unassigned(set, None).unwrap();
        let records = graph.to_records();
        assert!(records.iter().all(|r| r.assignment.is_none()));
        assert!(records.iter().all(|r| !r.is_mode));
    }

    #[test]
    fn golden_csv_for_a_three_sample_graph() {
        let table = table_from(vec![0.9, 0.5, 0.7]);
        let distances = matrix(&[
            vec![0.0, 1.0, 0.5],
            vec![1.0, 0.0, 0.25],
            vec![0.5, 0.25, 0.0],
        ]);
        let graph =
            DecisionGraph::build(&table, &distances, None, &DpcOptions::default()).unwrap();
        let csv = records_to_csv(&graph.to_records());
        let expected = "index,score,delta,k_clusters,is_mode,assignment,is_outlier\n\
                        0,9.0000000000000002e-1,1.0000000000000000e0,,true,0,false\n\
                        1,5.0000000000000000e-1,2.5000000000000000e-1,,false,0,false\n\
                        2,6.9999999999999996e-1,5.0000000000000000e-1,,false,0,false\n";
        assert_eq!(csv, expected);
    }

    #[test]
    fn invariant_nearest_higher_outranks_and_distance_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let n = 40;
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0f64)).collect();
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = rng.random_range(0.01..2.0);
                rows[i][j] = d;
                rows[j][i] = d;
            }
        }
        let table = table_from(scores.clone());
        let distances = matrix(&rows);
        let set = compute_deltas(&table, &distances).unwrap();
        let argmax = set.points.iter().find(|p| p.nearest_higher.is_none()).unwrap();
        let max_from_argmax = (0..n)
            .filter(|&j| j != argmax.index)
            .map(|j| rows[argmax.index][j])
            .fold(0.0, f64::max);
        assert_eq!(argmax.delta, max_from_argmax);
        for p in &set.points {
            if let Some(nh) = p.nearest_higher {
                assert!(outranks(&scores, nh, p.index));
                assert_eq!(p.delta, rows[p.index][nh]);
            }
        }
    }

    #[test]
    fn detection_is_invariant_under_sample_permutation() {
        // Permuting calibration order relabels indices but must keep the
        // same set of detected mode parameters (tracked here by score).
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        let n = 30;
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0f64)).collect();
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = rng.random_range(0.01..2.0);
                rows[i][j] = d;
                rows[j][i] = d;
            }
        }
        let perm: Vec<usize> = {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut rng);
            p
        };
        let scores_p: Vec<f64> = perm.iter().map(|&i| scores[i]).collect();
        let mut rows_p = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in 0..n {
                rows_p[a][b] = rows[perm[a]][perm[b]];
            }
        }
        let modes = detect_modes(
            &compute_deltas(&table_from(scores.clone()), &matrix(&rows)).unwrap().points,
            &ModePolicy::AutoGap,
        )
        .unwrap();
        let modes_p = detect_modes(
            &compute_deltas(&table_from(scores_p.clone()), &matrix(&rows_p)).unwrap().points,
            &ModePolicy::AutoGap,
        )
        .unwrap();
        let mut found: Vec<f64> = modes.iter().map(|&m| scores[m]).collect();
        let mut found_p: Vec<f64> = modes_p.iter().map(|&m| scores_p[m]).collect();
        found.sort_by(|a, b| a.partial_cmp(b).unwrap());
        found_p.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(found, found_p);
    }
}
