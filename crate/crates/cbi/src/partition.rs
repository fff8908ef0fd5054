//! Set partitions as canonical label vectors and the variation-of-information
//! metric between them.
//!
//! A partition of `n` items is stored as a label vector in canonical form:
//! labels are renumbered by first appearance, so `labels[0] == 0` and label
//! `m > 0` first appears only after `m - 1` has appeared. Canonical form makes
//! equality, hashing and deduplication label-invariant.

use std::collections::HashMap;

/// Errors raised by partition construction and comparison.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PartitionError {
    /// The input label sequence was empty.
    #[error("partition label sequence is empty")]
    EmptyPartition,
    /// Two partitions cover a different number of items.
    #[error("partition size mismatch: {left} vs {right} items")]
    DimensionMismatch { left: usize, right: usize },
}

/// A set partition of `n` items, held as a canonical label vector.
///
/// Immutable after construction; all operations on partitions are pure.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<u32>,
    n_clusters: usize,
}

impl Partition {
    /// Canonicalizes a raw label sequence into a `Partition`.
    ///
    /// Preserves the induced equivalence relation (`i ~ j` iff
    /// `labels[i] == labels[j]`) while renumbering labels by first appearance.
    pub fn canonicalize(raw: &[i64]) -> Result<Self, PartitionError> {
        if raw.is_empty() {
            return Err(PartitionError::EmptyPartition);
        }
        let mut remap: HashMap<i64, u32> = HashMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        for &value in raw {
            let next = remap.len() as u32;
            let label = *remap.entry(value).or_insert(next);
            labels.push(label);
        }
        Ok(Self {
            labels,
            n_clusters: remap.len(),
        })
    }

    /// Number of items `n`.
    pub fn n_items(&self) -> usize {
        self.labels.len()
    }

    /// Number of clusters `K = 1 + max(labels)`.
    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    /// Canonical label vector.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }
}

/// Cross-tabulation of two partitions over the same items.
///
/// `counts[j][k]` is the number of items placed in cluster `j` of the first
/// partition and cluster `k` of the second. Row and column sums are the
/// cluster sizes of the respective partitions, so every sum is strictly
/// positive and the grand total equals `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    n: u64,
}

impl ContingencyTable {
    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn n(&self) -> u64 {
        self.n
    }
}

/// Builds the contingency table of two partitions.
///
/// Canonical labels index the dense `K x K'` table directly, so construction
/// is a single O(n) pass.
pub fn contingency(a: &Partition, b: &Partition) -> Result<ContingencyTable, PartitionError> {
    if a.n_items() != b.n_items() {
        return Err(PartitionError::DimensionMismatch {
            left: a.n_items(),
            right: b.n_items(),
        });
    }
    let k_a = a.n_clusters();
    let k_b = b.n_clusters();
    let mut counts = vec![vec![0u64; k_b]; k_a];
    let mut row_sums = vec![0u64; k_a];
    let mut col_sums = vec![0u64; k_b];
    for (&la, &lb) in a.labels().iter().zip(b.labels()) {
        counts[la as usize][lb as usize] += 1;
        row_sums[la as usize] += 1;
        col_sums[lb as usize] += 1;
    }
    Ok(ContingencyTable {
        counts,
        row_sums,
        col_sums,
        n: a.n_items() as u64,
    })
}

/// Variation-of-information distance between two partitions, in bits.
///
/// Computed as `H(a) + H(b) - 2 I(a, b)` from the contingency table, with
/// base-2 logarithms and the `0 log 0 := 0` convention for empty cells.
/// The result is zero exactly when the canonical forms are equal. Arguments
/// are ordered canonically before accumulation, so symmetry is bit-exact.
pub fn vi_distance(a: &Partition, b: &Partition) -> Result<f64, PartitionError> {
    if a.n_items() != b.n_items() {
        return Err(PartitionError::DimensionMismatch {
            left: a.n_items(),
            right: b.n_items(),
        });
    }
    if a == b {
        return Ok(0.0);
    }
    let (a, b) = if a.labels() <= b.labels() { (a, b) } else { (b, a) };
    let table = contingency(a, b)?;
    let n = table.n as f64;
    let mut entropy_a = 0.0;
    for &r in &table.row_sums {
        let p = r as f64 / n;
        entropy_a -= p * p.log2();
    }
    let mut entropy_b = 0.0;
    for &c in &table.col_sums {
        let p = c as f64 / n;
        entropy_b -= p * p.log2();
    }
    let mut mutual = 0.0;
    for (j, row) in table.counts.iter().enumerate() {
        for (k, &cell) in row.iter().enumerate() {
            if cell > 0 {
                let joint = cell as f64 / n;
                let ratio = (n * cell as f64) / (table.row_sums[j] as f64 * table.col_sums[k] as f64);
                mutual += joint * ratio.log2();
            }
        }
    }
    Ok((entropy_a + entropy_b - 2.0 * mutual).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn part(raw: &[i64]) -> Partition {
        Partition::canonicalize(raw).unwrap()
    }

    /// Independent oracle: VI from explicit block sets rather than the
    /// contingency table. `H(a) + H(b) - 2 I(a, b)` with intersections
    /// counted item-by-item.
    fn vi_block_oracle(a: &Partition, b: &Partition) -> f64 {
        use std::collections::HashSet;
        let n = a.n_items() as f64;
        let blocks = |p: &Partition| -> Vec<HashSet<usize>> {
            let mut out: Vec<HashSet<usize>> = vec![HashSet::new(); p.n_clusters()];
            for (item, &label) in p.labels().iter().enumerate() {
                out[label as usize].insert(item);
            }
            out
        };
        let blocks_a = blocks(a);
        let blocks_b = blocks(b);
        let entropy = |bs: &[HashSet<usize>]| -> f64 {
            bs.iter()
                .map(|block| {
                    let p = block.len() as f64 / n;
                    -p * p.log2()
                })
                .sum()
        };
        let mut mutual = 0.0;
        for block_a in &blocks_a {
            for block_b in &blocks_b {
                let inter = block_a.intersection(block_b).count();
                if inter > 0 {
                    let p = inter as f64 / n;
                    mutual += p
                        * ((n * inter as f64)
                            / (block_a.len() as f64 * block_b.len() as f64))
                            .log2();
                }
            }
        }
        entropy(&blocks_a) + entropy(&blocks_b) - 2.0 * mutual
    }

    fn random_partition(rng: &mut ChaCha8Rng, n: usize) -> Partition {
        let k = rng.random_range(1..=n);
        let raw: Vec<i64> = (0..n).map(|_| rng.random_range(0..k as i64)).collect();
        part(&raw)
    }

    #[test]
    fn canonicalize_renumbers_by_first_appearance() {
        assert_eq!(part(&[5, 5, 2, 5, 2]).labels(), &[0, 0, 1, 0, 1]);
        assert_eq!(part(&[0, 1, 2]).labels(), &[0, 1, 2]);
        assert_eq!(part(&[7]).labels(), &[0]);
    }

    #[test]
    fn canonicalize_rejects_empty_input() {
        assert_eq!(
            Partition::canonicalize(&[]),
            Err(PartitionError::EmptyPartition)
        );
    }

    #[test]
    fn canonical_partitions_expose_cluster_count() {
        let p = part(&[3, 3, 1, 0, 1]);
        assert_eq!(p.n_items(), 5);
        assert_eq!(p.n_clusters(), 3);
    }

    #[test]
    fn contingency_counts_items_per_cluster_pair() {
        let t = contingency(&part(&[0, 0, 1, 1]), &part(&[0, 1, 0, 1])).unwrap();
        assert_eq!(t.counts(), &[vec![1, 1], vec![1, 1]]);
        assert_eq!(t.row_sums(), &[2, 2]);
        assert_eq!(t.col_sums(), &[2, 2]);
        assert_eq!(t.n(), 4);

        let t = contingency(&part(&[0, 0, 0]), &part(&[0, 0, 0])).unwrap();
        assert_eq!(t.counts(), &[vec![3]]);

        let t = contingency(&part(&[0, 1]), &part(&[0, 0])).unwrap();
        assert_eq!(t.counts(), &[vec![1], vec![1]]);
    }

    #[test]
    fn contingency_rejects_size_mismatch() {
        let err = contingency(&part(&[0, 1]), &part(&[0, 1, 2])).unwrap_err();
        assert_eq!(err, PartitionError::DimensionMismatch { left: 2, right: 3 });
    }

    #[test]
    fn vi_distance_hand_checked_pair() {
        // H(a) = 1 bit, H(b) = 0, mutual information 0.
        let d = vi_distance(&part(&[0, 1]), &part(&[0, 0])).unwrap();
        assert_eq!(d, 1.0);
    }

    #[test]
    fn vi_distance_is_zero_on_equal_partitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(1..=12);
            let p = random_partition(&mut rng, n);
            assert_eq!(vi_distance(&p, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn vi_distance_matches_block_entropy_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..500 {
            let n = rng.random_range(1..=8);
            let a = random_partition(&mut rng, n);
            let b = random_partition(&mut rng, n);
            let d = vi_distance(&a, &b).unwrap();
            let oracle = vi_block_oracle(&a, &b);
            assert!(
                (d - oracle).abs() <= 1e-12,
                "vi {} vs oracle {} on {:?} / {:?}",
                d,
                oracle,
                a.labels(),
                b.labels()
            );
        }
    }

    #[test]
    fn vi_distance_metric_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..1000 {
            let n = rng.random_range(1..=10);
            let a = random_partition(&mut rng, n);
            let b = random_partition(&mut rng, n);
            let c = random_partition(&mut rng, n);
            let dab = vi_distance(&a, &b).unwrap();
            let dba = vi_distance(&b, &a).unwrap();
            let dac = vi_distance(&a, &c).unwrap();
            let dbc = vi_distance(&b, &c).unwrap();
            assert_eq!(dab, dba, "symmetry must be exact");
            assert!(dac <= dab + dbc + 1e-9, "triangle inequality violated");
            assert!(dab <= (n as f64).log2() + 1e-12, "log2(n) bound violated");
            if a == b {
                assert_eq!(dab, 0.0);
            } else {
                assert!(dab > 0.0, "distinct partitions must have positive VI");
            }
        }
    }

    proptest! {
        #[test]
        fn canonicalize_is_idempotent(raw in proptest::collection::vec(-20i64..20, 1..40)) {
            let once = Partition::canonicalize(&raw).unwrap();
            let again = Partition::canonicalize(
                &once.labels().iter().map(|&l| l as i64).collect::<Vec<_>>(),
            )
            .unwrap();
            prop_assert_eq!(&once, &again);
        }

        #[test]
        fn vi_is_invariant_under_relabeling(
            raw in proptest::collection::vec(0i64..6, 2..24),
            other in proptest::collection::vec(0i64..6, 2..24),
            shift in 1i64..100,
        ) {
            let n = raw.len().min(other.len());
            let a = Partition::canonicalize(&raw[..n]).unwrap();
            let b = Partition::canonicalize(&other[..n]).unwrap();
            // An injective map of label values preserves the partition.
            let relabeled: Vec<i64> = raw[..n].iter().map(|&l| shift * 101 - l * 7).collect();
            let a2 = Partition::canonicalize(&relabeled).unwrap();
            prop_assert_eq!(&a, &a2);
            prop_assert_eq!(
                vi_distance(&a, &b).unwrap().to_bits(),
                vi_distance(&a2, &b).unwrap().to_bits()
            );
        }
    }
}
