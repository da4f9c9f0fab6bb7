//! Hashed byte n-gram features.
//!
//! Grams are contiguous n-byte windows inside a segment (windows never cross
//! the gaps left by unknown bytes). Each gram is hashed into a 22-bit index
//! space; collisions merge counts (the hashing trick). A corpus-wide count
//! table supports pruning of rare grams before the per-sample vectors are
//! emitted.

mod svmlight;

pub use svmlight::{read_svmlight, write_svmlight};

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::corpus::{parse_hexdump_file, ByteStream, ClassLabel, CorpusManifest};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Size of the hashed feature space: indices live in `[1, 2^22]`.
pub const HASH_SPACE: u32 = 1 << 22;

/// Sparse feature vector with strictly increasing 1-based indices and
/// strictly positive values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
    pub label: Option<ClassLabel>,
}

impl SparseVector {
    pub fn new(indices: Vec<u32>, values: Vec<f64>, label: Option<ClassLabel>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::InvalidInput(
                "index/value length mismatch in sparse vector".into(),
            ));
        }
        for window in indices.windows(2) {
            if window[0] >= window[1] {
                return Err(Error::InvalidInput(format!(
                    "sparse indices must be strictly increasing ({} then {})",
                    window[0], window[1]
                )));
            }
        }
        if indices.first().is_some_and(|&i| i == 0) {
            return Err(Error::InvalidInput("sparse indices are 1-based".into()));
        }
        if values.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidInput(
                "sparse values must be positive (explicit zeros forbidden)".into(),
            ));
        }
        Ok(SparseVector {
            indices,
            values,
            label,
        })
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn value_sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Rows plus the dimensionality of the index space they live in.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDataset {
    pub rows: Vec<SparseVector>,
    pub dimensionality: usize,
}

impl SparseDataset {
    pub fn new(rows: Vec<SparseVector>, dimensionality: usize) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if let Some(&max) = row.indices.last() {
                if max as usize > dimensionality {
                    return Err(Error::InvalidInput(format!(
                        "row {i} has index {max} beyond dimensionality {dimensionality}"
                    )));
                }
            }
        }
        Ok(SparseDataset {
            rows,
            dimensionality,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn labels(&self) -> Vec<Option<ClassLabel>> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// Densifies into an `n_rows x dimensionality` matrix. Intended for the
    /// post-selection stage where the dimensionality is around 1000.
    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows.len(), self.dimensionality);
        for (i, row) in self.rows.iter().enumerate() {
            let out = m.row_mut(i);
            for (&idx, &v) in row.indices.iter().zip(row.values.iter()) {
                out[idx as usize - 1] = v;
            }
        }
        m
    }
}

/// Corpus-wide occurrence counts per hashed index.
#[derive(Debug, Clone, Default)]
pub struct GramCountTable {
    counts: HashMap<u32, u64>,
}

impl GramCountTable {
    pub fn add(&mut self, index: u32, count: u64) {
        if count > 0 {
            *self.counts.entry(index).or_insert(0) += count;
        }
    }

    pub fn merge(&mut self, other: GramCountTable) {
        for (index, count) in other.counts {
            *self.counts.entry(index).or_insert(0) += count;
        }
    }

    pub fn count(&self, index: u32) -> u64 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Extracts every contiguous n-byte window within each segment with its
/// occurrence count. Segments shorter than `n` contribute nothing.
pub fn extract_ngrams(bs: &ByteStream, n: usize) -> HashMap<Vec<u8>, u64> {
    assert!((1..=8).contains(&n), "n must be in 1..=8");
    let mut grams: HashMap<Vec<u8>, u64> = HashMap::new();
    for segment in &bs.segments {
        if segment.len() < n {
            continue;
        }
        for window in segment.windows(n) {
            *grams.entry(window.to_vec()).or_insert(0) += 1;
        }
    }
    grams
}

/// Hashes a gram into `[1, 2^22]`: FNV-1a over the bytes, 64-bit state,
/// masked to the low 22 bits, plus one (SVMLight indices are 1-based).
pub fn hash_gram(gram: &[u8]) -> u32 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = FNV_OFFSET;
    for &b in gram {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    ((h & (HASH_SPACE as u64 - 1)) as u32) + 1
}

/// Retains exactly the indices whose corpus-wide count is >= k.
pub fn prune_rare(table: &GramCountTable, k: u64) -> HashSet<u32> {
    assert!(k >= 1, "k must be >= 1");
    table
        .counts
        .iter()
        .filter(|&(_, &count)| count >= k)
        .map(|(&index, _)| index)
        .collect()
}

fn hashed_counts(bs: &ByteStream, sizes: &[usize]) -> HashMap<u32, u64> {
    let mut counts: HashMap<u32, u64> = HashMap::new();
    for segment in &bs.segments {
        for &n in sizes {
            if segment.len() < n {
                continue;
            }
            for window in segment.windows(n) {
                *counts.entry(hash_gram(window)).or_insert(0) += 1;
            }
        }
    }
    counts
}

fn parse_entry(entry: &crate::corpus::ManifestEntry) -> Result<ByteStream> {
    parse_hexdump_file(&entry.path, &entry.sample_id)
}

/// Two-pass corpus vectorization: pass 1 accumulates the corpus-wide count
/// table, pass 2 emits per-sample hashed count vectors restricted to indices
/// with total count >= k. Row order follows the manifest.
pub fn vectorize_corpus(manifest: &CorpusManifest, n: usize, k: u64) -> Result<SparseDataset> {
    vectorize_corpus_sizes(manifest, &[n], k)
}

/// Like [`vectorize_corpus`] but pooling several gram sizes into the shared
/// hashed feature space (e.g. the 1..5-gram union).
pub fn vectorize_corpus_sizes(
    manifest: &CorpusManifest,
    sizes: &[usize],
    k: u64,
) -> Result<SparseDataset> {
    if sizes.is_empty() {
        return Err(Error::InvalidInput("no n-gram sizes given".into()));
    }
    for &n in sizes {
        if !(1..=8).contains(&n) {
            return Err(Error::InvalidInput(format!("n must be in 1..=8, got {n}")));
        }
    }

    // Pass 1: per-file tables merged into one (integer counts, so the merge
    // order cannot affect the result).
    let tables: Vec<Result<GramCountTable>> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let bs = parse_entry(entry)?;
            let mut table = GramCountTable::default();
            for (index, count) in hashed_counts(&bs, sizes) {
                table.add(index, count);
            }
            Ok(table)
        })
        .collect();
    let mut total = GramCountTable::default();
    for table in tables {
        total.merge(table?);
    }
    let retained = prune_rare(&total, k);

    // Pass 2: emit rows in manifest order.
    let rows: Vec<Result<SparseVector>> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let bs = parse_entry(entry)?;
            let counts = hashed_counts(&bs, sizes);
            let mut pairs: Vec<(u32, f64)> = counts
                .into_iter()
                .filter(|(index, _)| retained.contains(index))
                .map(|(index, count)| (index, count as f64))
                .collect();
            pairs.sort_unstable_by_key(|&(index, _)| index);
            let (indices, values): (Vec<u32>, Vec<f64>) = pairs.into_iter().unzip();
            SparseVector::new(indices, values, entry.label)
        })
        .collect();

    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    SparseDataset::new(rows, HASH_SPACE as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(segments: Vec<Vec<u8>>) -> ByteStream {
        ByteStream {
            sample_id: "t".into(),
            segments,
        }
    }

    #[test]
    fn sliding_window_counts() {
        let grams = extract_ngrams(&stream(vec![vec![1, 2, 3, 4]]), 3);
        assert_eq!(grams.len(), 2);
        assert_eq!(grams[&vec![1, 2, 3]], 1);
        assert_eq!(grams[&vec![2, 3, 4]], 1);
    }

    #[test]
    fn windows_never_cross_gaps() {
        let grams = extract_ngrams(&stream(vec![vec![0xAA, 0xBB], vec![0xCC, 0xDD]]), 2);
        assert_eq!(grams.len(), 2);
        assert_eq!(grams[&vec![0xAA, 0xBB]], 1);
        assert_eq!(grams[&vec![0xCC, 0xDD]], 1);
        assert!(!grams.contains_key(&vec![0xBB, 0xCC]));
    }

    #[test]
    fn overlapping_repeats_counted() {
        let grams = extract_ngrams(&stream(vec![vec![0; 5]]), 3);
        assert_eq!(grams.len(), 1);
        assert_eq!(grams[&vec![0, 0, 0]], 3);
    }

    #[test]
    fn short_segments_contribute_nothing() {
        let grams = extract_ngrams(&stream(vec![vec![1, 2]]), 3);
        assert!(grams.is_empty());
    }

    // Reference values computed with an independent FNV-1a implementation.
    #[test]
    fn hash_reference_values() {
        assert_eq!(hash_gram(&[0x56, 0x8B, 0xEC]), 1_943_967);
        assert_eq!(hash_gram(&[0x01, 0x02, 0x03]), 2_946_476);
        assert_eq!(hash_gram(&[0x02, 0x03, 0x04]), 2_234_115);
        assert_eq!(hash_gram(&[0xDE, 0xAD, 0xBE, 0xEF]), 1_902_996);
    }

    #[test]
    fn hash_stays_in_22_bit_space() {
        let mut rng = crate::rng::SplitMix64::new(5);
        for _ in 0..10_000 {
            let len = 1 + rng.next_below(8) as usize;
            let gram: Vec<u8> = (0..len).map(|_| rng.next_byte()).collect();
            let h = hash_gram(&gram);
            assert!((1..=HASH_SPACE).contains(&h));
            assert_eq!(h, hash_gram(&gram), "hash must be deterministic");
        }
    }

    // Bucket-coverage sanity (not a uniformity proof): at 1e7 draws a
    // perfectly uniform hash covers 1 - exp(-1e7 / 2^22) ~ 90.8% of the
    // 2^22 buckets, so reaching 90% rules out clustering pathologies.
    #[test]
    fn hash_spreads_over_the_bucket_space() {
        let mut rng = crate::rng::SplitMix64::new(77);
        let mut seen = vec![false; HASH_SPACE as usize];
        let mut gram = [0u8; 4];
        for _ in 0..10_000_000u32 {
            for b in gram.iter_mut() {
                *b = rng.next_byte();
            }
            seen[(hash_gram(&gram) - 1) as usize] = true;
        }
        let covered = seen.iter().filter(|&&s| s).count();
        let fraction = covered as f64 / HASH_SPACE as f64;
        assert!(fraction > 0.90, "bucket coverage {fraction:.4}");
    }

    #[test]
    fn prune_boundaries() {
        let mut table = GramCountTable::default();
        table.add(10, 2);
        table.add(20, 3);
        table.add(30, 7);
        let retained = prune_rare(&table, 3);
        assert!(!retained.contains(&10), "count 2 < k=3 removed");
        assert!(retained.contains(&20), "count 3 >= k=3 retained");
        assert!(retained.contains(&30));
        let all = prune_rare(&table, 1);
        assert_eq!(all.len(), 3, "k=1 retains all present indices");
    }

    #[test]
    fn prune_is_monotone_in_k() {
        let mut table = GramCountTable::default();
        let mut rng = crate::rng::SplitMix64::new(9);
        for i in 0..200u32 {
            table.add(i + 1, 1 + rng.next_below(10));
        }
        for k in 1..10u64 {
            let a = prune_rare(&table, k);
            let b = prune_rare(&table, k + 1);
            assert!(b.is_subset(&a), "retained(k+1) must be within retained(k)");
        }
    }

    #[test]
    fn row_value_sum_equals_window_count() {
        // With k=1 every window lands somewhere; collisions merge counts but
        // the total is preserved.
        let mut rng = crate::rng::SplitMix64::new(13);
        for _ in 0..20 {
            let n = 1 + rng.next_below(5) as usize;
            let seg_count = 1 + rng.next_below(3) as usize;
            let segments: Vec<Vec<u8>> = (0..seg_count)
                .map(|_| {
                    let len = rng.next_below(30) as usize;
                    (0..len).map(|_| rng.next_byte()).collect()
                })
                .collect();
            let expected: usize = segments
                .iter()
                .map(|s| s.len().saturating_sub(n - 1).min(s.len()))
                .map(|w| if w > 0 { w } else { 0 })
                .sum();
            let bs = stream(segments);
            let total: u64 = hashed_counts(&bs, &[n]).values().sum();
            assert_eq!(total as usize, expected);
        }
    }

    #[test]
    fn vectorize_single_sample() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.bytes");
        std::fs::write(&path, "00400000 01 02 03 04\n").unwrap();
        let manifest = CorpusManifest {
            entries: vec![crate::corpus::ManifestEntry {
                sample_id: "a".into(),
                path,
                label: Some(1),
            }],
        };
        let ds = vectorize_corpus(&manifest, 3, 1).unwrap();
        assert_eq!(ds.n_rows(), 1);
        assert_eq!(ds.dimensionality, HASH_SPACE as usize);
        // Two distinct grams; they happen not to collide in 22 bits.
        assert_eq!(ds.rows[0].nnz(), 2);
        assert_eq!(ds.rows[0].value_sum(), 2.0);

        let pruned = vectorize_corpus(&manifest, 3, 2).unwrap();
        assert_eq!(pruned.rows[0].nnz(), 0, "k=2 drops both single grams");
    }

    #[test]
    fn union_of_sizes_pools_counts_into_one_space() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.bytes");
        std::fs::write(&path, "00400000 01 02 03\n").unwrap();
        let manifest = CorpusManifest {
            entries: vec![crate::corpus::ManifestEntry {
                sample_id: "a".into(),
                path,
                label: Some(1),
            }],
        };
        let ds = vectorize_corpus_sizes(&manifest, &[1, 2, 3], 1).unwrap();
        // 3 unigrams + 2 bigrams + 1 trigram = 6 windows in total.
        assert_eq!(ds.rows[0].value_sum(), 6.0);
        assert!(vectorize_corpus_sizes(&manifest, &[], 1).is_err());
        assert!(vectorize_corpus_sizes(&manifest, &[9], 1).is_err());
    }

    #[test]
    fn vectorize_propagates_parse_errors_with_sample_id() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bytes");
        std::fs::write(&path, "00400000 ZZ\n").unwrap();
        let manifest = CorpusManifest {
            entries: vec![crate::corpus::ManifestEntry {
                sample_id: "bad".into(),
                path,
                label: Some(1),
            }],
        };
        let err = vectorize_corpus(&manifest, 3, 1).unwrap_err();
        assert!(err.to_string().contains("bad"), "{err}");
    }

    #[test]
    fn sparse_vector_invariants_enforced() {
        assert!(SparseVector::new(vec![5, 5], vec![1.0, 1.0], None).is_err());
        assert!(SparseVector::new(vec![7, 5], vec![1.0, 1.0], None).is_err());
        assert!(SparseVector::new(vec![0], vec![1.0], None).is_err());
        assert!(SparseVector::new(vec![5], vec![0.0], None).is_err());
        assert!(SparseVector::new(vec![5], vec![1.0], Some(3)).is_ok());
    }
}
