//! χ² feature selection against class labels, plus stratified sampling.
//!
//! The statistic operates on raw nonnegative counts: for feature f, the
//! observed mass `O_c` is the sum of f's values over rows of class c, the
//! expected mass is the feature total scaled by the class row fraction, and
//! the score is `Σ_c (O_c - E_c)^2 / E_c` (0 when the feature is absent
//! everywhere). Low scores mean the feature is close to class-independent.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::ClassLabel;
use crate::error::{Error, Result};
use crate::features::{SparseDataset, SparseVector};
use crate::rng::SplitMix64;

/// Fitted selector: per-feature scores, the winning original indices and the
/// remap to compact 1-based indices.
#[derive(Debug, Clone)]
pub struct Chi2Model {
    /// (original index, score) for every feature present in the fit data,
    /// sorted by original index.
    pub scores: Vec<(u32, f64)>,
    /// Selected original indices, ascending.
    pub selected: Vec<u32>,
    /// Original index -> compact index in `[1, selected.len()]`, assigned in
    /// ascending original-index order.
    pub remap: HashMap<u32, u32>,
}

/// Per-feature χ² scores against the class labels. Unlabeled rows do not
/// contribute (the transductive pipeline carries labeled and unlabeled rows
/// in one dataset and the selector can only be fit on the labeled part);
/// at least two distinct classes must be present among the labeled rows.
pub fn chi2_scores(ds: &SparseDataset) -> Result<Vec<(u32, f64)>> {
    let mut classes: Vec<ClassLabel> = Vec::new();
    let mut class_rows: HashMap<ClassLabel, usize> = HashMap::new();
    let mut n_labeled = 0usize;
    for (i, row) in ds.rows.iter().enumerate() {
        if row.values.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput(format!("row {i} has a negative value")));
        }
        let Some(label) = row.label else {
            continue;
        };
        if !class_rows.contains_key(&label) {
            classes.push(label);
        }
        *class_rows.entry(label).or_insert(0) += 1;
        n_labeled += 1;
    }
    if classes.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "chi2 needs >= 2 distinct classes among labeled rows, got {}",
            classes.len()
        )));
    }
    classes.sort_unstable();
    let class_slot: HashMap<ClassLabel, usize> =
        classes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let n_rows = n_labeled as f64;
    let class_fraction: Vec<f64> = classes
        .iter()
        .map(|c| class_rows[c] as f64 / n_rows)
        .collect();

    // Observed per-class mass for every present feature. Accumulation is
    // sequential in row order so scores are bit-identical run to run.
    let n_classes = classes.len();
    let mut observed: HashMap<u32, Vec<f64>> = HashMap::new();
    for row in &ds.rows {
        let Some(label) = row.label else { continue };
        let slot = class_slot[&label];
        for (&idx, &v) in row.indices.iter().zip(row.values.iter()) {
            observed.entry(idx).or_insert_with(|| vec![0.0; n_classes])[slot] += v;
        }
    }

    let mut scores: Vec<(u32, f64)> = observed
        .into_iter()
        .map(|(idx, obs)| {
            let total: f64 = obs.iter().sum();
            if total == 0.0 {
                return (idx, 0.0);
            }
            let score = obs
                .iter()
                .zip(class_fraction.iter())
                .map(|(&o, &frac)| {
                    let expected = total * frac;
                    let d = o - expected;
                    d * d / expected
                })
                .sum();
            (idx, score)
        })
        .collect();
    scores.sort_unstable_by_key(|&(idx, _)| idx);
    Ok(scores)
}

/// Picks the k highest-scoring features; ties break toward the lower
/// original index. Fewer than k scored features selects them all.
pub fn select_top_k(scores: &[(u32, f64)], k: usize) -> Chi2Model {
    assert!(k >= 1, "k must be >= 1");
    let mut ranked: Vec<(u32, f64)> = scores.to_vec();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked.truncate(k);
    let mut selected: Vec<u32> = ranked.into_iter().map(|(idx, _)| idx).collect();
    selected.sort_unstable();
    let remap: HashMap<u32, u32> = selected
        .iter()
        .enumerate()
        .map(|(pos, &idx)| (idx, pos as u32 + 1))
        .collect();
    Chi2Model {
        scores: scores.to_vec(),
        selected,
        remap,
    }
}

/// Convenience: fit scores and selection in one step.
pub fn fit_chi2(ds: &SparseDataset, k: usize) -> Result<Chi2Model> {
    Ok(select_top_k(&chi2_scores(ds)?, k))
}

impl Chi2Model {
    /// Drops unselected indices and remaps survivors to `[1, k]`. Row order
    /// and labels are preserved; rows may become empty.
    pub fn transform(&self, ds: &SparseDataset) -> SparseDataset {
        let rows = ds
            .rows
            .iter()
            .map(|row| {
                let mut pairs: Vec<(u32, f64)> = row
                    .indices
                    .iter()
                    .zip(row.values.iter())
                    .filter_map(|(&idx, &v)| self.remap.get(&idx).map(|&compact| (compact, v)))
                    .collect();
                pairs.sort_unstable_by_key(|&(idx, _)| idx);
                let (indices, values): (Vec<u32>, Vec<f64>) = pairs.into_iter().unzip();
                SparseVector {
                    indices,
                    values,
                    label: row.label,
                }
            })
            .collect();
        SparseDataset {
            rows,
            dimensionality: self.selected.len(),
        }
    }

    /// Persists the model as text: `scores:` lines of `orig_index score`,
    /// then a `selected:` section listing the winners in compact order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::from("chi2\nscores:\n");
        for &(idx, score) in &self.scores {
            let _ = writeln!(out, "{idx} {score}");
        }
        out.push_str("selected:\n");
        for &idx in &self.selected {
            let _ = writeln!(out, "{idx}");
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let display = path.display().to_string();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "chi2")) => {}
            _ => return Err(Error::parse(&display, 1, "expected chi2 header")),
        }
        match lines.next() {
            Some((_, "scores:")) => {}
            _ => return Err(Error::parse(&display, 2, "expected scores: section")),
        }
        let mut scores = Vec::new();
        let mut selected = Vec::new();
        let mut in_selected = false;
        for (line_idx, line) in lines {
            let line_no = line_idx + 1;
            if line == "selected:" {
                in_selected = true;
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if in_selected {
                let idx: u32 = line.trim().parse().map_err(|_| {
                    Error::parse(&display, line_no, format!("bad selected index {line:?}"))
                })?;
                selected.push(idx);
            } else {
                let mut parts = line.split_whitespace();
                let (Some(idx), Some(score)) = (parts.next(), parts.next()) else {
                    return Err(Error::parse(&display, line_no, "expected index score"));
                };
                let idx: u32 = idx
                    .parse()
                    .map_err(|_| Error::parse(&display, line_no, "bad index"))?;
                let score: f64 = score
                    .parse()
                    .map_err(|_| Error::parse(&display, line_no, "bad score"))?;
                scores.push((idx, score));
            }
        }
        let remap = selected
            .iter()
            .enumerate()
            .map(|(pos, &idx)| (idx, pos as u32 + 1))
            .collect();
        Ok(Chi2Model {
            scores,
            selected,
            remap,
        })
    }
}

/// Outcome of stratified sampling; classes whose share rounded to zero are
/// reported so callers can surface a warning.
#[derive(Debug)]
pub struct StratifiedSample {
    pub dataset: SparseDataset,
    pub omitted_classes: Vec<ClassLabel>,
}

/// Per class, keeps `round(fraction * class size)` rows chosen uniformly
/// without replacement under `seed`; surviving rows stay in original order.
pub fn stratified_sample(ds: &SparseDataset, fraction: f64, seed: u64) -> Result<StratifiedSample> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "fraction must be in (0, 1], got {fraction}"
        )));
    }
    let mut by_class: HashMap<Option<ClassLabel>, Vec<usize>> = HashMap::new();
    for (i, row) in ds.rows.iter().enumerate() {
        by_class.entry(row.label).or_default().push(i);
    }
    let mut class_keys: Vec<Option<ClassLabel>> = by_class.keys().copied().collect();
    class_keys.sort_unstable();

    let mut keep = vec![false; ds.n_rows()];
    let mut omitted = Vec::new();
    for key in class_keys {
        let rows = &by_class[&key];
        let take = (fraction * rows.len() as f64).round() as usize;
        if take == 0 {
            if let Some(class) = key {
                omitted.push(class);
            }
            continue;
        }
        let mut shuffled = rows.clone();
        let stream = key.map_or(0, |c| c as u64 + 1);
        SplitMix64::substream(seed, stream).shuffle(&mut shuffled);
        for &row in shuffled.iter().take(take) {
            keep[row] = true;
        }
    }

    let rows: Vec<SparseVector> = ds
        .rows
        .iter()
        .enumerate()
        .filter(|(i, _)| keep[*i])
        .map(|(_, row)| row.clone())
        .collect();
    Ok(StratifiedSample {
        dataset: SparseDataset {
            rows,
            dimensionality: ds.dimensionality,
        },
        omitted_classes: omitted,
    })
}
