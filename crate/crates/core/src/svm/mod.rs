//! Soft-margin RBF SVM: SMO solver, one-vs-one multiclass voting and Platt
//! calibration with pairwise coupling for probabilistic output.

mod platt;
mod smo;

pub use platt::{pairwise_coupling, sigmoid_predict, sigmoid_train};
pub use smo::SmoSolution;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::ClassLabel;
use crate::dense::{sq_dist, DenseMatrix};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Kernel width: fixed value or `1 / n_features` resolved at fit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Auto,
    Value(f64),
}

impl Gamma {
    pub fn resolve(&self, n_features: usize) -> f64 {
        match *self {
            Gamma::Auto => 1.0 / n_features as f64,
            Gamma::Value(v) => v,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SvmConfig {
    pub c: f64,
    pub gamma: Gamma,
    pub kkt_tolerance: f64,
    pub max_passes: usize,
    pub seed: u64,
    /// Full Gram caching threshold; larger pair problems recompute rows.
    pub cache_limit: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            gamma: Gamma::Auto,
            kkt_tolerance: 1e-3,
            max_passes: 10,
            seed: 42,
            cache_limit: 8000,
        }
    }
}

impl SvmConfig {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::InvalidInput(format!("C must be positive, got {}", self.c)));
        }
        if let Gamma::Value(v) = self.gamma {
            if !(v > 0.0) {
                return Err(Error::InvalidInput(format!("gamma must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// `exp(-gamma * ||x - z||^2)`.
pub fn rbf_kernel(x: &[f64], z: &[f64], gamma: f64) -> f64 {
    (-gamma * sq_dist(x, z)).exp()
}

/// A trained binary machine: support vectors with dual coefficients
/// `alpha_i y_i` and the bias.
#[derive(Debug, Clone)]
pub struct BinarySvm {
    pub support_vectors: Vec<Vec<f64>>,
    pub coeffs: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
}

impl BinarySvm {
    /// `sum_i alpha_i y_i K(s_i, x) + b`.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if let Some(sv) = self.support_vectors.first() {
            if sv.len() != x.len() {
                return Err(Error::InvalidInput(format!(
                    "decision input has {} features, model expects {}",
                    x.len(),
                    sv.len()
                )));
            }
        }
        let mut sum = self.bias;
        for (sv, &coef) in self.support_vectors.iter().zip(self.coeffs.iter()) {
            sum += coef * rbf_kernel(sv, x, self.gamma);
        }
        Ok(sum)
    }
}

/// Trains one binary machine on rows with labels in {-1, +1}.
pub fn smo_train(rows: &[&[f64]], y: &[f64], config: &SvmConfig) -> Result<(BinarySvm, SmoSolution)> {
    config.validate()?;
    if rows.len() != y.len() {
        return Err(Error::InvalidInput("rows/labels length mismatch".into()));
    }
    let n_features = rows.first().map_or(0, |r| r.len());
    let gamma = config.gamma.resolve(n_features.max(1));
    let kernel = smo::KernelSource::build(rows, gamma, config.cache_limit);
    let solution = smo::solve(&kernel, y, config.c, config.kkt_tolerance, config.max_passes)?;
    let mut support_vectors = Vec::new();
    let mut coeffs = Vec::new();
    for (i, &alpha) in solution.alphas.iter().enumerate() {
        if alpha > 0.0 {
            support_vectors.push(rows[i].to_vec());
            coeffs.push(alpha * y[i]);
        }
    }
    Ok((
        BinarySvm {
            support_vectors,
            coeffs,
            bias: solution.bias,
            gamma,
        },
        solution,
    ))
}

/// One pair machine of the one-vs-one ensemble; `class_pos` is the +1 class.
#[derive(Debug, Clone)]
pub struct PairMachine {
    pub class_pos: ClassLabel,
    pub class_neg: ClassLabel,
    pub svm: BinarySvm,
    pub platt_a: f64,
    pub platt_b: f64,
    /// True when the sigmoid was fit on training decisions rather than
    /// out-of-fold decisions (small pair subsets).
    pub platt_biased: bool,
}

/// One-vs-one ensemble with per-pair Platt parameters.
#[derive(Debug, Clone)]
pub struct SvmModel {
    pub classes: Vec<ClassLabel>,
    pub machines: Vec<PairMachine>,
    pub gamma: f64,
}

/// Minimum pair subset size (and per-class count) for out-of-fold
/// calibration; below this the sigmoid is fit on training decisions.
const CALIBRATION_MIN_SAMPLES: usize = 30;
const CALIBRATION_FOLDS: usize = 3;

fn out_of_fold_decisions(
    rows: &[&[f64]],
    y: &[f64],
    config: &SvmConfig,
    pair_id: u64,
) -> Result<Vec<f64>> {
    let n = rows.len();
    // Stratified fold assignment under the pair's substream.
    let mut fold_of = vec![0usize; n];
    for side in [1.0f64, -1.0] {
        let mut idx: Vec<usize> = (0..n).filter(|&i| y[i] == side).collect();
        let stream = pair_id * 2 + if side > 0.0 { 0 } else { 1 };
        SplitMix64::substream(config.seed, stream).shuffle(&mut idx);
        for (pos, &i) in idx.iter().enumerate() {
            fold_of[i] = pos % CALIBRATION_FOLDS;
        }
    }
    let mut decisions = vec![0.0f64; n];
    for fold in 0..CALIBRATION_FOLDS {
        let train_idx: Vec<usize> = (0..n).filter(|&i| fold_of[i] != fold).collect();
        let test_idx: Vec<usize> = (0..n).filter(|&i| fold_of[i] == fold).collect();
        if test_idx.is_empty() {
            continue;
        }
        let train_rows: Vec<&[f64]> = train_idx.iter().map(|&i| rows[i]).collect();
        let train_y: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
        let (machine, _) = smo_train(&train_rows, &train_y, config)?;
        for &i in &test_idx {
            decisions[i] = machine.decision(rows[i])?;
        }
    }
    Ok(decisions)
}

/// Trains `m(m-1)/2` binary machines on class-pair subsets. Pair machines
/// train independently (in parallel); results are assembled in pair order.
pub fn ovo_train(x: &DenseMatrix, y: &[ClassLabel], config: &SvmConfig) -> Result<SvmModel> {
    config.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::InvalidInput("rows/labels length mismatch".into()));
    }
    let mut classes: Vec<ClassLabel> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "one-vs-one needs >= 2 classes, got {}",
            classes.len()
        )));
    }
    let gamma = config.gamma.resolve(x.n_cols().max(1));
    let resolved = SvmConfig {
        gamma: Gamma::Value(gamma),
        ..config.clone()
    };

    let mut pairs = Vec::new();
    for a in 0..classes.len() {
        for b in (a + 1)..classes.len() {
            pairs.push((classes[a], classes[b]));
        }
    }

    let machines: Vec<Result<PairMachine>> = pairs
        .par_iter()
        .enumerate()
        .map(|(pair_id, &(class_pos, class_neg))| {
            let idx: Vec<usize> = (0..y.len())
                .filter(|&i| y[i] == class_pos || y[i] == class_neg)
                .collect();
            let rows: Vec<&[f64]> = idx.iter().map(|&i| x.row(i)).collect();
            let y_bin: Vec<f64> = idx
                .iter()
                .map(|&i| if y[i] == class_pos { 1.0 } else { -1.0 })
                .collect();
            let n_pos = y_bin.iter().filter(|&&v| v > 0.0).count();
            let n_neg = y_bin.len() - n_pos;
            if n_pos == 0 || n_neg == 0 {
                let missing = if n_pos == 0 { class_pos } else { class_neg };
                return Err(Error::InvalidInput(format!(
                    "class {missing} has no samples in pair ({class_pos}, {class_neg})"
                )));
            }

            let (svm, _) = smo_train(&rows, &y_bin, &resolved)?;

            let use_oof = y_bin.len() >= CALIBRATION_MIN_SAMPLES
                && n_pos >= CALIBRATION_FOLDS
                && n_neg >= CALIBRATION_FOLDS;
            let (decisions, biased) = if use_oof {
                (
                    out_of_fold_decisions(&rows, &y_bin, &resolved, pair_id as u64)?,
                    false,
                )
            } else {
                let mut d = Vec::with_capacity(rows.len());
                for row in &rows {
                    d.push(svm.decision(row)?);
                }
                (d, true)
            };
            if decisions.iter().any(|d| !d.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite decision value in pair ({class_pos}, {class_neg})"
                )));
            }
            let (platt_a, platt_b) = sigmoid_train(&decisions, &y_bin);
            Ok(PairMachine {
                class_pos,
                class_neg,
                svm,
                platt_a,
                platt_b,
                platt_biased: biased,
            })
        })
        .collect();

    let machines = machines.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SvmModel {
        classes,
        machines,
        gamma,
    })
}

impl SvmModel {
    /// Majority vote over pair machines; ties break by the summed decision
    /// magnitude in favor of each class, then by the lower class id.
    pub fn predict(&self, x: &[f64]) -> Result<ClassLabel> {
        let mut votes: HashMap<ClassLabel, usize> = HashMap::new();
        let mut strength: HashMap<ClassLabel, f64> = HashMap::new();
        for machine in &self.machines {
            let d = machine.svm.decision(x)?;
            let winner = if d >= 0.0 {
                machine.class_pos
            } else {
                machine.class_neg
            };
            *votes.entry(winner).or_insert(0) += 1;
            *strength.entry(machine.class_pos).or_insert(0.0) += d;
            *strength.entry(machine.class_neg).or_insert(0.0) -= d;
        }
        let mut best: Option<(usize, f64, ClassLabel)> = None;
        for &class in &self.classes {
            let v = votes.get(&class).copied().unwrap_or(0);
            let s = strength.get(&class).copied().unwrap_or(0.0);
            let candidate = (v, s, class);
            best = Some(match best {
                None => candidate,
                Some(current) => {
                    let (cv, cs, cc) = current;
                    if v > cv || (v == cv && (s > cs || (s == cs && class < cc))) {
                        candidate
                    } else {
                        current
                    }
                }
            });
        }
        Ok(best.expect("nonempty class list").2)
    }

    /// Calibrated class probabilities in `classes` order (sums to one).
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        let k = self.classes.len();
        if k == 2 {
            // Single machine: the coupled solution is the sigmoid itself.
            let machine = &self.machines[0];
            let d = machine.svm.decision(x)?;
            let p_pos = sigmoid_predict(d, machine.platt_a, machine.platt_b);
            return Ok(vec![p_pos, 1.0 - p_pos]);
        }
        let slot: HashMap<ClassLabel, usize> = self
            .classes
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i))
            .collect();
        let mut r = vec![vec![0.0; k]; k];
        for machine in &self.machines {
            let d = machine.svm.decision(x)?;
            let p = sigmoid_predict(d, machine.platt_a, machine.platt_b)
                .clamp(1e-7, 1.0 - 1e-7);
            let a = slot[&machine.class_pos];
            let b = slot[&machine.class_neg];
            r[a][b] = p;
            r[b][a] = 1.0 - p;
        }
        Ok(pairwise_coupling(&r))
    }

    /// Text persistence: a config block followed by per-pair support-vector
    /// blocks with Platt parameters.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::from("svm\n");
        let _ = write!(out, "classes");
        for c in &self.classes {
            let _ = write!(out, " {c}");
        }
        out.push('\n');
        let _ = writeln!(out, "gamma {}", self.gamma);
        let _ = writeln!(out, "pairs {}", self.machines.len());
        for m in &self.machines {
            let _ = writeln!(out, "pair {} {}", m.class_pos, m.class_neg);
            let _ = writeln!(
                out,
                "n_sv {} bias {} platt_a {} platt_b {} biased {}",
                m.svm.support_vectors.len(),
                m.svm.bias,
                m.platt_a,
                m.platt_b,
                if m.platt_biased { 1 } else { 0 }
            );
            for (sv, coef) in m.svm.support_vectors.iter().zip(m.svm.coeffs.iter()) {
                let _ = write!(out, "sv {coef}");
                for v in sv {
                    let _ = write!(out, " {v}");
                }
                out.push('\n');
            }
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let display = path.display().to_string();
        let bad = |line: usize, msg: &str| Error::parse(&display, line, msg);

        let mut lines = text.lines().enumerate().peekable();
        match lines.next() {
            Some((_, "svm")) => {}
            _ => return Err(bad(1, "expected svm header")),
        }
        let classes: Vec<ClassLabel> = match lines.next() {
            Some((no, line)) if line.starts_with("classes") => line
                .split_whitespace()
                .skip(1)
                .map(|t| t.parse().map_err(|_| bad(no + 1, "bad class id")))
                .collect::<Result<_>>()?,
            _ => return Err(bad(2, "expected classes line")),
        };
        let gamma: f64 = match lines.next() {
            Some((no, line)) if line.starts_with("gamma ") => line[6..]
                .trim()
                .parse()
                .map_err(|_| bad(no + 1, "bad gamma"))?,
            _ => return Err(bad(3, "expected gamma line")),
        };
        let n_pairs: usize = match lines.next() {
            Some((no, line)) if line.starts_with("pairs ") => line[6..]
                .trim()
                .parse()
                .map_err(|_| bad(no + 1, "bad pair count"))?,
            _ => return Err(bad(4, "expected pairs line")),
        };

        let mut machines = Vec::with_capacity(n_pairs);
        for _ in 0..n_pairs {
            let (no, line) = lines.next().ok_or_else(|| bad(0, "truncated pair block"))?;
            let mut t = line.split_whitespace();
            if t.next() != Some("pair") {
                return Err(bad(no + 1, "expected pair line"));
            }
            let class_pos: ClassLabel = t
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(no + 1, "bad pair classes"))?;
            let class_neg: ClassLabel = t
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(no + 1, "bad pair classes"))?;

            let (no, line) = lines.next().ok_or_else(|| bad(0, "truncated pair block"))?;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 10 || tokens[0] != "n_sv" {
                return Err(bad(no + 1, "expected n_sv line"));
            }
            let n_sv: usize = tokens[1].parse().map_err(|_| bad(no + 1, "bad n_sv"))?;
            let bias: f64 = tokens[3].parse().map_err(|_| bad(no + 1, "bad bias"))?;
            let platt_a: f64 = tokens[5].parse().map_err(|_| bad(no + 1, "bad platt_a"))?;
            let platt_b: f64 = tokens[7].parse().map_err(|_| bad(no + 1, "bad platt_b"))?;
            let platt_biased = tokens[9] == "1";

            let mut support_vectors = Vec::with_capacity(n_sv);
            let mut coeffs = Vec::with_capacity(n_sv);
            for _ in 0..n_sv {
                let (no, line) = lines.next().ok_or_else(|| bad(0, "truncated sv block"))?;
                let mut t = line.split_whitespace();
                if t.next() != Some("sv") {
                    return Err(bad(no + 1, "expected sv line"));
                }
                let coef: f64 = t
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| bad(no + 1, "bad sv coefficient"))?;
                let vector: Vec<f64> = t
                    .map(|v| v.parse().map_err(|_| bad(no + 1, "bad sv value")))
                    .collect::<Result<_>>()?;
                coeffs.push(coef);
                support_vectors.push(vector);
            }
            machines.push(PairMachine {
                class_pos,
                class_neg,
                svm: BinarySvm {
                    support_vectors,
                    coeffs,
                    bias,
                    gamma,
                },
                platt_a,
                platt_b,
                platt_biased,
            });
        }
        Ok(SvmModel {
            classes,
            machines,
            gamma,
        })
    }
}
