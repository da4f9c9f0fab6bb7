//! t-SNE embedding to two dimensions.
//!
//! Input affinities are Gaussian conditionals calibrated per point to a
//! target perplexity by binary search, symmetrized to `p_ij = (p_{j|i} +
//! p_{i|j}) / 2N`. Output similarities use the Student-t kernel
//! `w = 1/(1 + d^2)`. The optimizer is gradient descent on the KL divergence
//! with momentum (0.5 then 0.8), per-coordinate adaptive gains and an early
//! exaggeration phase. The gradient has an exact O(N^2) engine and a
//! Barnes-Hut quadtree engine selected by `theta` (0 means exact).

mod quadtree;

pub use quadtree::QuadTree;

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::ClassLabel;
use crate::dense::{sq_dist, DenseMatrix};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// The artifact embeds in two dimensions only.
pub const OUT_DIMS: usize = 2;

/// Numerical floors: Student-t denominators and KL probabilities.
const Q_FLOOR: f64 = 1e-12;
const P_FLOOR: f64 = 1e-12;

/// Binary-search tolerance on the entropy in bits. Tighter than the 1e-5
/// contract so that 2^H lands within 1e-4 of the target for perplexities in
/// the usual 5..50 range.
const ENTROPY_TOL_BITS: f64 = 1e-7;
const PERPLEXITY_MAX_STEPS: usize = 50;

#[derive(Debug, Clone)]
pub struct TsneConfig {
    /// Seed of the random initialization in the embedded space.
    pub random_state: u64,
    /// Number of optimization iterations.
    pub n_iter: usize,
    /// Smooth measure of the effective number of neighbors (sane range 5-50).
    pub perplexity: f64,
    /// Input affinity multiplier during the early phase.
    pub early_exaggeration: f64,
    /// Gradient step size (sane range 10-1000).
    pub learning_rate: f64,
    /// Barnes-Hut accuracy in [0, 1]; 0 selects the exact engine.
    pub theta: f64,
    /// Iterations of the exaggeration phase.
    pub exaggeration_iters: usize,
    /// Momentum before and after `momentum_switch_iter`.
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub momentum_switch_iter: usize,
    /// Standard deviation of the Gaussian initialization.
    pub init_stddev: f64,
    /// Lower bound for the adaptive per-coordinate gains.
    pub min_gain: f64,
    /// KL divergence is recorded every this many iterations.
    pub kl_record_every: usize,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            random_state: 42,
            n_iter: 1000,
            perplexity: 40.0,
            early_exaggeration: 12.0,
            learning_rate: 200.0,
            theta: 0.5,
            exaggeration_iters: 250,
            momentum_initial: 0.5,
            momentum_final: 0.8,
            momentum_switch_iter: 250,
            init_stddev: 1e-2,
            min_gain: 0.01,
            kl_record_every: 50,
        }
    }
}

impl TsneConfig {
    pub fn validate(&self, n_points: usize) -> Result<()> {
        if n_points < 3 {
            return Err(Error::InvalidInput(format!(
                "t-SNE needs at least 3 points, got {n_points}"
            )));
        }
        if !(self.perplexity > 0.0) || self.perplexity >= n_points as f64 {
            return Err(Error::InvalidInput(format!(
                "perplexity {} must be positive and below the number of points {n_points}",
                self.perplexity
            )));
        }
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("early_exaggeration", self.early_exaggeration),
            ("init_stddev", self.init_stddev),
            ("min_gain", self.min_gain),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidInput(format!(
                "theta must be in [0, 1], got {}",
                self.theta
            )));
        }
        Ok(())
    }
}

/// Symmetric joint input affinities plus the per-point precisions found by
/// the perplexity search. Dense for the exact engine, row-sparse (k nearest
/// neighbors) for Barnes-Hut.
#[derive(Debug, Clone)]
pub struct AffinityMatrix {
    pub n: usize,
    /// Precision beta_i = 1 / (2 sigma_i^2) per point.
    pub betas: Vec<f64>,
    storage: Storage,
}

#[derive(Debug, Clone)]
enum Storage {
    Dense(Vec<f64>),
    Sparse {
        row_ptr: Vec<usize>,
        cols: Vec<u32>,
        vals: Vec<f64>,
    },
}

impl AffinityMatrix {
    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse { .. })
    }

    pub fn total_mass(&self) -> f64 {
        match &self.storage {
            Storage::Dense(p) => p.iter().sum(),
            Storage::Sparse { vals, .. } => vals.iter().sum(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(p) => p[i * self.n + j],
            Storage::Sparse { row_ptr, cols, vals } => {
                let range = row_ptr[i]..row_ptr[i + 1];
                match cols[range.clone()].binary_search(&(j as u32)) {
                    Ok(pos) => vals[range.start + pos],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Materializes dense storage (testing and the exact engine).
    pub fn to_dense(&self) -> AffinityMatrix {
        match &self.storage {
            Storage::Dense(_) => self.clone(),
            Storage::Sparse { row_ptr, cols, vals } => {
                let mut p = vec![0.0; self.n * self.n];
                for i in 0..self.n {
                    for k in row_ptr[i]..row_ptr[i + 1] {
                        p[i * self.n + cols[k] as usize] = vals[k];
                    }
                }
                AffinityMatrix {
                    n: self.n,
                    betas: self.betas.clone(),
                    storage: Storage::Dense(p),
                }
            }
        }
    }

    /// Sparse view keeping every nonzero entry (testing helper).
    pub fn to_sparse(&self) -> AffinityMatrix {
        match &self.storage {
            Storage::Sparse { .. } => self.clone(),
            Storage::Dense(p) => {
                let mut row_ptr = vec![0usize; self.n + 1];
                let mut cols = Vec::new();
                let mut vals = Vec::new();
                for i in 0..self.n {
                    for j in 0..self.n {
                        let v = p[i * self.n + j];
                        if v != 0.0 {
                            cols.push(j as u32);
                            vals.push(v);
                        }
                    }
                    row_ptr[i + 1] = cols.len();
                }
                AffinityMatrix {
                    n: self.n,
                    betas: self.betas.clone(),
                    storage: Storage::Sparse { row_ptr, cols, vals },
                }
            }
        }
    }

    /// Iterates stored (col, value) pairs of row i.
    fn row_entries<'a>(&'a self, i: usize) -> Box<dyn Iterator<Item = (usize, f64)> + 'a> {
        match &self.storage {
            Storage::Dense(p) => Box::new(
                p[i * self.n..(i + 1) * self.n]
                    .iter()
                    .enumerate()
                    .filter(|&(_, &v)| v != 0.0)
                    .map(|(j, &v)| (j, v)),
            ),
            Storage::Sparse { row_ptr, cols, vals } => Box::new(
                (row_ptr[i]..row_ptr[i + 1]).map(move |k| (cols[k] as usize, vals[k])),
            ),
        }
    }
}

/// Full matrix of squared Euclidean distances (symmetric, zero diagonal).
pub fn pairwise_sq_dists(x: &DenseMatrix) -> DenseMatrix {
    let n = x.n_rows();
    let mut rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            for j in (i + 1)..n {
                row[j] = sq_dist(x.row(i), x.row(j));
            }
            row
        })
        .collect();
    for i in 0..n {
        for j in (i + 1)..n {
            rows[j][i] = rows[i][j];
        }
    }
    DenseMatrix::from_rows(&rows).expect("square by construction")
}

/// Result of the per-point bandwidth search.
#[derive(Debug, Clone)]
pub struct PerplexityFit {
    /// Precision beta = 1 / (2 sigma^2).
    pub beta: f64,
    /// Conditional probabilities over the supplied neighbors (sums to 1).
    pub row: Vec<f64>,
    /// True when every distance is zero and the row fell back to uniform.
    pub degenerate: bool,
}

/// Binary search on beta so the Shannon entropy H (bits) of the conditional
/// row satisfies |H - log2(target)| within tolerance; bracket doubling, at
/// most 50 steps. Probabilities are computed with min-distance subtraction
/// for stability.
pub fn perplexity_search(dist_row: &[f64], target: f64) -> PerplexityFit {
    let m = dist_row.len();
    assert!(m >= 1, "empty distance row");
    assert!(target > 0.0 && target < m as f64 + 1.0, "target perplexity out of range");

    let min_d = dist_row.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_d = dist_row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max_d <= 0.0 {
        // Every neighbor coincides with the point: any bandwidth is uniform.
        return PerplexityFit {
            beta: 1.0,
            row: vec![1.0 / m as f64; m],
            degenerate: true,
        };
    }

    let target_bits = target.log2();
    let mut beta = 1.0f64;
    let mut beta_min = f64::NEG_INFINITY;
    let mut beta_max = f64::INFINITY;
    let mut row = vec![0.0; m];

    for _ in 0..PERPLEXITY_MAX_STEPS {
        let mut sum = 0.0;
        let mut weighted = 0.0; // sum p'_j * (d_j - min_d)
        for (slot, &d) in row.iter_mut().zip(dist_row.iter()) {
            let shifted = d - min_d;
            let p = (-beta * shifted).exp();
            *slot = p;
            sum += p;
            weighted += p * shifted;
        }
        // H in nats for the shifted kernel equals the true entropy.
        let h_bits = (beta * weighted / sum + sum.ln()) / std::f64::consts::LN_2;
        let diff = h_bits - target_bits;
        if diff.abs() <= ENTROPY_TOL_BITS {
            break;
        }
        if diff > 0.0 {
            beta_min = beta;
            beta = if beta_max.is_finite() {
                (beta + beta_max) / 2.0
            } else {
                beta * 2.0
            };
        } else {
            beta_max = beta;
            beta = if beta_min.is_finite() {
                (beta + beta_min) / 2.0
            } else {
                beta / 2.0
            };
        }
    }

    let sum: f64 = row.iter().sum();
    for p in row.iter_mut() {
        *p /= sum;
    }
    PerplexityFit {
        beta,
        row,
        degenerate: false,
    }
}

fn conditional_row_from_dists(
    dists: &DenseMatrix,
    i: usize,
    perplexity: f64,
) -> (f64, Vec<(usize, f64)>) {
    let n = dists.n_rows();
    let mut neighbor_dists = Vec::with_capacity(n - 1);
    let mut neighbor_idx = Vec::with_capacity(n - 1);
    for j in 0..n {
        if j != i {
            neighbor_idx.push(j);
            neighbor_dists.push(dists.get(i, j));
        }
    }
    let fit = perplexity_search(&neighbor_dists, perplexity);
    let entries = neighbor_idx
        .into_iter()
        .zip(fit.row.iter().copied())
        .collect();
    (fit.beta, entries)
}

fn knn_conditional_row(
    dists: &DenseMatrix,
    i: usize,
    perplexity: f64,
    k: usize,
) -> (f64, Vec<(usize, f64)>) {
    let n = dists.n_rows();
    let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
    order.sort_by(|&a, &b| {
        dists
            .get(i, a)
            .partial_cmp(&dists.get(i, b))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order.sort_unstable();
    let neighbor_dists: Vec<f64> = order.iter().map(|&j| dists.get(i, j)).collect();
    let fit = perplexity_search(&neighbor_dists, perplexity);
    (
        fit.beta,
        order.into_iter().zip(fit.row.iter().copied()).collect(),
    )
}

/// Joint affinities `p_ij = (p_{j|i} + p_{i|j}) / 2N`. The exact mode keeps
/// all pairs; Barnes-Hut mode restricts each conditional row to the
/// `3 * ceil(perplexity)` nearest neighbors before symmetrization.
pub fn joint_affinities(x: &DenseMatrix, config: &TsneConfig) -> Result<AffinityMatrix> {
    let dists = pairwise_sq_dists(x);
    joint_affinities_from_dists(&dists, config)
}

pub fn joint_affinities_from_dists(
    dists: &DenseMatrix,
    config: &TsneConfig,
) -> Result<AffinityMatrix> {
    let n = dists.n_rows();
    config.validate(n)?;
    if config.theta == 0.0 {
        let rows: Vec<(f64, Vec<(usize, f64)>)> = (0..n)
            .into_par_iter()
            .map(|i| conditional_row_from_dists(dists, i, config.perplexity))
            .collect();
        let mut p = vec![0.0; n * n];
        let mut betas = Vec::with_capacity(n);
        for (i, (beta, entries)) in rows.iter().enumerate() {
            betas.push(*beta);
            for &(j, v) in entries {
                p[i * n + j] = v;
            }
        }
        // Symmetrize in place.
        let scale = 1.0 / (2.0 * n as f64);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = (p[i * n + j] + p[j * n + i]) * scale;
                p[i * n + j] = v;
                p[j * n + i] = v;
            }
            p[i * n + i] = 0.0;
        }
        Ok(AffinityMatrix {
            n,
            betas,
            storage: Storage::Dense(p),
        })
    } else {
        let k = ((3.0 * config.perplexity.ceil()) as usize).min(n - 1).max(1);
        let rows: Vec<(f64, Vec<(usize, f64)>)> = (0..n)
            .into_par_iter()
            .map(|i| knn_conditional_row(dists, i, config.perplexity, k))
            .collect();
        let betas = rows.iter().map(|(beta, _)| *beta).collect();
        // Symmetrize the sparse conditionals over the union support.
        let scale = 1.0 / (2.0 * n as f64);
        let mut row_maps: Vec<std::collections::HashMap<u32, f64>> =
            vec![std::collections::HashMap::new(); n];
        for (i, (_, entries)) in rows.iter().enumerate() {
            for &(j, v) in entries {
                *row_maps[i].entry(j as u32).or_insert(0.0) += v * scale;
                *row_maps[j].entry(i as u32).or_insert(0.0) += v * scale;
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for (i, map) in row_maps.into_iter().enumerate() {
            let mut entries: Vec<(u32, f64)> = map.into_iter().collect();
            entries.sort_unstable_by_key(|&(j, _)| j);
            for (j, v) in entries {
                cols.push(j);
                vals.push(v);
            }
            row_ptr[i + 1] = cols.len();
        }
        Ok(AffinityMatrix {
            n,
            betas,
            storage: Storage::Sparse { row_ptr, cols, vals },
        })
    }
}

/// Exact Student-t normalization `Z = sum_{k != l} w_kl` from the embedding.
fn student_t_normalization(y: &[f64], n: usize) -> f64 {
    let partials: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let yi = &y[2 * i..2 * i + 2];
            let mut z = 0.0;
            for j in 0..n {
                if j != i {
                    let dx = yi[0] - y[2 * j];
                    let dy = yi[1] - y[2 * j + 1];
                    z += 1.0 / (1.0 + dx * dx + dy * dy);
                }
            }
            z
        })
        .collect();
    partials.iter().sum()
}

/// KL divergence `sum_{i != j} p_ij ln(p_ij / q_ij)` with the Student-t
/// output kernel and 0 * ln 0 = 0.
pub fn kl_cost(p: &AffinityMatrix, y: &[f64]) -> f64 {
    let n = p.n;
    let z = student_t_normalization(y, n);
    let partials: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cost = 0.0;
            for (j, p_ij) in p.row_entries(i) {
                if p_ij <= 0.0 || j == i {
                    continue;
                }
                let dx = y[2 * i] - y[2 * j];
                let dy = y[2 * i + 1] - y[2 * j + 1];
                let w = 1.0 / (1.0 + dx * dx + dy * dy);
                let q = (w / z).max(Q_FLOOR);
                cost += p_ij * (p_ij.max(P_FLOOR) / q).ln();
            }
            cost
        })
        .collect();
    partials.iter().sum()
}

/// Exact gradient `grad_i = 4 sum_j (p_ij - q_ij) w_ij (y_i - y_j)`.
pub fn gradient_exact(p: &AffinityMatrix, y: &[f64]) -> Vec<f64> {
    gradient_exact_scaled(p, y, 1.0)
}

pub(crate) fn gradient_exact_scaled(p: &AffinityMatrix, y: &[f64], p_scale: f64) -> Vec<f64> {
    let n = p.n;
    let z = student_t_normalization(y, n);
    let grads: Vec<[f64; 2]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let yi = [y[2 * i], y[2 * i + 1]];
            let mut acc = [0.0f64, 0.0f64];
            // Attractive part over stored affinities.
            for (j, p_ij) in p.row_entries(i) {
                if j == i {
                    continue;
                }
                let dx = yi[0] - y[2 * j];
                let dy = yi[1] - y[2 * j + 1];
                let w = 1.0 / (1.0 + dx * dx + dy * dy);
                let f = p_scale * p_ij * w;
                acc[0] += f * dx;
                acc[1] += f * dy;
            }
            // Repulsive part over all pairs.
            for j in 0..n {
                if j == i {
                    continue;
                }
                let dx = yi[0] - y[2 * j];
                let dy = yi[1] - y[2 * j + 1];
                let w = 1.0 / (1.0 + dx * dx + dy * dy);
                let f = (w / z) * w;
                acc[0] -= f * dx;
                acc[1] -= f * dy;
            }
            [4.0 * acc[0], 4.0 * acc[1]]
        })
        .collect();
    let mut out = vec![0.0; 2 * n];
    for (i, g) in grads.iter().enumerate() {
        out[2 * i] = g[0];
        out[2 * i + 1] = g[1];
    }
    out
}

/// Barnes-Hut gradient: attractive term exactly from the stored sparse
/// affinities, repulsive term and normalization from a quadtree traversal.
pub fn gradient_bh(p: &AffinityMatrix, y: &[f64], theta: f64) -> Vec<f64> {
    gradient_bh_scaled(p, y, theta, 1.0)
}

pub(crate) fn gradient_bh_scaled(
    p: &AffinityMatrix,
    y: &[f64],
    theta: f64,
    p_scale: f64,
) -> Vec<f64> {
    let n = p.n;
    let tree = QuadTree::build(y, n);
    let per_point: Vec<([f64; 2], [f64; 2], f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let yi = [y[2 * i], y[2 * i + 1]];
            let mut attr = [0.0f64, 0.0f64];
            for (j, p_ij) in p.row_entries(i) {
                if j == i {
                    continue;
                }
                let dx = yi[0] - y[2 * j];
                let dy = yi[1] - y[2 * j + 1];
                let w = 1.0 / (1.0 + dx * dx + dy * dy);
                let f = p_scale * p_ij * w;
                attr[0] += f * dx;
                attr[1] += f * dy;
            }
            let mut rep = [0.0f64, 0.0f64];
            let mut z = 0.0f64;
            tree.accumulate(yi, theta, &mut rep, &mut z);
            z -= 1.0; // remove the self term
            (attr, rep, z)
        })
        .collect();
    let z_total: f64 = per_point.iter().map(|(_, _, z)| z).sum();
    let z_total = z_total.max(Q_FLOOR);
    let mut out = vec![0.0; 2 * n];
    for (i, (attr, rep, _)) in per_point.iter().enumerate() {
        out[2 * i] = 4.0 * (attr[0] - rep[0] / z_total);
        out[2 * i + 1] = 4.0 * (attr[1] - rep[1] / z_total);
    }
    out
}

/// Optimizer state: coordinates, velocity and adaptive gains.
#[derive(Debug, Clone)]
pub struct TsneState {
    pub y: Vec<f64>,
    pub velocity: Vec<f64>,
    pub gains: Vec<f64>,
    pub iteration: usize,
    pub kl: f64,
}

/// Finished embedding plus the recorded KL trace.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub y: DenseMatrix,
    /// (iteration, KL) recorded every `kl_record_every` iterations.
    pub kl_trace: Vec<(usize, f64)>,
    pub initial_kl: f64,
    pub final_kl: f64,
}

/// Embeds `x` (N x d) into N x 2.
pub fn tsne_embed(x: &DenseMatrix, config: &TsneConfig) -> Result<Embedding> {
    config.validate(x.n_rows())?;
    let p = joint_affinities(x, config)?;
    optimize(&p, config)
}

/// Embeds from a precomputed squared-distance matrix.
pub fn tsne_embed_from_dists(dists: &DenseMatrix, config: &TsneConfig) -> Result<Embedding> {
    if dists.n_rows() != dists.n_cols() {
        return Err(Error::InvalidInput("distance matrix must be square".into()));
    }
    config.validate(dists.n_rows())?;
    let p = joint_affinities_from_dists(dists, config)?;
    optimize(&p, config)
}

fn optimize(p: &AffinityMatrix, config: &TsneConfig) -> Result<Embedding> {
    let n = p.n;
    let mut rng = SplitMix64::new(config.random_state);
    let mut state = TsneState {
        y: (0..2 * n)
            .map(|_| rng.next_gaussian() * config.init_stddev)
            .collect(),
        velocity: vec![0.0; 2 * n],
        gains: vec![1.0; 2 * n],
        iteration: 0,
        kl: 0.0,
    };

    let initial_kl = kl_cost(p, &state.y);
    state.kl = initial_kl;
    let mut kl_trace = vec![(0usize, initial_kl)];

    for iter in 0..config.n_iter {
        let p_scale = if iter < config.exaggeration_iters {
            config.early_exaggeration
        } else {
            1.0
        };
        let momentum = if iter < config.momentum_switch_iter {
            config.momentum_initial
        } else {
            config.momentum_final
        };
        let grad = if config.theta == 0.0 {
            gradient_exact_scaled(p, &state.y, p_scale)
        } else {
            gradient_bh_scaled(p, &state.y, config.theta, p_scale)
        };

        for k in 0..2 * n {
            let g = grad[k];
            let gain = &mut state.gains[k];
            // Reference gain schedule: grow additively while the coordinate
            // keeps moving against the gradient, shrink multiplicatively on
            // sign agreement. (A multiplicative grow factor compounds into
            // runaway step sizes: steady descent keeps velocity and gradient
            // on opposite signs, so the grow branch fires every iteration.)
            if g.signum() != state.velocity[k].signum() {
                *gain += 0.2;
            } else {
                *gain *= 0.8;
            }
            if *gain < config.min_gain {
                *gain = config.min_gain;
            }
            state.velocity[k] =
                momentum * state.velocity[k] - config.learning_rate * *gain * g;
            state.y[k] += state.velocity[k];
        }

        // The gradient sums to zero, so the mean is conserved up to rounding;
        // recenter explicitly every iteration.
        let mut mean = [0.0f64, 0.0f64];
        for i in 0..n {
            mean[0] += state.y[2 * i];
            mean[1] += state.y[2 * i + 1];
        }
        mean[0] /= n as f64;
        mean[1] /= n as f64;
        for i in 0..n {
            state.y[2 * i] -= mean[0];
            state.y[2 * i + 1] -= mean[1];
        }

        if state.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite embedding coordinate at iteration {}",
                iter + 1
            )));
        }

        state.iteration = iter + 1;
        if state.iteration.is_multiple_of(config.kl_record_every) || state.iteration == config.n_iter {
            state.kl = kl_cost(p, &state.y);
            kl_trace.push((state.iteration, state.kl));
        }
    }

    let final_kl = state.kl;
    Ok(Embedding {
        y: DenseMatrix::from_vec(n, OUT_DIMS, state.y)?,
        kl_trace,
        initial_kl,
        final_kl,
    })
}

/// Writes the embedding as CSV `sample_id,x,y,label` (label 0 = unlabeled).
pub fn write_embedding_csv(
    path: &Path,
    ids: &[String],
    labels: &[Option<ClassLabel>],
    y: &DenseMatrix,
) -> Result<()> {
    if ids.len() != y.n_rows() || labels.len() != y.n_rows() {
        return Err(Error::InvalidInput(
            "ids/labels/embedding row count mismatch".into(),
        ));
    }
    let mut out = String::from("sample_id,x,y,label\n");
    for i in 0..y.n_rows() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            ids[i],
            y.get(i, 0),
            y.get(i, 1),
            labels[i].unwrap_or(0)
        );
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub struct EmbeddingCsv {
    pub ids: Vec<String>,
    pub labels: Vec<Option<ClassLabel>>,
    pub y: DenseMatrix,
}

pub fn read_embedding_csv(path: &Path) -> Result<EmbeddingCsv> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let display = path.display().to_string();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "sample_id,x,y,label")) => {}
        _ => return Err(Error::parse(&display, 1, "expected header sample_id,x,y,label")),
    }
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(Error::parse(&display, line_no, "expected 4 columns"));
        }
        ids.push(parts[0].to_string());
        let x: f64 = parts[1]
            .parse()
            .map_err(|_| Error::parse(&display, line_no, "bad x"))?;
        let y: f64 = parts[2]
            .parse()
            .map_err(|_| Error::parse(&display, line_no, "bad y"))?;
        let label: u32 = parts[3]
            .parse()
            .map_err(|_| Error::parse(&display, line_no, "bad label"))?;
        labels.push(if label == 0 { None } else { Some(label) });
        rows.push(vec![x, y]);
    }
    Ok(EmbeddingCsv {
        ids,
        labels,
        y: DenseMatrix::from_rows(&rows)?,
    })
}

/// Writes the KL trace as CSV `iteration,kl`.
pub fn write_kl_trace_csv(path: &Path, trace: &[(usize, f64)]) -> Result<()> {
    let mut out = String::from("iteration,kl\n");
    for &(iter, kl) in trace {
        let _ = writeln!(out, "{iter},{kl}");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
