//! Sequential minimal optimization for the soft-margin dual.
//!
//! Minimizes `1/2 a^T Q a - e^T a` with `Q_ij = y_i y_j K_ij` subject to
//! `0 <= a_i <= C` and `y^T a = 0`. Each step picks the maximal violating
//! pair: the index with the largest `-y G` among those allowed to grow and
//! the index with the smallest `-y G` among those allowed to shrink, then
//! solves the two-variable subproblem analytically. Convergence is declared
//! when the maximal KKT violation drops to `kkt_tolerance`; `max_passes`
//! scales the hard iteration budget (`max_passes * 100 * n` pair updates).

use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

/// Gram values, fully cached for small problems and recomputed per row above
/// the cache limit.
pub(crate) enum KernelSource<'a> {
    Cached { gram: Vec<f64>, n: usize },
    OnDemand { rows: &'a [&'a [f64]], gamma: f64 },
}

impl KernelSource<'_> {
    pub(crate) fn build<'a>(rows: &'a [&'a [f64]], gamma: f64, cache_limit: usize) -> KernelSource<'a> {
        let n = rows.len();
        if n <= cache_limit {
            let mut gram = vec![0.0; n * n];
            for i in 0..n {
                gram[i * n + i] = 1.0;
                for j in (i + 1)..n {
                    let k = super::rbf_kernel(rows[i], rows[j], gamma);
                    gram[i * n + j] = k;
                    gram[j * n + i] = k;
                }
            }
            KernelSource::Cached { gram, n }
        } else {
            KernelSource::OnDemand { rows, gamma }
        }
    }

    #[cfg(test)]
    pub(crate) fn value(&self, i: usize, j: usize) -> f64 {
        match self {
            KernelSource::Cached { gram, n } => gram[i * n + j],
            KernelSource::OnDemand { rows, gamma } => super::rbf_kernel(rows[i], rows[j], *gamma),
        }
    }

    /// Writes row i of the Gram matrix into `buf`.
    fn fill_row(&self, i: usize, buf: &mut [f64]) {
        match self {
            KernelSource::Cached { gram, n } => buf.copy_from_slice(&gram[i * n..(i + 1) * n]),
            KernelSource::OnDemand { rows, gamma } => {
                for (j, slot) in buf.iter_mut().enumerate() {
                    *slot = super::rbf_kernel(rows[i], rows[j], *gamma);
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    /// Dual objective `sum a - 1/2 a^T Q a` at the returned point.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn solve(
    kernel: &KernelSource<'_>,
    y: &[f64],
    c: f64,
    tol: f64,
    max_passes: usize,
) -> Result<SmoSolution> {
    solve_observed(kernel, y, c, tol, max_passes, &mut |_| {})
}

/// `on_update` receives the multipliers after every accepted pair update
/// (used by tests to watch the dual objective).
pub(crate) fn solve_observed(
    kernel: &KernelSource<'_>,
    y: &[f64],
    c: f64,
    tol: f64,
    max_passes: usize,
    on_update: &mut dyn FnMut(&[f64]),
) -> Result<SmoSolution> {
    let n = y.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if !y.iter().any(|&v| v > 0.0) || !y.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput(
            "SMO needs both classes present".into(),
        ));
    }

    let mut alphas = vec![0.0f64; n];
    // G_i = (Q a)_i - 1; all multipliers start at zero.
    let mut grad = vec![-1.0f64; n];
    let mut row_i = vec![0.0f64; n];
    let mut row_j = vec![0.0f64; n];

    let budget = max_passes.max(1) * 100 * n;
    let mut iterations = 0usize;
    let mut converged = false;

    while iterations < budget {
        // Maximal violating pair.
        let mut i_sel: Option<usize> = None;
        let mut m_val = f64::NEG_INFINITY;
        let mut j_sel: Option<usize> = None;
        let mut m_low = f64::INFINITY;
        for t in 0..n {
            let yt = y[t];
            let v = -yt * grad[t];
            let in_up = (yt > 0.0 && alphas[t] < c) || (yt < 0.0 && alphas[t] > 0.0);
            let in_low = (yt > 0.0 && alphas[t] > 0.0) || (yt < 0.0 && alphas[t] < c);
            if in_up && v > m_val {
                m_val = v;
                i_sel = Some(t);
            }
            if in_low && v < m_low {
                m_low = v;
                j_sel = Some(t);
            }
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            converged = true;
            break;
        };
        if m_val - m_low <= tol {
            converged = true;
            break;
        }

        kernel.fill_row(i, &mut row_i);
        kernel.fill_row(j, &mut row_j);
        let k_ii = row_i[i];
        let k_jj = row_j[j];
        let k_ij = row_i[j];

        let old_ai = alphas[i];
        let old_aj = alphas[j];
        if y[i] != y[j] {
            let quad = (k_ii + k_jj + 2.0 * k_ij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alphas[i] - alphas[j];
            alphas[i] += delta;
            alphas[j] += delta;
            if diff > 0.0 {
                if alphas[j] < 0.0 {
                    alphas[j] = 0.0;
                    alphas[i] = diff;
                }
            } else if alphas[i] < 0.0 {
                alphas[i] = 0.0;
                alphas[j] = -diff;
            }
            if diff > 0.0 {
                if alphas[i] > c {
                    alphas[i] = c;
                    alphas[j] = c - diff;
                }
            } else if alphas[j] > c {
                alphas[j] = c;
                alphas[i] = c + diff;
            }
        } else {
            let quad = (k_ii + k_jj - 2.0 * k_ij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alphas[i] + alphas[j];
            alphas[i] -= delta;
            alphas[j] += delta;
            if sum > c {
                if alphas[i] > c {
                    alphas[i] = c;
                    alphas[j] = sum - c;
                }
            } else if alphas[j] < 0.0 {
                alphas[j] = 0.0;
                alphas[i] = sum;
            }
            if sum > c {
                if alphas[j] > c {
                    alphas[j] = c;
                    alphas[i] = sum - c;
                }
            } else if alphas[i] < 0.0 {
                alphas[i] = 0.0;
                alphas[j] = sum;
            }
        }

        let delta_i = alphas[i] - old_ai;
        let delta_j = alphas[j] - old_aj;
        if delta_i == 0.0 && delta_j == 0.0 {
            // Numerically stuck pair; the violation cannot be reduced.
            converged = true;
            break;
        }
        for t in 0..n {
            grad[t] += y[t] * (y[i] * row_i[t] * delta_i + y[j] * row_j[t] * delta_j);
        }
        iterations += 1;
        on_update(&alphas);
    }

    // Bias from free vectors, else the midpoint of the feasible interval.
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut upper = f64::NEG_INFINITY;
    let mut lower = f64::INFINITY;
    for t in 0..n {
        let v = -y[t] * grad[t];
        let in_up = (y[t] > 0.0 && alphas[t] < c) || (y[t] < 0.0 && alphas[t] > 0.0);
        let in_low = (y[t] > 0.0 && alphas[t] > 0.0) || (y[t] < 0.0 && alphas[t] < c);
        if alphas[t] > 0.0 && alphas[t] < c {
            free_sum += v;
            free_count += 1;
        }
        if in_up {
            upper = upper.max(v);
        }
        if in_low {
            lower = lower.min(v);
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        (upper + lower) / 2.0
    };

    let objective = 0.5
        * (alphas.iter().sum::<f64>()
            - alphas
                .iter()
                .zip(grad.iter())
                .map(|(&a, &g)| a * g)
                .sum::<f64>());

    Ok(SmoSolution {
        alphas,
        bias,
        objective,
        iterations,
        converged,
    })
}

/// Dual objective `sum a - 1/2 sum_ij a_i a_j y_i y_j K_ij` computed from
/// scratch (testing helper).
#[cfg(test)]
pub(crate) fn dual_objective(kernel: &KernelSource<'_>, y: &[f64], alphas: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if alphas[j] == 0.0 {
                continue;
            }
            quad += alphas[i] * alphas[j] * y[i] * y[j] * kernel.value(i, j);
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}
