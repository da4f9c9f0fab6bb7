//! Optional PCA stage between feature selection and the embedding.
//!
//! Fitting centers the columns and takes the top principal axes of the
//! sample covariance: a dense symmetric eigendecomposition when the input
//! has at most 1024 columns, power iteration with deflation above that.
//! Component signs are fixed (largest-magnitude entry positive) so models
//! are reproducible.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

const EIGEN_DENSE_LIMIT: usize = 1024;
const POWER_TOL: f64 = 1e-9;
const POWER_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// p x d, rows orthonormal, descending explained variance.
    pub components: DenseMatrix,
    pub explained_variance: Vec<f64>,
}

fn covariance(centered: &DenseMatrix) -> DMatrix<f64> {
    let n = centered.n_rows();
    let d = centered.n_cols();
    let denom = (n - 1) as f64;
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for row in centered.rows() {
        for i in 0..d {
            let xi = row[i];
            if xi == 0.0 {
                continue;
            }
            for j in i..d {
                cov[(i, j)] += xi * row[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / denom;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

fn top_eigenpairs_dense(cov: &DMatrix<f64>, p: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eigen = cov.clone().symmetric_eigen();
    let d = cov.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut values = Vec::with_capacity(p);
    let mut vectors = Vec::with_capacity(p);
    for &col in order.iter().take(p) {
        values.push(eigen.eigenvalues[col].max(0.0));
        vectors.push(eigen.eigenvectors.column(col).iter().copied().collect());
    }
    (values, vectors)
}

/// Power iteration with deflation for wide inputs; converges each component
/// to `POWER_TOL` on the eigenvector residual.
fn top_eigenpairs_power(cov: &DMatrix<f64>, p: usize, seed_dim: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = cov.nrows();
    let mut deflated = cov.clone();
    let mut values = Vec::with_capacity(p);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut rng = crate::rng::SplitMix64::new(seed_dim as u64 + 0xACE1);
    for _ in 0..p {
        let mut v = nalgebra::DVector::<f64>::from_fn(d, |_, _| rng.next_gaussian());
        v /= v.norm().max(f64::MIN_POSITIVE);
        let mut value = 0.0;
        for _ in 0..POWER_MAX_ITER {
            let w = &deflated * &v;
            let norm = w.norm();
            if norm < 1e-300 {
                value = 0.0;
                break;
            }
            let next = w / norm;
            let delta = (&next - &v).norm().min((&next + &v).norm());
            v = next;
            value = norm;
            if delta < POWER_TOL {
                break;
            }
        }
        // Deflate: cov <- cov - lambda v v^T
        for i in 0..d {
            for j in 0..d {
                deflated[(i, j)] -= value * v[i] * v[j];
            }
        }
        values.push(value.max(0.0));
        vectors.push(v.iter().copied().collect());
    }
    (values, vectors)
}

fn fix_sign(component: &mut [f64]) {
    let mut best = 0usize;
    let mut best_abs = 0.0f64;
    for (i, &v) in component.iter().enumerate() {
        if v.abs() > best_abs {
            best_abs = v.abs();
            best = i;
        }
    }
    if component[best] < 0.0 {
        for v in component.iter_mut() {
            *v = -*v;
        }
    }
}

/// Fits the top-p principal axes of `x` (N x d, N >= 2, p <= min(N-1, d)).
pub fn pca_fit(x: &DenseMatrix, p: usize) -> Result<PcaModel> {
    let n = x.n_rows();
    let d = x.n_cols();
    if n < 2 {
        return Err(Error::InvalidInput(format!("pca needs N >= 2 rows, got {n}")));
    }
    if p == 0 || p > d || p > n - 1 {
        return Err(Error::InvalidInput(format!(
            "pca dims {p} out of range (must be in [1, min(N-1, d)] = [1, {}])",
            d.min(n - 1)
        )));
    }

    let mut mean = vec![0.0; d];
    for row in x.rows() {
        for (m, &v) in mean.iter_mut().zip(row.iter()) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut centered = x.clone();
    for i in 0..n {
        let row = centered.row_mut(i);
        for (v, &m) in row.iter_mut().zip(mean.iter()) {
            *v -= m;
        }
    }

    let cov = covariance(&centered);
    let (values, mut vectors) = if d <= EIGEN_DENSE_LIMIT {
        top_eigenpairs_dense(&cov, p)
    } else {
        top_eigenpairs_power(&cov, p, d)
    };
    for vector in vectors.iter_mut() {
        fix_sign(vector);
    }

    let components = DenseMatrix::from_rows(&vectors)?;
    Ok(PcaModel {
        mean,
        components,
        explained_variance: values,
    })
}

/// Projects rows: `(X - mean) . components^T`.
pub fn pca_transform(x: &DenseMatrix, model: &PcaModel) -> Result<DenseMatrix> {
    let d = model.mean.len();
    if x.n_cols() != d {
        return Err(Error::InvalidInput(format!(
            "pca transform: input has {} columns, model expects {d}",
            x.n_cols()
        )));
    }
    let p = model.components.n_rows();
    let mut out = DenseMatrix::zeros(x.n_rows(), p);
    for i in 0..x.n_rows() {
        let row = x.row(i);
        for c in 0..p {
            let comp = model.components.row(c);
            let mut dot = 0.0;
            for j in 0..d {
                dot += (row[j] - model.mean[j]) * comp[j];
            }
            out.set(i, c, dot);
        }
    }
    Ok(out)
}

impl PcaModel {
    /// Text persistence in three blocks: mean, components, variances.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::from("pca\n");
        let _ = writeln!(
            out,
            "p {} d {}",
            self.components.n_rows(),
            self.mean.len()
        );
        out.push_str("mean\n");
        push_row(&mut out, &self.mean);
        out.push_str("components\n");
        for row in self.components.rows() {
            push_row(&mut out, row);
        }
        out.push_str("variances\n");
        push_row(&mut out, &self.explained_variance);
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let display = path.display().to_string();
        let mut lines = text.lines();
        if lines.next() != Some("pca") {
            return Err(Error::parse(&display, 1, "expected pca header"));
        }
        let dims = lines
            .next()
            .ok_or_else(|| Error::parse(&display, 2, "missing dims line"))?;
        let parts: Vec<&str> = dims.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "p" || parts[2] != "d" {
            return Err(Error::parse(&display, 2, "expected `p <p> d <d>`"));
        }
        let p: usize = parts[1]
            .parse()
            .map_err(|_| Error::parse(&display, 2, "bad p"))?;
        let d: usize = parts[3]
            .parse()
            .map_err(|_| Error::parse(&display, 2, "bad d"))?;

        let parse_row = |line: &str| -> Result<Vec<f64>> {
            line.split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::parse(&display, 0, format!("bad number {t:?}")))
                })
                .collect()
        };

        if lines.next() != Some("mean") {
            return Err(Error::parse(&display, 3, "expected mean block"));
        }
        let mean = parse_row(lines.next().unwrap_or(""))?;
        if mean.len() != d {
            return Err(Error::parse(&display, 4, "mean length mismatch"));
        }
        if lines.next() != Some("components") {
            return Err(Error::parse(&display, 5, "expected components block"));
        }
        let mut rows = Vec::with_capacity(p);
        for _ in 0..p {
            let row = parse_row(lines.next().unwrap_or(""))?;
            if row.len() != d {
                return Err(Error::parse(&display, 0, "component length mismatch"));
            }
            rows.push(row);
        }
        if lines.next() != Some("variances") {
            return Err(Error::parse(&display, 0, "expected variances block"));
        }
        let explained_variance = parse_row(lines.next().unwrap_or(""))?;
        if explained_variance.len() != p {
            return Err(Error::parse(&display, 0, "variances length mismatch"));
        }
        Ok(PcaModel {
            mean,
            components: DenseMatrix::from_rows(&rows)?,
            explained_variance,
        })
    }
}

fn push_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

/// Projected data as CSV `sample_id,c1,...,cp,label` (label 0 = unlabeled).
pub fn write_projected_csv(
    path: &Path,
    ids: &[String],
    labels: &[Option<crate::corpus::ClassLabel>],
    x: &DenseMatrix,
) -> Result<()> {
    if ids.len() != x.n_rows() || labels.len() != x.n_rows() {
        return Err(Error::InvalidInput("ids/labels/rows mismatch".into()));
    }
    let mut out = String::from("sample_id");
    for c in 1..=x.n_cols() {
        let _ = write!(out, ",c{c}");
    }
    out.push_str(",label\n");
    for i in 0..x.n_rows() {
        let _ = write!(out, "{}", ids[i]);
        for j in 0..x.n_cols() {
            let _ = write!(out, ",{}", x.get(i, j));
        }
        let _ = writeln!(out, ",{}", labels[i].unwrap_or(0));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub struct ProjectedCsv {
    pub ids: Vec<String>,
    pub labels: Vec<Option<crate::corpus::ClassLabel>>,
    pub x: DenseMatrix,
}

pub fn read_projected_csv(path: &Path) -> Result<ProjectedCsv> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let display = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let n_cols = match lines.next() {
        Some((_, header)) if header.starts_with("sample_id,c") && header.ends_with(",label") => {
            header.split(',').count() - 2
        }
        _ => {
            return Err(Error::parse(
                &display,
                1,
                "expected header sample_id,c1,...,label",
            ))
        }
    };
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != n_cols + 2 {
            return Err(Error::parse(&display, line_no, "column count mismatch"));
        }
        ids.push(parts[0].to_string());
        let row: Vec<f64> = parts[1..=n_cols]
            .iter()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::parse(&display, line_no, "bad coordinate"))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
        let label: u32 = parts[n_cols + 1]
            .parse()
            .map_err(|_| Error::parse(&display, line_no, "bad label"))?;
        labels.push(if label == 0 { None } else { Some(label) });
    }
    Ok(ProjectedCsv {
        ids,
        labels,
        x: DenseMatrix::from_rows(&rows)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_matrix(rng: &mut SplitMix64, n: usize, d: usize) -> DenseMatrix {
        let data: Vec<f64> = (0..n * d).map(|_| rng.next_gaussian() * 2.0).collect();
        DenseMatrix::from_vec(n, d, data).unwrap()
    }

    fn total_variance(x: &DenseMatrix) -> f64 {
        let n = x.n_rows() as f64;
        let d = x.n_cols();
        let mut mean = vec![0.0; d];
        for row in x.rows() {
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let mut total = 0.0;
        for row in x.rows() {
            for (j, &v) in row.iter().enumerate() {
                total += (v - mean[j]) * (v - mean[j]);
            }
        }
        total / (n - 1.0)
    }

    #[test]
    fn line_in_2d_gives_parallel_first_component() {
        // Points on the line y = 2x.
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let model = pca_fit(&x, 2).unwrap();
        let c0 = model.components.row(0);
        let ratio = c0[1] / c0[0];
        assert!((ratio - 2.0).abs() < 1e-8, "component {c0:?}");
        assert!(model.explained_variance[1].abs() < 1e-9);
    }

    #[test]
    fn full_rank_projection_preserves_total_variance() {
        let mut rng = SplitMix64::new(17);
        let x = random_matrix(&mut rng, 12, 6);
        let model = pca_fit(&x, 6).unwrap();
        let projected = pca_transform(&x, &model).unwrap();
        let original = total_variance(&x);
        let after = total_variance(&projected);
        assert!(
            (original - after).abs() <= 1e-9 * original.max(1.0),
            "{original} vs {after}"
        );
        let eig_total: f64 = model.explained_variance.iter().sum();
        assert!((original - eig_total).abs() <= 1e-9 * original.max(1.0));
    }

    #[test]
    fn components_are_orthonormal() {
        let mut rng = SplitMix64::new(23);
        let x = random_matrix(&mut rng, 30, 8);
        let model = pca_fit(&x, 5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let dot: f64 = model
                    .components
                    .row(i)
                    .iter()
                    .zip(model.components.row(j))
                    .map(|(a, b)| a * b)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-8, "({i},{j}) dot {dot}");
            }
        }
    }

    #[test]
    fn explained_variance_matches_projected_coordinate_variance() {
        let mut rng = SplitMix64::new(29);
        let x = random_matrix(&mut rng, 40, 7);
        let model = pca_fit(&x, 4).unwrap();
        let projected = pca_transform(&x, &model).unwrap();
        let n = projected.n_rows() as f64;
        for c in 0..4 {
            let mean: f64 = (0..projected.n_rows())
                .map(|i| projected.get(i, c))
                .sum::<f64>()
                / n;
            let var: f64 = (0..projected.n_rows())
                .map(|i| {
                    let d = projected.get(i, c) - mean;
                    d * d
                })
                .sum::<f64>()
                / (n - 1.0);
            assert!(
                (var - model.explained_variance[c]).abs() <= 1e-9 * var.max(1.0),
                "component {c}: {var} vs {}",
                model.explained_variance[c]
            );
        }
        let ev = &model.explained_variance;
        assert!(ev.windows(2).all(|w| w[0] >= w[1] - 1e-12), "nonincreasing");
        assert!(ev.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn transform_of_mean_row_is_zero() {
        let mut rng = SplitMix64::new(41);
        let x = random_matrix(&mut rng, 9, 4);
        let model = pca_fit(&x, 3).unwrap();
        let mean_row = DenseMatrix::from_rows(&[model.mean.clone()]).unwrap();
        let out = pca_transform(&mean_row, &model).unwrap();
        for &v in out.row(0) {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn orthonormal_basis_change_preserves_pairwise_distances() {
        let mut rng = SplitMix64::new(43);
        let x = random_matrix(&mut rng, 10, 5);
        let model = pca_fit(&x, 5).unwrap();
        let projected = pca_transform(&x, &model).unwrap();
        for i in 0..x.n_rows() {
            for j in 0..x.n_rows() {
                let before = crate::dense::sq_dist(x.row(i), x.row(j));
                let after = crate::dense::sq_dist(projected.row(i), projected.row(j));
                assert!((before - after).abs() <= 1e-9 * before.max(1.0));
            }
        }
    }

    #[test]
    fn projection_contracts_pairwise_distances() {
        let mut rng = SplitMix64::new(47);
        let x = random_matrix(&mut rng, 15, 8);
        let model = pca_fit(&x, 3).unwrap();
        let projected = pca_transform(&x, &model).unwrap();
        for i in 0..x.n_rows() {
            for j in 0..x.n_rows() {
                let before = crate::dense::sq_dist(x.row(i), x.row(j));
                let after = crate::dense::sq_dist(projected.row(i), projected.row(j));
                assert!(after <= before + 1e-9, "({i},{j}): {after} > {before}");
            }
        }
    }

    #[test]
    fn reconstruction_identity_on_component_span() {
        // Data generated inside a 2-D subspace of 5-D space: projecting onto
        // 2 components and reconstructing must be lossless.
        let mut rng = SplitMix64::new(53);
        let basis = [
            [1.0, 0.0, 1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 1.0, 0.0],
        ];
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|_| {
                let a = rng.next_gaussian();
                let b = rng.next_gaussian();
                (0..5).map(|j| a * basis[0][j] + b * basis[1][j]).collect()
            })
            .collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let model = pca_fit(&x, 2).unwrap();
        let projected = pca_transform(&x, &model).unwrap();
        for i in 0..x.n_rows() {
            let mut recon = model.mean.clone();
            for c in 0..2 {
                for j in 0..5 {
                    recon[j] += projected.get(i, c) * model.components.get(c, j);
                }
            }
            for (j, &v) in x.row(i).iter().enumerate() {
                assert!((v - recon[j]).abs() < 1e-9, "row {i} col {j}");
            }
        }
    }

    #[test]
    fn power_iteration_agrees_with_dense_path() {
        let mut rng = SplitMix64::new(59);
        let x = random_matrix(&mut rng, 25, 6);
        let dense = pca_fit(&x, 3).unwrap();
        let cov = covariance(&{
            let mut c = x.clone();
            let mean = dense.mean.clone();
            for i in 0..c.n_rows() {
                for (v, m) in c.row_mut(i).iter_mut().zip(mean.iter()) {
                    *v -= m;
                }
            }
            c
        });
        let (values, vectors) = top_eigenpairs_power(&cov, 3, 6);
        for (k, value) in values.iter().enumerate() {
            assert!(
                (value - dense.explained_variance[k]).abs() < 1e-6,
                "eigenvalue {k}"
            );
            let dot: f64 = vectors[k]
                .iter()
                .zip(dense.components.row(k))
                .map(|(a, b)| a * b)
                .sum();
            assert!(dot.abs() > 1.0 - 1e-6, "eigenvector {k} dot {dot}");
        }
    }

    #[test]
    fn out_of_range_p_rejected() {
        let x = DenseMatrix::zeros(5, 3);
        assert!(pca_fit(&x, 0).is_err());
        assert!(pca_fit(&x, 4).is_err());
        assert!(pca_fit(&x, 5).is_err(), "p > N-1");
        assert!(pca_fit(&DenseMatrix::zeros(1, 3), 1).is_err(), "N < 2");
    }

    #[test]
    fn zero_variance_data_yields_orthonormal_components_with_zero_variance() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let model = pca_fit(&x, 2).unwrap();
        for v in &model.explained_variance {
            assert!(v.abs() < 1e-12);
        }
        for i in 0..2 {
            let norm: f64 = model.components.row(i).iter().map(|v| v * v).sum();
            assert!((norm - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let x = DenseMatrix::zeros(4, 3);
        let model = pca_fit(&random_matrix(&mut SplitMix64::new(1), 6, 4), 2).unwrap();
        assert!(pca_transform(&x, &model).is_err());
    }

    #[test]
    fn projected_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pca.csv");
        let x = DenseMatrix::from_rows(&[vec![1.5, -2.0, 0.25], vec![0.0, 3.0, -1.0]]).unwrap();
        let ids = vec!["a".to_string(), "b".to_string()];
        let labels = vec![Some(2), None];
        write_projected_csv(&path, &ids, &labels, &x).unwrap();
        let back = read_projected_csv(&path).unwrap();
        assert_eq!(back.ids, ids);
        assert_eq!(back.labels, labels);
        assert_eq!(back.x, x);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pca.model");
        let mut rng = SplitMix64::new(61);
        let x = random_matrix(&mut rng, 10, 4);
        let model = pca_fit(&x, 2).unwrap();
        model.save(&path).unwrap();
        let back = PcaModel::load(&path).unwrap();
        assert_eq!(back.mean, model.mean);
        assert_eq!(back.components, model.components);
        assert_eq!(back.explained_variance, model.explained_variance);
    }
}
