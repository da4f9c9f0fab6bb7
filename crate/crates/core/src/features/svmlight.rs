//! SVMLight/LibSVM sparse text format.
//!
//! One instance per line: `<label> <idx>:<value> ...` with strictly ascending
//! 1-based indices; unlabeled rows use label 0. Values are written as the
//! shortest decimal that round-trips exactly. A leading `# dims N` comment
//! records the dimensionality so that reading recovers the exact dataset;
//! files without it fall back to the largest index seen.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{SparseDataset, SparseVector};

pub fn write_svmlight(ds: &SparseDataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# dims {}", ds.dimensionality);
    for row in &ds.rows {
        let _ = write!(out, "{}", row.label.unwrap_or(0));
        for (&idx, &v) in row.indices.iter().zip(row.values.iter()) {
            let _ = write!(out, " {idx}:{v}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_svmlight(path: &Path) -> Result<SparseDataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let display = path.display().to_string();

    let mut declared_dims: Option<usize> = None;
    let mut max_index: u32 = 0;
    let mut rows = Vec::new();

    for (line_idx, line) in reader.lines().enumerate() {
        let line_no = line_idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let mut tokens = rest.split_whitespace();
            if tokens.next() == Some("dims") {
                if let Some(Ok(d)) = tokens.next().map(str::parse) {
                    declared_dims = Some(d);
                }
            }
            continue;
        }

        let mut tokens = trimmed.split_whitespace();
        let label_token = tokens.next().expect("nonempty line");
        let label_value: i64 = label_token.parse().map_err(|_| {
            Error::parse(&display, line_no, format!("bad label {label_token:?}"))
        })?;
        if label_value < 0 {
            return Err(Error::parse(
                &display,
                line_no,
                format!("negative label {label_value}"),
            ));
        }
        let label = if label_value == 0 {
            None
        } else {
            Some(label_value as u32)
        };

        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut previous: u32 = 0;
        for token in tokens {
            let Some((idx_str, value_str)) = token.split_once(':') else {
                return Err(Error::parse(
                    &display,
                    line_no,
                    format!("expected idx:value, got {token:?}"),
                ));
            };
            let idx: u32 = idx_str.parse().map_err(|_| {
                Error::parse(&display, line_no, format!("bad index {idx_str:?}"))
            })?;
            let value: f64 = value_str.parse().map_err(|_| {
                Error::parse(&display, line_no, format!("bad value {value_str:?}"))
            })?;
            if idx == 0 {
                return Err(Error::parse(&display, line_no, "index 0 (indices are 1-based)"));
            }
            if idx <= previous {
                return Err(Error::parse(
                    &display,
                    line_no,
                    format!("non-ascending index {idx} after {previous}"),
                ));
            }
            previous = idx;
            indices.push(idx);
            values.push(value);
        }
        max_index = max_index.max(previous);
        rows.push(
            SparseVector::new(indices, values, label)
                .map_err(|e| Error::parse(&display, line_no, e.to_string()))?,
        );
    }

    let dims = declared_dims.unwrap_or(max_index as usize);
    SparseDataset::new(rows, dims)
}
