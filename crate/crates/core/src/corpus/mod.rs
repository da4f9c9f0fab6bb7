//! Corpus ingestion: hex-dump sample files, label manifests and the
//! deterministic synthetic corpus generator.
//!
//! Samples are line-oriented hex dumps: an address token followed by byte
//! tokens, each either two hex digits or `??` for an unknown byte. Unknown
//! bytes split the decoded stream into segments; n-gram windows never cross
//! such a gap.

mod synth;

pub use synth::{synth_corpus, SynthParams};

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Class labels are the dataset's 1-based family ids.
pub type ClassLabel = u32;

/// Decoded byte payload of one sample. Gaps (from `??` tokens) are implicit
/// between consecutive segments; empty segments are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ByteStream {
    pub sample_id: String,
    pub segments: Vec<Vec<u8>>,
}

impl ByteStream {
    pub fn total_len(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }
}

/// One manifest row: where a sample lives and (for training data) its family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub sample_id: String,
    pub path: PathBuf,
    pub label: Option<ClassLabel>,
}

/// Roster of the corpus; order is preserved everywhere downstream.
#[derive(Debug, Clone, Default)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Keeps only entries whose label is in `classes`; unlabeled entries are
    /// dropped as well.
    pub fn filter_classes(&self, classes: &[ClassLabel]) -> CorpusManifest {
        let keep: HashSet<ClassLabel> = classes.iter().copied().collect();
        CorpusManifest {
            entries: self
                .entries
                .iter()
                .filter(|e| e.label.is_some_and(|l| keep.contains(&l)))
                .cloned()
                .collect(),
        }
    }
}

/// Per-family instance counts and percentages.
#[derive(Debug, Clone)]
pub struct FamilyDistribution {
    pub classes: Vec<FamilyStats>,
}

#[derive(Debug, Clone)]
pub struct FamilyStats {
    pub class: ClassLabel,
    pub name: &'static str,
    pub count: u32,
    pub percentage: f64,
}

/// Family distribution of the public malware classification corpus this
/// pipeline targets (9 families, 10868 labeled samples). The synthetic
/// generator scales these counts.
pub const DATASET_FAMILIES: [(ClassLabel, &str, u32, f64); 9] = [
    (1, "Ramnit", 1541, 14.20),
    (2, "Lollipop", 2478, 22.80),
    (3, "Kelihos_ver3", 2942, 27.07),
    (4, "Vundo", 475, 4.37),
    (5, "Simda", 42, 0.39),
    (6, "Tracur", 751, 6.91),
    (7, "Kelihos_ver1", 398, 3.66),
    (8, "Obfuscator.ACY", 1228, 11.30),
    (9, "Gatak", 1013, 9.32),
];

impl FamilyDistribution {
    pub fn dataset_default() -> Self {
        FamilyDistribution {
            classes: DATASET_FAMILIES
                .iter()
                .map(|&(class, name, count, percentage)| FamilyStats {
                    class,
                    name,
                    count,
                    percentage,
                })
                .collect(),
        }
    }

    pub fn total(&self) -> u64 {
        self.classes.iter().map(|f| f.count as u64).sum()
    }

    /// Percentages must sum to 100 within 0.1 absolute tolerance.
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.classes.iter().map(|f| f.percentage).sum();
        if (sum - 100.0).abs() > 0.1 {
            return Err(Error::InvalidInput(format!(
                "family percentages sum to {sum}, expected 100 +- 0.1"
            )));
        }
        Ok(())
    }

    pub fn family_name(class: ClassLabel) -> Option<&'static str> {
        DATASET_FAMILIES
            .iter()
            .find(|&&(c, ..)| c == class)
            .map(|&(_, name, ..)| name)
    }
}

fn is_hex(token: &str) -> bool {
    !token.is_empty() && token.bytes().all(|b| b.is_ascii_hexdigit())
}

/// Parses a hex-dump sample. Each nonempty line is an address token followed
/// by byte tokens (`two hex digits` or `??`). Address tokens are discarded;
/// `??` closes the current segment.
///
/// An address token is a run of at least three hex digits, which cannot be
/// confused with a two-digit byte token; a line starting with a byte token
/// is reported as a missing address column.
pub fn parse_hexdump<R: Read>(reader: R, sample_id: &str) -> Result<ByteStream> {
    let reader = BufReader::new(reader);
    let mut segments: Vec<Vec<u8>> = Vec::new();
    let mut current: Vec<u8> = Vec::new();

    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|e| Error::io(sample_id, e))?;
        let mut tokens = line.split_whitespace();
        let Some(addr) = tokens.next() else {
            continue; // blank line
        };
        if addr == "??" || (addr.len() == 2 && is_hex(addr)) || !is_hex(addr) || addr.len() < 3 {
            return Err(Error::parse(
                sample_id,
                line_no,
                format!("missing address column (first token {addr:?})"),
            ));
        }
        for token in tokens {
            if token == "??" {
                if !current.is_empty() {
                    segments.push(std::mem::take(&mut current));
                }
            } else if token.len() == 2 && is_hex(token) {
                current.push(u8::from_str_radix(token, 16).expect("checked hex"));
            } else {
                return Err(Error::parse(
                    sample_id,
                    line_no,
                    format!("malformed byte token {token:?}"),
                ));
            }
        }
    }
    if !current.is_empty() {
        segments.push(current);
    }
    Ok(ByteStream {
        sample_id: sample_id.to_string(),
        segments,
    })
}

pub fn parse_hexdump_file(path: &Path, sample_id: &str) -> Result<ByteStream> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_hexdump(file, sample_id)
}

/// Writes a byte stream in the hex-dump format accepted by [`parse_hexdump`]:
/// 16 tokens per line, 8-digit uppercase addresses counting tokens, one `??`
/// token between segments. Round-trips through [`parse_hexdump`] exactly.
pub fn serialize_hexdump(bs: &ByteStream) -> String {
    const TOKENS_PER_LINE: usize = 16;
    let mut out = String::new();
    let mut tokens_on_line = 0usize;
    let mut address = 0usize;

    let mut push_token = |out: &mut String, token: &str, address: &mut usize| {
        if tokens_on_line == 0 {
            let _ = write!(out, "{:08X}", *address);
        }
        out.push(' ');
        out.push_str(token);
        tokens_on_line += 1;
        *address += 1;
        if tokens_on_line == TOKENS_PER_LINE {
            out.push('\n');
            tokens_on_line = 0;
        }
    };

    for (seg_idx, segment) in bs.segments.iter().enumerate() {
        if seg_idx > 0 {
            push_token(&mut out, "??", &mut address);
        }
        let mut buf = [0u8; 2];
        for &byte in segment {
            const HEX: &[u8; 16] = b"0123456789ABCDEF";
            buf[0] = HEX[(byte >> 4) as usize];
            buf[1] = HEX[(byte & 0xF) as usize];
            let token = std::str::from_utf8(&buf).expect("ascii");
            push_token(&mut out, token, &mut address);
        }
    }
    if tokens_on_line > 0 {
        out.push('\n');
    }
    out
}

/// Loads a manifest CSV (`sample_id,label`; empty label means unlabeled).
/// Sample files are expected next to the manifest as `<sample_id>.bytes`.
pub fn load_manifest(path: &Path) -> Result<CorpusManifest> {
    load_manifest_with_labels(path, &(1..=9).collect::<Vec<_>>())
}

pub fn load_manifest_with_labels(path: &Path, label_set: &[ClassLabel]) -> Result<CorpusManifest> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    if headers.len() < 2 || &headers[0] != "sample_id" || &headers[1] != "label" {
        return Err(Error::parse(
            path.display().to_string(),
            1,
            "expected header \"sample_id,label\"",
        ));
    }

    let mut seen: HashSet<String> = HashSet::new();
    let mut entries = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line_no = idx + 2;
        let record =
            record.map_err(|e| Error::parse(path.display().to_string(), line_no, e.to_string()))?;
        let sample_id = record.get(0).unwrap_or("").trim().to_string();
        if sample_id.is_empty() {
            return Err(Error::parse(
                path.display().to_string(),
                line_no,
                "empty sample_id",
            ));
        }
        if !seen.insert(sample_id.clone()) {
            return Err(Error::parse(
                path.display().to_string(),
                line_no,
                format!("duplicate sample_id {sample_id:?}"),
            ));
        }
        let raw_label = record.get(1).unwrap_or("").trim();
        let label = if raw_label.is_empty() {
            None
        } else {
            let value: ClassLabel = raw_label.parse().map_err(|_| {
                Error::parse(
                    path.display().to_string(),
                    line_no,
                    format!("unparseable label {raw_label:?}"),
                )
            })?;
            if !label_set.contains(&value) {
                return Err(Error::parse(
                    path.display().to_string(),
                    line_no,
                    format!("label {value} outside configured label set"),
                ));
            }
            Some(value)
        };
        entries.push(ManifestEntry {
            path: dir.join(format!("{sample_id}.bytes")),
            sample_id,
            label,
        });
    }
    Ok(CorpusManifest { entries })
}

/// Writes a manifest CSV with header `sample_id,label` (LF line endings).
pub fn write_manifest(manifest: &CorpusManifest, path: &Path) -> Result<()> {
    let mut out = String::from("sample_id,label\n");
    for entry in &manifest.entries {
        match entry.label {
            Some(label) => {
                let _ = writeln!(out, "{},{}", entry.sample_id, label);
            }
            None => {
                let _ = writeln!(out, "{},", entry.sample_id);
            }
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ByteStream> {
        parse_hexdump(text.as_bytes(), "test")
    }

    #[test]
    fn single_line_with_gap_token() {
        let bs = parse("00401000 56 8B EC ??").unwrap();
        assert_eq!(bs.segments, vec![vec![0x56, 0x8B, 0xEC]]);
    }

    #[test]
    fn empty_input_has_no_segments() {
        let bs = parse("").unwrap();
        assert!(bs.segments.is_empty());
    }

    #[test]
    fn gap_splits_segments_across_lines() {
        let bs = parse("0040100A 90 ??\n0040100B 90").unwrap();
        assert_eq!(bs.segments, vec![vec![0x90], vec![0x90]]);
    }

    #[test]
    fn segments_continue_across_lines_without_gap() {
        let bs = parse("00401000 01 02\n00401002 03").unwrap();
        assert_eq!(bs.segments, vec![vec![1, 2, 3]]);
    }

    #[test]
    fn consecutive_gaps_store_no_empty_segment() {
        let bs = parse("00401000 AA ?? ?? BB").unwrap();
        assert_eq!(bs.segments, vec![vec![0xAA], vec![0xBB]]);
    }

    #[test]
    fn malformed_byte_token_names_line() {
        let err = parse("00401000 AA\n00401001 GG").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_address_column_rejected() {
        assert!(parse("56 8B EC").is_err());
        assert!(parse("?? AA").is_err());
    }

    #[test]
    fn serialize_round_trips() {
        let bs = ByteStream {
            sample_id: "s".into(),
            segments: vec![vec![0x00, 0xFF, 0x10], (0u8..40).collect(), vec![0x07]],
        };
        let text = serialize_hexdump(&bs);
        let back = parse_hexdump(text.as_bytes(), "s").unwrap();
        assert_eq!(back, bs);
    }

    proptest::proptest! {
        #[test]
        fn any_byte_stream_round_trips(
            segments in proptest::collection::vec(
                proptest::collection::vec(proptest::prelude::any::<u8>(), 1..60),
                0..5,
            )
        ) {
            let bs = ByteStream {
                sample_id: "p".into(),
                segments,
            };
            let text = serialize_hexdump(&bs);
            let back = parse_hexdump(text.as_bytes(), "p").unwrap();
            proptest::prop_assert_eq!(back, bs);
        }
    }

    #[test]
    fn manifest_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        std::fs::write(&path, "sample_id,label\na,1\nb,3\nc,\n").unwrap();
        let manifest = load_manifest(&path).unwrap();
        assert_eq!(manifest.len(), 3);
        assert_eq!(manifest.entries[0].label, Some(1));
        assert_eq!(manifest.entries[2].label, None);
        assert_eq!(manifest.entries[1].path, dir.path().join("b.bytes"));

        std::fs::write(&path, "sample_id,label\na,1\na,2\n").unwrap();
        assert!(load_manifest(&path).is_err(), "duplicate id must fail");

        std::fs::write(&path, "sample_id,label\na,10\n").unwrap();
        assert!(load_manifest(&path).is_err(), "label 10 outside 1..9");
    }

    #[test]
    fn family_distribution_percentages_close_to_100() {
        let dist = FamilyDistribution::dataset_default();
        dist.validate().unwrap();
        assert_eq!(dist.total(), 10868);
    }
}
