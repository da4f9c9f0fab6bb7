//! Deterministic synthetic corpus generator.
//!
//! Nine family templates are derived from a seed; instances are template
//! copies with independent byte substitutions and ±10% length jitter,
//! serialized in the hex-dump format accepted by `parse_hexdump`. Family
//! instance counts follow the reference distribution scaled by `scale`.
//!
//! Template construction mimics the structure of real families: each family
//! has a small private alphabet of 16-byte motifs repeated throughout the
//! template, and families differ strongly in byte volume (see
//! [`FAMILY_SIZE_FACTORS`]), the way real corpora mix kilobyte droppers with
//! megabyte payloads. All randomness comes from [`SplitMix64`] substreams, so
//! identical seeds produce byte-identical corpora.

use std::path::Path;

use crate::corpus::{
    serialize_hexdump, write_manifest, ByteStream, CorpusManifest, ManifestEntry,
    DATASET_FAMILIES,
};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Relative template length per family (class 1..9). Real families differ in
/// file size by an order of magnitude; the spread keeps a single global
/// distance scale from fitting every family at once.
pub const FAMILY_SIZE_FACTORS: [f64; 9] = [9.0, 12.0, 18.0, 6.0, 3.0, 7.5, 4.5, 10.5, 15.0];

/// Distinct 16-byte motifs per family template.
const MOTIFS_PER_FAMILY: usize = 4;
const MOTIF_LEN: usize = 16;

#[derive(Debug, Clone)]
pub struct SynthParams {
    pub seed: u64,
    /// Fraction of the reference family counts to generate, in (0, 1].
    pub scale: f64,
    /// Probability that any given byte of an instance is replaced by a
    /// random byte, in [0, 1).
    pub mutation_rate: f64,
    /// Base template length in bytes (scaled per family), >= 64.
    pub template_len: usize,
}

impl SynthParams {
    fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "scale must be in (0, 1], got {}",
                self.scale
            )));
        }
        if !(0.0..1.0).contains(&self.mutation_rate) {
            return Err(Error::InvalidInput(format!(
                "mutation_rate must be in [0, 1), got {}",
                self.mutation_rate
            )));
        }
        if self.template_len < 64 {
            return Err(Error::InvalidInput(format!(
                "template_len must be >= 64, got {}",
                self.template_len
            )));
        }
        Ok(())
    }
}

/// Instance counts per family for a given scale: `round(scale * count)`.
pub fn scaled_family_counts(scale: f64) -> [u32; 9] {
    let mut counts = [0u32; 9];
    for (slot, &(_, _, count, _)) in counts.iter_mut().zip(DATASET_FAMILIES.iter()) {
        *slot = (scale * count as f64).round() as u32;
    }
    counts
}

pub(crate) fn family_template(seed: u64, class: u32, template_len: usize) -> Vec<u8> {
    let mut rng = SplitMix64::substream(seed, 1000 + class as u64);
    let mut motifs = Vec::with_capacity(MOTIFS_PER_FAMILY);
    for _ in 0..MOTIFS_PER_FAMILY {
        let motif: Vec<u8> = (0..MOTIF_LEN).map(|_| rng.next_byte()).collect();
        motifs.push(motif);
    }
    let target = (template_len as f64 * FAMILY_SIZE_FACTORS[class as usize - 1]).round() as usize;
    let mut template = Vec::with_capacity(target + MOTIF_LEN);
    while template.len() < target {
        let pick = rng.next_below(MOTIFS_PER_FAMILY as u64) as usize;
        template.extend_from_slice(&motifs[pick]);
    }
    template.truncate(target);
    template
}

fn instance_bytes(template: &[u8], rng: &mut SplitMix64, mutation_rate: f64) -> Vec<u8> {
    // ±10% length jitter: truncate to a prefix or extend cyclically.
    let jitter = 0.9 + 0.2 * rng.next_f64();
    let len = ((template.len() as f64 * jitter).round() as usize).max(1);
    let mut bytes = Vec::with_capacity(len);
    for pos in 0..len {
        let mut b = template[pos % template.len()];
        if mutation_rate > 0.0 && rng.next_f64() < mutation_rate {
            b = rng.next_byte();
        }
        bytes.push(b);
    }
    bytes
}

/// Generates the corpus under `out_dir` (one `<sample_id>.bytes` per
/// instance plus `manifest.csv`) and returns the manifest.
pub fn synth_corpus(params: &SynthParams, out_dir: &Path) -> Result<CorpusManifest> {
    params.validate()?;
    let counts = scaled_family_counts(params.scale);
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::InvalidInput(format!(
            "scale {} yields zero instances for every family; use a larger scale",
            params.scale
        )));
    }

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut entries = Vec::new();
    for (family_idx, &count) in counts.iter().enumerate() {
        let class = family_idx as u32 + 1;
        if count == 0 {
            continue;
        }
        let template = family_template(params.seed, class, params.template_len);
        for instance in 0..count {
            let mut rng =
                SplitMix64::substream(params.seed, class as u64 * 1_000_000 + instance as u64);
            let bytes = instance_bytes(&template, &mut rng, params.mutation_rate);
            let sample_id = format!("f{class}-{instance:04}");
            let stream = ByteStream {
                sample_id: sample_id.clone(),
                segments: vec![bytes],
            };
            let path = out_dir.join(format!("{sample_id}.bytes"));
            std::fs::write(&path, serialize_hexdump(&stream))
                .map_err(|e| Error::io(&path, e))?;
            entries.push(ManifestEntry {
                sample_id,
                path,
                label: Some(class),
            });
        }
    }

    let manifest = CorpusManifest { entries };
    write_manifest(&manifest, &out_dir.join("manifest.csv"))?;
    Ok(manifest)
}
