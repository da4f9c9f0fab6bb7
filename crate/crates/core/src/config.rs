//! Pipeline configuration: defaults, flat `key=value` config files with
//! section prefixes (e.g. `tsne.perplexity=40`), and the summary strings
//! that reports and plot titles carry.

use std::path::Path;

use crate::corpus::ClassLabel;
use crate::error::{Error, Result};
use crate::svm::{Gamma, SvmConfig};
use crate::tsne::TsneConfig;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// n-gram size (the dataset experiments use 3, 4 and 5).
    pub ngram: usize,
    /// Union mode: pool several gram sizes (e.g. 1..5) into one hashed
    /// space. Overrides `ngram` at extraction when set.
    pub ngram_sizes: Option<Vec<usize>>,
    /// Rare-gram pruning threshold: grams with corpus-wide count < k drop.
    pub rare_k: u64,
    /// Number of features kept by the chi-squared selector.
    pub chi2_k: usize,
    pub pca_enabled: bool,
    pub pca_dims: usize,
    pub tsne: TsneConfig,
    pub svm: SvmConfig,
    /// Optional class filter; `None` keeps all classes.
    pub classes: Option<Vec<ClassLabel>>,
    /// Master seed: seeds the fold split and, unless overridden by their own
    /// keys, the t-SNE initialization and SVM calibration streams.
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            ngram: 4,
            ngram_sizes: None,
            rare_k: 3,
            chi2_k: 1000,
            pca_enabled: false,
            pca_dims: 50,
            tsne: TsneConfig::default(),
            svm: SvmConfig::default(),
            classes: None,
            seed: 42,
            threads: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad value {value:?} for key {key}")))
}

impl PipelineConfig {
    /// Applies one `key=value` pair. Unknown keys are rejected.
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "ngram.n" => self.ngram = parse(key, value)?,
            "ngram.sizes" => {
                let sizes: Vec<usize> = value
                    .split(',')
                    .map(|t| parse(key, t.trim()))
                    .collect::<Result<_>>()?;
                self.ngram_sizes = Some(sizes);
            }
            "ngram.k" => self.rare_k = parse(key, value)?,
            "chi2.k" => self.chi2_k = parse(key, value)?,
            "pca.enabled" => self.pca_enabled = parse(key, value)?,
            "pca.dims" => self.pca_dims = parse(key, value)?,
            "tsne.random_state" => self.tsne.random_state = parse(key, value)?,
            "tsne.n_iter" => self.tsne.n_iter = parse(key, value)?,
            "tsne.perplexity" => self.tsne.perplexity = parse(key, value)?,
            "tsne.early_exaggeration" => self.tsne.early_exaggeration = parse(key, value)?,
            "tsne.learning_rate" => self.tsne.learning_rate = parse(key, value)?,
            "tsne.theta" => self.tsne.theta = parse(key, value)?,
            "tsne.exaggeration_iters" => self.tsne.exaggeration_iters = parse(key, value)?,
            "tsne.momentum_initial" => self.tsne.momentum_initial = parse(key, value)?,
            "tsne.momentum_final" => self.tsne.momentum_final = parse(key, value)?,
            "tsne.momentum_switch_iter" => self.tsne.momentum_switch_iter = parse(key, value)?,
            "tsne.init_stddev" => self.tsne.init_stddev = parse(key, value)?,
            "tsne.min_gain" => self.tsne.min_gain = parse(key, value)?,
            "tsne.kl_record_every" => self.tsne.kl_record_every = parse(key, value)?,
            "svm.c" => self.svm.c = parse(key, value)?,
            "svm.gamma" => {
                self.svm.gamma = if value == "auto" {
                    Gamma::Auto
                } else {
                    Gamma::Value(parse(key, value)?)
                }
            }
            "svm.kkt_tolerance" => self.svm.kkt_tolerance = parse(key, value)?,
            "svm.max_passes" => self.svm.max_passes = parse(key, value)?,
            "svm.cache_limit" => self.svm.cache_limit = parse(key, value)?,
            "classes" => self.classes = Some(parse_class_list(value)?),
            "seed" => {
                let seed: u64 = parse(key, value)?;
                self.seed = seed;
                self.tsne.random_state = seed;
                self.svm.seed = seed;
            }
            "threads" => self.threads = Some(parse(key, value)?),
            other => {
                return Err(Error::InvalidInput(format!("unknown config key {other:?}")));
            }
        }
        Ok(())
    }

    /// Loads a config file: one `key=value` per line, `#` comments.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::parse(
                    path.display().to_string(),
                    idx + 1,
                    format!("expected key=value, got {line:?}"),
                ));
            };
            self.set_key(key.trim(), value.trim()).map_err(|e| {
                Error::parse(path.display().to_string(), idx + 1, e.to_string())
            })?;
        }
        Ok(())
    }

    /// Semicolon-separated summary used as the report config snapshot.
    pub fn summary(&self) -> String {
        format!(
            "{}-grams; k={}; chi2={}; {}; perplexity={}; lr={}; theta={}; C={}; gamma={}; seed={}",
            self.ngram,
            self.rare_k,
            self.chi2_k,
            self.pca_label(),
            self.tsne.perplexity,
            self.tsne.learning_rate,
            self.tsne.theta,
            self.svm.c,
            match self.svm.gamma {
                Gamma::Auto => "auto".to_string(),
                Gamma::Value(v) => v.to_string(),
            },
            self.seed
        )
    }

    /// Figure-caption style title, e.g. `4-grams, no-PCA, perplexity=40, lr=200`.
    pub fn title(&self) -> String {
        format!(
            "{}-grams, {}, perplexity={}, lr={}",
            self.ngram,
            self.pca_label(),
            self.tsne.perplexity,
            self.tsne.learning_rate
        )
    }

    fn pca_label(&self) -> String {
        if self.pca_enabled {
            format!("PCA-{}", self.pca_dims)
        } else {
            "no-PCA".to_string()
        }
    }
}

fn parse_class_list(value: &str) -> Result<Vec<ClassLabel>> {
    let classes: Vec<ClassLabel> = value
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad class {t:?} in list")))
        })
        .collect::<Result<_>>()?;
    if classes.is_empty() {
        return Err(Error::InvalidInput("class filter must be nonempty".into()));
    }
    Ok(classes)
}

/// Parses a `--classes` style comma list.
pub fn parse_classes_flag(value: &str) -> Result<Vec<ClassLabel>> {
    parse_class_list(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_settings() {
        let config = PipelineConfig::default();
        assert_eq!(config.ngram, 4);
        assert_eq!(config.rare_k, 3);
        assert_eq!(config.chi2_k, 1000);
        assert!(!config.pca_enabled);
        assert_eq!(config.tsne.random_state, 42);
        assert_eq!(config.tsne.n_iter, 1000);
        assert_eq!(config.tsne.perplexity, 40.0);
        assert_eq!(config.tsne.early_exaggeration, 12.0);
        assert_eq!(config.tsne.learning_rate, 200.0);
        assert_eq!(config.svm.c, 1.0);
        assert_eq!(config.svm.gamma, Gamma::Auto);
    }

    #[test]
    fn file_keys_apply_and_flags_can_override() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(
            &path,
            "# comment\ntsne.perplexity=25\nngram.n=5\nclasses=2,3\nseed=7\n",
        )
        .unwrap();
        let mut config = PipelineConfig::default();
        config.apply_file(&path).unwrap();
        assert_eq!(config.tsne.perplexity, 25.0);
        assert_eq!(config.ngram, 5);
        assert_eq!(config.classes, Some(vec![2, 3]));
        assert_eq!(config.seed, 7);
        assert_eq!(config.tsne.random_state, 7, "master seed propagates");

        // Later assignment wins (flag override path).
        config.set_key("tsne.perplexity", "40").unwrap();
        assert_eq!(config.tsne.perplexity, 40.0);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        let mut config = PipelineConfig::default();
        assert!(config.set_key("tsne.perplexty", "40").is_err());
        assert!(config.set_key("ngram.n", "x").is_err());
        assert!(config.set_key("classes", "").is_err());
    }

    #[test]
    fn summary_and_title_formats() {
        let config = PipelineConfig::default();
        assert_eq!(config.title(), "4-grams, no-PCA, perplexity=40, lr=200");
        assert!(config.summary().contains("no-PCA"));
        assert!(!config.summary().contains(','), "summary must stay CSV-safe");
    }
}
