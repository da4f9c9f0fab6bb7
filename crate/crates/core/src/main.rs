//! `malviz` command-line interface.
//!
//! Stages hand artifacts to each other through files in the output
//! directory: `features.svm` + `ids.txt` (extract), `selected.svm` +
//! `chi2.model` (select), `pca.csv` + `pca.model` (pca), `embedding.csv` +
//! `kl_trace.csv` (tsne), `svm.model` (svm), `report.csv`/`report.txt` (cv),
//! `predictions.csv` (predict) and `plot.svg` (plot). `pipeline` chains
//! extract -> select -> [pca] -> tsne -> cv -> plot.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use malviz::config::{parse_classes_flag, PipelineConfig};
use malviz::corpus::{load_manifest, synth_corpus, ClassLabel, CorpusManifest, SynthParams};
use malviz::dense::DenseMatrix;
use malviz::error::{Error, Result};
use malviz::eval::{
    compare_spaces, logloss, write_reports_csv, write_reports_text, ExperimentReport,
    ProbPredictions,
};
use malviz::features::{read_svmlight, vectorize_corpus, vectorize_corpus_sizes, write_svmlight};
use malviz::plot::{render_svg, ScatterPlot};
use malviz::reduce::{pca_fit, pca_transform, read_projected_csv, write_projected_csv};
use malviz::select::fit_chi2;
use malviz::svm::{ovo_train, SvmModel};
use malviz::tsne::{read_embedding_csv, tsne_embed, write_embedding_csv, write_kl_trace_csv};

#[derive(Parser)]
#[command(
    name = "malviz",
    about = "Byte n-gram extraction, chi2 selection, t-SNE embedding and RBF-SVM evaluation for malware family corpora",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Plain-text key=value config file (flags override file values).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed (folds, t-SNE init, calibration splits).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker thread cap for all parallel stages (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Class filter, e.g. "2,3" or "4,5,6,7".
    #[arg(long, global = true)]
    classes: Option<String>,

    /// n-gram size in bytes.
    #[arg(long, global = true)]
    ngram: Option<usize>,

    /// Output directory for stage artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a deterministic synthetic corpus (hex dumps + manifest.csv).
    Synth {
        /// Fraction of the reference family counts, in (0, 1].
        #[arg(long, default_value_t = 0.092)]
        scale: f64,
        /// Per-byte substitution probability, in [0, 1).
        #[arg(long, default_value_t = 0.02)]
        mutation_rate: f64,
        /// Base template length in bytes (>= 64).
        #[arg(long, default_value_t = 4096)]
        template_len: usize,
    },
    /// Hash byte n-grams of a corpus into features.svm (+ ids.txt).
    Extract {
        /// Manifest CSV (sample_id,label); samples live next to it.
        #[arg(long)]
        manifest: PathBuf,
        /// Rare-gram pruning threshold.
        #[arg(long)]
        k: Option<u64>,
    },
    /// Chi-squared selection: features.svm -> selected.svm + chi2.model.
    Select {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Number of features to keep.
        #[arg(long)]
        k: Option<usize>,
    },
    /// PCA compression: selected.svm -> pca.csv + pca.model.
    Pca {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        dims: Option<usize>,
    },
    /// t-SNE embedding -> embedding.csv + kl_trace.csv.
    Tsne {
        /// Input (.svm or projected .csv); defaults to pca.csv when PCA is
        /// enabled, selected.svm otherwise.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Train the calibrated one-vs-one SVM on labeled rows -> svm.model.
    Svm {
        /// Input (.csv embedding or .svm dataset); default embedding.csv.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Train/CV accuracy in both spaces -> report.csv + report.txt.
    Cv {
        /// High-dimensional dataset (default selected.svm).
        #[arg(long)]
        high: Option<PathBuf>,
        /// 2-d embedding (default embedding.csv).
        #[arg(long)]
        low: Option<PathBuf>,
        /// Feature-set name in the report.
        #[arg(long)]
        name: Option<String>,
    },
    /// Probabilities for unlabeled embedded rows -> predictions.csv.
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        embedding: Option<PathBuf>,
    },
    /// Multi-class logloss of predictions against a labeled manifest.
    Logloss {
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Manifest CSV carrying the true labels.
        #[arg(long)]
        truth: PathBuf,
    },
    /// Render the embedding as an SVG scatter plot.
    Plot {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        title: Option<String>,
    },
    /// Chain extract -> select -> [pca] -> tsne -> cv -> plot.
    Pipeline {
        #[arg(long)]
        manifest: PathBuf,
        /// Comma list of n-gram sizes; multiple values run into per-n
        /// subdirectories and produce a combined report.
        #[arg(long)]
        ngrams: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn build_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = PipelineConfig::default();
    if let Some(path) = &cli.config {
        config.apply_file(path)?;
    }
    if let Some(seed) = cli.seed {
        config.set_key("seed", &seed.to_string())?;
    }
    if let Some(threads) = cli.threads {
        config.threads = Some(threads);
    }
    if let Some(classes) = &cli.classes {
        config.classes = Some(parse_classes_flag(classes)?);
    }
    if let Some(ngram) = cli.ngram {
        config.ngram = ngram;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    let config = build_config(&cli)?;
    if let Some(threads) = config.threads {
        // Ignore the error if a pool already exists (repeat invocations).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    std::fs::create_dir_all(&cli.out).map_err(|e| Error::io(&cli.out, e))?;
    let out = cli.out.clone();

    match &cli.command {
        Command::Synth {
            scale,
            mutation_rate,
            template_len,
        } => {
            let params = SynthParams {
                seed: config.seed,
                scale: *scale,
                mutation_rate: *mutation_rate,
                template_len: *template_len,
            };
            let manifest = synth_corpus(&params, &out)?;
            println!(
                "synth: {} samples in {} (manifest.csv)",
                manifest.len(),
                out.display()
            );
        }
        Command::Extract { manifest, k } => {
            let mut cfg = config.clone();
            if let Some(k) = k {
                cfg.rare_k = *k;
            }
            cmd_extract(manifest, &cfg, &out)?;
        }
        Command::Select { input, k } => {
            let mut cfg = config.clone();
            if let Some(k) = k {
                cfg.chi2_k = *k;
            }
            let input = input.clone().unwrap_or_else(|| out.join("features.svm"));
            cmd_select(&input, &cfg, &out)?;
        }
        Command::Pca { input, dims } => {
            let mut cfg = config.clone();
            if let Some(dims) = dims {
                cfg.pca_dims = *dims;
            }
            let input = input.clone().unwrap_or_else(|| out.join("selected.svm"));
            cmd_pca(&input, &cfg, &out)?;
        }
        Command::Tsne { input } => {
            let input = input.clone().unwrap_or_else(|| {
                if config.pca_enabled {
                    out.join("pca.csv")
                } else {
                    out.join("selected.svm")
                }
            });
            cmd_tsne(&input, &config, &out)?;
        }
        Command::Svm { input } => {
            let input = input.clone().unwrap_or_else(|| out.join("embedding.csv"));
            cmd_svm(&input, &config, &out)?;
        }
        Command::Cv { high, low, name } => {
            let high = high.clone().unwrap_or_else(|| out.join("selected.svm"));
            let low = low.clone().unwrap_or_else(|| out.join("embedding.csv"));
            let name = name
                .clone()
                .unwrap_or_else(|| format!("{}-byte grams", config.ngram));
            let report = cmd_cv(&high, &low, &name, &config)?;
            write_reports_csv(&out.join("report.csv"), std::slice::from_ref(&report))?;
            write_reports_text(&out.join("report.txt"), std::slice::from_ref(&report))?;
            print!("{}", report.text());
        }
        Command::Predict { model, embedding } => {
            let model = model.clone().unwrap_or_else(|| out.join("svm.model"));
            let embedding = embedding
                .clone()
                .unwrap_or_else(|| out.join("embedding.csv"));
            cmd_predict(&model, &embedding, &out)?;
        }
        Command::Logloss { predictions, truth } => {
            let predictions = predictions
                .clone()
                .unwrap_or_else(|| out.join("predictions.csv"));
            let value = cmd_logloss(&predictions, truth)?;
            std::fs::write(out.join("logloss.txt"), format!("logloss {value}\n"))
                .map_err(|e| Error::io(out.join("logloss.txt"), e))?;
            println!("logloss {value}");
        }
        Command::Plot { input, title } => {
            let input = input.clone().unwrap_or_else(|| out.join("embedding.csv"));
            let title = title.clone().unwrap_or_else(|| config.title());
            cmd_plot(&input, &title, &out)?;
        }
        Command::Pipeline { manifest, ngrams } => {
            let ngram_list: Vec<usize> = match ngrams {
                Some(list) => list
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse()
                            .map_err(|_| Error::InvalidInput(format!("bad ngram size {t:?}")))
                    })
                    .collect::<Result<_>>()?,
                None => vec![config.ngram],
            };
            if ngram_list.len() == 1 {
                let mut cfg = config.clone();
                cfg.ngram = ngram_list[0];
                let report = run_pipeline(manifest, &cfg, &out)?;
                write_reports_csv(&out.join("report.csv"), std::slice::from_ref(&report))?;
                write_reports_text(&out.join("report.txt"), std::slice::from_ref(&report))?;
                print!("{}", report.text());
            } else {
                let mut reports = Vec::new();
                for &n in &ngram_list {
                    let mut cfg = config.clone();
                    cfg.ngram = n;
                    let sub = out.join(format!("ngram{n}"));
                    std::fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
                    reports.push(run_pipeline(manifest, &cfg, &sub)?);
                }
                write_reports_csv(&out.join("report.csv"), &reports)?;
                write_reports_text(&out.join("report.txt"), &reports)?;
                for report in &reports {
                    print!("{}", report.text());
                }
            }
        }
    }
    Ok(())
}

fn require(path: &Path, producer: &str) -> Result<()> {
    if !path.exists() {
        return Err(Error::MissingArtifact {
            path: path.to_path_buf(),
            producer: producer.to_string(),
        });
    }
    Ok(())
}

fn load_filtered_manifest(path: &Path, config: &PipelineConfig) -> Result<CorpusManifest> {
    require(path, "synth (or supply your corpus manifest)")?;
    let manifest = load_manifest(path)?;
    let manifest = match &config.classes {
        Some(classes) => manifest.filter_classes(classes),
        None => manifest,
    };
    if manifest.is_empty() {
        return Err(Error::InvalidInput(
            "manifest is empty after class filtering".into(),
        ));
    }
    Ok(manifest)
}

fn write_ids(path: &Path, manifest: &CorpusManifest) -> Result<()> {
    let mut out = String::new();
    for entry in &manifest.entries {
        out.push_str(&entry.sample_id);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn read_ids(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn cmd_extract(manifest_path: &Path, config: &PipelineConfig, out: &Path) -> Result<()> {
    let manifest = load_filtered_manifest(manifest_path, config)?;
    let (dataset, sizes_label) = match &config.ngram_sizes {
        Some(sizes) => (
            vectorize_corpus_sizes(&manifest, sizes, config.rare_k)?,
            format!(
                "{}-gram union",
                sizes
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        ),
        None => (
            vectorize_corpus(&manifest, config.ngram, config.rare_k)?,
            format!("{}-grams", config.ngram),
        ),
    };
    write_svmlight(&dataset, &out.join("features.svm"))?;
    write_ids(&out.join("ids.txt"), &manifest)?;
    println!(
        "extract: {} rows, {}, k={} -> {}",
        dataset.n_rows(),
        sizes_label,
        config.rare_k,
        out.join("features.svm").display()
    );
    Ok(())
}

fn cmd_select(input: &Path, config: &PipelineConfig, out: &Path) -> Result<()> {
    require(input, "extract")?;
    let dataset = read_svmlight(input)?;
    let model = fit_chi2(&dataset, config.chi2_k)?;
    let selected = model.transform(&dataset);
    write_svmlight(&selected, &out.join("selected.svm"))?;
    model.save(&out.join("chi2.model"))?;
    println!(
        "select: kept {} of {} features -> {}",
        model.selected.len(),
        model.scores.len(),
        out.join("selected.svm").display()
    );
    Ok(())
}

/// Reads a feature artifact: SVMLight (`.svm`, no ids), an embedding CSV or
/// a projected CSV (dispatch on the header).
#[allow(clippy::type_complexity)]
fn read_features(
    path: &Path,
) -> Result<(Vec<Option<String>>, Vec<Option<ClassLabel>>, DenseMatrix)> {
    if path.extension().is_some_and(|e| e == "svm") {
        let ds = read_svmlight(path)?;
        let labels = ds.labels();
        return Ok((vec![None; ds.n_rows()], labels, ds.to_dense()));
    }
    let mut header = String::new();
    {
        use std::io::BufRead;
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        std::io::BufReader::new(file)
            .read_line(&mut header)
            .map_err(|e| Error::io(path, e))?;
    }
    if header.trim_end() == "sample_id,x,y,label" {
        let csv = read_embedding_csv(path)?;
        Ok((csv.ids.into_iter().map(Some).collect(), csv.labels, csv.y))
    } else {
        let csv = read_projected_csv(path)?;
        Ok((csv.ids.into_iter().map(Some).collect(), csv.labels, csv.x))
    }
}

fn resolve_ids(ids: Vec<Option<String>>, out: &Path) -> Result<Vec<String>> {
    if ids.iter().all(Option::is_some) {
        return Ok(ids.into_iter().flatten().collect());
    }
    let ids_path = out.join("ids.txt");
    require(&ids_path, "extract")?;
    let from_file = read_ids(&ids_path)?;
    if from_file.len() != ids.len() {
        return Err(Error::InvalidInput(format!(
            "{} has {} ids but the dataset has {} rows",
            ids_path.display(),
            from_file.len(),
            ids.len()
        )));
    }
    Ok(from_file)
}

fn cmd_pca(input: &Path, config: &PipelineConfig, out: &Path) -> Result<()> {
    require(input, "select")?;
    if !(30..=50).contains(&config.pca_dims) {
        eprintln!(
            "warning: pca dims {} outside the intended 30-50 range",
            config.pca_dims
        );
    }
    let dataset = read_svmlight(input)?;
    let labels = dataset.labels();
    let dense = dataset.to_dense();
    let model = pca_fit(&dense, config.pca_dims)?;
    let projected = pca_transform(&dense, &model)?;
    let ids = resolve_ids(vec![None; dense.n_rows()], out)?;
    write_projected_csv(&out.join("pca.csv"), &ids, &labels, &projected)?;
    model.save(&out.join("pca.model"))?;
    println!(
        "pca: {} dims (explained variance {:.4}) -> {}",
        config.pca_dims,
        model.explained_variance.iter().sum::<f64>(),
        out.join("pca.csv").display()
    );
    Ok(())
}

fn cmd_tsne(input: &Path, config: &PipelineConfig, out: &Path) -> Result<()> {
    require(input, if config.pca_enabled { "pca" } else { "select" })?;
    let (ids, labels, dense) = read_features(input)?;
    let ids = resolve_ids(ids, out)?;
    let embedding = tsne_embed(&dense, &config.tsne)?;
    write_embedding_csv(&out.join("embedding.csv"), &ids, &labels, &embedding.y)?;
    write_kl_trace_csv(&out.join("kl_trace.csv"), &embedding.kl_trace)?;
    println!(
        "tsne: {} points, KL {:.4} -> {:.4}, wrote {}",
        dense.n_rows(),
        embedding.initial_kl,
        embedding.final_kl,
        out.join("embedding.csv").display()
    );
    Ok(())
}

fn labeled_rows(
    labels: &[Option<ClassLabel>],
    x: &DenseMatrix,
) -> (Vec<usize>, Vec<ClassLabel>, DenseMatrix) {
    let idx: Vec<usize> = labels
        .iter()
        .enumerate()
        .filter_map(|(i, l)| l.map(|_| i))
        .collect();
    let y: Vec<ClassLabel> = idx.iter().map(|&i| labels[i].unwrap()).collect();
    let rows = x.select_rows(&idx);
    (idx, y, rows)
}

fn cmd_svm(input: &Path, config: &PipelineConfig, out: &Path) -> Result<()> {
    require(input, "tsne")?;
    let (_, labels, dense) = read_features(input)?;
    let (_, y, rows) = labeled_rows(&labels, &dense);
    if y.is_empty() {
        return Err(Error::InvalidInput("no labeled rows to train on".into()));
    }
    let model = ovo_train(&rows, &y, &config.svm)?;
    model.save(&out.join("svm.model"))?;
    let biased = model.machines.iter().filter(|m| m.platt_biased).count();
    println!(
        "svm: {} classes, {} machines ({} with biased calibration), gamma {} -> {}",
        model.classes.len(),
        model.machines.len(),
        biased,
        model.gamma,
        out.join("svm.model").display()
    );
    Ok(())
}

fn cmd_cv(
    high_path: &Path,
    low_path: &Path,
    name: &str,
    config: &PipelineConfig,
) -> Result<ExperimentReport> {
    require(high_path, "select")?;
    require(low_path, "tsne")?;
    let high = read_svmlight(high_path)?;
    let high_labels = high.labels();
    let low = read_embedding_csv(low_path)?;
    if high.n_rows() != low.y.n_rows() || high_labels != low.labels {
        return Err(Error::InvalidInput(format!(
            "row misalignment between {} and {}",
            high_path.display(),
            low_path.display()
        )));
    }
    let (idx, y, low_rows) = labeled_rows(&low.labels, &low.y);
    let high_rows = high.to_dense().select_rows(&idx);
    let mut report = compare_spaces(
        &high_rows,
        &low_rows,
        &y,
        &config.svm,
        config.seed,
        name,
        &config.summary(),
    )?;
    if config.pca_enabled {
        report
            .caveats
            .push(format!("PCA enabled ({} dims) before t-SNE", config.pca_dims));
    }
    Ok(report)
}

fn cmd_predict(model_path: &Path, embedding_path: &Path, out: &Path) -> Result<()> {
    require(model_path, "svm")?;
    require(embedding_path, "tsne")?;
    let model = SvmModel::load(model_path)?;
    let embedding = read_embedding_csv(embedding_path)?;
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for i in 0..embedding.y.n_rows() {
        if embedding.labels[i].is_none() {
            ids.push(embedding.ids[i].clone());
            rows.push(model.predict_proba(embedding.y.row(i))?);
        }
    }
    let probs = if rows.is_empty() {
        DenseMatrix::zeros(0, model.classes.len())
    } else {
        DenseMatrix::from_rows(&rows)?
    };
    let predictions = ProbPredictions {
        classes: model.classes.clone(),
        sample_ids: ids,
        probs,
    };
    predictions.write_csv(&out.join("predictions.csv"))?;
    println!(
        "predict: {} unlabeled rows -> {}",
        predictions.sample_ids.len(),
        out.join("predictions.csv").display()
    );
    Ok(())
}

fn cmd_logloss(predictions_path: &Path, truth_path: &Path) -> Result<f64> {
    require(predictions_path, "predict")?;
    let predictions = ProbPredictions::read_csv(predictions_path)?;
    let manifest = load_manifest(truth_path)?;
    let mut label_of = std::collections::HashMap::new();
    for entry in &manifest.entries {
        if let Some(label) = entry.label {
            label_of.insert(entry.sample_id.as_str(), label);
        }
    }
    let truth: Vec<ClassLabel> = predictions
        .sample_ids
        .iter()
        .map(|id| {
            label_of.get(id.as_str()).copied().ok_or_else(|| {
                Error::InvalidInput(format!("sample {id} has no label in the truth manifest"))
            })
        })
        .collect::<Result<_>>()?;
    logloss(&predictions, &truth)
}

fn cmd_plot(input: &Path, title: &str, out: &Path) -> Result<()> {
    require(input, "tsne")?;
    let embedding = read_embedding_csv(input)?;
    let points: Vec<(f64, f64, ClassLabel)> = (0..embedding.y.n_rows())
        .map(|i| {
            (
                embedding.y.get(i, 0),
                embedding.y.get(i, 1),
                embedding.labels[i].unwrap_or(0),
            )
        })
        .collect();
    let svg = render_svg(&ScatterPlot::new(points, title))?;
    let path = out.join("plot.svg");
    std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
    println!("plot: {}", path.display());
    Ok(())
}

fn run_pipeline(manifest: &Path, config: &PipelineConfig, out: &Path) -> Result<ExperimentReport> {
    cmd_extract(manifest, config, out)?;
    cmd_select(&out.join("features.svm"), config, out)?;
    let tsne_input = if config.pca_enabled {
        cmd_pca(&out.join("selected.svm"), config, out)?;
        out.join("pca.csv")
    } else {
        out.join("selected.svm")
    };
    cmd_tsne(&tsne_input, config, out)?;
    let name = format!("{}-byte grams", config.ngram);
    let report = cmd_cv(
        &out.join("selected.svm"),
        &out.join("embedding.csv"),
        &name,
        config,
    )?;
    let mut title = config.title();
    if let Some(classes) = &config.classes {
        let list = classes
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(",");
        let mut t = String::new();
        let _ = write!(t, "classes {list}, {title}");
        title = t;
    }
    cmd_plot(&out.join("embedding.csv"), &title, out)?;
    Ok(report)
}
