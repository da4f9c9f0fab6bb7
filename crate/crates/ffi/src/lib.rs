//! C ABI for the malviz pipeline.
//!
//! Conventions: every fallible function returns an [`MvStatus`]; results come
//! out through `out` pointers holding opaque handles that must be released
//! with the matching `_free` function. The last error message of the calling
//! thread is available via [`mv_last_error_message`]. The header
//! `include/malviz.h` is generated by cbindgen at build time.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use malviz::corpus::{load_manifest, synth_corpus, ClassLabel, SynthParams};
use malviz::error::Error;
use malviz::eval::logloss as eval_logloss;
use malviz::eval::ProbPredictions;
use malviz::features::{read_svmlight, vectorize_corpus, write_svmlight, SparseDataset};
use malviz::plot::{render_svg, ScatterPlot};
use malviz::select::fit_chi2;
use malviz::svm::{ovo_train, Gamma, SvmConfig, SvmModel};
use malviz::tsne::{tsne_embed, write_embedding_csv, TsneConfig};
use malviz::DenseMatrix;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvStatus {
    MvOk = 0,
    MvNullPointer = 1,
    MvInvalidUtf8 = 2,
    MvIoError = 3,
    MvParseError = 4,
    MvInvalidArgument = 5,
    MvNumericalError = 6,
    MvInternalError = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).ok();
    });
}

fn status_of(err: &Error) -> MvStatus {
    match err {
        Error::Io { .. } | Error::MissingArtifact { .. } => MvStatus::MvIoError,
        Error::Parse { .. } => MvStatus::MvParseError,
        Error::InvalidInput(_) => MvStatus::MvInvalidArgument,
        Error::Numerical(_) => MvStatus::MvNumericalError,
    }
}

fn fail(err: Error) -> MvStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

/// Runs a fallible body, translating panics into `MvInternalError`.
fn guarded(body: impl FnOnce() -> MvStatus) -> MvStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            MvStatus::MvInternalError
        }
    }
}

/// # Safety
/// `ptr` must be NULL or a valid NUL-terminated string.
unsafe fn cstr_arg<'a>(ptr: *const c_char) -> Result<&'a str, MvStatus> {
    if ptr.is_null() {
        set_error("null pointer argument");
        return Err(MvStatus::MvNullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        MvStatus::MvInvalidUtf8
    })
}

fn write_out<T>(out: *mut *mut T, value: T) -> MvStatus {
    if out.is_null() {
        set_error("null out pointer");
        return MvStatus::MvNullPointer;
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    MvStatus::MvOk
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn mv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Returns a copy of the calling thread's last error message (NULL when no
/// error was recorded). Free it with `mv_string_free`.
#[no_mangle]
pub extern "C" fn mv_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(message) => message.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library; it must not be
/// freed twice.
#[no_mangle]
pub unsafe extern "C" fn mv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Sparse dataset handle: hashed n-gram rows plus the sample ids they came
/// from (row index placeholders when read from bare SVMLight files).
pub struct MvDataset {
    dataset: SparseDataset,
    ids: Vec<String>,
}

/// 2-D embedding handle with the ids and labels it inherited.
pub struct MvEmbedding {
    y: DenseMatrix,
    ids: Vec<String>,
    labels: Vec<Option<ClassLabel>>,
    initial_kl: f64,
    final_kl: f64,
}

/// Trained one-vs-one SVM handle.
pub struct MvSvmModel {
    model: SvmModel,
}

/// t-SNE options mirrored into C. `theta` = 0 selects the exact engine.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MvTsneOptions {
    pub random_state: u64,
    pub n_iter: usize,
    pub perplexity: f64,
    pub early_exaggeration: f64,
    pub learning_rate: f64,
    pub theta: f64,
}

impl MvTsneOptions {
    fn to_config(self) -> TsneConfig {
        TsneConfig {
            random_state: self.random_state,
            n_iter: self.n_iter,
            perplexity: self.perplexity,
            early_exaggeration: self.early_exaggeration,
            learning_rate: self.learning_rate,
            theta: self.theta,
            ..TsneConfig::default()
        }
    }
}

/// Fills `out` with the default t-SNE options.
///
/// # Safety
/// `out` must be NULL or a valid pointer to an `MvTsneOptions`.
#[no_mangle]
pub unsafe extern "C" fn mv_tsne_options_default(out: *mut MvTsneOptions) -> MvStatus {
    if out.is_null() {
        set_error("null out pointer");
        return MvStatus::MvNullPointer;
    }
    let defaults = TsneConfig::default();
    *out = MvTsneOptions {
        random_state: defaults.random_state,
        n_iter: defaults.n_iter,
        perplexity: defaults.perplexity,
        early_exaggeration: defaults.early_exaggeration,
        learning_rate: defaults.learning_rate,
        theta: defaults.theta,
    };
    MvStatus::MvOk
}

/// Generates a deterministic synthetic corpus under `out_dir`.
///
/// # Safety
/// `out_dir` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mv_synth_corpus(
    seed: u64,
    scale: f64,
    mutation_rate: f64,
    template_len: usize,
    out_dir: *const c_char,
) -> MvStatus {
    guarded(|| {
        let dir = match cstr_arg(out_dir) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let params = SynthParams {
            seed,
            scale,
            mutation_rate,
            template_len,
        };
        match synth_corpus(&params, Path::new(dir)) {
            Ok(_) => MvStatus::MvOk,
            Err(e) => fail(e),
        }
    })
}

/// Vectorizes the corpus listed in a `sample_id,label` manifest into hashed
/// n-gram count rows (two passes, rare grams with total count < `rare_k`
/// pruned).
///
/// # Safety
/// `manifest_path` must be a valid NUL-terminated string; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mv_vectorize(
    manifest_path: *const c_char,
    ngram: usize,
    rare_k: u64,
    out: *mut *mut MvDataset,
) -> MvStatus {
    guarded(|| {
        let path = match cstr_arg(manifest_path) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let manifest = match load_manifest(Path::new(path)) {
            Ok(m) => m,
            Err(e) => return fail(e),
        };
        let ids = manifest
            .entries
            .iter()
            .map(|e| e.sample_id.clone())
            .collect();
        match vectorize_corpus(&manifest, ngram, rare_k) {
            Ok(dataset) => write_out(out, MvDataset { dataset, ids }),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mv_dataset_read_svmlight(
    path: *const c_char,
    out: *mut *mut MvDataset,
) -> MvStatus {
    guarded(|| {
        let path = match cstr_arg(path) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match read_svmlight(Path::new(path)) {
            Ok(dataset) => {
                let ids = (0..dataset.n_rows()).map(|i| format!("r{i}")).collect();
                write_out(out, MvDataset { dataset, ids })
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `ds` must be a live dataset handle; `path` a valid string.
#[no_mangle]
pub unsafe extern "C" fn mv_dataset_write_svmlight(
    ds: *const MvDataset,
    path: *const c_char,
) -> MvStatus {
    guarded(|| {
        if ds.is_null() {
            set_error("null dataset handle");
            return MvStatus::MvNullPointer;
        }
        let path = match cstr_arg(path) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match write_svmlight(&(*ds).dataset, Path::new(path)) {
            Ok(()) => MvStatus::MvOk,
            Err(e) => fail(e),
        }
    })
}

/// Number of rows; 0 for a NULL handle.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn mv_dataset_rows(ds: *const MvDataset) -> usize {
    if ds.is_null() {
        return 0;
    }
    (*ds).dataset.n_rows()
}

/// Dimensionality of the index space; 0 for a NULL handle.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn mv_dataset_dims(ds: *const MvDataset) -> usize {
    if ds.is_null() {
        return 0;
    }
    (*ds).dataset.dimensionality
}

/// # Safety
/// `ds` must be NULL or a live handle; it must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mv_dataset_free(ds: *mut MvDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Chi-squared selection: fits on the labeled rows, keeps the `k` highest
/// scoring features and remaps them to a compact `[1, k]` space.
///
/// # Safety
/// `ds` must be a live dataset handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mv_chi2_select(
    ds: *const MvDataset,
    k: usize,
    out: *mut *mut MvDataset,
) -> MvStatus {
    guarded(|| {
        if ds.is_null() {
            set_error("null dataset handle");
            return MvStatus::MvNullPointer;
        }
        let handle = &*ds;
        match fit_chi2(&handle.dataset, k) {
            Ok(model) => write_out(
                out,
                MvDataset {
                    dataset: model.transform(&handle.dataset),
                    ids: handle.ids.clone(),
                },
            ),
            Err(e) => fail(e),
        }
    })
}

/// Embeds the dataset rows in two dimensions.
///
/// # Safety
/// `ds` must be a live dataset handle; `options` NULL (defaults) or valid;
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mv_tsne_embed(
    ds: *const MvDataset,
    options: *const MvTsneOptions,
    out: *mut *mut MvEmbedding,
) -> MvStatus {
    guarded(|| {
        if ds.is_null() {
            set_error("null dataset handle");
            return MvStatus::MvNullPointer;
        }
        let handle = &*ds;
        let config = if options.is_null() {
            TsneConfig::default()
        } else {
            (*options).to_config()
        };
        let dense = handle.dataset.to_dense();
        match tsne_embed(&dense, &config) {
            Ok(embedding) => write_out(
                out,
                MvEmbedding {
                    y: embedding.y,
                    ids: handle.ids.clone(),
                    labels: handle.dataset.labels(),
                    initial_kl: embedding.initial_kl,
                    final_kl: embedding.final_kl,
                },
            ),
            Err(e) => fail(e),
        }
    })
}

/// Number of embedded points; 0 for a NULL handle.
///
/// # Safety
/// `emb` must be NULL or a live embedding handle.
#[no_mangle]
pub unsafe extern "C" fn mv_embedding_len(emb: *const MvEmbedding) -> usize {
    if emb.is_null() {
        return 0;
    }
    (*emb).y.n_rows()
}

/// Copies point `i` into `x`/`y` and its label into `label` (0 = unlabeled).
///
/// # Safety
/// `emb` must be a live embedding handle; `x`, `y`, `label` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mv_embedding_point(
    emb: *const MvEmbedding,
    i: usize,
    x: *mut f64,
    y: *mut f64,
    label: *mut u32,
) -> MvStatus {
    guarded(|| {
        if emb.is_null() || x.is_null() || y.is_null() || label.is_null() {
            set_error("null pointer argument");
            return MvStatus::MvNullPointer;
        }
        let handle = &*emb;
        if i >= handle.y.n_rows() {
            set_error(format!("point index {i} out of range"));
            return MvStatus::MvInvalidArgument;
        }
        *x = handle.y.get(i, 0);
        *y = handle.y.get(i, 1);
        *label = handle.labels[i].unwrap_or(0);
        MvStatus::MvOk
    })
}

/// Final KL divergence of the optimization (NaN for a NULL handle).
///
/// # Safety
/// `emb` must be NULL or a live embedding handle.
#[no_mangle]
pub unsafe extern "C" fn mv_embedding_final_kl(emb: *const MvEmbedding) -> f64 {
    if emb.is_null() {
        return f64::NAN;
    }
    (*emb).final_kl
}

/// KL divergence at the initial layout (NaN for a NULL handle).
///
/// # Safety
/// `emb` must be NULL or a live embedding handle.
#[no_mangle]
pub unsafe extern "C" fn mv_embedding_initial_kl(emb: *const MvEmbedding) -> f64 {
    if emb.is_null() {
        return f64::NAN;
    }
    (*emb).initial_kl
}

/// Writes the embedding as CSV `sample_id,x,y,label`.
///
/// # Safety
/// `emb` must be a live embedding handle; `path` a valid string.
#[no_mangle]
pub unsafe extern "C" fn mv_embedding_write_csv(
    emb: *const MvEmbedding,
    path: *const c_char,
) -> MvStatus {
    guarded(|| {
        if emb.is_null() {
            set_error("null embedding handle");
            return MvStatus::MvNullPointer;
        }
        let path = match cstr_arg(path) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let handle = &*emb;
        match write_embedding_csv(Path::new(path), &handle.ids, &handle.labels, &handle.y) {
            Ok(()) => MvStatus::MvOk,
            Err(e) => fail(e),
        }
    })
}

/// Renders the embedding as a standalone SVG scatter plot.
///
/// # Safety
/// `emb` must be a live embedding handle; `title` and `path` valid strings.
#[no_mangle]
pub unsafe extern "C" fn mv_embedding_render_svg(
    emb: *const MvEmbedding,
    title: *const c_char,
    path: *const c_char,
) -> MvStatus {
    guarded(|| {
        if emb.is_null() {
            set_error("null embedding handle");
            return MvStatus::MvNullPointer;
        }
        let title = match cstr_arg(title) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let path = match cstr_arg(path) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let handle = &*emb;
        let points: Vec<(f64, f64, ClassLabel)> = (0..handle.y.n_rows())
            .map(|i| {
                (
                    handle.y.get(i, 0),
                    handle.y.get(i, 1),
                    handle.labels[i].unwrap_or(0),
                )
            })
            .collect();
        match render_svg(&ScatterPlot::new(points, title))
            .and_then(|svg| std::fs::write(path, svg).map_err(|e| Error::io(path, e)))
        {
            Ok(()) => MvStatus::MvOk,
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `emb` must be NULL or a live handle; it must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mv_embedding_free(emb: *mut MvEmbedding) {
    if !emb.is_null() {
        drop(Box::from_raw(emb));
    }
}

/// Trains the calibrated one-vs-one RBF SVM on the labeled embedded rows.
/// `gamma <= 0` resolves to `1 / n_features`.
///
/// # Safety
/// `emb` must be a live embedding handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mv_svm_train(
    emb: *const MvEmbedding,
    c: f64,
    gamma: f64,
    out: *mut *mut MvSvmModel,
) -> MvStatus {
    guarded(|| {
        if emb.is_null() {
            set_error("null embedding handle");
            return MvStatus::MvNullPointer;
        }
        let handle = &*emb;
        let idx: Vec<usize> = handle
            .labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|_| i))
            .collect();
        if idx.is_empty() {
            set_error("no labeled rows to train on");
            return MvStatus::MvInvalidArgument;
        }
        let x = handle.y.select_rows(&idx);
        let y: Vec<ClassLabel> = idx.iter().map(|&i| handle.labels[i].unwrap()).collect();
        let config = SvmConfig {
            c,
            gamma: if gamma > 0.0 {
                Gamma::Value(gamma)
            } else {
                Gamma::Auto
            },
            ..SvmConfig::default()
        };
        match ovo_train(&x, &y, &config) {
            Ok(model) => write_out(out, MvSvmModel { model }),
            Err(e) => fail(e),
        }
    })
}

/// Number of classes in the model; 0 for a NULL handle.
///
/// # Safety
/// `model` must be NULL or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn mv_svm_class_count(model: *const MvSvmModel) -> usize {
    if model.is_null() {
        return 0;
    }
    (*model).model.classes.len()
}

/// Class id at position `i` of the model's class list.
///
/// # Safety
/// `model` must be a live model handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mv_svm_class_at(
    model: *const MvSvmModel,
    i: usize,
    out: *mut u32,
) -> MvStatus {
    guarded(|| {
        if model.is_null() || out.is_null() {
            set_error("null pointer argument");
            return MvStatus::MvNullPointer;
        }
        let classes = &(*model).model.classes;
        if i >= classes.len() {
            set_error(format!("class index {i} out of range"));
            return MvStatus::MvInvalidArgument;
        }
        *out = classes[i];
        MvStatus::MvOk
    })
}

/// Calibrated class probabilities for one point, written to `probs` (length
/// `probs_len`, which must equal the class count). The row sums to one.
///
/// # Safety
/// `model` must be a live model handle; `point` must hold `dim` doubles and
/// `probs` must hold `probs_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mv_svm_predict_proba(
    model: *const MvSvmModel,
    point: *const f64,
    dim: usize,
    probs: *mut f64,
    probs_len: usize,
) -> MvStatus {
    guarded(|| {
        if model.is_null() || point.is_null() || probs.is_null() {
            set_error("null pointer argument");
            return MvStatus::MvNullPointer;
        }
        let handle = &(*model).model;
        if probs_len != handle.classes.len() {
            set_error(format!(
                "probs buffer holds {probs_len} slots, model has {} classes",
                handle.classes.len()
            ));
            return MvStatus::MvInvalidArgument;
        }
        let x = std::slice::from_raw_parts(point, dim);
        match handle.predict_proba(x) {
            Ok(row) => {
                let out = std::slice::from_raw_parts_mut(probs, probs_len);
                out.copy_from_slice(&row);
                MvStatus::MvOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Persists the model as text.
///
/// # Safety
/// `model` must be a live model handle; `path` a valid string.
#[no_mangle]
pub unsafe extern "C" fn mv_svm_save(model: *const MvSvmModel, path: *const c_char) -> MvStatus {
    guarded(|| {
        if model.is_null() {
            set_error("null model handle");
            return MvStatus::MvNullPointer;
        }
        let path = match cstr_arg(path) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match (*model).model.save(Path::new(path)) {
            Ok(()) => MvStatus::MvOk,
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mv_svm_load(path: *const c_char, out: *mut *mut MvSvmModel) -> MvStatus {
    guarded(|| {
        let path = match cstr_arg(path) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match SvmModel::load(Path::new(path)) {
            Ok(model) => write_out(out, MvSvmModel { model }),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `model` must be NULL or a live handle; it must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mv_svm_free(model: *mut MvSvmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Multi-class logloss of a predictions CSV against a labeled manifest.
///
/// # Safety
/// `predictions_path` and `truth_manifest_path` must be valid strings; `out`
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn mv_logloss_csv(
    predictions_path: *const c_char,
    truth_manifest_path: *const c_char,
    out: *mut f64,
) -> MvStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null out pointer");
            return MvStatus::MvNullPointer;
        }
        let predictions_path = match cstr_arg(predictions_path) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let truth_path = match cstr_arg(truth_manifest_path) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let predictions = match ProbPredictions::read_csv(Path::new(predictions_path)) {
            Ok(p) => p,
            Err(e) => return fail(e),
        };
        let manifest = match load_manifest(Path::new(truth_path)) {
            Ok(m) => m,
            Err(e) => return fail(e),
        };
        let mut label_of = std::collections::HashMap::new();
        for entry in &manifest.entries {
            if let Some(label) = entry.label {
                label_of.insert(entry.sample_id.clone(), label);
            }
        }
        let mut truth = Vec::with_capacity(predictions.sample_ids.len());
        for id in &predictions.sample_ids {
            match label_of.get(id) {
                Some(&label) => truth.push(label),
                None => {
                    set_error(format!("sample {id} has no label in the truth manifest"));
                    return MvStatus::MvInvalidArgument;
                }
            }
        }
        match eval_logloss(&predictions, &truth) {
            Ok(value) => {
                *out = value;
                MvStatus::MvOk
            }
            Err(e) => fail(e),
        }
    })
}
