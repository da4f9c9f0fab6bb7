#ifndef MALVIZ_H
#define MALVIZ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum MvStatus {
  MvOk = 0,
  MvNullPointer = 1,
  MvInvalidUtf8 = 2,
  MvIoError = 3,
  MvParseError = 4,
  MvInvalidArgument = 5,
  MvNumericalError = 6,
  MvInternalError = 7,
} MvStatus;

/**
 * Sparse dataset handle: hashed n-gram rows plus the sample ids they came
 * from (row index placeholders when read from bare SVMLight files).
 */
typedef struct MvDataset MvDataset;

/**
 * 2-D embedding handle with the ids and labels it inherited.
 */
typedef struct MvEmbedding MvEmbedding;

/**
 * Trained one-vs-one SVM handle.
 */
typedef struct MvSvmModel MvSvmModel;

/**
 * t-SNE options mirrored into C. `theta` = 0 selects the exact engine.
 */
typedef struct MvTsneOptions {
  uint64_t random_state;
  uintptr_t n_iter;
  double perplexity;
  double early_exaggeration;
  double learning_rate;
  double theta;
} MvTsneOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string.
 */
const char *mv_version(void);

/**
 * Returns a copy of the calling thread's last error message (NULL when no
 * error was recorded). Free it with `mv_string_free`.
 */
char *mv_last_error_message(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library; it must not be
 * freed twice.
 */
void mv_string_free(char *s);

/**
 * Fills `out` with the default t-SNE options.
 *
 * # Safety
 * `out` must be NULL or a valid pointer to an `MvTsneOptions`.
 */
enum MvStatus mv_tsne_options_default(struct MvTsneOptions *out);

/**
 * Generates a deterministic synthetic corpus under `out_dir`.
 *
 * # Safety
 * `out_dir` must be a valid NUL-terminated string.
 */
enum MvStatus mv_synth_corpus(uint64_t seed,
                              double scale,
                              double mutation_rate,
                              uintptr_t template_len,
                              const char *out_dir);

/**
 * Vectorizes the corpus listed in a `sample_id,label` manifest into hashed
 * n-gram count rows (two passes, rare grams with total count < `rare_k`
 * pruned).
 *
 * # Safety
 * `manifest_path` must be a valid NUL-terminated string; `out` must be a
 * valid pointer.
 */
enum MvStatus mv_vectorize(const char *manifest_path,
                           uintptr_t ngram,
                           uint64_t rare_k,
                           struct MvDataset **out);

/**
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` must be valid.
 */
enum MvStatus mv_dataset_read_svmlight(const char *path, struct MvDataset **out);

/**
 * # Safety
 * `ds` must be a live dataset handle; `path` a valid string.
 */
enum MvStatus mv_dataset_write_svmlight(const struct MvDataset *ds, const char *path);

/**
 * Number of rows; 0 for a NULL handle.
 *
 * # Safety
 * `ds` must be NULL or a live dataset handle.
 */
uintptr_t mv_dataset_rows(const struct MvDataset *ds);

/**
 * Dimensionality of the index space; 0 for a NULL handle.
 *
 * # Safety
 * `ds` must be NULL or a live dataset handle.
 */
uintptr_t mv_dataset_dims(const struct MvDataset *ds);

/**
 * # Safety
 * `ds` must be NULL or a live handle; it must not be freed twice.
 */
void mv_dataset_free(struct MvDataset *ds);

/**
 * Chi-squared selection: fits on the labeled rows, keeps the `k` highest
 * scoring features and remaps them to a compact `[1, k]` space.
 *
 * # Safety
 * `ds` must be a live dataset handle; `out` must be valid.
 */
enum MvStatus mv_chi2_select(const struct MvDataset *ds, uintptr_t k, struct MvDataset **out);

/**
 * Embeds the dataset rows in two dimensions.
 *
 * # Safety
 * `ds` must be a live dataset handle; `options` NULL (defaults) or valid;
 * `out` must be valid.
 */
enum MvStatus mv_tsne_embed(const struct MvDataset *ds,
                            const struct MvTsneOptions *options,
                            struct MvEmbedding **out);

/**
 * Number of embedded points; 0 for a NULL handle.
 *
 * # Safety
 * `emb` must be NULL or a live embedding handle.
 */
uintptr_t mv_embedding_len(const struct MvEmbedding *emb);

/**
 * Copies point `i` into `x`/`y` and its label into `label` (0 = unlabeled).
 *
 * # Safety
 * `emb` must be a live embedding handle; `x`, `y`, `label` must be valid.
 */
enum MvStatus mv_embedding_point(const struct MvEmbedding *emb,
                                 uintptr_t i,
                                 double *x,
                                 double *y,
                                 uint32_t *label);

/**
 * Final KL divergence of the optimization (NaN for a NULL handle).
 *
 * # Safety
 * `emb` must be NULL or a live embedding handle.
 */
double mv_embedding_final_kl(const struct MvEmbedding *emb);

/**
 * KL divergence at the initial layout (NaN for a NULL handle).
 *
 * # Safety
 * `emb` must be NULL or a live embedding handle.
 */
double mv_embedding_initial_kl(const struct MvEmbedding *emb);

/**
 * Writes the embedding as CSV `sample_id,x,y,label`.
 *
 * # Safety
 * `emb` must be a live embedding handle; `path` a valid string.
 */
enum MvStatus mv_embedding_write_csv(const struct MvEmbedding *emb, const char *path);

/**
 * Renders the embedding as a standalone SVG scatter plot.
 *
 * # Safety
 * `emb` must be a live embedding handle; `title` and `path` valid strings.
 */
enum MvStatus mv_embedding_render_svg(const struct MvEmbedding *emb,
                                      const char *title,
                                      const char *path);

/**
 * # Safety
 * `emb` must be NULL or a live handle; it must not be freed twice.
 */
void mv_embedding_free(struct MvEmbedding *emb);

/**
 * Trains the calibrated one-vs-one RBF SVM on the labeled embedded rows.
 * `gamma <= 0` resolves to `1 / n_features`.
 *
 * # Safety
 * `emb` must be a live embedding handle; `out` must be valid.
 */
enum MvStatus mv_svm_train(const struct MvEmbedding *emb,
                           double c,
                           double gamma,
                           struct MvSvmModel **out);

/**
 * Number of classes in the model; 0 for a NULL handle.
 *
 * # Safety
 * `model` must be NULL or a live model handle.
 */
uintptr_t mv_svm_class_count(const struct MvSvmModel *model);

/**
 * Class id at position `i` of the model's class list.
 *
 * # Safety
 * `model` must be a live model handle; `out` must be valid.
 */
enum MvStatus mv_svm_class_at(const struct MvSvmModel *model, uintptr_t i, uint32_t *out);

/**
 * Calibrated class probabilities for one point, written to `probs` (length
 * `probs_len`, which must equal the class count). The row sums to one.
 *
 * # Safety
 * `model` must be a live model handle; `point` must hold `dim` doubles and
 * `probs` must hold `probs_len` doubles.
 */
enum MvStatus mv_svm_predict_proba(const struct MvSvmModel *model,
                                   const double *point,
                                   uintptr_t dim,
                                   double *probs,
                                   uintptr_t probs_len);

/**
 * Persists the model as text.
 *
 * # Safety
 * `model` must be a live model handle; `path` a valid string.
 */
enum MvStatus mv_svm_save(const struct MvSvmModel *model, const char *path);

/**
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` must be valid.
 */
enum MvStatus mv_svm_load(const char *path, struct MvSvmModel **out);

/**
 * # Safety
 * `model` must be NULL or a live handle; it must not be freed twice.
 */
void mv_svm_free(struct MvSvmModel *model);

/**
 * Multi-class logloss of a predictions CSV against a labeled manifest.
 *
 * # Safety
 * `predictions_path` and `truth_manifest_path` must be valid strings; `out`
 * must be valid.
 */
enum MvStatus mv_logloss_csv(const char *predictions_path,
                             const char *truth_manifest_path,
                             double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* MALVIZ_H */
