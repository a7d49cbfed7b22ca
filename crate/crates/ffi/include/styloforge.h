#ifndef STYLOFORGE_H
#define STYLOFORGE_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SfStatus {
  SF_STATUS_OK = 0,
  SF_STATUS_NULL_POINTER = 1,
  SF_STATUS_INVALID_ARGUMENT = 2,
  SF_STATUS_IO = 3,
  SF_STATUS_FORMAT = 4,
  SF_STATUS_NUMERIC = 5,
  /**
   * Generation produced no sentence (overlength, empty or unseen context).
   */
  SF_STATUS_REJECTED = 6,
  SF_STATUS_BUFFER_TOO_SMALL = 7,
  SF_STATUS_PANIC = 8,
  SF_STATUS_FAILURE = 9,
} SfStatus;

/**
 * Opaque feature space plus linear classifier.
 */
typedef struct SfAttributor SfAttributor;

/**
 * Opaque n-gram language model.
 */
typedef struct SfNglm SfNglm;

/**
 * Opaque LSTM language model.
 */
typedef struct SfRnnlm SfRnnlm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * NUL-terminated library version; never freed.
 */
const char *sf_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call on this thread.
 */
const char *sf_last_error_message(void);

/**
 * Temperature transform of a probability vector into `out` (same length).
 *
 * # Safety
 * `probs` and `out` must point to `len` doubles.
 */
enum SfStatus sf_apply_temperature(const double *probs,
                                   size_t len,
                                   double temperature,
                                   double *out);

/**
 * Fit an unsmoothed n-gram model on `n` sentences.
 *
 * # Safety
 * `sentences` must point to `n` NUL-terminated strings; `out` must be writable.
 */
enum SfStatus sf_nglm_fit(const char *const *sentences,
                          size_t n,
                          size_t order,
                          struct SfNglm **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SfStatus sf_nglm_load(const char *path, struct SfNglm **out);

/**
 * # Safety
 * `model` must be a live handle and `path` a NUL-terminated string.
 */
enum SfStatus sf_nglm_save(const struct SfNglm *model, const char *path);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void sf_nglm_free(struct SfNglm *model);

/**
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum SfStatus sf_nglm_vocab_size(const struct SfNglm *model, size_t *out);

/**
 * Per-character perplexity of `n` sentences.
 *
 * # Safety
 * `model` must be a live handle, `sentences` must point to `n` strings and
 * `out` must be writable.
 */
enum SfStatus sf_nglm_perplexity(const struct SfNglm *model,
                                 const char *const *sentences,
                                 size_t n,
                                 double *out);

/**
 * Sample one sentence started from the seed sentence `seed_text`, as the
 * first sentence of a synthetic document would be.
 *
 * # Safety
 * `model` must be a live handle, `seed_text` a NUL-terminated string, `buf`
 * writable for `buf_len` bytes and `out_len` writable.
 */
enum SfStatus sf_nglm_generate(const struct SfNglm *model,
                               const char *seed_text,
                               double temperature,
                               size_t max_chars,
                               uint64_t rng_seed,
                               char *buf,
                               size_t buf_len,
                               size_t *out_len);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SfStatus sf_rnnlm_load(const char *path, struct SfRnnlm **out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void sf_rnnlm_free(struct SfRnnlm *model);

/**
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum SfStatus sf_rnnlm_vocab_size(const struct SfRnnlm *model, size_t *out);

/**
 * # Safety
 * As for [`sf_nglm_perplexity`].
 */
enum SfStatus sf_rnnlm_perplexity(const struct SfRnnlm *model,
                                  const char *const *sentences,
                                  size_t n,
                                  double *out);

/**
 * # Safety
 * As for [`sf_nglm_generate`].
 */
enum SfStatus sf_rnnlm_generate(const struct SfRnnlm *model,
                                const char *seed_text,
                                double temperature,
                                size_t max_chars,
                                uint64_t rng_seed,
                                char *buf,
                                size_t buf_len,
                                size_t *out_len);

/**
 * Train on `n` labeled documents with a fixed feature size and C.
 *
 * # Safety
 * `texts` and `labels` must each point to `n` strings; `out` must be writable.
 */
enum SfStatus sf_attributor_fit(const char *const *texts,
                                const char *const *labels,
                                size_t n,
                                size_t max_features,
                                double c,
                                uint64_t seed,
                                struct SfAttributor **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SfStatus sf_attributor_load(const char *path, struct SfAttributor **out);

/**
 * # Safety
 * `attributor` must be a live handle and `path` a NUL-terminated string.
 */
enum SfStatus sf_attributor_save(const struct SfAttributor *attributor, const char *path);

/**
 * # Safety
 * `attributor` must be null or a handle not yet freed.
 */
void sf_attributor_free(struct SfAttributor *attributor);

/**
 * # Safety
 * `attributor` must be a live handle; `out` must be writable.
 */
enum SfStatus sf_attributor_class_count(const struct SfAttributor *attributor, size_t *out);

/**
 * Predicted author of `text`, written into `buf`.
 *
 * # Safety
 * `attributor` must be a live handle, `text` a NUL-terminated string, `buf`
 * writable for `buf_len` bytes and `out_len` writable.
 */
enum SfStatus sf_attributor_predict(const struct SfAttributor *attributor,
                                    const char *text,
                                    char *buf,
                                    size_t buf_len,
                                    size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STYLOFORGE_H */
