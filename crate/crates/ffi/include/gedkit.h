#ifndef GEDKIT_H
#define GEDKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum GedStatus {
  GED_STATUS_OK = 0,
  GED_STATUS_NULL_POINTER = 1,
  GED_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed CoNLL-U, JSON or JSON-lines input.
   */
  GED_STATUS_PARSE = 3,
  /**
   * Well-formed input that violates a precondition.
   */
  GED_STATUS_CONTRACT = 4,
  GED_STATUS_IO = 5,
  GED_STATUS_INTERNAL = 6,
} GedStatus;

/**
 * Trained detector. Opaque to C.
 */
typedef struct GedModel GedModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into the library on this thread.
 */
const char *ged_last_error_message(void);

/**
 * Library version, statically allocated.
 */
const char *ged_version(void);

/**
 * Injects errors into a CoNLL-U document and writes the outcomes as
 * JSON-lines to `*out_jsonl`.
 *
 * # Safety
 * `conllu` must be a NUL-terminated string; `out_jsonl` must be writable.
 */
enum GedStatus ged_inject_conllu(const char *conllu, uint64_t seed, char **out_jsonl);

/**
 * Trains the baseline on labeled JSON-lines. `scheme` is "binary",
 * "typed", or null for typed.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out_model` must be
 * writable.
 */
enum GedStatus ged_model_train_jsonl(const char *jsonl,
                                     const char *scheme,
                                     uint32_t epochs,
                                     uint64_t seed,
                                     struct GedModel **out_model);

/**
 * Loads a model from its JSON text.
 *
 * # Safety
 * `json` must be NUL-terminated; `out_model` must be writable.
 */
enum GedStatus ged_model_load(const char *json, struct GedModel **out_model);

/**
 * Serialises a model to JSON.
 *
 * # Safety
 * `model` must come from this library; `out_json` must be writable.
 */
enum GedStatus ged_model_save(const struct GedModel *model, char **out_json);

/**
 * # Safety
 * `model` must be null or come from this library and not be freed twice.
 */
void ged_model_free(struct GedModel *model);

/**
 * Labels every sentence of a JSON-lines file; the output uses the model's
 * scheme and keeps input ids and order.
 *
 * # Safety
 * `model` must come from this library; `jsonl` must be NUL-terminated;
 * `out_jsonl` must be writable.
 */
enum GedStatus ged_model_predict_jsonl(const struct GedModel *model,
                                       const char *jsonl,
                                       char **out_jsonl);

/**
 * Scores predictions against gold and writes the metrics report as JSON.
 * `scheme` may be null to use the gold file's scheme.
 *
 * # Safety
 * String arguments must be null (scheme only) or NUL-terminated;
 * `out_report` must be writable.
 */
enum GedStatus ged_score_jsonl(const char *pred,
                               const char *gold,
                               const char *scheme,
                               char **out_report);

/**
 * Feedback comments for typed predictions. `templates_json` may be null
 * for the built-in templates.
 *
 * # Safety
 * String arguments must be null (templates only) or NUL-terminated;
 * `out_jsonl` must be writable.
 */
enum GedStatus ged_feedback_jsonl(const char *pred, const char *templates_json, char **out_jsonl);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void ged_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GEDKIT_H */
