#ifndef KPA_H
#define KPA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  KPA_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  KPA_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  KPA_STATUS_INVALID_UTF8 = 2,
  /**
   * A numeric argument was out of range.
   */
  KPA_STATUS_INVALID_ARGUMENT = 3,
  /**
   * A JSON argument did not parse or did not fit the expected shape.
   */
  KPA_STATUS_INVALID_JSON = 4,
  /**
   * The scorer failed or does not support the request.
   */
  KPA_STATUS_SCORER = 5,
  /**
   * Key point extraction rejected its input.
   */
  KPA_STATUS_MINING = 6,
  /**
   * A bug: the library panicked. The call had no effect.
   */
  KPA_STATUS_INTERNAL = 7,
} KpaStatus;

/**
 * Sentence sentiment label.
 */
typedef enum {
  KPA_LABEL_NEG = 0,
  KPA_LABEL_NEUT = 1,
  KPA_LABEL_POS = 2,
} KpaLabel;

/**
 * Opaque scorer handle.
 */
typedef struct KpaScorer KpaScorer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *kpa_last_error(void);

/**
 * Library version, a static string.
 */
const char *kpa_version(void);

/**
 * Term-overlap scorer; supports match scoring only.
 *
 * # Safety
 * `out` must be writable.
 */
KpaStatus kpa_scorer_new_lexical(KpaScorer **out);

/**
 * Lookup-table scorer from a score table document (the format of the
 * `--table` files).
 *
 * # Safety
 * `table_json` must be a NUL-terminated string; `out` must be writable.
 */
KpaStatus kpa_scorer_new_table(const char *table_json, KpaScorer **out);

/**
 * Releases a scorer. Null is ignored.
 *
 * # Safety
 * `scorer` must come from a constructor and not be used afterwards.
 */
void kpa_scorer_free(KpaScorer *scorer);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void kpa_string_free(char *s);

/**
 * Match score of `sentence` (comment role) against key point `kp`, in [0, 1].
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
KpaStatus kpa_match_score(const KpaScorer *scorer,
                          const char *sentence,
                          const char *kp,
                          double *out);

/**
 * Sentence label at sentiment threshold `t_s`.
 *
 * # Safety
 * Pointers must be valid; `text` NUL-terminated.
 */
KpaStatus kpa_classify_sentence(const KpaScorer *scorer,
                                const char *text,
                                double t_s,
                                KpaLabel *out);

/**
 * Cohen's kappa of two binary label arrays of length `n` (nonzero = yes).
 *
 * # Safety
 * `a` and `b` must each point to `n` readable bytes.
 */
KpaStatus kpa_cohen_kappa(const uint8_t *a, const uint8_t *b, size_t n, double *out);

/**
 * Greedy key point extraction.
 *
 * Request: `{"candidates": [{id, text, quality, kp_quality?, polarity?}],
 * "comments": [{id, text, polarity?}], "t_match": 0.99, "k": 70}`.
 * Response: `{key_points, mapping, removed, scan_order}`.
 *
 * # Safety
 * Pointers must be valid; `request_json` NUL-terminated; `out_json` writable.
 */
KpaStatus kpa_extract_key_points_json(const KpaScorer *scorer,
                                      const char *request_json,
                                      char **out_json);

/**
 * Matches one business's reviews to key points and summarizes them.
 *
 * Request: `{"business_id", "reviews": [{review_id, text, stars?}],
 * "key_points": [...], "t_match"?: 0.99, "t_s"?: 0.79, "top_k"?: 10}`.
 * Response: `{"summary": {...}, "matches": [...]}`.
 *
 * # Safety
 * Pointers must be valid; `request_json` NUL-terminated; `out_json` writable.
 */
KpaStatus kpa_summarize_json(const KpaScorer *scorer, const char *request_json, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KPA_H */
