#ifndef CTXDECOMP_H
#define CTXDECOMP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  CD_STATUS_OK = 0,
  CD_STATUS_NULL_ARGUMENT = 1,
  CD_STATUS_INVALID_UTF8 = 2,
  /**
   * Input rejected by the library: malformed assembly, unknown flag, ...
   */
  CD_STATUS_INVALID_INPUT = 3,
  CD_STATUS_IO = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  CD_STATUS_INTERNAL = 5,
} CdStatus;

/**
 * Opaque retrieval index.
 */
typedef struct CdIndex CdIndex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next call on the same thread.
 */
const char *cd_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library.
 */
void cd_string_free(char *s);

/**
 * Normalizes one function's assembly. `out` receives
 * `{"func_name", "body", "placeholder_map"}`.
 *
 * # Safety
 * `asm_text` must be a NUL-terminated string; `out` must be writable.
 */
CdStatus cd_normalize_asm(const char *asm_text, char **out);

/**
 * Canonical form of a single-function C source. `out` receives
 * `{"func_name", "body", "original_name"}`.
 *
 * # Safety
 * `src` must be a NUL-terminated string; `out` must be writable.
 */
CdStatus cd_canonicalize_source(const char *src, char **out);

/**
 * Classifies a failed outcome with the built-in patterns. `status` is one
 * of `pass`, `compile_fail`, `run_fail`, `output_mismatch`,
 * `compile_timeout`, `run_timeout`. `out` receives
 * `{"category", "pattern"}`, or `null` for `pass`.
 *
 * # Safety
 * Both strings must be NUL-terminated; `out` must be writable.
 */
CdStatus cd_classify_stderr(const char *stderr_text, const char *status, char **out);

/**
 * Loads an index file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
CdStatus cd_index_load(const char *path, CdIndex **out);

/**
 * # Safety
 * `index` must be NULL or a handle from [`cd_index_load`] not yet freed.
 */
void cd_index_free(CdIndex *index);

/**
 * Number of entries; 0 for NULL.
 *
 * # Safety
 * `index` must be NULL or a live handle.
 */
size_t cd_index_len(const CdIndex *index);

/**
 * Top-`k` exemplars for raw target assembly. `tags` is a comma-separated
 * tag list or NULL. `service_url` names the embedding service when the
 * index was not built with the built-in embedder. `out` receives a JSON
 * array of `{"pair_id", "raw_csls", "adjusted", "category_match"}`.
 *
 * # Safety
 * `index` must be a live handle; string arguments must be NUL-terminated
 * or, where allowed, NULL; `out` must be writable.
 */
CdStatus cd_index_retrieve(const CdIndex *index,
                           const char *asm_text,
                           const char *tags,
                           size_t k,
                           double alpha,
                           const char *service_url,
                           char **out);

/**
 * Renders the rule prompt for a built-in flag over raw target assembly.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
CdStatus cd_render_rule_prompt(const char *flag,
                               const char *asm_text,
                               size_t token_cap,
                               char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CTXDECOMP_H */
