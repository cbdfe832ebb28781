#ifndef MODELBENCH_H
#define MODELBENCH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every entry point.
 */
typedef enum MbStatus {
  MB_STATUS_OK = 0,
  MB_STATUS_NULL_ARGUMENT = 1,
  MB_STATUS_INVALID_UTF8 = 2,
  MB_STATUS_NOT_FOUND = 3,
  MB_STATUS_INVALID = 4,
  MB_STATUS_CONFLICT = 5,
  MB_STATUS_QUERY = 6,
  /**
   * `validate --strict` found errors.
   */
  MB_STATUS_VALIDATION_FAILED = 7,
  MB_STATUS_IO = 8,
  MB_STATUS_SERIALIZATION = 9,
  MB_STATUS_PANIC = 10,
} MbStatus;

/**
 * Opaque console session.
 */
typedef struct MbSession MbSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version; static, do not free.
 */
const char *mb_version(void);

struct MbSession *mb_session_new(void);

/**
 * # Safety
 * `session` must come from [`mb_session_new`] and not be used afterwards.
 */
void mb_session_free(struct MbSession *session);

/**
 * # Safety
 * `s` must come from this library (or be null).
 */
void mb_string_free(char *s);

/**
 * Executes one console command line.
 *
 * # Safety
 * `session` must be a live handle, `line` a NUL-terminated string and `out`
 * null or writable.
 */
enum MbStatus mb_session_execute(struct MbSession *session, const char *line, char **out);

/**
 * Evaluates an expression on the selected element. Never mutates.
 *
 * # Safety
 * As for [`mb_session_execute`].
 */
enum MbStatus mb_session_eval(struct MbSession *session, const char *expr, char **out);

/**
 * Writes the canonical project document to `out`.
 *
 * # Safety
 * As for [`mb_session_execute`].
 */
enum MbStatus mb_session_export(struct MbSession *session, char **out);

/**
 * Replaces the project with a canonical document.
 *
 * # Safety
 * As for [`mb_session_execute`]; `out` receives an error message only.
 */
enum MbStatus mb_session_import(struct MbSession *session, const char *document, char **out);

/**
 * Digest of the canonical document, history included. Comparable only
 * between values from the same library build.
 *
 * # Safety
 * `session` must be a live handle and `checksum` writable.
 */
enum MbStatus mb_session_checksum(const struct MbSession *session, uint64_t *checksum);

/**
 * Renders the model at `model_path` as a JSON render tree.
 *
 * # Safety
 * As for [`mb_session_execute`].
 */
enum MbStatus mb_session_render_json(struct MbSession *session, const char *model_path, char **out);

/**
 * Checks the model at `model_path` without recording markers; writes a
 * JSON array of markers.
 *
 * # Safety
 * As for [`mb_session_execute`].
 */
enum MbStatus mb_session_markers_json(struct MbSession *session,
                                      const char *model_path,
                                      char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MODELBENCH_H */
