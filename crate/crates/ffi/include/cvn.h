#ifndef CVN_H
#define CVN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CvnStatus {
  CVN_STATUS_OK = 0,
  CVN_STATUS_NULL_POINTER = 1,
  CVN_STATUS_INVALID_UTF8 = 2,
  CVN_STATUS_PARSE = 3,
  CVN_STATUS_VALIDATION = 4,
  CVN_STATUS_BUDGET = 5,
  CVN_STATUS_OUT_OF_RANGE = 6,
  CVN_STATUS_PANIC = 7,
} CvnStatus;

/**
 * Opaque marked metric graph.
 */
typedef struct CvnGraph CvnGraph;

/**
 * Opaque folding path.
 */
typedef struct CvnPath CvnPath;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy of the calling thread's last error message, or null if none.
 */
char *cvn_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void cvn_string_free(char *s);

/**
 * Static version string; do not free.
 */
const char *cvn_version(void);

/**
 * Parses and validates a graph from JSON.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
enum CvnStatus cvn_graph_from_json(const char *json, struct CvnGraph **out);

/**
 * Rose with `rank` petals of length `1/rank`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CvnStatus cvn_graph_rose(size_t rank, struct CvnGraph **out);

/**
 * Seeded random valid volume-one graph.
 *
 * # Safety
 * `out` must be writable.
 */
enum CvnStatus cvn_graph_random(uint64_t seed, size_t rank, struct CvnGraph **out);

/**
 * # Safety
 * `g` must come from this library and not be freed twice. Null is ignored.
 */
void cvn_graph_free(struct CvnGraph *g);

/**
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum CvnStatus cvn_graph_to_json(const struct CvnGraph *g, char **out);

/**
 * # Safety
 * `g` must be a live handle; outputs must be writable.
 */
enum CvnStatus cvn_graph_shape(const struct CvnGraph *g,
                               size_t *rank,
                               size_t *vertices,
                               size_t *edges);

/**
 * Volume as a `"p/q"` string.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum CvnStatus cvn_graph_volume(const struct CvnGraph *g, char **out);

/**
 * Translation length of a word such as `"abAB"`, as `"p/q"`.
 *
 * # Safety
 * `g` must be a live handle, `word` nul-terminated, `out` writable.
 */
enum CvnStatus cvn_translation_length(const struct CvnGraph *g, const char *word, char **out);

/**
 * Lipschitz constant from `s` to `t`, as `"p/q"`.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum CvnStatus cvn_lipschitz_constant(const struct CvnGraph *s,
                                      const struct CvnGraph *t,
                                      char **out);

/**
 * Folding path from `s` to `t`.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum CvnStatus cvn_skora_path(const struct CvnGraph *s,
                              const struct CvnGraph *t,
                              struct CvnPath **out);

/**
 * # Safety
 * `p` must be a live handle; `out` writable.
 */
enum CvnStatus cvn_path_fold_count(const struct CvnPath *p, size_t *out);

/**
 * # Safety
 * `p` must be a live handle; `out` writable.
 */
enum CvnStatus cvn_path_to_json(const struct CvnPath *p, char **out);

/**
 * Stage `k` of the path as a new graph handle.
 *
 * # Safety
 * `p` must be a live handle; `out` writable.
 */
enum CvnStatus cvn_path_stage(const struct CvnPath *p, size_t k, struct CvnGraph **out);

/**
 * # Safety
 * `p` must come from this library and not be freed twice. Null is ignored.
 */
void cvn_path_free(struct CvnPath *p);

/**
 * Primitivity of a word in the free group of the given rank.
 *
 * # Safety
 * `word` nul-terminated; `out` writable.
 */
enum CvnStatus cvn_is_primitive(const char *word, size_t rank, bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CVN_H */
