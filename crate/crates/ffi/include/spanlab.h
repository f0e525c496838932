#ifndef SPANLAB_H
#define SPANLAB_H

/* Generated by cbindgen from crates/ffi/src; do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

// Result of every fallible call.
typedef enum SplStatus {
  SPL_STATUS_OK = 0,
  SPL_STATUS_NULL_POINTER = 1,
  SPL_STATUS_INVALID_PARAMETER = 2,
  SPL_STATUS_VERTEX_OUT_OF_RANGE = 3,
  // Search or lookup came back empty (no embedding, unmapped vertex).
  SPL_STATUS_NOT_FOUND = 4,
  SPL_STATUS_PARSE = 5,
  SPL_STATUS_TOO_LARGE = 6,
  // Any other library error.
  SPL_STATUS_FAILED = 7,
  SPL_STATUS_PANIC = 8,
} SplStatus;

// Opaque (possibly partial) embedding handle.
typedef struct SplEmbedding SplEmbedding;

// Opaque graph handle.
typedef struct SplGraph SplGraph;

// The message of the last failed call on this thread, or NULL. The string
// is a fresh copy; release it with [`spl_string_free`].
char *spl_last_error(void);

// # Safety
// `s` must come from this library and not be freed yet. NULL is a no-op.
void spl_string_free(char *s);

// Library version as a static string.
const char *spl_version(void);

// Builds a graph on `n` vertices from `m` pairs stored flat in `edges`
// (`2m` entries).
//
// # Safety
// `edges` must point to `2 * m` readable values (or be NULL with `m = 0`);
// `out` must be writable.
enum SplStatus spl_graph_new(uintptr_t n,
                             const uintptr_t *edges,
                             uintptr_t m,
                             struct SplGraph **out);

// `G(n, p)` under the seeded stream.
//
// # Safety
// `out` must be writable.
enum SplStatus spl_graph_gnp(uintptr_t n, double p, uint64_t seed, struct SplGraph **out);

// Parses an edge list or DIMACS text.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum SplStatus spl_graph_parse(const char *text, struct SplGraph **out);

// # Safety
// `g` must come from this library and not be freed yet. NULL is a no-op.
void spl_graph_free(struct SplGraph *g);

// Vertex count, 0 for NULL.
//
// # Safety
// `g` must be NULL or a live handle.
uintptr_t spl_graph_vertex_count(const struct SplGraph *g);

// Edge count, 0 for NULL.
//
// # Safety
// `g` must be NULL or a live handle.
uintptr_t spl_graph_edge_count(const struct SplGraph *g);

// Minimum degree, 0 for NULL or the empty graph.
//
// # Safety
// `g` must be NULL or a live handle.
uintptr_t spl_graph_min_degree(const struct SplGraph *g);

// # Safety
// `g` must be a live handle; `out` must be writable.
enum SplStatus spl_graph_has_edge(const struct SplGraph *g, uintptr_t u, uintptr_t v, bool *out);

// Deletes random edges while keeping `δ ≥ ⌈αpn⌉`.
//
// # Safety
// `g` must be a live handle; `out` must be writable.
enum SplStatus spl_graph_thin(const struct SplGraph *g,
                              double alpha,
                              double p,
                              uint64_t seed,
                              struct SplGraph **out);

// Writes the position of every vertex into `positions` (length `n`) and
// the bandwidth of that labelling into `bandwidth`. With `exact` the
// branch and bound runs (at most 12 vertices, else `SPL_STATUS_TOO_LARGE`).
//
// # Safety
// `g` must be a live handle; `positions` must hold `n` values.
enum SplStatus spl_bandwidth(const struct SplGraph *g,
                             bool exact,
                             uintptr_t *positions,
                             uintptr_t *bandwidth);

// Proper colouring with colours `0..=k` along the heuristic labelling;
// `colours` must hold `n` values.
//
// # Safety
// `g` must be a live handle; `colours` must hold `n` values.
enum SplStatus spl_colour(const struct SplGraph *g, uintptr_t k, uintptr_t *colours);

// p-density of the pair `(x, y)`.
//
// # Safety
// `g` must be a live handle; `x`, `y` must hold `nx`, `ny` ids.
enum SplStatus spl_p_density(const struct SplGraph *g,
                             double p,
                             const uintptr_t *x,
                             uintptr_t nx,
                             const uintptr_t *y,
                             uintptr_t ny,
                             double *out);

// Lower-regularity verdict: 0 verified, 1 witness found, 2 no witness
// found by randomized search.
//
// # Safety
// `g` must be a live handle; `x`, `y` must hold `nx`, `ny` ids.
enum SplStatus spl_lower_regular(const struct SplGraph *g,
                                 double eps,
                                 double d,
                                 double p,
                                 const uintptr_t *x,
                                 uintptr_t nx,
                                 const uintptr_t *y,
                                 uintptr_t ny,
                                 int32_t *verdict);

// Greedy embedding of `h` into `g` under a backtrack budget. On success
// `out` receives a handle; when the budget runs out or the search is
// exhausted the status is `SPL_STATUS_NOT_FOUND` and `out` is left alone.
//
// # Safety
// `h`, `g` must be live handles; `out` must be writable.
enum SplStatus spl_embed_greedy(const struct SplGraph *h,
                                const struct SplGraph *g,
                                uint64_t budget,
                                uint64_t seed,
                                struct SplEmbedding **out);

// Image of H-vertex `x`; `SPL_STATUS_NOT_FOUND` when unmapped.
//
// # Safety
// `e` must be a live handle; `out` must be writable.
enum SplStatus spl_embedding_get(const struct SplEmbedding *e, uintptr_t x, uintptr_t *out);

// Number of embedded vertices, 0 for NULL.
//
// # Safety
// `e` must be NULL or a live handle.
uintptr_t spl_embedding_len(const struct SplEmbedding *e);

// Whether `e` is an injective edge-preserving map from `h` into `g`;
// false on NULL.
//
// # Safety
// Every argument must be NULL or a live handle.
bool spl_embedding_verify(const struct SplGraph *h,
                          const struct SplGraph *g,
                          const struct SplEmbedding *e);

// # Safety
// `e` must come from this library and not be freed yet. NULL is a no-op.
void spl_embedding_free(struct SplEmbedding *e);

// Builds the counterexample for `F_k` and certifies that no copy is
// rooted in `X`. Either output pointer may be NULL.
//
// # Safety
// Non-NULL outputs must be writable.
enum SplStatus spl_adversary_certify(uintptr_t n,
                                     double p,
                                     double eps,
                                     uintptr_t k,
                                     uint64_t seed,
                                     bool *absent,
                                     uintptr_t *min_degree);

// Edge-count concentration of `G(n, p)` over `runs` seeds. Either output
// pointer may be NULL.
//
// # Safety
// Non-NULL outputs must be writable.
enum SplStatus spl_concentration_check(uintptr_t n,
                                       double p,
                                       uintptr_t runs,
                                       uint64_t seed,
                                       bool *pass,
                                       uintptr_t *exceedances);

#endif  /* SPANLAB_H */
