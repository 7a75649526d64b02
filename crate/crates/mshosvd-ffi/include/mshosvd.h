/* C interface to the mshosvd multiscale tensor decomposition library. */

#ifndef MSHOSVD_H
#define MSHOSVD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Partitioning strategies accepted by the decomposition calls.
 */
#define MSH_PARTITIONER_KMEANS 0

#define MSH_PARTITIONER_RANDOM 1

/**
 * Status codes returned by every fallible call.
 */
typedef enum MshStatus {
  MshOk = 0,
  MshNullPointer = 1,
  MshInvalidArgument = 2,
  MshShapeMismatch = 3,
  MshIoError = 4,
  MshFormatError = 5,
  MshNonFinite = 6,
  MshInternalError = 7,
} MshStatus;

/**
 * Opaque dense tensor handle.
 */
typedef struct MshTensor MshTensor;

/**
 * Opaque decomposition tree handle.
 */
typedef struct MshTree MshTree;

/**
 * Cost summary of a tree against the tensor it approximates.
 */
typedef struct MshCostReport {
  double normalized_error;
  uint64_t stored_elements;
  double compression_rate;
  double objective_h;
  double lambda;
} MshCostReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Most recent error message on this thread; valid until the next failing
 * call on the same thread.
 */
const char *msh_last_error_message(void);

/**
 * Create a tensor from a shape and first-index-fastest data.
 *
 * # Safety
 * `shape` must point to `ndim` readable `size_t`s and `data` to `len`
 * readable doubles; `out` must be a valid destination pointer.
 */
enum MshStatus msh_tensor_new(const size_t *shape,
                              size_t ndim,
                              const double *data,
                              size_t len,
                              struct MshTensor **out);

/**
 * # Safety
 * `t` must be a handle from this library, not yet freed; null is a no-op.
 */
void msh_tensor_free(struct MshTensor *t);

/**
 * # Safety
 * `t` must be a live tensor handle and `out` a valid destination.
 */
enum MshStatus msh_tensor_ndim(const struct MshTensor *t, size_t *out);

/**
 * # Safety
 * `t` must be a live tensor handle and `out` a valid destination.
 */
enum MshStatus msh_tensor_dim(const struct MshTensor *t, size_t mode, size_t *out);

/**
 * Total element count.
 *
 * # Safety
 * `t` must be a live tensor handle and `out` a valid destination.
 */
enum MshStatus msh_tensor_len(const struct MshTensor *t, size_t *out);

/**
 * Copy the elements (first-index-fastest) into a caller buffer of exactly
 * `len` doubles.
 *
 * # Safety
 * `t` must be a live tensor handle; `out` must point to `len` writable
 * doubles.
 */
enum MshStatus msh_tensor_copy_data(const struct MshTensor *t, double *out, size_t len);

/**
 * Read a tensor file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid destination.
 */
enum MshStatus msh_tensor_read(const char *path, struct MshTensor **out);

/**
 * Write a tensor file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `t` a live tensor handle.
 */
enum MshStatus msh_tensor_write(const struct MshTensor *t, const char *path);

/**
 * Generate the bundled planted-blocks synthetic tensor.
 *
 * # Safety
 * `out` must be a valid destination pointer.
 */
enum MshStatus msh_tensor_synthetic(uint64_t seed, struct MshTensor **out);

/**
 * Build a multiscale tree with the energy threshold `tau` at every scale.
 * `clusters` may be null for the default of two clusters per mode.
 *
 * # Safety
 * `t` must be a live tensor handle; `clusters` null or `n_clusters` long;
 * `out` a valid destination.
 */
enum MshStatus msh_decompose(const struct MshTensor *t,
                             const size_t *clusters,
                             size_t n_clusters,
                             size_t max_scale,
                             double tau,
                             uint64_t seed,
                             int partitioner,
                             struct MshTree **out);

/**
 * Build a multiscale tree with explicit per-scale ranks: `ranks` holds
 * `(max_scale + 1) * ndim` entries, scale-major.
 *
 * # Safety
 * `t` must be a live tensor handle; `clusters` null or `n_clusters` long;
 * `ranks` as described; `out` a valid destination.
 */
enum MshStatus msh_decompose_with_ranks(const struct MshTensor *t,
                                        const size_t *clusters,
                                        size_t n_clusters,
                                        size_t max_scale,
                                        const size_t *ranks,
                                        uint64_t seed,
                                        int partitioner,
                                        struct MshTree **out);

/**
 * Greedy pruned decomposition minimizing error + lambda * compression.
 * Writes the resulting tree and, when `report` is non-null, its cost
 * summary.
 *
 * # Safety
 * As for [`msh_decompose`]; `report` may be null.
 */
enum MshStatus msh_prune(const struct MshTensor *t,
                         const size_t *clusters,
                         size_t n_clusters,
                         size_t max_scale,
                         double tau,
                         double lambda,
                         uint64_t seed,
                         int partitioner,
                         struct MshTree **out,
                         struct MshCostReport *report);

/**
 * # Safety
 * `tree` must be a handle from this library, not yet freed; null is a no-op.
 */
void msh_tree_free(struct MshTree *tree);

/**
 * Number of nodes in the tree.
 *
 * # Safety
 * `tree` must be a live tree handle and `out` a valid destination.
 */
enum MshStatus msh_tree_node_count(const struct MshTree *tree, size_t *out);

/**
 * Sum the node reconstructions through `up_to_scale` into a new tensor.
 *
 * # Safety
 * `tree` must be a live tree handle and `out` a valid destination.
 */
enum MshStatus msh_tree_reconstruct(const struct MshTree *tree,
                                    size_t up_to_scale,
                                    struct MshTensor **out);

/**
 * Evaluate a tree against the tensor it approximates.
 *
 * # Safety
 * `tree` and `original` must be live handles; `out` a valid destination.
 */
enum MshStatus msh_tree_cost_report(const struct MshTree *tree,
                                    const struct MshTensor *original,
                                    double lambda,
                                    struct MshCostReport *out);

/**
 * Serialize a tree archive into a directory.
 *
 * # Safety
 * `tree` must be a live handle; `dir` a NUL-terminated string.
 */
enum MshStatus msh_tree_save(const struct MshTree *tree, const char *dir);

/**
 * Load a tree archive from a directory.
 *
 * # Safety
 * `dir` must be a NUL-terminated string and `out` a valid destination.
 */
enum MshStatus msh_tree_load(const char *dir, struct MshTree **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MSHOSVD_H */
