#ifndef ADJFLOW_H
#define ADJFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdbool.h>

/**
 * Result of a fallible call.
 */
typedef enum {
  ADJFLOW_STATUS_OK = 0,
  ADJFLOW_STATUS_NULL_POINTER = 1,
  ADJFLOW_STATUS_INVALID_UTF8 = 2,
  ADJFLOW_STATUS_PARSE = 3,
  ADJFLOW_STATUS_CONFIG = 4,
  ADJFLOW_STATUS_INVALID_MESH = 5,
  ADJFLOW_STATUS_MISSING_TAG = 6,
  ADJFLOW_STATUS_INVERTED_ELEMENT = 7,
  ADJFLOW_STATUS_INVALID_DISPLACEMENT = 8,
  ADJFLOW_STATUS_SINGULAR = 9,
  ADJFLOW_STATUS_SOLVE_ACCURACY = 10,
  ADJFLOW_STATUS_NEWTON_DIVERGED = 11,
  ADJFLOW_STATUS_MISMATCH = 12,
  ADJFLOW_STATUS_INVALID_ARGUMENT = 13,
  ADJFLOW_STATUS_IO = 14,
  ADJFLOW_STATUS_BUFFER_TOO_SMALL = 15,
  ADJFLOW_STATUS_PANIC = 16,
} AdjflowStatus;

/**
 * Parsed and validated run configuration.
 */
typedef struct AdjflowConfig AdjflowConfig;

/**
 * Triangulation with tagged boundary edges.
 */
typedef struct AdjflowMesh AdjflowMesh;

/**
 * Outcome of a shape optimization run.
 */
typedef struct AdjflowOptim AdjflowOptim;

/**
 * Converged flow together with the mesh and settings it was computed on.
 */
typedef struct AdjflowState AdjflowState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *adjflow_version(void);

/**
 * Copies the calling thread's last error message into `buf`.
 *
 * Returns the size the message needs including its terminator, or 0 when
 * the last call on this thread succeeded. The copy is truncated to `cap`.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t adjflow_last_error(char *buf, size_t cap);

/**
 * Parses a mesh from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
AdjflowStatus adjflow_mesh_from_json(const char *json, AdjflowMesh **out);

/**
 * Structured channel `[0, length] x [0, height]` with `nx * ny * 2` triangles.
 *
 * # Safety
 * `out` must be writable.
 */
AdjflowStatus adjflow_mesh_channel(double length,
                                   double height,
                                   size_t nx,
                                   size_t ny,
                                   AdjflowMesh **out);

/**
 * Serializes a mesh to JSON. See the module notes on string buffers.
 *
 * # Safety
 * `mesh` must be a live handle, `buf` null or `cap` bytes, `needed` null or writable.
 */
AdjflowStatus adjflow_mesh_to_json(const AdjflowMesh *mesh, char *buf, size_t cap, size_t *needed);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t adjflow_mesh_node_count(const AdjflowMesh *mesh);

/**
 * Number of triangles, or 0 for a null handle.
 *
 * # Safety
 * `mesh` must be null or a live handle.
 */
size_t adjflow_mesh_triangle_count(const AdjflowMesh *mesh);

/**
 * Area of the meshed domain.
 *
 * # Safety
 * `mesh` must be a live handle and `out` writable.
 */
AdjflowStatus adjflow_mesh_volume(const AdjflowMesh *mesh, double *out);

/**
 * Node coordinates as interleaved `x0 y0 x1 y1 ...`; `len >= 2 * node_count`.
 *
 * # Safety
 * `mesh` must be a live handle and `buf` point to `len` doubles.
 */
AdjflowStatus adjflow_mesh_nodes(const AdjflowMesh *mesh, double *buf, size_t len);

/**
 * # Safety
 * `mesh` must be null or a handle not freed before.
 */
void adjflow_mesh_free(AdjflowMesh *mesh);

/**
 * Parses a run configuration. Relative mesh paths resolve against the process directory.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
AdjflowStatus adjflow_config_from_json(const char *json, AdjflowConfig **out);

/**
 * Reads a run configuration file; relative mesh paths resolve against its directory.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
AdjflowStatus adjflow_config_load(const char *path, AdjflowConfig **out);

/**
 * Loads or generates the mesh named by the configuration.
 *
 * # Safety
 * `config` must be a live handle and `out` writable.
 */
AdjflowStatus adjflow_config_build_mesh(const AdjflowConfig *config, AdjflowMesh **out);

/**
 * # Safety
 * `config` must be null or a handle not freed before.
 */
void adjflow_config_free(AdjflowConfig *config);

/**
 * Solves the configured flow problem on `mesh`. The state keeps copies of
 * both inputs, which may be freed afterwards.
 *
 * # Safety
 * `mesh` and `config` must be live handles and `out` writable.
 */
AdjflowStatus adjflow_solve(const AdjflowMesh *mesh,
                            const AdjflowConfig *config,
                            AdjflowState **out);

/**
 * Dissipated energy of the flow.
 *
 * # Safety
 * `state` must be a live handle and `out` writable.
 */
AdjflowStatus adjflow_state_energy(const AdjflowState *state, double *out);

/**
 * Nodal velocities, interleaved; `len >= 2 * node_count`.
 *
 * # Safety
 * `state` must be a live handle and `buf` point to `len` doubles.
 */
AdjflowStatus adjflow_state_velocity(const AdjflowState *state, double *buf, size_t len);

/**
 * Nodal pressures; `len >= node_count`.
 *
 * # Safety
 * `state` must be a live handle and `buf` point to `len` doubles.
 */
AdjflowStatus adjflow_state_pressure(const AdjflowState *state, double *buf, size_t len);

/**
 * Linear solves spent by Newton, or 0 for a null handle.
 *
 * # Safety
 * `state` must be null or a live handle.
 */
size_t adjflow_state_newton_iterations(const AdjflowState *state);

/**
 * Solves the adjoint problem of the flow and writes its nodal velocities.
 *
 * # Safety
 * `state` must be a live handle and `buf` point to `len` doubles.
 */
AdjflowStatus adjflow_state_adjoint_velocity(const AdjflowState *state, double *buf, size_t len);

/**
 * # Safety
 * `state` must be null or a handle not freed before.
 */
void adjflow_state_free(AdjflowState *state);

/**
 * Runs the shape optimizer from `mesh` with the configured flow and optimizer settings.
 *
 * # Safety
 * `mesh` and `config` must be live handles and `out` writable.
 */
AdjflowStatus adjflow_optimize(const AdjflowMesh *mesh,
                               const AdjflowConfig *config,
                               AdjflowOptim **out);

/**
 * # Safety
 * `optim` must be a live handle and `out` writable.
 */
AdjflowStatus adjflow_optim_initial_energy(const AdjflowOptim *optim, double *out);

/**
 * Energy of the last accepted shape.
 *
 * # Safety
 * `optim` must be a live handle and `out` writable.
 */
AdjflowStatus adjflow_optim_final_energy(const AdjflowOptim *optim, double *out);

/**
 * Relative energy reduction `1 - J_final / J_initial`.
 *
 * # Safety
 * `optim` must be a live handle and `out` writable.
 */
AdjflowStatus adjflow_optim_reduction(const AdjflowOptim *optim, double *out);

/**
 * Attempted moves recorded in the history, or 0 for a null handle.
 *
 * # Safety
 * `optim` must be null or a live handle.
 */
size_t adjflow_optim_history_len(const AdjflowOptim *optim);

/**
 * Whether the run stopped after exhausting its retries. False for a null handle.
 *
 * # Safety
 * `optim` must be null or a live handle.
 */
bool adjflow_optim_terminated_early(const AdjflowOptim *optim);

/**
 * Iteration history as CSV, the same text the command line writes.
 *
 * # Safety
 * `optim` must be a live handle, `buf` null or `cap` bytes, `needed` null or writable.
 */
AdjflowStatus adjflow_optim_history_csv(const AdjflowOptim *optim,
                                        char *buf,
                                        size_t cap,
                                        size_t *needed);

/**
 * Copies the optimized mesh into a new handle.
 *
 * # Safety
 * `optim` must be a live handle and `out` writable.
 */
AdjflowStatus adjflow_optim_mesh(const AdjflowOptim *optim, AdjflowMesh **out);

/**
 * # Safety
 * `optim` must be null or a handle not freed before.
 */
void adjflow_optim_free(AdjflowOptim *optim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADJFLOW_H */
