#ifndef VSC_LAB_H
#define VSC_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every fallible call.
 */
typedef enum VscStatus {
  VSC_STATUS_OK = 0,
  VSC_STATUS_INVALID_ARGUMENT = 1,
  VSC_STATUS_DIMENSION_MISMATCH = 2,
  VSC_STATUS_NOT_ADMISSIBLE = 3,
  VSC_STATUS_NO_CONVERGENCE = 4,
  VSC_STATUS_NUMERICAL = 5,
  VSC_STATUS_IO = 6,
  VSC_STATUS_FORMAT = 7,
  VSC_STATUS_NULL_POINTER = 8,
  VSC_STATUS_PANIC = 9,
} VscStatus;

/*
 Data matrix (rows: sources or incident directions).
 */
typedef struct VscData VscData;

/*
 Contrast on a Fourier lattice.
 */
typedef struct VscField VscField;

/*
 Near-field or far-field forward map.
 */
typedef struct VscOperator VscOperator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *vsc_last_error_message(void);

/*
 Library version as a static nul-terminated string.
 */
const char *vsc_version(void);

/*
 Zero contrast on the minimal grid of degree `max_degree`.

 # Safety
 `out` must be a valid pointer.
 */
enum VscStatus vsc_field_zeros(size_t max_degree, struct VscField **out);

/*
 Smoothed ball phantom (contrast 0.4, edge between 0.3 pi and 0.8 pi).

 # Safety
 `out` must be a valid pointer.
 */
enum VscStatus vsc_field_ball_phantom(size_t max_degree, struct VscField **out);

/*
 Field from `2 (2N+1)^3` interleaved coefficients in lexicographic order of `g`.

 # Safety
 `coeffs` must point to `len` doubles and `out` must be valid.
 */
enum VscStatus vsc_field_from_coeffs(size_t max_degree,
                                     size_t grid_size,
                                     const double *coeffs,
                                     size_t len,
                                     struct VscField **out);

/*
 Number of lattice modes `(2N+1)^3`; 0 for a null handle.

 # Safety
 `field` must be null or a live handle.
 */
size_t vsc_field_n_modes(const struct VscField *field);

/*
 Copies the interleaved coefficients into `buf` (`len` must equal `2 n_modes`).

 # Safety
 `field` must be live and `buf` must hold `len` doubles.
 */
enum VscStatus vsc_field_coeffs(const struct VscField *field, double *buf, size_t len);

/*
 Whether the field lies in the admissible set (1) or not (0); -1 for a null handle.

 # Safety
 `field` must be null or a live handle.
 */
int32_t vsc_field_is_admissible(const struct VscField *field);

/*
 Projection onto the admissible set.

 # Safety
 `field` must be live and `out` valid.
 */
enum VscStatus vsc_field_project(const struct VscField *field, struct VscField **out);

/*
 Truncated `H^m` norm.

 # Safety
 `field` must be live and `out` valid.
 */
enum VscStatus vsc_field_sobolev_norm(const struct VscField *field, double m, double *out);

/*
 # Safety
 `path` must be a nul-terminated string and `out` valid.
 */
enum VscStatus vsc_field_load(const char *path, struct VscField **out);

/*
 # Safety
 `field` must be live and `path` a nul-terminated string.
 */
enum VscStatus vsc_field_save(const struct VscField *field, const char *path);

/*
 # Safety
 `field` must be null or a handle not yet freed.
 */
void vsc_field_free(struct VscField *field);

/*
 Near-field map: sources and receivers on the sphere of radius `radius`.

 # Safety
 `out` must be valid.
 */
enum VscStatus vsc_operator_near(double kappa,
                                 double radius,
                                 size_t n_points,
                                 size_t grid_size,
                                 struct VscOperator **out);

/*
 Far-field map with `n_dirs` incident and observation directions.

 # Safety
 `out` must be valid.
 */
enum VscStatus vsc_operator_far(double kappa,
                                size_t n_dirs,
                                size_t grid_size,
                                struct VscOperator **out);

/*
 # Safety
 `op` must be null or a handle not yet freed.
 */
void vsc_operator_free(struct VscOperator *op);

/*
 Data `F(f)`.

 # Safety
 `op` and `field` must be live and `out` valid.
 */
enum VscStatus vsc_operator_evaluate(const struct VscOperator *op,
                                     const struct VscField *field,
                                     struct VscData **out);

/*
 # Safety
 `data` must be live and `rows`, `cols` valid.
 */
enum VscStatus vsc_data_shape(const struct VscData *data, size_t *rows, size_t *cols);

/*
 Copies the row-major interleaved values into `buf` (`len` must equal `2 rows cols`).

 # Safety
 `data` must be live and `buf` must hold `len` doubles.
 */
enum VscStatus vsc_data_values(const struct VscData *data, double *buf, size_t len);

/*
 Weighted `L^2` distance of two data sets on the same point sets.

 # Safety
 `a`, `b` must be live and `out` valid.
 */
enum VscStatus vsc_data_distance(const struct VscData *a, const struct VscData *b, double *out);

/*
 # Safety
 `data` must be null or a handle not yet freed.
 */
void vsc_data_free(struct VscData *data);

/*
 `a (ln(3 + 1/t))^(-2 mu)`.

 # Safety
 `out` must be valid.
 */
enum VscStatus vsc_psi(double a, double mu, double t, double *out);

/*
 Regularization parameter `alpha = 1 / (2 psi'(4 delta^2))`.

 # Safety
 `out` must be valid.
 */
enum VscStatus vsc_alpha_rule(double a, double mu, double delta, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VSC_LAB_H */
