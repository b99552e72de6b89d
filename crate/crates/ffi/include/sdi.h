#ifndef SDI_H
#define SDI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes. The non-zero values match the `sdi` exit codes.
typedef enum SdiStatus {
  SDI_STATUS_OK = 0,
  // A required pointer was null.
  SDI_STATUS_NULL_POINTER = 1,
  SDI_STATUS_INVALID_INPUT = 2,
  SDI_STATUS_NUMERICAL_FAILURE = 3,
  SDI_STATUS_DEGENERATE_DATA = 4,
  // A Rust panic was caught at the boundary.
  SDI_STATUS_INTERNAL = 5,
} SdiStatus;

// Stage motion between successive measurements.
typedef enum SdiDirection {
  SDI_DIRECTION_RECEDING = 0,
  SDI_DIRECTION_APPROACHING = 1,
} SdiDirection;

// Opaque calibrated sweep.
typedef struct SdiDatasetHandle SdiDatasetHandle;

// Output of [`sdi_fit`]. `eps_imag` is the loss part of ε = ε′ − jε″.
typedef struct SdiFitResult {
  double eps_real;
  double eps_imag;
  // Radians, wrapped into [−π, π).
  double phase_offset;
  double residual_norm;
  uint32_t iterations;
  // 1 if the solver met a convergence test, else 0.
  int32_t converged;
  uint32_t start_index;
} SdiFitResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null after a success.
// The pointer stays valid until the next `sdi_*` call on the same thread.
const char *sdi_last_error(void);

// Builds a dataset from `count` samples `re[m] + j·im[m]`.
//
// # Safety
// `re` and `im` must point to `count` readable doubles; `out` must be writable.
enum SdiStatus sdi_dataset_new(const double *re,
                               const double *im,
                               uintptr_t count,
                               double step_m,
                               double carrier_hz,
                               enum SdiDirection direction,
                               struct SdiDatasetHandle **out);

// Noiseless synthetic sweep for material `eps_real − j·eps_imag`.
//
// # Safety
// `out` must be writable.
enum SdiStatus sdi_dataset_synthetic(double eps_real,
                                     double eps_imag,
                                     double phase_offset,
                                     uintptr_t count,
                                     double step_m,
                                     double carrier_hz,
                                     enum SdiDirection direction,
                                     struct SdiDatasetHandle **out);

// # Safety
// `ds` must come from `sdi_dataset_new` or `sdi_dataset_synthetic` and not be
// freed twice. Null is ignored.
void sdi_dataset_free(struct SdiDatasetHandle *ds);

// Number of samples, 0 for a null handle.
//
// # Safety
// `ds` must be null or a live handle.
uintptr_t sdi_dataset_len(const struct SdiDatasetHandle *ds);

// Copies sample `m` into `re`, `im`.
//
// # Safety
// `ds` must be a live handle; `re` and `im` must be writable.
enum SdiStatus sdi_dataset_get(const struct SdiDatasetHandle *ds,
                               uintptr_t m,
                               double *re,
                               double *im);

// Fits permittivity and phase offset with the default starts.
//
// # Safety
// `ds` must be a live handle; `out` must be writable.
enum SdiStatus sdi_fit(const struct SdiDatasetHandle *ds,
                       double a_max,
                       double b_max,
                       struct SdiFitResult *out);

// Model reflection at step `m`: `(1 − √ε)/(1 + √ε)·e^{j(c − c1·m)}`.
//
// # Safety
// `re` and `im` must be writable.
enum SdiStatus sdi_model_gamma(double eps_real,
                               double eps_imag,
                               double phase_offset,
                               uintptr_t m,
                               double c1,
                               double *re,
                               double *im);

// Front-face reflection of a slab with every internal bounce. With
// `metal_backing` non-zero the backing permittivity is ignored.
//
// # Safety
// `re` and `im` must be writable.
enum SdiStatus sdi_effective_reflection(double eps_real,
                                        double eps_imag,
                                        double thickness_m,
                                        int32_t metal_backing,
                                        double backing_real,
                                        double backing_imag,
                                        double frequency_hz,
                                        double *re,
                                        double *im);

// `2D²/λ` in meters.
//
// # Safety
// `out` must be writable.
enum SdiStatus sdi_fraunhofer_distance(double aperture_m, double wavelength_m, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SDI_H */
