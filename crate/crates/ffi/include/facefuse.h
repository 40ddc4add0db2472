#ifndef FACEFUSE_H
#define FACEFUSE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FfStatus {
  FF_STATUS_OK = 0,
  FF_STATUS_NULL_POINTER = 1,
  FF_STATUS_INVALID_ARGUMENT = 2,
  FF_STATUS_IO = 3,
  FF_STATUS_UNSUPPORTED_FORMAT = 4,
  FF_STATUS_CORRUPT_DATA = 5,
  FF_STATUS_INVALID_DIMENSIONS = 6,
  FF_STATUS_IMAGE_TOO_SMALL = 7,
  FF_STATUS_MISSING_REGION = 8,
  FF_STATUS_EMPTY_FEATURE_SET = 9,
  FF_STATUS_TOTAL_CONFLICT = 10,
  FF_STATUS_INVALID_MASS = 11,
  FF_STATUS_CONFIG = 12,
  FF_STATUS_OTHER = 98,
  FF_STATUS_PANIC = 99,
} FfStatus;

typedef enum FfRegion {
  FF_REGION_LEFT_EYE = 0,
  FF_REGION_RIGHT_EYE = 1,
  FF_REGION_NOSE = 2,
  FF_REGION_MOUTH = 3,
} FfRegion;

typedef enum FfMissingRegion {
  FF_MISSING_REGION_STRICT = 0,
  FF_MISSING_REGION_SKIP = 1,
} FfMissingRegion;

// Opaque decoded grayscale image.
typedef struct FfImage FfImage;

// Opaque enrolled face template.
typedef struct FfTemplate FfTemplate;

// Landmark coordinates in the 100x140 working frame.
typedef struct FfLandmarks {
  double left_eye_x;
  double left_eye_y;
  double right_eye_x;
  double right_eye_y;
  double nose_x;
  double nose_y;
  double mouth_x;
  double mouth_y;
} FfLandmarks;

typedef struct FfMass {
  double m_genuine;
  double m_impostor;
  double m_theta;
} FfMass;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the next call.
const char *ff_last_error_message(void);

// Library version as a static nul-terminated string.
const char *ff_version(void);

// Loads a PGM (P2/P5) image from a nul-terminated UTF-8 path.
//
// # Safety
// `path` must be a valid C string and `out` a writable pointer.
enum FfStatus ff_image_load(const char *path, struct FfImage **out);

// Copies `width * height` row-major 8-bit pixels into a new image.
//
// # Safety
// `pixels` must point to `width * height` readable bytes and `out` must be writable.
enum FfStatus ff_image_from_gray(size_t width,
                                 size_t height,
                                 const uint8_t *pixels,
                                 struct FfImage **out);

// # Safety
// `image` must be a live handle; `width` and `height` writable.
enum FfStatus ff_image_size(const struct FfImage *image, size_t *width, size_t *height);

// # Safety
// `image` must be null or a handle from this library that has not been freed.
void ff_image_free(struct FfImage *image);

// Enrols an image with default parameters. `landmarks` may be null for the default geometry.
//
// # Safety
// `image` must be a live handle, `landmarks` null or readable, `out` writable.
enum FfStatus ff_template_enrol(const struct FfImage *image,
                                const struct FfLandmarks *landmarks,
                                struct FfTemplate **out);

// # Safety
// `template` must be a live handle and `count` writable.
enum FfStatus ff_template_keypoint_count(const struct FfTemplate *template_, size_t *count);

// # Safety
// `template` must be a live handle and `count` writable.
enum FfStatus ff_template_region_count(const struct FfTemplate *template_,
                                       enum FfRegion region,
                                       size_t *count);

// # Safety
// `template` must be null or a handle from this library that has not been freed.
void ff_template_free(struct FfTemplate *template_);

// Sum of the four region distances between two templates.
//
// # Safety
// Both templates must be live handles and `distance` writable.
enum FfStatus ff_match_local(const struct FfTemplate *probe,
                             const struct FfTemplate *gallery,
                             enum FfMissingRegion policy,
                             double *distance);

// Symmetric modified Hausdorff distance over the concatenated region keypoints.
//
// # Safety
// Both templates must be live handles and `distance` writable.
enum FfStatus ff_match_global(const struct FfTemplate *probe,
                              const struct FfTemplate *gallery,
                              double *distance);

// Mass function of a min-max normalized distance in `[0, 1]`.
//
// # Safety
// `out` must be writable.
enum FfStatus ff_score_to_mass(double normalized_distance, double alpha, struct FfMass *out);

// Dempster's orthogonal sum of two mass functions.
//
// # Safety
// `a` and `b` must be readable and `out` writable.
enum FfStatus ff_dempster_combine(const struct FfMass *a,
                                  const struct FfMass *b,
                                  struct FfMass *out);

// Normalizes both distances, combines their masses and applies `m_genuine >= psi`.
//
// # Safety
// `mass` and `accepted` must be writable.
enum FfStatus ff_fuse_and_decide(double local_distance,
                                 double global_distance,
                                 double local_min,
                                 double local_max,
                                 double global_min,
                                 double global_max,
                                 double alpha,
                                 double psi,
                                 struct FfMass *mass,
                                 bool *accepted);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FACEFUSE_H */
