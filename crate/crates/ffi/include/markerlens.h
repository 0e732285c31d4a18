#ifndef MARKERLENS_H
#define MARKERLENS_H

#include <stddef.h>
#include <stdint.h>

// Success.
#define ML_OK 0

// A required pointer argument was null.
#define ML_ERR_NULL -1

// A string argument was not valid UTF-8.
#define ML_ERR_UTF8 -2

// A panic was caught at the boundary.
#define ML_ERR_PANIC -3

// Pixel buffer length does not match width * height * 3.
#define ML_ERR_BUFFER -4

// Status code of a failed detection (`error=detection_failed` in the CLI).
#define ML_ERR_DETECTION_FAILED 10

// Parameters of the classical pipeline.
typedef struct MlConfig MlConfig;

// An RGB8 image.
typedef struct MlImage MlImage;

// A trained regressor (frozen extractor plus head).
typedef struct MlModel MlModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ml_version(void);

// Message of the last failure on this thread, or an empty string. The
// pointer stays valid until the next failing call on the same thread.
const char *ml_last_error(void);

// Loads a PNG, PPM or PGM file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
int32_t ml_image_load(const char *path, struct MlImage **out);

// Copies an interleaved RGB8 buffer of `len` bytes into a new image.
//
// # Safety
// `data` must point to `len` readable bytes; `out` must be writable.
int32_t ml_image_from_rgb(size_t width,
                          size_t height,
                          const uint8_t *data,
                          size_t len,
                          struct MlImage **out);

// Width in pixels, or 0 for a null handle.
//
// # Safety
// `img` must be null or a live handle.
size_t ml_image_width(const struct MlImage *img);

// Height in pixels, or 0 for a null handle.
//
// # Safety
// `img` must be null or a live handle.
size_t ml_image_height(const struct MlImage *img);

// # Safety
// `img` must be null or a handle not yet freed.
void ml_image_free(struct MlImage *img);

// Default pipeline parameters.
//
// # Safety
// `out` must be writable.
int32_t ml_config_default(struct MlConfig **out);

// Reads a `key = value` pipeline configuration file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
int32_t ml_config_load(const char *path, struct MlConfig **out);

// # Safety
// `cfg` must be null or a handle not yet freed.
void ml_config_free(struct MlConfig *cfg);

// Loads a model file written by `markerlens train`.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
int32_t ml_model_load(const char *path, struct MlModel **out);

// # Safety
// `model` must be null or a handle not yet freed.
void ml_model_free(struct MlModel *model);

// Classical estimate in degrees. Returns `ML_ERR_DETECTION_FAILED` when
// no marker is found; `theta_deg` is written only on success.
//
// # Safety
// Handles must be live; `theta_deg` must be writable.
int32_t ml_estimate_baseline(const struct MlImage *img,
                             const struct MlConfig *cfg,
                             double *theta_deg);

// Regressor estimate in degrees; always succeeds for live handles. A
// shared model may be used from several threads at once.
//
// # Safety
// Handles must be live; `theta_deg` must be writable.
int32_t ml_predict_angle(const struct MlModel *model, const struct MlImage *img, double *theta_deg);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MARKERLENS_H */
