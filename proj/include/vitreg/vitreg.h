#ifndef VITREG_VITREG_H
#define VITREG_VITREG_H

/* C interface of the vitreg shared library.
 *
 * Every function returning vitreg_status reports failures through the status
 * code; the matching message is available from vitreg_last_error() on the
 * calling thread until the next failing call. Strings returned through char**
 * out-parameters are owned by the caller and released with vitreg_string_free.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(VITREG_BUILDING_LIBRARY)
#define VITREG_API __declspec(dllexport)
#else
#define VITREG_API __declspec(dllimport)
#endif
#else
#define VITREG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vitreg_status {
  VITREG_OK = 0,
  VITREG_ERR_CONFIG = 1,
  VITREG_ERR_ARGUMENT = 2,
  VITREG_ERR_SHAPE = 3,
  VITREG_ERR_CHECKPOINT = 4,
  VITREG_ERR_INGEST = 5,
  VITREG_ERR_AUGMENTATION = 6,
  VITREG_ERR_TRAINING = 7,
  VITREG_ERR_EVALUATION = 8,
  VITREG_ERR_IO = 9,
  VITREG_ERR_INTERNAL = 10
} vitreg_status;

typedef enum vitreg_attention_aggregation {
  VITREG_ATTENTION_MEAN_HEADS = 0,
  VITREG_ATTENTION_SINGLE_HEAD = 1,
  VITREG_ATTENTION_ROLLOUT = 2
} vitreg_attention_aggregation;

typedef struct vitreg_model vitreg_model;

typedef struct vitreg_prediction {
  double p_left;
  double p_right;
  double p_total;
} vitreg_prediction;

VITREG_API const char* vitreg_version(void);

/* "<module>.<kind>: <message>" of the last failure on this thread, or "". */
VITREG_API const char* vitreg_last_error(void);

VITREG_API const char* vitreg_status_name(vitreg_status status);

/* Process exit code for a status: 0 ok, 1 validation error, 2 runtime failure. */
VITREG_API int vitreg_status_exit_code(vitreg_status status);

VITREG_API void vitreg_string_free(char* text);

/* Fresh weights for a JSON model config (unknown keys rejected, missing keys
 * take toy defaults). NULL or "" selects the toy config. */
VITREG_API vitreg_status vitreg_model_create(const char* config_json, uint64_t seed, vitreg_model** out);
VITREG_API vitreg_status vitreg_model_load(const char* path, vitreg_model** out);
VITREG_API vitreg_status vitreg_model_save(const vitreg_model* model, const char* path);
VITREG_API void vitreg_model_free(vitreg_model* model);

VITREG_API vitreg_status vitreg_model_config_json(const vitreg_model* model, char** out);
VITREG_API vitreg_status vitreg_model_input_shape(const vitreg_model* model, int* height, int* width,
                                                  int* channels);
VITREG_API vitreg_status vitreg_model_parameter_count(const vitreg_model* model, size_t* count);

/* Copies parameters out of / into the flat buffer in checkpoint order. */
VITREG_API vitreg_status vitreg_model_get_parameters(const vitreg_model* model, float* values, size_t count);
VITREG_API vitreg_status vitreg_model_set_parameters(vitreg_model* model, const float* values, size_t count);

/* `images` holds `batch` normalized H×W×C images back to back (row-major,
 * interleaved channels); `out` receives `batch` predictions. */
VITREG_API vitreg_status vitreg_model_forward(const vitreg_model* model, const float* images, size_t batch,
                                              vitreg_prediction* out);

/* CLS-to-patch attention of one normalized image on the patch grid.
 * `grid` must hold (H/P)·(W/P) values (row-major); `cls_weight` may be NULL. */
VITREG_API vitreg_status vitreg_model_attention(const vitreg_model* model, const float* image, int layer,
                                                vitreg_attention_aggregation aggregation, int head, double* grid,
                                                size_t grid_len, double* cls_weight);

/* Runs a file-level workflow ("synth", "augment", "train", "eval", "attnmap",
 * "report") described by a JSON request; the JSON summary is returned in
 * *summary_json (may be NULL when not needed). */
VITREG_API vitreg_status vitreg_run(const char* command, const char* request_json, char** summary_json);

#ifdef __cplusplus
}
#endif

#endif
