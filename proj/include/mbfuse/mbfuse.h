/*
 * mbfuse: ensemble fusion of microbubble detections.
 *
 * C interface to the shared library. All objects are opaque handles created
 * by a *_create / *_read / producer function and released with the matching
 * *_free. Every fallible call returns mbf_status; on failure the message is
 * available from mbf_last_error() on the calling thread until the next call.
 * Handles are not synchronized: use one handle per thread, or guard it.
 */
#ifndef MBFUSE_MBFUSE_H
#define MBFUSE_MBFUSE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MBFUSE_BUILD)
#    define MBF_API __declspec(dllexport)
#  else
#    define MBF_API __declspec(dllimport)
#  endif
#else
#  define MBF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mbf_status {
  MBF_OK = 0,
  MBF_ERR_INVALID_ARGUMENT = 1,
  MBF_ERR_PARSE = 2,
  MBF_ERR_CONFIG = 3,
  MBF_ERR_IO = 4,
  MBF_ERR_DATA = 5,
  MBF_ERR_INTERNAL = 6
} mbf_status;

MBF_API const char* mbf_version(void);
/* Stable lower-case name, e.g. "config" for MBF_ERR_CONFIG. */
MBF_API const char* mbf_status_name(mbf_status status);
/* Message of the last failure on this thread; "" after a success. */
MBF_API const char* mbf_last_error(void);

/* ---- geometry ---------------------------------------------------------- */

typedef struct mbf_box {
  double x_min, y_min, x_max, y_max;
} mbf_box;

typedef struct mbf_detection {
  mbf_box box;
  double score;
  int32_t model_id;
  int64_t frame_id;
} mbf_detection;

MBF_API double mbf_iou(const mbf_box* a, const mbf_box* b);
MBF_API double mbf_area(const mbf_box* b);
MBF_API void mbf_center(const mbf_box* b, double* x, double* y);

/* ---- detections -------------------------------------------------------- */

typedef struct mbf_detections mbf_detections;

MBF_API mbf_status mbf_detections_create(mbf_detections** out);
/* Schema: frame_id,model_id,x_min,y_min,x_max,y_max,score */
MBF_API mbf_status mbf_detections_read_csv(const char* path, mbf_detections** out);
MBF_API mbf_status mbf_detections_write_csv(const mbf_detections* dets, const char* path);
/* Validates the row (ordered finite corners, score in [0,1], ids >= 0). */
MBF_API mbf_status mbf_detections_push(mbf_detections* dets, const mbf_detection* d);
MBF_API mbf_status mbf_detections_append(mbf_detections* dst, const mbf_detections* src);
/* Overwrites the model id of every row. */
MBF_API mbf_status mbf_detections_set_model(mbf_detections* dets, int32_t model_id);
MBF_API size_t mbf_detections_size(const mbf_detections* dets);
/* Highest model id plus one. */
MBF_API size_t mbf_detections_model_count(const mbf_detections* dets);
MBF_API mbf_status mbf_detections_get(const mbf_detections* dets, size_t i, mbf_detection* out);
MBF_API void mbf_detections_free(mbf_detections* dets);

/* ---- fusion configuration ---------------------------------------------- */

typedef enum mbf_strategy {
  MBF_STRATEGY_NMS = 0,
  MBF_STRATEGY_SOFT_NMS = 1,
  MBF_STRATEGY_NMSW = 2,
  MBF_STRATEGY_WBF = 3
} mbf_strategy;

typedef enum mbf_decay { MBF_DECAY_LINEAR = 0, MBF_DECAY_GAUSSIAN = 1 } mbf_decay;

typedef struct mbf_config mbf_config;

/* Defaults: WBF, iou_thresh 0.2, score_thresh 0.01, unit weights for
 * model_count models, Gaussian decay with sigma 0.5, final threshold 0,
 * WBF count rescaling on. */
MBF_API mbf_status mbf_config_create(size_t model_count, mbf_config** out);
MBF_API mbf_status mbf_config_set_strategy(mbf_config* cfg, mbf_strategy s);
MBF_API mbf_status mbf_config_set_iou_thresh(mbf_config* cfg, double v);
MBF_API mbf_status mbf_config_set_score_thresh(mbf_config* cfg, double v);
MBF_API mbf_status mbf_config_set_weights(mbf_config* cfg, const double* w, size_t n);
MBF_API mbf_status mbf_config_set_decay(mbf_config* cfg, mbf_decay d);
MBF_API mbf_status mbf_config_set_sigma(mbf_config* cfg, double sigma);
MBF_API mbf_status mbf_config_set_final_thresh(mbf_config* cfg, double v);
/* Choose the final threshold by F1 maximization (needs ground truth at fuse time). */
MBF_API mbf_status mbf_config_set_final_thresh_auto(mbf_config* cfg);
MBF_API mbf_status mbf_config_set_wbf_rescale(mbf_config* cfg, int enabled);
MBF_API size_t mbf_config_weight_count(const mbf_config* cfg);
/* Writes "key=value" lines describing every field into buf (NUL-terminated,
 * truncated to cap). Reals use the shortest text that parses back exactly.
 * *needed receives the full length including the NUL. */
MBF_API mbf_status mbf_config_describe(const mbf_config* cfg, char* buf, size_t cap, size_t* needed);
/* Accepts nms | soft-nms | nmsw | wbf. */
MBF_API mbf_status mbf_parse_strategy(const char* name, mbf_strategy* out);
/* Accepts linear | gaussian. */
MBF_API mbf_status mbf_parse_decay(const char* name, mbf_decay* out);
MBF_API const char* mbf_strategy_name(mbf_strategy s);
MBF_API void mbf_config_free(mbf_config* cfg);

/* ---- ground truth ------------------------------------------------------ */

typedef struct mbf_ground_truth mbf_ground_truth;

/* Schema: frame_id,x,y */
MBF_API mbf_status mbf_ground_truth_read_csv(const char* path, mbf_ground_truth** out);
MBF_API mbf_status mbf_ground_truth_write_csv(const mbf_ground_truth* gt, const char* path);
MBF_API size_t mbf_ground_truth_frame_count(const mbf_ground_truth* gt);
MBF_API size_t mbf_ground_truth_point_count(const mbf_ground_truth* gt);
MBF_API void mbf_ground_truth_free(mbf_ground_truth* gt);

/* ---- fused detections -------------------------------------------------- */

typedef struct mbf_fused_detection {
  int64_t frame_id;
  mbf_box box;
  double score;
  int32_t source_count;
} mbf_fused_detection;

typedef struct mbf_fused mbf_fused;

/* Runs weighting, clustering, the configured strategy and the final
 * threshold on every frame, on up to `threads` workers (0 means 1). Output
 * is sorted by frame, then score descending, and is independent of the
 * thread count. Reals are rounded to their written precision so the CSV
 * written by mbf_fused_write_csv reads back identical. gt may be NULL unless
 * the final threshold is automatic; tol is used only then. */
MBF_API mbf_status mbf_fuse(const mbf_detections* dets, const mbf_config* cfg,
                            const mbf_ground_truth* gt, double tol, unsigned threads,
                            mbf_fused** out);
MBF_API double mbf_fused_final_threshold(const mbf_fused* fused);
/* F1 at the chosen threshold when it was automatic, else 0. */
MBF_API double mbf_fused_f1(const mbf_fused* fused);
MBF_API size_t mbf_fused_size(const mbf_fused* fused);
MBF_API mbf_status mbf_fused_get(const mbf_fused* fused, size_t i, mbf_fused_detection* out);
/* Copies up to cap contributing model ids (ascending); *count gets the total. */
MBF_API mbf_status mbf_fused_get_sources(const mbf_fused* fused, size_t i, int32_t* buf,
                                         size_t cap, size_t* count);
/* Schema: frame_id,x_min,y_min,x_max,y_max,score,source_count,source_models */
MBF_API mbf_status mbf_fused_read_csv(const char* path, mbf_fused** out);
MBF_API mbf_status mbf_fused_write_csv(const mbf_fused* fused, const char* path);
MBF_API void mbf_fused_free(mbf_fused* fused);

/* ---- localizations ----------------------------------------------------- */

typedef struct mbf_localization {
  int64_t frame_id;
  double x, y;
  double score;
} mbf_localization;

typedef struct mbf_localizations mbf_localizations;

/* Box centers of fused detections with score >= final_thresh. */
MBF_API mbf_status mbf_localizations_from_fused(const mbf_fused* fused, double final_thresh,
                                                mbf_localizations** out);
/* Reads the localization schema (frame_id,x,y,score), or the detection or
 * fused schema, in which case box centers are taken. */
MBF_API mbf_status mbf_localizations_read_csv(const char* path, mbf_localizations** out);
/* Copy keeping rows with score >= min_score. */
MBF_API mbf_status mbf_localizations_filter(const mbf_localizations* locs, double min_score,
                                            mbf_localizations** out);
MBF_API mbf_status mbf_localizations_write_csv(const mbf_localizations* locs, const char* path);
MBF_API size_t mbf_localizations_size(const mbf_localizations* locs);
MBF_API mbf_status mbf_localizations_get(const mbf_localizations* locs, size_t i,
                                         mbf_localization* out);
MBF_API void mbf_localizations_free(mbf_localizations* locs);

/* ---- evaluation -------------------------------------------------------- */

typedef struct mbf_eval_report {
  uint64_t true_positives;
  uint64_t false_positives;
  uint64_t false_negatives;
  double precision; /* fraction in [0,1] */
  double recall;    /* fraction in [0,1] */
  double rmse;      /* over matched pairs, length units */
} mbf_eval_report;

/* Greedy nearest-first matching within radius tol, per frame. */
MBF_API mbf_status mbf_evaluate(const mbf_localizations* preds, const mbf_ground_truth* gt,
                                double tol, mbf_eval_report* out);
/* F1-maximizing score threshold; ties go to the higher threshold. */
MBF_API mbf_status mbf_sweep(const mbf_localizations* preds, const mbf_ground_truth* gt,
                             double tol, double* threshold, double* f1);

/* ---- super-resolution maps --------------------------------------------- */

typedef enum mbf_render_mode { MBF_RENDER_LINEAR = 0, MBF_RENDER_LOG = 1 } mbf_render_mode;

typedef struct mbf_grid mbf_grid;

MBF_API mbf_status mbf_grid_create(double x0, double y0, double cell, uint32_t width,
                                   uint32_t height, mbf_grid** out);
/* out_of_bounds (nullable) receives the number of localizations outside the grid. */
MBF_API mbf_status mbf_grid_accumulate(mbf_grid* grid, const mbf_localizations* locs,
                                       unsigned threads, uint64_t* out_of_bounds);
MBF_API uint64_t mbf_grid_total(const mbf_grid* grid);
MBF_API mbf_status mbf_grid_count(const mbf_grid* grid, uint32_t i, uint32_t j, uint64_t* out);
/* Binary PGM, P5, maxval 255. */
MBF_API mbf_status mbf_grid_write_pgm(const mbf_grid* grid, mbf_render_mode mode, const char* path);
MBF_API mbf_status mbf_grid_write_counts_csv(const mbf_grid* grid, const char* path);
MBF_API void mbf_grid_free(mbf_grid* grid);

/* ---- synthetic scenarios ----------------------------------------------- */

typedef struct mbf_scenario mbf_scenario;

MBF_API mbf_status mbf_scenario_load(const char* path, mbf_scenario** out);
MBF_API uint64_t mbf_scenario_seed(const mbf_scenario* sc);
MBF_API mbf_status mbf_scenario_set_seed(mbf_scenario* sc, uint64_t seed);
MBF_API size_t mbf_scenario_detector_count(const mbf_scenario* sc);
/* Generates ground truth and one detection table per detector
 * (dets[k] for detector k; dets must have room for detector_count handles). */
MBF_API mbf_status mbf_simulate(const mbf_scenario* sc, mbf_ground_truth** gt, mbf_detections** dets);
MBF_API void mbf_scenario_free(mbf_scenario* sc);

/* ---- misc -------------------------------------------------------------- */

/* 64-bit FNV-1a of a file's bytes. */
MBF_API mbf_status mbf_file_digest(const char* path, uint64_t* out);

#ifdef __cplusplus
}
#endif

#endif /* MBFUSE_MBFUSE_H */
