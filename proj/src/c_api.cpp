#include "mbfuse/mbfuse.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <memory>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "csv_io.hpp"
#include "error.hpp"
#include "evaluation.hpp"
#include "fusion.hpp"
#include "pipeline.hpp"
#include "srmap.hpp"
#include "synth.hpp"
#include "text_format.hpp"

using namespace mbfuse;

struct mbf_detections {
  std::vector<Detection> rows;
};
struct mbf_config {
  FusionConfig cfg;
};
struct mbf_ground_truth {
  std::vector<GroundTruthFrame> frames;
};
struct mbf_fused {
  std::vector<FusedDetection> rows;
  double threshold = 0.0;
  double f1 = 0.0;
};
struct mbf_localizations {
  std::vector<Localization> rows;
};
struct mbf_grid {
  SRGrid grid;
};
struct mbf_scenario {
  SynthScenario scenario;
};

namespace {

thread_local std::string g_last_error;

mbf_status to_status(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::InvalidArgument: return MBF_ERR_INVALID_ARGUMENT;
    case ErrorCategory::Parse: return MBF_ERR_PARSE;
    case ErrorCategory::Config: return MBF_ERR_CONFIG;
    case ErrorCategory::Io: return MBF_ERR_IO;
    case ErrorCategory::Data: return MBF_ERR_DATA;
  }
  return MBF_ERR_INTERNAL;
}

template <class F>
mbf_status guarded(F&& body) noexcept {
  try {
    body();
    g_last_error.clear();
    return MBF_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.category());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MBF_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MBF_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return MBF_ERR_INTERNAL;
  }
}

template <class T>
void need(const T* p, const char* what) {
  if (p == nullptr) throw Error(ErrorCategory::InvalidArgument, std::string(what) + " is null");
}

void need_index(std::size_t i, std::size_t n) {
  if (i >= n) throw Error(ErrorCategory::InvalidArgument, "index out of range");
}

BoundingBox to_box(const mbf_box& b) { return {b.x_min, b.y_min, b.x_max, b.y_max}; }
mbf_box from_box(const BoundingBox& b) { return {b.x_min, b.y_min, b.x_max, b.y_max}; }

std::string exact(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void check_config_field(bool ok, const char* msg) {
  if (!ok) throw Error(ErrorCategory::Config, msg);
}

}  // namespace

extern "C" {

const char* mbf_version(void) { return MBFUSE_VERSION; }

const char* mbf_status_name(mbf_status status) {
  switch (status) {
    case MBF_OK: return "ok";
    case MBF_ERR_INVALID_ARGUMENT: return category_name(ErrorCategory::InvalidArgument);
    case MBF_ERR_PARSE: return category_name(ErrorCategory::Parse);
    case MBF_ERR_CONFIG: return category_name(ErrorCategory::Config);
    case MBF_ERR_IO: return category_name(ErrorCategory::Io);
    case MBF_ERR_DATA: return category_name(ErrorCategory::Data);
    case MBF_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* mbf_last_error(void) { return g_last_error.c_str(); }

double mbf_iou(const mbf_box* a, const mbf_box* b) {
  if (a == nullptr || b == nullptr) return 0.0;
  return iou(to_box(*a), to_box(*b));
}

double mbf_area(const mbf_box* b) { return b == nullptr ? 0.0 : area(to_box(*b)); }

void mbf_center(const mbf_box* b, double* x, double* y) {
  if (b == nullptr) return;
  const Point p = center(to_box(*b));
  if (x != nullptr) *x = p.x;
  if (y != nullptr) *y = p.y;
}

// detections

mbf_status mbf_detections_create(mbf_detections** out) {
  return guarded([&] {
    need(out, "out");
    *out = new mbf_detections{};
  });
}

mbf_status mbf_detections_read_csv(const char* path, mbf_detections** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    std::istringstream in(read_file(path));
    auto rows = read_detections(in, path);
    *out = new mbf_detections{std::move(rows)};
  });
}

mbf_status mbf_detections_write_csv(const mbf_detections* dets, const char* path) {
  return guarded([&] {
    need(dets, "detections");
    need(path, "path");
    std::ostringstream os;
    write_detections(os, dets->rows);
    write_file_atomic(path, os.str());
  });
}

mbf_status mbf_detections_push(mbf_detections* dets, const mbf_detection* d) {
  return guarded([&] {
    need(dets, "detections");
    need(d, "detection");
    const Detection row{to_box(d->box), d->score, d->model_id, d->frame_id};
    validate_detection(row);
    dets->rows.push_back(row);
  });
}

mbf_status mbf_detections_append(mbf_detections* dst, const mbf_detections* src) {
  return guarded([&] {
    need(dst, "destination");
    need(src, "source");
    if (dst == src) {
      const auto copy = src->rows;
      dst->rows.insert(dst->rows.end(), copy.begin(), copy.end());
    } else {
      dst->rows.insert(dst->rows.end(), src->rows.begin(), src->rows.end());
    }
  });
}

mbf_status mbf_detections_set_model(mbf_detections* dets, int32_t model_id) {
  return guarded([&] {
    need(dets, "detections");
    if (model_id < 0) throw Error(ErrorCategory::InvalidArgument, "negative model id");
    for (auto& d : dets->rows) d.model_id = model_id;
  });
}

size_t mbf_detections_size(const mbf_detections* dets) {
  return dets == nullptr ? 0 : dets->rows.size();
}

size_t mbf_detections_model_count(const mbf_detections* dets) {
  return dets == nullptr ? 0 : count_models(dets->rows);
}

mbf_status mbf_detections_get(const mbf_detections* dets, size_t i, mbf_detection* out) {
  return guarded([&] {
    need(dets, "detections");
    need(out, "out");
    need_index(i, dets->rows.size());
    const Detection& d = dets->rows[i];
    *out = mbf_detection{from_box(d.box), d.confidence, d.model_id, d.frame_id};
  });
}

void mbf_detections_free(mbf_detections* dets) { delete dets; }

// config

mbf_status mbf_config_create(size_t model_count, mbf_config** out) {
  return guarded([&] {
    need(out, "out");
    if (model_count == 0) throw Error(ErrorCategory::Config, "model_count must be >= 1");
    *out = new mbf_config{default_config(model_count)};
  });
}

mbf_status mbf_config_set_strategy(mbf_config* cfg, mbf_strategy s) {
  return guarded([&] {
    need(cfg, "config");
    switch (s) {
      case MBF_STRATEGY_NMS: cfg->cfg.strategy = Strategy::Nms; return;
      case MBF_STRATEGY_SOFT_NMS: cfg->cfg.strategy = Strategy::SoftNms; return;
      case MBF_STRATEGY_NMSW: cfg->cfg.strategy = Strategy::Nmsw; return;
      case MBF_STRATEGY_WBF: cfg->cfg.strategy = Strategy::Wbf; return;
    }
    throw Error(ErrorCategory::Config, "unknown strategy");
  });
}

mbf_status mbf_config_set_iou_thresh(mbf_config* cfg, double v) {
  return guarded([&] {
    need(cfg, "config");
    check_config_field(v > 0.0 && v <= 1.0, "iou_thresh must lie in (0,1]");
    cfg->cfg.iou_thresh = v;
  });
}

mbf_status mbf_config_set_score_thresh(mbf_config* cfg, double v) {
  return guarded([&] {
    need(cfg, "config");
    check_config_field(v >= 0.0 && v <= 1.0, "score_thresh must lie in [0,1]");
    cfg->cfg.score_thresh = v;
  });
}

mbf_status mbf_config_set_weights(mbf_config* cfg, const double* w, size_t n) {
  return guarded([&] {
    need(cfg, "config");
    check_config_field(n > 0, "at least one weight is required");
    need(w, "weights");
    std::vector<double> weights(w, w + n);
    for (double x : weights) {
      check_config_field(std::isfinite(x) && x >= 0.0, "weights must be finite and non-negative");
    }
    cfg->cfg.model_weights = std::move(weights);
  });
}

mbf_status mbf_config_set_decay(mbf_config* cfg, mbf_decay d) {
  return guarded([&] {
    need(cfg, "config");
    if (d == MBF_DECAY_LINEAR) cfg->cfg.decay = Decay::Linear;
    else if (d == MBF_DECAY_GAUSSIAN) cfg->cfg.decay = Decay::Gaussian;
    else throw Error(ErrorCategory::Config, "unknown decay");
  });
}

mbf_status mbf_config_set_sigma(mbf_config* cfg, double sigma) {
  return guarded([&] {
    need(cfg, "config");
    check_config_field(std::isfinite(sigma) && sigma > 0.0, "sigma must be positive");
    cfg->cfg.sigma = sigma;
  });
}

mbf_status mbf_config_set_final_thresh(mbf_config* cfg, double v) {
  return guarded([&] {
    need(cfg, "config");
    check_config_field(std::isfinite(v) && v >= 0.0, "final threshold must be >= 0");
    cfg->cfg.final_thresh = {false, v};
  });
}

mbf_status mbf_config_set_final_thresh_auto(mbf_config* cfg) {
  return guarded([&] {
    need(cfg, "config");
    cfg->cfg.final_thresh = {true, 0.0};
  });
}

mbf_status mbf_config_set_wbf_rescale(mbf_config* cfg, int enabled) {
  return guarded([&] {
    need(cfg, "config");
    cfg->cfg.wbf_count_rescale = enabled != 0;
  });
}

size_t mbf_config_weight_count(const mbf_config* cfg) {
  return cfg == nullptr ? 0 : cfg->cfg.model_weights.size();
}

const char* mbf_strategy_name(mbf_strategy s) {
  switch (s) {
    case MBF_STRATEGY_NMS: return "nms";
    case MBF_STRATEGY_SOFT_NMS: return "soft-nms";
    case MBF_STRATEGY_NMSW: return "nmsw";
    case MBF_STRATEGY_WBF: return "wbf";
  }
  return "unknown";
}

mbf_status mbf_config_describe(const mbf_config* cfg, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(cfg, "config");
    const FusionConfig& c = cfg->cfg;
    std::ostringstream os;
    static const char* const kStrategies[] = {"nms", "soft-nms", "nmsw", "wbf"};
    os << "strategy=" << kStrategies[static_cast<int>(c.strategy)] << '\n';
    os << "iou_thresh=" << exact(c.iou_thresh) << '\n';
    os << "score_thresh=" << exact(c.score_thresh) << '\n';
    os << "weights=";
    for (std::size_t i = 0; i < c.model_weights.size(); ++i) {
      os << (i > 0 ? "," : "") << exact(c.model_weights[i]);
    }
    os << '\n';
    os << "decay=" << (c.decay == Decay::Linear ? "linear" : "gaussian") << '\n';
    os << "sigma=" << exact(c.sigma) << '\n';
    os << "final_thresh="
       << (c.final_thresh.auto_f1 ? std::string("auto-f1") : exact(c.final_thresh.value))
       << '\n';
    os << "wbf_count_rescale=" << (c.wbf_count_rescale ? 1 : 0) << '\n';
    const std::string text = os.str();
    if (needed != nullptr) *needed = text.size() + 1;
    if (buf != nullptr && cap > 0) {
      const std::size_t n = std::min(cap - 1, text.size());
      std::memcpy(buf, text.data(), n);
      buf[n] = '\0';
    }
  });
}

mbf_status mbf_parse_strategy(const char* name, mbf_strategy* out) {
  return guarded([&] {
    need(name, "name");
    need(out, "out");
    const std::string s(name);
    if (s == "nms") *out = MBF_STRATEGY_NMS;
    else if (s == "soft-nms") *out = MBF_STRATEGY_SOFT_NMS;
    else if (s == "nmsw") *out = MBF_STRATEGY_NMSW;
    else if (s == "wbf") *out = MBF_STRATEGY_WBF;
    else throw Error(ErrorCategory::Config, "unknown strategy '" + s + "' (nms|soft-nms|nmsw|wbf)");
  });
}

mbf_status mbf_parse_decay(const char* name, mbf_decay* out) {
  return guarded([&] {
    need(name, "name");
    need(out, "out");
    const std::string s(name);
    if (s == "linear") *out = MBF_DECAY_LINEAR;
    else if (s == "gaussian") *out = MBF_DECAY_GAUSSIAN;
    else throw Error(ErrorCategory::Config, "unknown decay '" + s + "' (linear|gaussian)");
  });
}

void mbf_config_free(mbf_config* cfg) { delete cfg; }

// ground truth

mbf_status mbf_ground_truth_read_csv(const char* path, mbf_ground_truth** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    std::istringstream in(read_file(path));
    *out = new mbf_ground_truth{read_ground_truth(in, path)};
  });
}

mbf_status mbf_ground_truth_write_csv(const mbf_ground_truth* gt, const char* path) {
  return guarded([&] {
    need(gt, "ground truth");
    need(path, "path");
    std::ostringstream os;
    write_ground_truth(os, gt->frames);
    write_file_atomic(path, os.str());
  });
}

size_t mbf_ground_truth_frame_count(const mbf_ground_truth* gt) {
  return gt == nullptr ? 0 : gt->frames.size();
}

size_t mbf_ground_truth_point_count(const mbf_ground_truth* gt) {
  if (gt == nullptr) return 0;
  std::size_t n = 0;
  for (const auto& f : gt->frames) n += f.points.size();
  return n;
}

void mbf_ground_truth_free(mbf_ground_truth* gt) { delete gt; }

// fusion

mbf_status mbf_fuse(const mbf_detections* dets, const mbf_config* cfg, const mbf_ground_truth* gt,
                    double tol, unsigned threads, mbf_fused** out) {
  return guarded([&] {
    need(dets, "detections");
    need(cfg, "config");
    need(out, "out");
    std::span<const GroundTruthFrame> truth;
    if (gt != nullptr) truth = gt->frames;
    auto result = run_pipeline(dets->rows, cfg->cfg, threads == 0 ? 1 : threads, truth, tol, true);
    *out = new mbf_fused{std::move(result.fused), result.final_threshold, result.f1};
  });
}

double mbf_fused_final_threshold(const mbf_fused* fused) {
  return fused == nullptr ? 0.0 : fused->threshold;
}

double mbf_fused_f1(const mbf_fused* fused) { return fused == nullptr ? 0.0 : fused->f1; }

size_t mbf_fused_size(const mbf_fused* fused) { return fused == nullptr ? 0 : fused->rows.size(); }

mbf_status mbf_fused_get(const mbf_fused* fused, size_t i, mbf_fused_detection* out) {
  return guarded([&] {
    need(fused, "fused");
    need(out, "out");
    need_index(i, fused->rows.size());
    const FusedDetection& f = fused->rows[i];
    *out = mbf_fused_detection{f.frame_id, from_box(f.box), f.confidence, f.source_count};
  });
}

mbf_status mbf_fused_get_sources(const mbf_fused* fused, size_t i, int32_t* buf, size_t cap,
                                 size_t* count) {
  return guarded([&] {
    need(fused, "fused");
    need_index(i, fused->rows.size());
    const auto& models = fused->rows[i].source_models;
    if (count != nullptr) *count = models.size();
    if (buf != nullptr) {
      for (std::size_t k = 0; k < std::min(cap, models.size()); ++k) buf[k] = models[k];
    }
  });
}

mbf_status mbf_fused_read_csv(const char* path, mbf_fused** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    std::istringstream in(read_file(path));
    *out = new mbf_fused{read_fused(in, path), 0.0, 0.0};
  });
}

mbf_status mbf_fused_write_csv(const mbf_fused* fused, const char* path) {
  return guarded([&] {
    need(fused, "fused");
    need(path, "path");
    std::ostringstream os;
    write_fused(os, fused->rows);
    write_file_atomic(path, os.str());
  });
}

void mbf_fused_free(mbf_fused* fused) { delete fused; }

// localizations

mbf_status mbf_localizations_from_fused(const mbf_fused* fused, double final_thresh,
                                        mbf_localizations** out) {
  return guarded([&] {
    need(fused, "fused");
    need(out, "out");
    *out = new mbf_localizations{extract_localizations(fused->rows, final_thresh)};
  });
}

mbf_status mbf_localizations_read_csv(const char* path, mbf_localizations** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    std::istringstream in(read_file(path));
    *out = new mbf_localizations{read_predictions(in, path)};
  });
}

mbf_status mbf_localizations_filter(const mbf_localizations* locs, double min_score,
                                    mbf_localizations** out) {
  return guarded([&] {
    need(locs, "localizations");
    need(out, "out");
    std::vector<Localization> kept;
    for (const auto& l : locs->rows) {
      if (l.confidence >= min_score) kept.push_back(l);
    }
    *out = new mbf_localizations{std::move(kept)};
  });
}

mbf_status mbf_localizations_write_csv(const mbf_localizations* locs, const char* path) {
  return guarded([&] {
    need(locs, "localizations");
    need(path, "path");
    std::ostringstream os;
    write_localizations(os, locs->rows);
    write_file_atomic(path, os.str());
  });
}

size_t mbf_localizations_size(const mbf_localizations* locs) {
  return locs == nullptr ? 0 : locs->rows.size();
}

mbf_status mbf_localizations_get(const mbf_localizations* locs, size_t i, mbf_localization* out) {
  return guarded([&] {
    need(locs, "localizations");
    need(out, "out");
    need_index(i, locs->rows.size());
    const Localization& l = locs->rows[i];
    *out = mbf_localization{l.frame_id, l.x, l.y, l.confidence};
  });
}

void mbf_localizations_free(mbf_localizations* locs) { delete locs; }

// evaluation

mbf_status mbf_evaluate(const mbf_localizations* preds, const mbf_ground_truth* gt, double tol,
                        mbf_eval_report* out) {
  return guarded([&] {
    need(preds, "predictions");
    need(gt, "ground truth");
    need(out, "out");
    const EvalReport r = evaluate(preds->rows, gt->frames, tol);
    *out = mbf_eval_report{r.true_positives, r.false_positives, r.false_negatives,
                           r.precision,      r.recall,          r.rmse};
  });
}

mbf_status mbf_sweep(const mbf_localizations* preds, const mbf_ground_truth* gt, double tol,
                     double* threshold, double* f1) {
  return guarded([&] {
    need(preds, "predictions");
    need(gt, "ground truth");
    const SweepResult r = sweep_threshold(preds->rows, gt->frames, tol);
    if (threshold != nullptr) *threshold = r.threshold;
    if (f1 != nullptr) *f1 = r.f1;
  });
}

// SR maps

mbf_status mbf_grid_create(double x0, double y0, double cell, uint32_t width, uint32_t height,
                           mbf_grid** out) {
  return guarded([&] {
    need(out, "out");
    *out = new mbf_grid{SRGrid(x0, y0, cell, width, height)};
  });
}

mbf_status mbf_grid_accumulate(mbf_grid* grid, const mbf_localizations* locs, unsigned threads,
                               uint64_t* out_of_bounds) {
  return guarded([&] {
    need(grid, "grid");
    need(locs, "localizations");
    const std::uint64_t outside = grid->grid.accumulate(locs->rows, threads == 0 ? 1 : threads);
    if (out_of_bounds != nullptr) *out_of_bounds = outside;
  });
}

uint64_t mbf_grid_total(const mbf_grid* grid) { return grid == nullptr ? 0 : grid->grid.total(); }

mbf_status mbf_grid_count(const mbf_grid* grid, uint32_t i, uint32_t j, uint64_t* out) {
  return guarded([&] {
    need(grid, "grid");
    need(out, "out");
    *out = grid->grid.at(i, j);
  });
}

mbf_status mbf_grid_write_pgm(const mbf_grid* grid, mbf_render_mode mode, const char* path) {
  return guarded([&] {
    need(grid, "grid");
    need(path, "path");
    if (mode != MBF_RENDER_LINEAR && mode != MBF_RENDER_LOG) {
      throw Error(ErrorCategory::InvalidArgument, "unknown render mode");
    }
    std::ostringstream os;
    write_pgm(os, render(grid->grid, mode == MBF_RENDER_LOG ? RenderMode::Log : RenderMode::Linear));
    write_file_atomic(path, os.str());
  });
}

mbf_status mbf_grid_write_counts_csv(const mbf_grid* grid, const char* path) {
  return guarded([&] {
    need(grid, "grid");
    need(path, "path");
    std::ostringstream os;
    write_counts_csv(os, grid->grid);
    write_file_atomic(path, os.str());
  });
}

void mbf_grid_free(mbf_grid* grid) { delete grid; }

// scenarios

mbf_status mbf_scenario_load(const char* path, mbf_scenario** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new mbf_scenario{load_scenario(path)};
  });
}

uint64_t mbf_scenario_seed(const mbf_scenario* sc) { return sc == nullptr ? 0 : sc->scenario.seed; }

mbf_status mbf_scenario_set_seed(mbf_scenario* sc, uint64_t seed) {
  return guarded([&] {
    need(sc, "scenario");
    sc->scenario.seed = seed;
  });
}

size_t mbf_scenario_detector_count(const mbf_scenario* sc) {
  return sc == nullptr ? 0 : sc->scenario.detectors.size();
}

mbf_status mbf_simulate(const mbf_scenario* sc, mbf_ground_truth** gt, mbf_detections** dets) {
  return guarded([&] {
    need(sc, "scenario");
    need(gt, "gt");
    need(dets, "dets");
    SynthOutput out = generate(sc->scenario);
    // allocate everything before publishing any handle
    auto truth = std::make_unique<mbf_ground_truth>(mbf_ground_truth{std::move(out.ground_truth)});
    std::vector<std::unique_ptr<mbf_detections>> tables;
    for (auto& rows : out.by_detector) {
      tables.push_back(std::make_unique<mbf_detections>(mbf_detections{std::move(rows)}));
    }
    *gt = truth.release();
    for (std::size_t k = 0; k < tables.size(); ++k) dets[k] = tables[k].release();
  });
}

void mbf_scenario_free(mbf_scenario* sc) { delete sc; }

mbf_status mbf_file_digest(const char* path, uint64_t* out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = fnv1a64(read_file(path));
  });
}

}  // extern "C"
