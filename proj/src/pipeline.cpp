#include "pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <string>
#include <thread>

#include "csv_io.hpp"
#include "error.hpp"

namespace mbfuse {

std::size_t count_models(std::span<const Detection> dets) {
  ModelId top = -1;
  for (const auto& d : dets) top = std::max(top, d.model_id);
  return static_cast<std::size_t>(top + 1);
}

std::vector<FrameBatch> group_by_frame(std::span<const Detection> dets, std::size_t model_count) {
  std::map<FrameId, std::size_t> slot;
  std::vector<FrameBatch> frames;
  for (const auto& d : dets) {
    if (d.model_id < 0 || static_cast<std::size_t>(d.model_id) >= model_count) {
      throw Error(ErrorCategory::Config, "detection references model " +
                                             std::to_string(d.model_id) + " beyond model count " +
                                             std::to_string(model_count));
    }
    auto [it, inserted] = slot.try_emplace(d.frame_id, frames.size());
    if (inserted) {
      FrameBatch fb{d.frame_id, {}};
      for (std::size_t m = 0; m < model_count; ++m) {
        fb.sets.push_back({static_cast<ModelId>(m), d.frame_id, {}});
      }
      frames.push_back(std::move(fb));
    }
    frames[it->second].sets[static_cast<std::size_t>(d.model_id)].detections.push_back(d);
  }
  std::sort(frames.begin(), frames.end(),
            [](const FrameBatch& a, const FrameBatch& b) { return a.frame_id < b.frame_id; });
  return frames;
}

std::vector<FusedDetection> fuse_all(std::span<const FrameBatch> frames, const FusionConfig& cfg,
                                     unsigned threads) {
  validate(cfg);
  std::vector<std::vector<FusedDetection>> per_frame(frames.size());

  auto work = [&](std::size_t i) {
    auto fused = fuse_frame(frames[i].sets, cfg);
    std::stable_sort(fused.begin(), fused.end(), [](const FusedDetection& a, const FusedDetection& b) {
      return a.confidence > b.confidence;
    });
    per_frame[i] = std::move(fused);
  };

  const unsigned workers =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(frames.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < frames.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < frames.size(); i = next++) {
          try {
            work(i);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<FusedDetection> out;
  for (auto& f : per_frame) {
    std::move(f.begin(), f.end(), std::back_inserter(out));
  }
  return out;
}

PipelineResult run_pipeline(std::span<const Detection> dets, const FusionConfig& cfg,
                            unsigned threads, std::span<const GroundTruthFrame> gt, double tol,
                            bool quantize_output) {
  validate(cfg);
  const std::size_t models = count_models(dets);
  if (models > cfg.model_weights.size()) {
    throw Error(ErrorCategory::Config, "got " + std::to_string(cfg.model_weights.size()) +
                                           " weights for " + std::to_string(models) + " models");
  }
  const auto frames = group_by_frame(dets, cfg.model_weights.size());

  PipelineResult result;
  result.fused = fuse_all(frames, cfg, threads);
  if (quantize_output) quantize(result.fused);

  if (cfg.final_thresh.auto_f1) {
    if (gt.empty()) {
      throw Error(ErrorCategory::Config, "an automatic final threshold needs ground truth");
    }
    const SweepResult best = sweep_threshold(std::span<const FusedDetection>(result.fused), gt, tol);
    result.final_threshold = best.threshold;
    result.f1 = best.f1;
  } else {
    result.final_threshold = cfg.final_thresh.value;
  }

  std::erase_if(result.fused,
                [&](const FusedDetection& f) { return f.confidence < result.final_threshold; });
  return result;
}

}  // namespace mbfuse
