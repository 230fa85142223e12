#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "evaluation.hpp"
#include "fusion.hpp"
#include "geometry.hpp"

namespace mbfuse {

/// All models' detections for one frame. `sets[k]` belongs to model k and is
/// present (possibly empty) for every model.
struct FrameBatch {
  FrameId frame_id = 0;
  std::vector<ModelDetectionSet> sets;
};

/// Highest model id plus one. A model may contribute no detections at all.
std::size_t count_models(std::span<const Detection> dets);

/// Groups by frame (ascending) and model, preserving input order inside each set.
std::vector<FrameBatch> group_by_frame(std::span<const Detection> dets, std::size_t model_count);

/// Fuses every frame independently on up to `threads` workers. The result is
/// ordered by frame_id, then confidence descending, then emission order, and
/// does not depend on the thread count. No final threshold is applied.
std::vector<FusedDetection> fuse_all(std::span<const FrameBatch> frames, const FusionConfig& cfg,
                                     unsigned threads);

struct PipelineResult {
  std::vector<FusedDetection> fused;
  double final_threshold = 0.0;
  /// Best F1 when the threshold was chosen automatically.
  double f1 = 0.0;
};

/// Full four-step run: weighting and pooling, clustering, strategy, final
/// threshold. When `quantize_output` is set, reals are rounded to their
/// written precision before thresholding so the written file reproduces the
/// in-memory result. An automatic final threshold needs `gt` and `tol`.
PipelineResult run_pipeline(std::span<const Detection> dets, const FusionConfig& cfg,
                            unsigned threads, std::span<const GroundTruthFrame> gt = {},
                            double tol = 0.0, bool quantize_output = false);

}  // namespace mbfuse
