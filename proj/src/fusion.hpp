#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "geometry.hpp"

namespace mbfuse {

enum class Strategy { Nms, SoftNms, Nmsw, Wbf };
enum class Decay { Linear, Gaussian };

/// Final confidence cut applied after fusion. auto_f1 means the threshold is
/// chosen by F1 maximization against ground truth.
struct FinalThreshold {
  bool auto_f1 = false;
  double value = 0.0;
};

struct FusionConfig {
  Strategy strategy = Strategy::Wbf;
  double iou_thresh = 0.2;
  double score_thresh = 0.01;
  /// One weight per model id; index i weighs model i.
  std::vector<double> model_weights;
  Decay decay = Decay::Gaussian;
  double sigma = 0.5;
  FinalThreshold final_thresh;
  bool wbf_count_rescale = true;
};

/// Range checks on every field. Throws Error(Config).
void validate(const FusionConfig& cfg);

/// Config with the standard defaults and unit weights for `model_count` models.
FusionConfig default_config(std::size_t model_count);

/// A pooled detection with its weighted ("effective") confidence. `order` is
/// the position in the flattened pool and is the last tie-breaker.
struct PoolEntry {
  Detection detection;
  double effective = 0.0;
  std::size_t order = 0;
};

struct Cluster {
  /// Sorted by effective confidence descending, then (model_id, order).
  std::vector<PoolEntry> members;
  /// Box new entries are matched against: the running weighted average, or
  /// the seed member's box for NMS and Soft-NMS.
  BoundingBox fused_box;
};

struct FusedDetection {
  FrameId frame_id = 0;
  BoundingBox box;
  double confidence = 0.0;
  std::int32_t source_count = 1;
  /// Sorted, unique.
  std::vector<ModelId> source_models;

  friend bool operator==(const FusedDetection&, const FusedDetection&) = default;
};

struct Localization {
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;
  FrameId frame_id = 0;

  friend bool operator==(const Localization&, const Localization&) = default;
};

/// Flattens the per-model sets into one pool, scoring each detection with
/// weight[model_id] * confidence. No clipping. Throws Error(Config) when the
/// number of distinct model ids differs from the number of weights or an id
/// has no weight.
std::vector<PoolEntry> apply_weights(std::span<const ModelDetectionSet> sets,
                                     std::span<const double> weights);

/// Strict ordering used everywhere a pool is sorted.
bool ranks_before(const PoolEntry& a, const PoolEntry& b) noexcept;

/// Confidence-weighted average box of `members`, clamped per coordinate to the
/// members' range.
BoundingBox weighted_box(std::span<const PoolEntry> members);

/// Greedy sequential grouping. Entries at or below score_thresh are dropped;
/// the rest are visited best-first and join the cluster whose fused box
/// overlaps them most (IoU > iou_thresh, lowest index on ties), or seed a
/// new one. The fused box is the running weighted average for NMSW and WBF
/// and stays the seed box for NMS and Soft-NMS.
std::vector<Cluster> cluster(std::span<const PoolEntry> pool, const FusionConfig& cfg);

double decay_factor(double overlap, Decay decay, double sigma) noexcept;

std::vector<FusedDetection> fuse_nms(std::span<const Cluster> clusters);
std::vector<FusedDetection> fuse_soft_nms(std::span<const Cluster> clusters,
                                          const FusionConfig& cfg);
std::vector<FusedDetection> fuse_nmsw(std::span<const Cluster> clusters);
/// Confidence is the member mean, times min(T, N)/N when rescaling, with T
/// the member count and N = cfg.model_weights.size().
std::vector<FusedDetection> fuse_wbf(std::span<const Cluster> clusters,
                                     const FusionConfig& cfg);

/// Dispatches on cfg.strategy.
std::vector<FusedDetection> fuse_clusters(std::span<const Cluster> clusters,
                                          const FusionConfig& cfg);

/// apply_weights, cluster and the configured strategy for one frame. No final
/// threshold is applied.
std::vector<FusedDetection> fuse_frame(std::span<const ModelDetectionSet> sets,
                                       const FusionConfig& cfg);

/// Box centers of detections with confidence >= final_thresh.
std::vector<Localization> extract_localizations(std::span<const FusedDetection> fused,
                                                double final_thresh);

}  // namespace mbfuse
