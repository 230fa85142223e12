#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fusion.hpp"
#include "geometry.hpp"

namespace mbfuse {

struct GroundTruthFrame {
  FrameId frame_id = 0;
  std::vector<Point> points;
};

struct Match {
  std::size_t pred = 0;
  std::size_t gt = 0;
  double distance = 0.0;

  friend bool operator==(const Match&, const Match&) = default;
};

struct FrameMatch {
  std::vector<Match> matches;
  std::vector<std::size_t> unmatched_preds;
  std::vector<std::size_t> unmatched_gt;
};

/// Greedy nearest-first matching: every (pred, gt) pair within `tol` is ranked
/// by (distance, pred index, gt index) and accepted while both ends are free.
FrameMatch match_frame(std::span<const Point> preds, std::span<const Point> gt, double tol);

struct EvalReport {
  std::uint64_t true_positives = 0;
  std::uint64_t false_positives = 0;
  std::uint64_t false_negatives = 0;
  /// Fractions in [0,1]; 0 when the denominator is 0.
  double precision = 0.0;
  double recall = 0.0;
  /// Over matched pairs only; 0 when nothing matched.
  double rmse = 0.0;
  /// Indices refer to the prediction list passed to evaluate() and to the
  /// point index inside the matching ground-truth frame.
  std::vector<Match> matches;
};

/// Aggregates match_frame over all frames. Predictions are grouped by
/// frame_id; a frame missing on one side counts as empty there. Throws
/// Error(Data) when gt is empty or when predictions exist but share no frame
/// with gt, and Error(InvalidArgument) for a non-positive tolerance.
EvalReport evaluate(std::span<const Localization> preds,
                    std::span<const GroundTruthFrame> gt, double tol);

double f1_score(double precision, double recall) noexcept;

struct SweepResult {
  double threshold = 0.0;
  double f1 = 0.0;
};

/// Picks the final threshold maximizing F1. Candidates are the distinct
/// confidences plus 0; a prediction survives threshold t when confidence >= t.
/// Ties go to the higher threshold. Throws Error(Data) when gt holds no points.
SweepResult sweep_threshold(std::span<const Localization> preds,
                            std::span<const GroundTruthFrame> gt, double tol);

SweepResult sweep_threshold(std::span<const FusedDetection> fused,
                            std::span<const GroundTruthFrame> gt, double tol);

}  // namespace mbfuse
