#include "evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "error.hpp"

namespace mbfuse {
namespace {

struct FramePreds {
  std::vector<Point> points;
  std::vector<double> confidences;
  std::vector<std::size_t> global_index;
};

std::map<FrameId, FramePreds> group_preds(std::span<const Localization> preds) {
  std::map<FrameId, FramePreds> frames;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto& f = frames[preds[i].frame_id];
    f.points.push_back({preds[i].x, preds[i].y});
    f.confidences.push_back(preds[i].confidence);
    f.global_index.push_back(i);
  }
  return frames;
}

std::map<FrameId, std::span<const Point>> index_gt(std::span<const GroundTruthFrame> gt) {
  std::map<FrameId, std::span<const Point>> out;
  for (const auto& f : gt) {
    if (out.count(f.frame_id) != 0) {
      throw Error(ErrorCategory::Data,
                  "duplicate ground-truth frame " + std::to_string(f.frame_id));
    }
    out.emplace(f.frame_id, f.points);
  }
  return out;
}

void check_tolerance(double tol) {
  if (!(tol > 0.0) || !std::isfinite(tol)) {
    throw Error(ErrorCategory::InvalidArgument, "match tolerance must be positive");
  }
}

}  // namespace

FrameMatch match_frame(std::span<const Point> preds, std::span<const Point> gt, double tol) {
  std::vector<Match> pairs;
  for (std::size_t p = 0; p < preds.size(); ++p) {
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const double dx = preds[p].x - gt[g].x;
      const double dy = preds[p].y - gt[g].y;
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d <= tol) pairs.push_back({p, g, d});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Match& a, const Match& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.pred != b.pred) return a.pred < b.pred;
    return a.gt < b.gt;
  });

  std::vector<bool> pred_used(preds.size(), false);
  std::vector<bool> gt_used(gt.size(), false);
  FrameMatch out;
  for (const auto& m : pairs) {
    if (pred_used[m.pred] || gt_used[m.gt]) continue;
    pred_used[m.pred] = gt_used[m.gt] = true;
    out.matches.push_back(m);
  }
  for (std::size_t p = 0; p < preds.size(); ++p) {
    if (!pred_used[p]) out.unmatched_preds.push_back(p);
  }
  for (std::size_t g = 0; g < gt.size(); ++g) {
    if (!gt_used[g]) out.unmatched_gt.push_back(g);
  }
  return out;
}

EvalReport evaluate(std::span<const Localization> preds,
                    std::span<const GroundTruthFrame> gt, double tol) {
  check_tolerance(tol);
  if (gt.empty()) throw Error(ErrorCategory::Data, "no ground-truth frames");

  const auto pred_frames = group_preds(preds);
  const auto gt_frames = index_gt(gt);

  if (!pred_frames.empty()) {
    const bool shared = std::any_of(pred_frames.begin(), pred_frames.end(),
                                    [&](const auto& kv) { return gt_frames.count(kv.first) != 0; });
    if (!shared) throw Error(ErrorCategory::Data, "predictions and ground truth share no frame");
  }

  EvalReport r;
  double sq_sum = 0.0;
  std::vector<FrameId> ids;
  for (const auto& kv : pred_frames) ids.push_back(kv.first);
  for (const auto& kv : gt_frames) ids.push_back(kv.first);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  static const FramePreds kNoPreds;
  for (FrameId id : ids) {
    auto pit = pred_frames.find(id);
    auto git = gt_frames.find(id);
    const FramePreds& fp = pit == pred_frames.end() ? kNoPreds : pit->second;
    const std::span<const Point> g = git == gt_frames.end() ? std::span<const Point>{} : git->second;

    const FrameMatch fm = match_frame(fp.points, g, tol);
    r.true_positives += fm.matches.size();
    r.false_positives += fm.unmatched_preds.size();
    r.false_negatives += fm.unmatched_gt.size();
    for (const auto& m : fm.matches) {
      sq_sum += m.distance * m.distance;
      r.matches.push_back({fp.global_index[m.pred], m.gt, m.distance});
    }
  }

  const auto tp = static_cast<double>(r.true_positives);
  if (r.true_positives + r.false_positives > 0) {
    r.precision = tp / static_cast<double>(r.true_positives + r.false_positives);
  }
  if (r.true_positives + r.false_negatives > 0) {
    r.recall = tp / static_cast<double>(r.true_positives + r.false_negatives);
  }
  if (!r.matches.empty()) r.rmse = std::sqrt(sq_sum / static_cast<double>(r.matches.size()));
  return r;
}

double f1_score(double precision, double recall) noexcept {
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

SweepResult sweep_threshold(std::span<const Localization> preds,
                            std::span<const GroundTruthFrame> gt, double tol) {
  check_tolerance(tol);
  const auto gt_frames = index_gt(gt);
  std::uint64_t gt_count = 0;
  for (const auto& f : gt) gt_count += f.points.size();
  if (gt_count == 0) throw Error(ErrorCategory::Data, "F1 is undefined without ground-truth points");

  const auto pred_frames = group_preds(preds);

  // Visit predictions best-first; lowering the threshold to t only changes
  // the frames holding a prediction with confidence exactly t.
  std::vector<std::size_t> order(preds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].confidence > preds[b].confidence;
  });

  std::vector<double> candidates;
  for (std::size_t i : order) {
    if (candidates.empty() || candidates.back() != preds[i].confidence) {
      candidates.push_back(preds[i].confidence);
    }
  }
  if (candidates.empty() || candidates.back() > 0.0) candidates.push_back(0.0);

  std::map<FrameId, std::uint64_t> frame_tp;
  std::uint64_t tp = 0;
  std::uint64_t kept = 0;
  std::size_t cursor = 0;

  SweepResult best{candidates.front(), -1.0};
  for (double t : candidates) {
    std::vector<FrameId> touched;
    while (cursor < order.size() && preds[order[cursor]].confidence >= t) {
      touched.push_back(preds[order[cursor]].frame_id);
      ++kept;
      ++cursor;
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

    for (FrameId id : touched) {
      const FramePreds& fp = pred_frames.at(id);
      std::vector<Point> active;
      for (std::size_t k = 0; k < fp.points.size(); ++k) {
        if (fp.confidences[k] >= t) active.push_back(fp.points[k]);
      }
      auto git = gt_frames.find(id);
      const std::span<const Point> g = git == gt_frames.end() ? std::span<const Point>{} : git->second;
      const std::uint64_t now = match_frame(active, g, tol).matches.size();
      std::uint64_t& before = frame_tp[id];
      tp = tp - before + now;
      before = now;
    }

    const double precision = kept > 0 ? static_cast<double>(tp) / static_cast<double>(kept) : 0.0;
    const double recall = static_cast<double>(tp) / static_cast<double>(gt_count);
    const double f1 = f1_score(precision, recall);
    if (f1 > best.f1) best = {t, f1};
  }
  return best;
}

SweepResult sweep_threshold(std::span<const FusedDetection> fused,
                            std::span<const GroundTruthFrame> gt, double tol) {
  const auto locs = extract_localizations(fused, 0.0);
  return sweep_threshold(locs, gt, tol);
}

}  // namespace mbfuse
