#include "fusion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "error.hpp"

namespace mbfuse {
namespace {

constexpr std::array<double BoundingBox::*, 4> kCoords = {
    &BoundingBox::x_min, &BoundingBox::y_min, &BoundingBox::x_max, &BoundingBox::y_max};

// Running weighted-box state of one cluster. Sums are accumulated in member order so
// the result is bit-identical to weighted_box() over the same members.
struct Accumulator {
  std::array<double, 4> weighted{};
  std::array<double, 4> lo{};
  std::array<double, 4> hi{};
  double weight = 0.0;
  bool empty = true;

  void add(const BoundingBox& b, double c) {
    weight += c;
    for (std::size_t k = 0; k < 4; ++k) {
      const double v = b.*kCoords[k];
      weighted[k] += c * v;
      if (empty) {
        lo[k] = hi[k] = v;
      } else {
        lo[k] = std::min(lo[k], v);
        hi[k] = std::max(hi[k], v);
      }
    }
    empty = false;
  }

  BoundingBox box() const {
    BoundingBox out;
    for (std::size_t k = 0; k < 4; ++k) {
      // Rounding can push the quotient one ulp outside the member range.
      out.*kCoords[k] = std::clamp(weighted[k] / weight, lo[k], hi[k]);
    }
    return out;
  }
};

std::vector<ModelId> sorted_models(std::span<const PoolEntry> members) {
  std::vector<ModelId> ids;
  ids.reserve(members.size());
  for (const auto& m : members) ids.push_back(m.detection.model_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

double max_effective(const Cluster& c) {
  // members are sorted, the first one is the best
  return c.members.front().effective;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorCategory::Config, msg);
}

}  // namespace

void validate(const FusionConfig& cfg) {
  require(cfg.iou_thresh > 0.0 && cfg.iou_thresh <= 1.0, "iou_thresh must lie in (0,1]");
  require(cfg.score_thresh >= 0.0 && cfg.score_thresh <= 1.0,
          "score_thresh must lie in [0,1]");
  require(!cfg.model_weights.empty(), "at least one model weight is required");
  for (double w : cfg.model_weights) {
    require(std::isfinite(w) && w >= 0.0, "model weights must be finite and non-negative");
  }
  require(std::isfinite(cfg.sigma) && cfg.sigma > 0.0, "sigma must be positive");
  if (!cfg.final_thresh.auto_f1) {
    require(cfg.final_thresh.value >= 0.0 && std::isfinite(cfg.final_thresh.value),
            "final threshold must be a finite non-negative value");
  }
}

FusionConfig default_config(std::size_t model_count) {
  FusionConfig cfg;
  cfg.model_weights.assign(model_count, 1.0);
  return cfg;
}

std::vector<PoolEntry> apply_weights(std::span<const ModelDetectionSet> sets,
                                     std::span<const double> weights) {
  std::vector<ModelId> ids;
  for (const auto& s : sets) ids.push_back(s.model_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() != weights.size()) {
    throw Error(ErrorCategory::Config,
                "got " + std::to_string(weights.size()) + " weights for " +
                    std::to_string(ids.size()) + " models");
  }

  std::vector<PoolEntry> pool;
  std::size_t total = 0;
  for (const auto& s : sets) total += s.detections.size();
  pool.reserve(total);

  for (const auto& s : sets) {
    if (s.model_id < 0 || static_cast<std::size_t>(s.model_id) >= weights.size()) {
      throw Error(ErrorCategory::Config,
                  "model_id " + std::to_string(s.model_id) + " has no weight");
    }
    const double w = weights[static_cast<std::size_t>(s.model_id)];
    for (const auto& d : s.detections) {
      pool.push_back(PoolEntry{d, w * d.confidence, pool.size()});
    }
  }
  return pool;
}

bool ranks_before(const PoolEntry& a, const PoolEntry& b) noexcept {
  if (a.effective != b.effective) return a.effective > b.effective;
  if (a.detection.model_id != b.detection.model_id) {
    return a.detection.model_id < b.detection.model_id;
  }
  return a.order < b.order;
}

BoundingBox weighted_box(std::span<const PoolEntry> members) {
  Accumulator acc;
  for (const auto& m : members) acc.add(m.detection.box, m.effective);
  return acc.box();
}

std::vector<Cluster> cluster(std::span<const PoolEntry> pool, const FusionConfig& cfg) {
  std::vector<PoolEntry> ranked;
  ranked.reserve(pool.size());
  for (const auto& e : pool) {
    if (e.effective > cfg.score_thresh) ranked.push_back(e);
  }
  std::sort(ranked.begin(), ranked.end(), ranks_before);

  // Suppression strategies emit the seed box, so they also match against it.
  // Matching them against the running average lets two survivors overlap
  // above the threshold, and a second pass would merge them.
  const bool anchored = cfg.strategy == Strategy::Nms || cfg.strategy == Strategy::SoftNms;

  std::vector<Cluster> clusters;
  std::vector<Accumulator> accs;

  for (const auto& e : ranked) {
    const BoundingBox& b = e.detection.box;
    std::size_t best = clusters.size();
    double best_iou = cfg.iou_thresh;

    if (area(b) > 0.0) {
      for (std::size_t i = 0; i < clusters.size(); ++i) {
        const BoundingBox& f = clusters[i].fused_box;
        if (f.x_max <= b.x_min || b.x_max <= f.x_min || f.y_max <= b.y_min ||
            b.y_max <= f.y_min) {
          continue;
        }
        const double o = iou(f, b);
        if (o > best_iou) {
          best_iou = o;
          best = i;
        }
      }
    }

    if (best == clusters.size()) {
      clusters.push_back(Cluster{{}, b});
      accs.emplace_back();
    }
    clusters[best].members.push_back(e);
    if (!anchored) {
      accs[best].add(b, e.effective);
      clusters[best].fused_box = accs[best].box();
    }
  }
  return clusters;
}

double decay_factor(double overlap, Decay decay, double sigma) noexcept {
  switch (decay) {
    case Decay::Linear: return 1.0 - overlap;
    case Decay::Gaussian: return std::exp(-(overlap * overlap) / sigma);
  }
  return 1.0;
}

std::vector<FusedDetection> fuse_nms(std::span<const Cluster> clusters) {
  std::vector<FusedDetection> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) {
    const PoolEntry& top = c.members.front();
    out.push_back(FusedDetection{top.detection.frame_id, top.detection.box, top.effective,
                                 static_cast<std::int32_t>(c.members.size()),
                                 sorted_models(c.members)});
  }
  return out;
}

std::vector<FusedDetection> fuse_soft_nms(std::span<const Cluster> clusters,
                                          const FusionConfig& cfg) {
  std::vector<FusedDetection> out;
  for (const auto& c : clusters) {
    const PoolEntry& top = c.members.front();
    for (std::size_t i = 0; i < c.members.size(); ++i) {
      const PoolEntry& m = c.members[i];
      double score = m.effective;
      if (i > 0) {
        score *= decay_factor(iou(m.detection.box, top.detection.box), cfg.decay, cfg.sigma);
        if (score < cfg.score_thresh) continue;
      }
      out.push_back(FusedDetection{m.detection.frame_id, m.detection.box, score, 1,
                                   {m.detection.model_id}});
    }
  }
  return out;
}

std::vector<FusedDetection> fuse_nmsw(std::span<const Cluster> clusters) {
  std::vector<FusedDetection> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) {
    out.push_back(FusedDetection{c.members.front().detection.frame_id,
                                 weighted_box(c.members), max_effective(c),
                                 static_cast<std::int32_t>(c.members.size()),
                                 sorted_models(c.members)});
  }
  return out;
}

std::vector<FusedDetection> fuse_wbf(std::span<const Cluster> clusters,
                                     const FusionConfig& cfg) {
  const double n_models = static_cast<double>(cfg.model_weights.size());
  std::vector<FusedDetection> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) {
    double sum = 0.0;
    for (const auto& m : c.members) sum += m.effective;
    const double t = static_cast<double>(c.members.size());
    double conf = sum / t;
    if (cfg.wbf_count_rescale && n_models > 0.0) {
      conf *= std::min(t, n_models) / n_models;
    }
    out.push_back(FusedDetection{c.members.front().detection.frame_id,
                                 weighted_box(c.members), conf,
                                 static_cast<std::int32_t>(c.members.size()),
                                 sorted_models(c.members)});
  }
  return out;
}

std::vector<FusedDetection> fuse_clusters(std::span<const Cluster> clusters,
                                          const FusionConfig& cfg) {
  switch (cfg.strategy) {
    case Strategy::Nms: return fuse_nms(clusters);
    case Strategy::SoftNms: return fuse_soft_nms(clusters, cfg);
    case Strategy::Nmsw: return fuse_nmsw(clusters);
    case Strategy::Wbf: return fuse_wbf(clusters, cfg);
  }
  return {};
}

std::vector<FusedDetection> fuse_frame(std::span<const ModelDetectionSet> sets,
                                       const FusionConfig& cfg) {
  const auto pool = apply_weights(sets, cfg.model_weights);
  const auto clusters = cluster(pool, cfg);
  return fuse_clusters(clusters, cfg);
}

std::vector<Localization> extract_localizations(std::span<const FusedDetection> fused,
                                                double final_thresh) {
  std::vector<Localization> out;
  out.reserve(fused.size());
  for (const auto& f : fused) {
    if (f.confidence < final_thresh) continue;
    const Point p = center(f.box);
    out.push_back(Localization{p.x, p.y, f.confidence, f.frame_id});
  }
  return out;
}

}  // namespace mbfuse
