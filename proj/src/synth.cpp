#include "synth.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numbers>
#include <set>

#include "error.hpp"
#include "random.hpp"
#include "text_format.hpp"

namespace mbfuse {
namespace {

constexpr std::uint32_t kPolylineSegments = 32;
constexpr int kPlacementAttempts = 64;

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorCategory::Config, "scenario: " + msg);
}

Point point_on_polyline(const std::vector<Point>& poly, double s) {
  const double pos = s * static_cast<double>(poly.size() - 1);
  const auto seg = std::min(static_cast<std::size_t>(pos), poly.size() - 2);
  const double t = pos - static_cast<double>(seg);
  return {poly[seg].x + t * (poly[seg + 1].x - poly[seg].x),
          poly[seg].y + t * (poly[seg + 1].y - poly[seg].y)};
}

struct Snapper {
  double step;
  double operator()(double v) const { return std::round(v / step) * step; }
};

double clamped_half_extent(const DetectorProfile& p, double noise, const Snapper& snap) {
  const double h = p.box_half_extent + p.extent_noise_sigma * noise;
  return snap(std::max(h, 0.1 * p.box_half_extent));
}

Detection make_box(Point c, double hx, double hy, double conf, std::size_t model, FrameId frame) {
  Detection d;
  d.box = {c.x - hx, c.y - hy, c.x + hx, c.y + hy};
  d.confidence = conf;
  d.model_id = static_cast<ModelId>(model);
  d.frame_id = frame;
  return d;
}

}  // namespace

void validate(const SynthScenario& s) {
  require(s.frames >= 1, "frames must be >= 1");
  require(is_valid(s.field) && s.field.x_min < s.field.x_max && s.field.y_min < s.field.y_max,
          "field must be a non-empty box");
  require(s.vessels >= 1, "vessels must be >= 1");
  require(std::isfinite(s.min_separation) && s.min_separation >= 0.0,
          "min_separation must be >= 0");
  require(!s.detectors.empty(), "at least one [detector] section is required");
  for (const auto& d : s.detectors) {
    require(std::isfinite(d.jitter_sigma) && d.jitter_sigma >= 0.0, "jitter_sigma must be >= 0");
    require(std::isfinite(d.extent_noise_sigma) && d.extent_noise_sigma >= 0.0,
            "extent_noise_sigma must be >= 0");
    require(d.miss_rate >= 0.0 && d.miss_rate < 1.0, "miss_rate must lie in [0,1)");
    require(std::isfinite(d.fp_rate) && d.fp_rate >= 0.0, "fp_rate must be >= 0");
    require(std::isfinite(d.box_half_extent) && d.box_half_extent >= 0.0,
            "box_half_extent must be >= 0");
    require(d.tp_confidence_min > 0.0 && d.tp_confidence_min < 1.0,
            "tp_confidence_min must lie in (0,1)");
    require(d.fp_confidence_max > 0.0 && d.fp_confidence_max <= 1.0,
            "fp_confidence_max must lie in (0,1]");
  }
}

SynthScenario parse_scenario(std::istream& is, const std::string& source) {
  SynthScenario s;
  std::set<std::string> seen_top;
  std::set<std::string> seen_detector;
  const std::set<std::string> detector_keys = {
      "jitter_sigma", "miss_rate", "fp_rate", "box_half_extent",
      "extent_noise_sigma", "tp_confidence_min", "fp_confidence_max"};
  bool in_detector = false;
  std::string line;
  std::size_t line_no = 0;

  auto fail = [&](const std::string& msg) {
    throw Error(ErrorCategory::Parse, source + ":" + std::to_string(line_no) + ": " + msg);
  };
  auto finish_detector = [&] {
    if (!in_detector) return;
    for (const auto& k : detector_keys) {
      if (seen_detector.count(k) == 0) fail("[detector] section is missing '" + k + "'");
    }
    seen_detector.clear();
  };

  while (std::getline(is, line)) {
    ++line_no;
    std::string_view body = line;
    if (auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;

    if (body == "[detector]") {
      finish_detector();
      in_detector = true;
      s.detectors.emplace_back();
      continue;
    }
    if (body.front() == '[') fail("unknown section '" + std::string(body) + "'");

    const auto eq = body.find('=');
    if (eq == std::string_view::npos) fail("expected 'key = value'");
    const std::string key(trim(body.substr(0, eq)));
    const std::string_view value = trim(body.substr(eq + 1));

    auto real = [&] {
      double v = 0.0;
      if (!parse_real(value, v)) fail("bad number for '" + key + "'");
      return v;
    };
    auto count = [&](std::uint64_t max) {
      std::int64_t v = 0;
      if (!parse_int(value, v) || v < 0 || static_cast<std::uint64_t>(v) > max) {
        fail("bad count for '" + key + "'");
      }
      return static_cast<std::uint64_t>(v);
    };

    if (in_detector) {
      if (detector_keys.count(key) == 0) fail("unknown detector key '" + key + "'");
      if (!seen_detector.insert(key).second) fail("duplicate key '" + key + "'");
      DetectorProfile& d = s.detectors.back();
      if (key == "jitter_sigma") d.jitter_sigma = real();
      else if (key == "miss_rate") d.miss_rate = real();
      else if (key == "fp_rate") d.fp_rate = real();
      else if (key == "box_half_extent") d.box_half_extent = real();
      else if (key == "extent_noise_sigma") d.extent_noise_sigma = real();
      else if (key == "tp_confidence_min") d.tp_confidence_min = real();
      else if (key == "fp_confidence_max") d.fp_confidence_max = real();
      continue;
    }

    if (!seen_top.insert(key).second) fail("duplicate key '" + key + "'");
    if (key == "seed") {
      // full unsigned 64-bit range
      std::uint64_t v = 0;
      const std::string text(value);
      char* end = nullptr;
      errno = 0;
      v = std::strtoull(text.c_str(), &end, 10);
      if (text.empty() || text.front() == '-' || *end != '\0' || errno != 0) fail("bad seed");
      s.seed = v;
    } else if (key == "frames") {
      s.frames = static_cast<std::uint32_t>(count(UINT32_MAX));
    } else if (key == "mb_per_frame") {
      s.mb_per_frame = static_cast<std::uint32_t>(count(UINT32_MAX));
    } else if (key == "vessels") {
      s.vessels = static_cast<std::uint32_t>(count(UINT32_MAX));
    } else if (key == "min_separation") {
      s.min_separation = real();
    } else if (key == "placement") {
      if (value == "uniform") s.placement = Placement::Uniform;
      else if (value == "curves") s.placement = Placement::Curves;
      else fail("placement must be 'uniform' or 'curves'");
    } else if (key == "field") {
      const auto parts = split(value, ',');
      double v[4];
      if (parts.size() != 4) fail("field needs x_min,y_min,x_max,y_max");
      for (std::size_t i = 0; i < 4; ++i) {
        if (!parse_real(parts[i], v[i])) fail("bad field coordinate");
      }
      s.field = {v[0], v[1], v[2], v[3]};
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  finish_detector();

  for (const char* k : {"seed", "frames", "field", "mb_per_frame"}) {
    if (seen_top.count(k) == 0) {
      throw Error(ErrorCategory::Parse, source + ": missing required key '" + k + "'");
    }
  }
  validate(s);
  return s;
}

SynthScenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::Io, "cannot open scenario '" + path + "'");
  return parse_scenario(in, path);
}

std::vector<Detection> SynthOutput::all_detections() const {
  std::vector<Detection> out;
  for (const auto& d : by_detector) out.insert(out.end(), d.begin(), d.end());
  return out;
}

std::vector<Point> vessel_polyline(const SynthScenario& s, std::uint32_t v) {
  const double w = s.field.x_max - s.field.x_min;
  const double h = s.field.y_max - s.field.y_min;
  const double lane = h / static_cast<double>(s.vessels);
  const double base = s.field.y_min + lane * (static_cast<double>(v) + 0.5);
  const double cycles = 1.0 + static_cast<double>(v % 3);
  const double phase = static_cast<double>(v) / static_cast<double>(s.vessels);

  std::vector<Point> poly;
  for (std::uint32_t i = 0; i <= kPolylineSegments; ++i) {
    const double t = static_cast<double>(i) / kPolylineSegments;
    poly.push_back({s.field.x_min + t * w,
                    base + 0.35 * lane * std::sin(2.0 * std::numbers::pi * (cycles * t + phase))});
  }
  return poly;
}

double synth_lattice(const SynthScenario& s) {
  const double extent = std::max({std::abs(s.field.x_min), std::abs(s.field.y_min),
                                  std::abs(s.field.x_max), std::abs(s.field.y_max), 1.0});
  // integer digits of 10x the extent, leaving the rest for the fraction
  const int int_digits = static_cast<int>(std::floor(std::log10(extent * 10.0))) + 1;
  const int frac_bits = std::max(0, kRealDigits - int_digits);
  return std::ldexp(1.0, -frac_bits);
}

SynthOutput generate(const SynthScenario& s) {
  validate(s);
  const Snapper snap{synth_lattice(s)};
  Xoshiro256 rng(s.seed);
  SynthOutput out;
  out.by_detector.resize(s.detectors.size());

  std::vector<std::vector<Point>> vessels;
  if (s.placement == Placement::Curves) {
    for (std::uint32_t v = 0; v < s.vessels; ++v) vessels.push_back(vessel_polyline(s, v));
  }

  auto draw_position = [&]() -> Point {
    if (s.placement == Placement::Uniform) {
      const double x = rng.uniform(s.field.x_min, s.field.x_max);
      const double y = rng.uniform(s.field.y_min, s.field.y_max);
      return {snap(x), snap(y)};
    }
    const auto v = std::min<std::size_t>(static_cast<std::size_t>(rng.uniform() * vessels.size()),
                                         vessels.size() - 1);
    const Point p = point_on_polyline(vessels[v], rng.uniform());
    return {snap(p.x), snap(p.y)};
  };

  for (std::uint32_t f = 0; f < s.frames; ++f) {
    GroundTruthFrame gt{static_cast<FrameId>(f), {}};
    for (std::uint32_t k = 0; k < s.mb_per_frame; ++k) {
      for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
        const Point p = draw_position();
        const bool crowded = std::any_of(gt.points.begin(), gt.points.end(), [&](const Point& q) {
          return std::hypot(p.x - q.x, p.y - q.y) < s.min_separation;
        });
        if (!crowded) {
          gt.points.push_back(p);
          break;
        }
      }
    }

    for (std::size_t m = 0; m < s.detectors.size(); ++m) {
      const DetectorProfile& p = s.detectors[m];
      auto& dets = out.by_detector[m];

      for (const Point& g : gt.points) {
        // Ten uniforms per point whether or not it is detected.
        const double miss = rng.uniform();
        const double jx = rng.gaussian();
        const double jy = rng.gaussian();
        const double ex = rng.gaussian();
        const double ey = rng.gaussian();
        const double conf = quantize_real(rng.uniform(p.tp_confidence_min, 1.0));
        if (miss < p.miss_rate) continue;
        const Point c{snap(g.x + p.jitter_sigma * jx), snap(g.y + p.jitter_sigma * jy)};
        dets.push_back(make_box(c, clamped_half_extent(p, ex, snap), clamped_half_extent(p, ey, snap), conf, m,
                                gt.frame_id));
      }

      const std::uint32_t n_false = rng.poisson(p.fp_rate);
      for (std::uint32_t k = 0; k < n_false; ++k) {
        const double x = rng.uniform(s.field.x_min, s.field.x_max);
        const double y = rng.uniform(s.field.y_min, s.field.y_max);
        const double ex = rng.gaussian();
        const double ey = rng.gaussian();
        const double conf = quantize_real(p.fp_confidence_max * (1.0 - rng.uniform()));
        dets.push_back(make_box({snap(x), snap(y)}, clamped_half_extent(p, ex, snap),
                                clamped_half_extent(p, ey, snap), conf, m, gt.frame_id));
      }
    }
    out.ground_truth.push_back(std::move(gt));
  }
  return out;
}

}  // namespace mbfuse
