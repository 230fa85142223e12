#include "geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"

namespace mbfuse {

const char* category_name(ErrorCategory c) noexcept {
  switch (c) {
    case ErrorCategory::InvalidArgument: return "invalid_argument";
    case ErrorCategory::Parse: return "parse";
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Data: return "data";
  }
  return "unknown";
}

bool is_valid(const BoundingBox& b) noexcept {
  return std::isfinite(b.x_min) && std::isfinite(b.y_min) &&
         std::isfinite(b.x_max) && std::isfinite(b.y_max) &&
         b.x_min <= b.x_max && b.y_min <= b.y_max;
}

void validate_box(const BoundingBox& b) {
  if (!std::isfinite(b.x_min) || !std::isfinite(b.y_min) ||
      !std::isfinite(b.x_max) || !std::isfinite(b.y_max)) {
    throw Error(ErrorCategory::Data, "box has a non-finite coordinate");
  }
  if (b.x_min > b.x_max) {
    throw Error(ErrorCategory::Data, "box has x_min > x_max");
  }
  if (b.y_min > b.y_max) {
    throw Error(ErrorCategory::Data, "box has y_min > y_max");
  }
}

void validate_detection(const Detection& d) {
  validate_box(d.box);
  if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
    throw Error(ErrorCategory::Data,
                "confidence " + std::to_string(d.confidence) + " outside [0,1]");
  }
  if (d.model_id < 0) throw Error(ErrorCategory::Data, "negative model_id");
  if (d.frame_id < 0) throw Error(ErrorCategory::Data, "negative frame_id");
}

double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double area_a = area(a);
  const double area_b = area(b);
  if (area_a <= 0.0 || area_b <= 0.0) return 0.0;

  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;

  const double inter = iw * ih;
  const double uni = area_a + area_b - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace mbfuse
