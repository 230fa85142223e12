#pragma once

#include <cstdint>
#include <vector>

namespace mbfuse {

/// Axis-aligned closed rectangle in corner-pair form. Units are opaque lengths.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

using ModelId = std::int32_t;
using FrameId = std::int64_t;

struct Detection {
  BoundingBox box;
  double confidence = 0.0;
  ModelId model_id = 0;
  FrameId frame_id = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Detections of one model on one frame.
struct ModelDetectionSet {
  ModelId model_id = 0;
  FrameId frame_id = 0;
  std::vector<Detection> detections;
};

/// True when the corners are finite and ordered.
bool is_valid(const BoundingBox& b) noexcept;

/// Throws Error(Data) unless is_valid(b). Reversed corners are never swapped.
void validate_box(const BoundingBox& b);

/// Throws Error(Data) for an invalid box, a confidence outside [0,1], a
/// negative model id or a negative frame id.
void validate_detection(const Detection& d);

inline double area(const BoundingBox& b) noexcept {
  return (b.x_max - b.x_min) * (b.y_max - b.y_min);
}

inline Point center(const BoundingBox& b) noexcept {
  return {(b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0};
}

/// Intersection over union. Zero for disjoint or edge-touching boxes and for
/// any pair that involves a zero-area box.
double iou(const BoundingBox& a, const BoundingBox& b) noexcept;

}  // namespace mbfuse
