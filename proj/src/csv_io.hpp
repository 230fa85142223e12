#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "evaluation.hpp"
#include "fusion.hpp"
#include "geometry.hpp"

namespace mbfuse {

// Text schemas. Every file starts with exactly one of these header lines.
inline constexpr const char* kDetectionHeader = "frame_id,model_id,x_min,y_min,x_max,y_max,score";
inline constexpr const char* kFusedHeader =
    "frame_id,x_min,y_min,x_max,y_max,score,source_count,source_models";
inline constexpr const char* kGroundTruthHeader = "frame_id,x,y";
inline constexpr const char* kLocalizationHeader = "frame_id,x,y,score";

// Readers throw Error(Parse) with "<source>:<line>: ..." on malformed rows and
// Error(Data) on rows that parse but violate a value invariant.

std::vector<Detection> read_detections(std::istream& is, const std::string& source);
void write_detections(std::ostream& os, std::span<const Detection> dets);

/// source_models is written as ids joined by ';'.
std::vector<FusedDetection> read_fused(std::istream& is, const std::string& source);
void write_fused(std::ostream& os, std::span<const FusedDetection> fused);

/// Frames come back sorted by frame_id with points in file order.
std::vector<GroundTruthFrame> read_ground_truth(std::istream& is, const std::string& source);
void write_ground_truth(std::ostream& os, std::span<const GroundTruthFrame> gt);

std::vector<Localization> read_localizations(std::istream& is, const std::string& source);
void write_localizations(std::ostream& os, std::span<const Localization> locs);

/// Reads any of the detection, fused or localization schemas and returns
/// box centers with their scores.
std::vector<Localization> read_predictions(std::istream& is, const std::string& source);

/// Rounds every real field to what the writer emits, so an in-memory list and
/// its re-read copy compare equal.
void quantize(std::vector<FusedDetection>& fused);

std::string read_file(const std::string& path);
/// Writes through a sibling temporary and renames it into place.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace mbfuse
