#include "csv_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "error.hpp"
#include "text_format.hpp"

namespace mbfuse {
namespace {

class RowReader {
 public:
  RowReader(std::istream& is, std::string source) : is_(is), source_(std::move(source)) {}

  /// Returns the trimmed header line, or throws on an empty stream.
  std::string header() {
    if (!next_line()) fail("missing header line");
    return std::string(trim(line_));
  }

  bool next(std::size_t expected_fields) {
    while (next_line()) {
      if (trim(line_).empty()) continue;
      fields_ = split(line_, ',');
      if (fields_.size() != expected_fields) {
        fail("expected " + std::to_string(expected_fields) + " fields, got " +
             std::to_string(fields_.size()));
      }
      return true;
    }
    return false;
  }

  double real(std::size_t i, const char* name) const {
    double v = 0.0;
    if (!parse_real(fields_[i], v)) fail(std::string("bad ") + name + " '" + std::string(fields_[i]) + "'");
    return v;
  }

  std::int64_t integer(std::size_t i, const char* name) const {
    std::int64_t v = 0;
    if (!parse_int(fields_[i], v)) fail(std::string("bad ") + name + " '" + std::string(fields_[i]) + "'");
    return v;
  }

  std::string_view field(std::size_t i) const { return fields_[i]; }

  [[noreturn]] void fail(const std::string& msg, ErrorCategory cat = ErrorCategory::Parse) const {
    throw Error(cat, source_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

  /// Re-raises a value error from a validator with this row's location.
  template <class F>
  void checked(F&& f) const {
    try {
      f();
    } catch (const Error& e) {
      fail(e.what(), e.category());
    }
  }

 private:
  bool next_line() {
    if (!std::getline(is_, line_)) return false;
    ++line_no_;
    return true;
  }

  std::istream& is_;
  std::string source_;
  std::string line_;
  std::vector<std::string_view> fields_;
  std::size_t line_no_ = 0;
};

void expect_header(RowReader& r, const char* expected) {
  const std::string h = r.header();
  if (h != expected) r.fail("expected header '" + std::string(expected) + "', got '" + h + "'");
}

std::int32_t narrow_id(const RowReader& r, std::int64_t v, const char* name) {
  if (v < 0 || v > INT32_MAX) r.fail(std::string(name) + " out of range", ErrorCategory::Data);
  return static_cast<std::int32_t>(v);
}

void check_finite(const RowReader& r, double v, const char* name) {
  if (!std::isfinite(v)) r.fail(std::string(name) + " must be finite", ErrorCategory::Data);
}

}  // namespace

std::vector<Detection> read_detections(std::istream& is, const std::string& source) {
  RowReader r(is, source);
  expect_header(r, kDetectionHeader);
  std::vector<Detection> out;
  while (r.next(7)) {
    Detection d;
    d.frame_id = r.integer(0, "frame_id");
    const std::int64_t model = r.integer(1, "model_id");
    d.box = {r.real(2, "x_min"), r.real(3, "y_min"), r.real(4, "x_max"), r.real(5, "y_max")};
    d.confidence = r.real(6, "score");
    if (model < 0 || model > INT32_MAX) r.fail("model_id out of range", ErrorCategory::Data);
    d.model_id = static_cast<ModelId>(model);
    r.checked([&] { validate_detection(d); });
    out.push_back(d);
  }
  return out;
}

void write_detections(std::ostream& os, std::span<const Detection> dets) {
  os << kDetectionHeader << '\n';
  for (const auto& d : dets) {
    os << d.frame_id << ',' << d.model_id << ',' << format_real(d.box.x_min) << ','
       << format_real(d.box.y_min) << ',' << format_real(d.box.x_max) << ','
       << format_real(d.box.y_max) << ',' << format_real(d.confidence) << '\n';
  }
}

std::vector<FusedDetection> read_fused(std::istream& is, const std::string& source) {
  RowReader r(is, source);
  expect_header(r, kFusedHeader);
  std::vector<FusedDetection> out;
  while (r.next(8)) {
    FusedDetection f;
    f.frame_id = r.integer(0, "frame_id");
    f.box = {r.real(1, "x_min"), r.real(2, "y_min"), r.real(3, "x_max"), r.real(4, "y_max")};
    f.confidence = r.real(5, "score");
    f.source_count = narrow_id(r, r.integer(6, "source_count"), "source_count");
    for (auto tok : split(r.field(7), ';')) {
      std::int64_t id = 0;
      if (!parse_int(tok, id)) r.fail("bad source_models entry '" + std::string(tok) + "'");
      f.source_models.push_back(narrow_id(r, id, "source model"));
    }
    if (f.frame_id < 0) r.fail("negative frame_id", ErrorCategory::Data);
    if (f.source_count < 1) r.fail("source_count must be >= 1", ErrorCategory::Data);
    if (!std::is_sorted(f.source_models.begin(), f.source_models.end()) ||
        std::adjacent_find(f.source_models.begin(), f.source_models.end()) != f.source_models.end()) {
      r.fail("source_models must be sorted and unique", ErrorCategory::Data);
    }
    check_finite(r, f.confidence, "score");
    if (f.confidence < 0.0) r.fail("negative score", ErrorCategory::Data);
    r.checked([&] { validate_box(f.box); });
    out.push_back(std::move(f));
  }
  return out;
}

void write_fused(std::ostream& os, std::span<const FusedDetection> fused) {
  os << kFusedHeader << '\n';
  for (const auto& f : fused) {
    os << f.frame_id << ',' << format_real(f.box.x_min) << ',' << format_real(f.box.y_min)
       << ',' << format_real(f.box.x_max) << ',' << format_real(f.box.y_max) << ','
       << format_real(f.confidence) << ',' << f.source_count << ',';
    for (std::size_t i = 0; i < f.source_models.size(); ++i) {
      if (i > 0) os << ';';
      os << f.source_models[i];
    }
    os << '\n';
  }
}

std::vector<GroundTruthFrame> read_ground_truth(std::istream& is, const std::string& source) {
  RowReader r(is, source);
  expect_header(r, kGroundTruthHeader);
  std::map<FrameId, std::vector<Point>> frames;
  while (r.next(3)) {
    const FrameId id = r.integer(0, "frame_id");
    const Point p{r.real(1, "x"), r.real(2, "y")};
    if (id < 0) r.fail("negative frame_id", ErrorCategory::Data);
    check_finite(r, p.x, "x");
    check_finite(r, p.y, "y");
    frames[id].push_back(p);
  }
  std::vector<GroundTruthFrame> out;
  out.reserve(frames.size());
  for (auto& [id, pts] : frames) out.push_back({id, std::move(pts)});
  return out;
}

void write_ground_truth(std::ostream& os, std::span<const GroundTruthFrame> gt) {
  os << kGroundTruthHeader << '\n';
  for (const auto& f : gt) {
    for (const auto& p : f.points) {
      os << f.frame_id << ',' << format_real(p.x) << ',' << format_real(p.y) << '\n';
    }
  }
}

std::vector<Localization> read_localizations(std::istream& is, const std::string& source) {
  RowReader r(is, source);
  expect_header(r, kLocalizationHeader);
  std::vector<Localization> out;
  while (r.next(4)) {
    Localization l;
    l.frame_id = r.integer(0, "frame_id");
    l.x = r.real(1, "x");
    l.y = r.real(2, "y");
    l.confidence = r.real(3, "score");
    if (l.frame_id < 0) r.fail("negative frame_id", ErrorCategory::Data);
    check_finite(r, l.x, "x");
    check_finite(r, l.y, "y");
    check_finite(r, l.confidence, "score");
    out.push_back(l);
  }
  return out;
}

void write_localizations(std::ostream& os, std::span<const Localization> locs) {
  os << kLocalizationHeader << '\n';
  for (const auto& l : locs) {
    os << l.frame_id << ',' << format_real(l.x) << ',' << format_real(l.y) << ','
       << format_real(l.confidence) << '\n';
  }
}

std::vector<Localization> read_predictions(std::istream& is, const std::string& source) {
  std::string first;
  std::getline(is, first);
  const std::string header(trim(first));
  std::string rest((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  std::istringstream again(first + "\n" + rest);

  if (header == kLocalizationHeader) return read_localizations(again, source);
  if (header == kFusedHeader) return extract_localizations(read_fused(again, source), 0.0);
  if (header == kDetectionHeader) {
    std::vector<Localization> out;
    for (const auto& d : read_detections(again, source)) {
      const Point c = center(d.box);
      out.push_back({c.x, c.y, d.confidence, d.frame_id});
    }
    return out;
  }
  throw Error(ErrorCategory::Parse, source + ":1: unrecognized prediction header '" + header + "'");
}

void quantize(std::vector<FusedDetection>& fused) {
  for (auto& f : fused) {
    f.box.x_min = quantize_real(f.box.x_min);
    f.box.y_min = quantize_real(f.box.y_min);
    f.box.x_max = quantize_real(f.box.x_max);
    f.box.y_max = quantize_real(f.box.y_max);
    f.confidence = quantize_real(f.confidence);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::Io, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCategory::Io, "read error on '" + path + "'");
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCategory::Io, "cannot open '" + tmp + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error(ErrorCategory::Io, "write error on '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCategory::Io, "cannot move output into '" + path + "'");
  }
}

}  // namespace mbfuse
