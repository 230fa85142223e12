#include "srmap.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <thread>

#include "error.hpp"
#include "text_format.hpp"

namespace mbfuse {

SRGrid::SRGrid(double x0, double y0, double cell, std::uint32_t width, std::uint32_t height)
    : x0_(x0), y0_(y0), cell_(cell), width_(width), height_(height) {
  if (!std::isfinite(x0) || !std::isfinite(y0)) {
    throw Error(ErrorCategory::InvalidArgument, "grid origin must be finite");
  }
  if (!(cell > 0.0) || !std::isfinite(cell)) {
    throw Error(ErrorCategory::InvalidArgument, "grid cell size must be positive");
  }
  if (width == 0 || height == 0) {
    throw Error(ErrorCategory::InvalidArgument, "grid dimensions must be positive");
  }
  counts_.assign(static_cast<std::size_t>(width) * height, 0);
}

std::uint64_t SRGrid::at(std::uint32_t i, std::uint32_t j) const {
  if (i >= width_ || j >= height_) {
    throw Error(ErrorCategory::InvalidArgument, "grid cell index out of range");
  }
  return counts_[static_cast<std::size_t>(j) * width_ + i];
}

std::uint64_t SRGrid::total() const noexcept {
  std::uint64_t sum = 0;
  for (auto c : counts_) sum += c;
  return sum;
}

std::uint64_t SRGrid::max_count() const noexcept {
  return counts_.empty() ? 0 : *std::max_element(counts_.begin(), counts_.end());
}

bool SRGrid::cell_of(double x, double y, std::size_t& index) const noexcept {
  const double fx = std::floor((x - x0_) / cell_);
  const double fy = std::floor((y - y0_) / cell_);
  // NaN fails both comparisons
  if (!(fx >= 0.0 && fx < static_cast<double>(width_))) return false;
  if (!(fy >= 0.0 && fy < static_cast<double>(height_))) return false;
  index = static_cast<std::size_t>(fy) * width_ + static_cast<std::size_t>(fx);
  return true;
}

std::uint64_t SRGrid::accumulate(std::span<const Localization> locs) {
  std::uint64_t outside = 0;
  for (const auto& l : locs) {
    std::size_t idx = 0;
    if (cell_of(l.x, l.y, idx)) {
      ++counts_[idx];
    } else {
      ++outside;
    }
  }
  return outside;
}

std::uint64_t SRGrid::accumulate(std::span<const Localization> locs, unsigned threads) {
  if (threads <= 1 || locs.size() < 2) return accumulate(locs);

  // Shard boundaries fall on frame changes so each shard owns whole frames.
  std::vector<std::size_t> bounds{0};
  const std::size_t step = (locs.size() + threads - 1) / threads;
  std::size_t next = step;
  while (next < locs.size()) {
    while (next < locs.size() && locs[next].frame_id == locs[next - 1].frame_id) ++next;
    if (next < locs.size()) bounds.push_back(next);
    next += step;
  }
  bounds.push_back(locs.size());

  const std::size_t shards = bounds.size() - 1;
  std::vector<SRGrid> partial(shards, SRGrid(x0_, y0_, cell_, width_, height_));
  std::vector<std::uint64_t> outside(shards, 0);
  std::vector<std::thread> pool;
  for (std::size_t s = 0; s < shards; ++s) {
    pool.emplace_back([&, s] {
      outside[s] = partial[s].accumulate(locs.subspan(bounds[s], bounds[s + 1] - bounds[s]));
    });
  }
  for (auto& t : pool) t.join();

  std::uint64_t total_outside = 0;
  for (std::size_t s = 0; s < shards; ++s) {
    merge(partial[s]);
    total_outside += outside[s];
  }
  return total_outside;
}

void SRGrid::merge(const SRGrid& other) {
  if (other.width_ != width_ || other.height_ != height_ || other.cell_ != cell_ ||
      other.x0_ != x0_ || other.y0_ != y0_) {
    throw Error(ErrorCategory::InvalidArgument, "cannot merge grids with different geometry");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

GrayImage render(const SRGrid& grid, RenderMode mode) {
  GrayImage img{grid.width(), grid.height(), std::vector<std::uint8_t>(grid.counts().size(), 0)};
  const std::uint64_t peak = grid.max_count();
  if (peak == 0) return img;

  const double denom = mode == RenderMode::Linear ? static_cast<double>(peak)
                                                  : std::log1p(static_cast<double>(peak));
  const auto counts = grid.counts();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double c = static_cast<double>(counts[i]);
    const double v = mode == RenderMode::Linear ? c : std::log1p(c);
    // std::round rounds halves away from zero
    img.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::round(255.0 * v / denom), 0.0, 255.0));
  }
  return img;
}

void write_pgm(std::ostream& os, const GrayImage& image) {
  os << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(image.pixels.data()),
           static_cast<std::streamsize>(image.pixels.size()));
}

void write_counts_csv(std::ostream& os, const SRGrid& grid) {
  os << "x0,y0,cell,width,height\n"
     << format_real(grid.x0()) << ',' << format_real(grid.y0()) << ','
     << format_real(grid.cell()) << ',' << grid.width() << ',' << grid.height() << '\n';
  const auto counts = grid.counts();
  for (std::uint32_t j = 0; j < grid.height(); ++j) {
    for (std::uint32_t i = 0; i < grid.width(); ++i) {
      if (i > 0) os << ',';
      os << counts[static_cast<std::size_t>(j) * grid.width() + i];
    }
    os << '\n';
  }
}

}  // namespace mbfuse
