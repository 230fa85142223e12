#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fusion.hpp"

namespace mbfuse {

/// Accumulation grid for super-resolution maps. Cell (i, j) covers the
/// half-open square [x0 + i*cell, x0 + (i+1)*cell) x [y0 + j*cell, ...).
class SRGrid {
 public:
  /// Throws Error(InvalidArgument) unless cell > 0, dims > 0 and the origin is finite.
  SRGrid(double x0, double y0, double cell, std::uint32_t width, std::uint32_t height);

  double x0() const noexcept { return x0_; }
  double y0() const noexcept { return y0_; }
  double cell() const noexcept { return cell_; }
  std::uint32_t width() const noexcept { return width_; }
  std::uint32_t height() const noexcept { return height_; }

  /// Row-major, row j holds cells with y index j.
  std::span<const std::uint64_t> counts() const noexcept { return counts_; }
  std::uint64_t at(std::uint32_t i, std::uint32_t j) const;
  std::uint64_t total() const noexcept;
  std::uint64_t max_count() const noexcept;

  /// Adds one count per in-bounds localization and returns the number that
  /// fell outside the grid.
  std::uint64_t accumulate(std::span<const Localization> locs);

  /// Frame-sharded accumulation on `threads` workers. Same result as the
  /// serial overload.
  std::uint64_t accumulate(std::span<const Localization> locs, unsigned threads);

  /// Cell-wise sum. Grids must share geometry.
  void merge(const SRGrid& other);

  friend bool operator==(const SRGrid&, const SRGrid&) = default;

 private:
  bool cell_of(double x, double y, std::size_t& index) const noexcept;

  double x0_;
  double y0_;
  double cell_;
  std::uint32_t width_;
  std::uint32_t height_;
  std::vector<std::uint64_t> counts_;
};

enum class RenderMode { Linear, Log };

struct GrayImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;
};

GrayImage render(const SRGrid& grid, RenderMode mode);

/// Binary PGM (P5, maxval 255).
void write_pgm(std::ostream& os, const GrayImage& image);

/// Header line "x0,y0,cell,width,height", its values, then one line of
/// comma-separated counts per row.
void write_counts_csv(std::ostream& os, const SRGrid& grid);

}  // namespace mbfuse
