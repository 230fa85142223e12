#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "evaluation.hpp"
#include "geometry.hpp"

namespace mbfuse {

/// Noise model of one simulated detector.
struct DetectorProfile {
  double jitter_sigma = 0.0;        ///< isotropic Gaussian center error
  double miss_rate = 0.0;           ///< in [0, 1)
  double fp_rate = 0.0;             ///< Poisson mean of false boxes per frame
  double box_half_extent = 1.0;     ///< nominal PSF half-size
  double extent_noise_sigma = 0.0;  ///< Gaussian noise on each half-size
  double tp_confidence_min = 0.5;   ///< TP scores ~ U[tp_confidence_min, 1)
  double fp_confidence_max = 0.5;   ///< FP scores ~ U(0, fp_confidence_max]
};

enum class Placement { Uniform, Curves };

struct SynthScenario {
  std::uint64_t seed = 0;
  std::uint32_t frames = 1;
  BoundingBox field{0.0, 0.0, 1.0, 1.0};
  std::uint32_t mb_per_frame = 0;
  Placement placement = Placement::Uniform;
  /// Number of vessel polylines for Placement::Curves.
  std::uint32_t vessels = 6;
  /// Rejection radius between microbubbles of one frame; 0 disables.
  double min_separation = 0.0;
  std::vector<DetectorProfile> detectors;
};

/// Throws Error(Config) on any violated field invariant.
void validate(const SynthScenario& s);

/// Parses the key = value scenario format (see README). Throws Error(Parse)
/// with "<source>:<line>" on syntax errors and Error(Config) on bad values.
SynthScenario parse_scenario(std::istream& is, const std::string& source);
SynthScenario load_scenario(const std::string& path);

struct SynthOutput {
  /// One entry per frame, including frames without microbubbles.
  std::vector<GroundTruthFrame> ground_truth;
  /// by_detector[k] holds model k's detections over all frames, frame order.
  std::vector<std::vector<Detection>> by_detector;

  std::vector<Detection> all_detections() const;
};

/// Power-of-two spacing of the lattice every generated coordinate lies on.
/// Corners and midpoints of generated boxes are then exact, and the lattice
/// is coarse enough that 9 significant digits print every value exactly for
/// coordinates up to ten times the field's largest magnitude.
double synth_lattice(const SynthScenario& scenario);

/// Deterministic in the seed. See the README for the draw order.
SynthOutput generate(const SynthScenario& scenario);

/// Vertex list of vessel `v` for Placement::Curves.
std::vector<Point> vessel_polyline(const SynthScenario& scenario, std::uint32_t v);

}  // namespace mbfuse
