#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace elasto {

/// A 2D raster of RF echo samples, stored line-major: all samples of line 0,
/// then line 1, ... Acquisition metadata travels with the samples so that
/// mm <-> sample conversions never need a side channel.
struct RFFrame {
  std::size_t n_lines = 0;
  std::size_t n_samples = 0;
  double fs_hz = 40e6;
  double c_mps = 1540.0;
  double pitch_mm = 0.3125;
  double f0_hz = 5e6;
  std::vector<float> samples;

  RFFrame() = default;
  RFFrame(std::size_t lines, std::size_t samples_per_line, double fs, double c, double pitch, double f0)
      : n_lines(lines), n_samples(samples_per_line), fs_hz(fs), c_mps(c), pitch_mm(pitch), f0_hz(f0),
        samples(lines * samples_per_line, 0.0f) {}

  std::span<float> line(std::size_t i) { return {samples.data() + i * n_samples, n_samples}; }
  std::span<const float> line(std::size_t i) const { return {samples.data() + i * n_samples, n_samples}; }

  float& at(std::size_t line_i, std::size_t sample) { return samples[line_i * n_samples + sample]; }
  float at(std::size_t line_i, std::size_t sample) const { return samples[line_i * n_samples + sample]; }

  /// Samples per millimetre of depth (round-trip time t = 2d/c).
  double samples_per_mm() const { return 2.0 * fs_hz / (1000.0 * c_mps); }

  /// Lateral centre of line i, in mm from the left edge of the scan.
  double line_x_mm(std::size_t i) const { return (static_cast<double>(i) + 0.5) * pitch_mm; }

  bool same_geometry(const RFFrame& other) const {
    return n_lines == other.n_lines && n_samples == other.n_samples && fs_hz == other.fs_hz &&
           c_mps == other.c_mps && pitch_mm == other.pitch_mm && f0_hz == other.f0_hz;
  }

  // Throws ValidationError on empty shape, size mismatch or non-finite samples.
  void validate() const;
};

}  // namespace elasto
