#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "elasto/rf_frame.hpp"

namespace elasto {

struct InclusionSpec {
  double cx_mm = 0.0;
  double cy_mm = 0.0;
  double radius_mm = 3.75;
  double contrast_db = 0.0;  // stiffness contrast relative to background
};

/// Rectangular tissue phantom. x is lateral (0 at the left edge), y is depth
/// (0 at the transducer face).
struct PhantomSpec {
  double width_mm = 40.0;
  double height_mm = 40.0;
  std::size_t n_scatterers = 30372;
  double background_modulus_kpa = 60.0;
  std::vector<InclusionSpec> inclusions;
  std::uint64_t seed = 1;

  void validate() const;
};

/// 40x40 mm phantom with four 7.5 mm inclusions: top 20 dB, centre 40 dB,
/// bottom-left 10 dB, bottom-right 30 dB.
PhantomSpec reference_phantom();

/// Same geometry and scatterer density with no inclusions.
PhantomSpec homogeneous_phantom();

struct Scatterer {
  double x_mm = 0.0;
  double y_mm = 0.0;
  double reflectivity = 0.0;
};

struct ScattererField {
  std::vector<Scatterer> points;
};

struct TransducerSpec {
  double f0_hz = 5e6;
  double fractional_bandwidth = 0.60;  // -6 dB
  double beam_width_mm = 1.5;
  std::size_t n_lines = 128;
  double pitch_mm = 0.3125;
  double fs_hz = 40e6;
  double c_mps = 1540.0;

  void validate() const;

  /// Standard deviation (s) of the Gaussian pulse envelope.
  double pulse_sigma_s() const;
};

struct DeformationSpec {
  double applied_strain = 0.0;  // compression positive
  double poisson_ratio = 0.495;
  double centerline_x_mm = 20.0;

  void validate() const;
};

ScattererField generate_scatterers(const PhantomSpec& spec);

/// Young's modulus in kPa at (x, y). Throws DomainError outside the phantom.
double modulus_at(const PhantomSpec& spec, double x_mm, double y_mm);

/// Piecewise-constant compliance profile of one vertical column of the
/// phantom under the spring-column deformation model.
class ColumnProfile {
public:
  ColumnProfile(const PhantomSpec& spec, double x_mm, double applied_strain);

  /// Local axial strain at depth y.
  double strain_at(double y_mm) const;

  /// Axial displacement towards the transducer: integral of strain over [0, y].
  double displacement_at(double y_mm) const;

private:
  struct Piece {
    double y0, y1, compliance;
  };
  std::vector<Piece> pieces_;
  double scale_ = 0.0;  // applied_strain / mean compliance
};

ScattererField displace_scatterers(const ScattererField& field, const PhantomSpec& spec,
                                   const DeformationSpec& def);

/// Depth of the frame in samples for a given imaging depth.
std::size_t samples_for_depth(const TransducerSpec& td, double depth_mm);

/// Gaussian-modulated cosine pulse, zero outside +/-3 sigma.
double pulse(const TransducerSpec& td, double t_s);

RFFrame synthesize_rf(const ScattererField& field, const TransducerSpec& td, double depth_mm);

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

/// Adds white Gaussian noise at the requested SNR (dB). snr_db = +inf returns
/// the frame unchanged.
RFFrame add_noise(const RFFrame& frame, double snr_db, std::uint64_t seed);

/// 10 log10(P_signal / P_noise) measured from a clean frame and its noisy copy.
double measured_snr_db(const RFFrame& clean, const RFFrame& noisy);

/// Moves every line content `columns` lines to the right (negative: left);
/// lines uncovered at the edge are zero.
RFFrame shift_columns(const RFFrame& frame, int columns);

}  // namespace elasto
