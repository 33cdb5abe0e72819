#include "elasto/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "elasto/errors.hpp"

namespace elasto {

void RFFrame::validate() const {
  if (n_lines == 0 || n_samples == 0) throw ValidationError("RF frame must have at least one line and one sample");
  if (samples.size() != n_lines * n_samples)
    throw ValidationError("RF frame holds " + std::to_string(samples.size()) + " samples, expected " +
                          std::to_string(n_lines * n_samples));
  if (!(fs_hz > 0) || !(c_mps > 0) || !(pitch_mm > 0) || !(f0_hz > 0))
    throw ValidationError("RF frame metadata must be positive");
  for (float v : samples)
    if (!std::isfinite(v)) throw ValidationError("RF frame contains non-finite samples");
}

void PhantomSpec::validate() const {
  if (!(width_mm > 0) || !(height_mm > 0)) throw ValidationError("phantom width and height must be positive");
  if (!(background_modulus_kpa > 0)) throw ValidationError("background modulus must be positive");
  for (std::size_t k = 0; k < inclusions.size(); ++k) {
    const auto& inc = inclusions[k];
    if (!(inc.radius_mm > 0)) throw ValidationError("inclusion " + std::to_string(k) + ": radius must be positive");
    if (inc.cx_mm - inc.radius_mm < 0 || inc.cx_mm + inc.radius_mm > width_mm || inc.cy_mm - inc.radius_mm < 0 ||
        inc.cy_mm + inc.radius_mm > height_mm)
      throw ValidationError("inclusion " + std::to_string(k) + " does not lie inside the phantom");
  }
}

PhantomSpec reference_phantom() {
  PhantomSpec spec;
  spec.inclusions = {
      {20.0, 10.0, 3.75, 20.0},  // top
      {20.0, 20.0, 3.75, 40.0},  // centre
      {10.0, 30.0, 3.75, 10.0},  // bottom left
      {30.0, 30.0, 3.75, 30.0},  // bottom right
  };
  return spec;
}

PhantomSpec homogeneous_phantom() { return PhantomSpec{}; }

void TransducerSpec::validate() const {
  if (!(f0_hz > 0)) throw ValidationError("transducer f0 must be positive");
  if (!(fractional_bandwidth > 0 && fractional_bandwidth < 2))
    throw ValidationError("fractional bandwidth must lie in (0, 2)");
  if (!(fs_hz > 2.0 * f0_hz * (1.0 + fractional_bandwidth)))
    throw ValidationError("sampling rate must exceed 2 f0 (1 + bandwidth)");
  if (!(beam_width_mm > 0)) throw ValidationError("beam width must be positive");
  if (n_lines == 0) throw ValidationError("transducer needs at least one line");
  if (!(pitch_mm > 0)) throw ValidationError("line pitch must be positive");
  if (!(c_mps > 0)) throw ValidationError("speed of sound must be positive");
}

// Gaussian envelope exp(-t^2 / 2 sigma^2) has amplitude spectrum
// exp(-(2 pi f)^2 sigma^2 / 2); the -6 dB (half amplitude) full width is
// B f0 = sqrt(2 ln 2) / (pi sigma).
double TransducerSpec::pulse_sigma_s() const {
  return std::sqrt(2.0 * std::numbers::ln2) / (std::numbers::pi * fractional_bandwidth * f0_hz);
}

void DeformationSpec::validate() const {
  if (!(applied_strain >= 0 && applied_strain < 1)) throw ValidationError("applied strain must lie in [0, 1)");
  if (!(poisson_ratio >= 0 && poisson_ratio < 0.5 + 1e-9)) throw ValidationError("poisson ratio must lie in [0, 0.5]");
  if (!std::isfinite(centerline_x_mm)) throw ValidationError("centerline must be finite");
}

ScattererField generate_scatterers(const PhantomSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> ux(0.0, spec.width_mm);
  std::uniform_real_distribution<double> uy(0.0, spec.height_mm);
  std::normal_distribution<double> amp(0.0, 1.0);

  ScattererField field;
  field.points.reserve(spec.n_scatterers);
  for (std::size_t k = 0; k < spec.n_scatterers; ++k) {
    Scatterer s;
    s.x_mm = ux(rng);
    s.y_mm = uy(rng);
    s.reflectivity = amp(rng);
    field.points.push_back(s);
  }
  return field;
}

namespace {

// First listed inclusion containing the point, or nullptr.
const InclusionSpec* inclusion_at(const PhantomSpec& spec, double x, double y) {
  for (const auto& inc : spec.inclusions) {
    const double dx = x - inc.cx_mm;
    const double dy = y - inc.cy_mm;
    if (dx * dx + dy * dy < inc.radius_mm * inc.radius_mm) return &inc;
  }
  return nullptr;
}

double modulus_unchecked(const PhantomSpec& spec, double x, double y) {
  const auto* inc = inclusion_at(spec, x, y);
  if (!inc) return spec.background_modulus_kpa;
  return spec.background_modulus_kpa * std::pow(10.0, inc->contrast_db / 20.0);
}

}  // namespace

double modulus_at(const PhantomSpec& spec, double x_mm, double y_mm) {
  if (!(x_mm >= 0 && x_mm <= spec.width_mm && y_mm >= 0 && y_mm <= spec.height_mm))
    throw DomainError("point (" + std::to_string(x_mm) + ", " + std::to_string(y_mm) + ") mm is outside the phantom");
  return modulus_unchecked(spec, x_mm, y_mm);
}

ColumnProfile::ColumnProfile(const PhantomSpec& spec, double x_mm, double applied_strain) {
  const double h = spec.height_mm;
  std::vector<double> cuts{0.0, h};
  for (const auto& inc : spec.inclusions) {
    const double dx = x_mm - inc.cx_mm;
    const double r2 = inc.radius_mm * inc.radius_mm - dx * dx;
    if (r2 <= 0) continue;
    const double half = std::sqrt(r2);
    cuts.push_back(std::clamp(inc.cy_mm - half, 0.0, h));
    cuts.push_back(std::clamp(inc.cy_mm + half, 0.0, h));
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double y0 = cuts[k];
    const double y1 = cuts[k + 1];
    const double c = 1.0 / modulus_unchecked(spec, x_mm, 0.5 * (y0 + y1));
    pieces_.push_back({y0, y1, c});
    integral += c * (y1 - y0);
  }
  const double mean_compliance = integral / h;
  scale_ = applied_strain / mean_compliance;
}

double ColumnProfile::strain_at(double y_mm) const {
  for (const auto& p : pieces_)
    if (y_mm < p.y1) return scale_ * p.compliance;
  return scale_ * pieces_.back().compliance;
}

double ColumnProfile::displacement_at(double y_mm) const {
  double acc = 0.0;
  for (const auto& p : pieces_) {
    if (y_mm <= p.y0) break;
    acc += p.compliance * (std::min(y_mm, p.y1) - p.y0);
  }
  if (y_mm > pieces_.back().y1) acc += pieces_.back().compliance * (y_mm - pieces_.back().y1);
  return scale_ * acc;
}

ScattererField displace_scatterers(const ScattererField& field, const PhantomSpec& spec,
                                   const DeformationSpec& def) {
  spec.validate();
  def.validate();
  if (def.applied_strain == 0.0) return field;

  ScattererField out;
  out.points.reserve(field.points.size());
  for (const auto& s : field.points) {
    const ColumnProfile column(spec, s.x_mm, def.applied_strain);
    const double local = column.strain_at(s.y_mm);
    Scatterer moved = s;
    moved.y_mm = s.y_mm - column.displacement_at(s.y_mm);
    moved.x_mm = def.centerline_x_mm + (s.x_mm - def.centerline_x_mm) * (1.0 + def.poisson_ratio * local);
    out.points.push_back(moved);
  }
  return out;
}

std::size_t samples_for_depth(const TransducerSpec& td, double depth_mm) {
  return static_cast<std::size_t>(std::ceil(2.0 * depth_mm * td.fs_hz / (1000.0 * td.c_mps)));
}

double pulse(const TransducerSpec& td, double t_s) {
  const double sigma = td.pulse_sigma_s();
  if (std::abs(t_s) > 3.0 * sigma) return 0.0;
  return std::exp(-0.5 * t_s * t_s / (sigma * sigma)) * std::cos(2.0 * std::numbers::pi * td.f0_hz * t_s);
}

RFFrame synthesize_rf(const ScattererField& field, const TransducerSpec& td, double depth_mm) {
  td.validate();
  if (!(depth_mm > 0)) throw ValidationError("imaging depth must be positive");
  const std::size_t n_samples = samples_for_depth(td, depth_mm);
  RFFrame frame(td.n_lines, n_samples, td.fs_hz, td.c_mps, td.pitch_mm, td.f0_hz);

  const double half_beam = 0.5 * td.beam_width_mm;
  const double support = 3.0 * td.pulse_sigma_s();
  std::vector<double> acc(td.n_lines * n_samples, 0.0);

  for (const auto& s : field.points) {
    // Lines whose centre (i + 0.5) * pitch lies within the beam half-width.
    const double lo = (s.x_mm - half_beam) / td.pitch_mm - 0.5;
    const double hi = (s.x_mm + half_beam) / td.pitch_mm - 0.5;
    const long first_line = std::max(0L, static_cast<long>(std::ceil(lo)));
    const long last_line = std::min(static_cast<long>(td.n_lines) - 1, static_cast<long>(std::floor(hi)));
    if (first_line > last_line) continue;

    const double tau = 2.0 * s.y_mm / (1000.0 * td.c_mps);
    const long n0 = std::max(0L, static_cast<long>(std::ceil((tau - support) * td.fs_hz)));
    const long n1 = std::min(static_cast<long>(n_samples) - 1, static_cast<long>(std::floor((tau + support) * td.fs_hz)));
    if (n0 > n1) continue;

    for (long n = n0; n <= n1; ++n) {
      const double v = s.reflectivity * pulse(td, static_cast<double>(n) / td.fs_hz - tau);
      for (long i = first_line; i <= last_line; ++i) acc[static_cast<std::size_t>(i) * n_samples + n] += v;
    }
  }
  std::transform(acc.begin(), acc.end(), frame.samples.begin(), [](double v) { return static_cast<float>(v); });
  return frame;
}

namespace {

double mean_power(const std::vector<float>& v) {
  double p = 0.0;
  for (float x : v) p += static_cast<double>(x) * x;
  return v.empty() ? 0.0 : p / static_cast<double>(v.size());
}

}  // namespace

RFFrame add_noise(const RFFrame& frame, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return frame;
  if (!std::isfinite(snr_db)) throw ValidationError("snr_db must be finite or +infinity");
  const double p_signal = mean_power(frame.samples);
  if (!(p_signal > 0)) throw DomainError("cannot add noise at a finite SNR to an all-zero frame");

  const double sigma = std::sqrt(p_signal / std::pow(10.0, snr_db / 10.0));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);

  RFFrame out = frame;
  for (auto& v : out.samples) v = static_cast<float>(static_cast<double>(v) + noise(rng));
  return out;
}

double measured_snr_db(const RFFrame& clean, const RFFrame& noisy) {
  if (!clean.same_geometry(noisy)) throw ValidationError("frames differ in shape");
  double p_noise = 0.0;
  for (std::size_t k = 0; k < clean.samples.size(); ++k) {
    const double d = static_cast<double>(noisy.samples[k]) - clean.samples[k];
    p_noise += d * d;
  }
  p_noise /= static_cast<double>(clean.samples.size());
  return 10.0 * std::log10(mean_power(clean.samples) / p_noise);
}

RFFrame shift_columns(const RFFrame& frame, int columns) {
  RFFrame out = frame;
  std::fill(out.samples.begin(), out.samples.end(), 0.0f);
  const long n = static_cast<long>(frame.n_lines);
  for (long i = 0; i < n; ++i) {
    const long src = i - columns;
    if (src < 0 || src >= n) continue;
    auto from = frame.line(static_cast<std::size_t>(src));
    std::copy(from.begin(), from.end(), out.line(static_cast<std::size_t>(i)).begin());
  }
  return out;
}

}  // namespace elasto
