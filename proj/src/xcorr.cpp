#include "elasto/xcorr.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numeric>
#include <string>

#include "elasto/errors.hpp"

namespace elasto::xcorr {

namespace {

void check_inputs(const Segment& a, const Segment& b, int max_lag) {
  if (a.samples.size() < 2 || b.samples.size() < 2) throw ValidationError("ncc: segments need at least 2 samples");
  if (max_lag < 0 || static_cast<std::size_t>(max_lag) >= a.samples.size())
    throw ValidationError("ncc: max_lag must lie in [0, length) (got " + std::to_string(max_lag) + ")");
}

bool has_variance(std::span<const double> x) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return *lo != *hi;
}

std::size_t min_overlap(const Segment& a) { return std::max<std::size_t>(2, (a.samples.size() + 1) / 2); }

// Pick the integer argmax (first maximum from the most negative lag that is
// strictly larger, ties to the smaller |lag|) and refine it.
void locate_peak(CorrelationResult& r) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < r.function.size(); ++k) {
    const double v = r.function[k];
    const double b = r.function[best];
    const long lag_k = static_cast<long>(k) - r.max_lag;
    const long lag_b = static_cast<long>(best) - r.max_lag;
    if (v > b || (v == b && std::labs(lag_k) < std::labs(lag_b))) best = k;
  }
  r.integer_lag = static_cast<int>(best) - r.max_lag;
  r.peak_value = r.function[best];
  // An exact match already sits on the integer lag; the neighbours of a
  // finite window are not symmetric, so the parabola would move it.
  r.peak_lag = r.peak_value >= kExactMatch ? r.integer_lag : refine_peak(r.function, best) - r.max_lag;
}

}  // namespace

double correlation_coefficient(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n < 2) return 0.0;
  double ma = 0.0, mb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    ma += a[k];
    mb += b[k];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double da = a[k] - ma;
    const double db = b[k] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

CorrelationResult ncc(const Segment& a, const Segment& b, int max_lag) {
  check_inputs(a, b, max_lag);
  if (!has_variance(a.samples) || !has_variance(b.samples))
    throw DegenerateInputError("ncc: zero-variance segment");

  CorrelationResult r;
  r.max_lag = max_lag;
  r.function.assign(2 * static_cast<std::size_t>(max_lag) + 1, 0.0);
  const std::size_t need = min_overlap(a);

  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    const long t0 = std::max(a.begin(), b.begin() - lag);
    const long t1 = std::min(a.end(), b.end() - lag);
    if (t1 - t0 < static_cast<long>(need)) continue;
    const auto n = static_cast<std::size_t>(t1 - t0);
    r.function[static_cast<std::size_t>(lag + max_lag)] =
        correlation_coefficient(a.samples.subspan(static_cast<std::size_t>(t0 - a.begin()), n),
                                b.samples.subspan(static_cast<std::size_t>(t0 + lag - b.begin()), n));
  }
  locate_peak(r);
  return r;
}

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

// R[m] = sum_i x[i] y[i + m] for m in [-(nx - 1), ny - 1], stored at m + nx - 1.
std::vector<double> fft_cross_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t full = x.size() + y.size() - 1;
  std::size_t n = 1;
  while (n < full) n <<= 1;
  const std::size_t nc = n / 2 + 1;

  FftwBuffer<double> xr(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  FftwBuffer<double> yr(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
  FftwBuffer<fftw_complex> xc(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nc)));
  FftwBuffer<fftw_complex> yc(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nc)));

  fftw_plan px, py, pinv;
  {
    std::lock_guard lock(planner_mutex());
    px = fftw_plan_dft_r2c_1d(static_cast<int>(n), xr.get(), xc.get(), FFTW_ESTIMATE);
    py = fftw_plan_dft_r2c_1d(static_cast<int>(n), yr.get(), yc.get(), FFTW_ESTIMATE);
    pinv = fftw_plan_dft_c2r_1d(static_cast<int>(n), yc.get(), yr.get(), FFTW_ESTIMATE);
  }
  std::fill(xr.get(), xr.get() + n, 0.0);
  std::fill(yr.get(), yr.get() + n, 0.0);
  std::copy(x.begin(), x.end(), xr.get());
  std::copy(y.begin(), y.end(), yr.get());
  fftw_execute(px);
  fftw_execute(py);
  for (std::size_t k = 0; k < nc; ++k) {
    const std::complex<double> cx(xc[k][0], xc[k][1]);
    const std::complex<double> cy(yc[k][0], yc[k][1]);
    const auto prod = std::conj(cx) * cy;
    yc[k][0] = prod.real();
    yc[k][1] = prod.imag();
  }
  fftw_execute(pinv);

  std::vector<double> out(full);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < full; ++k) {
    const long m = static_cast<long>(k) - static_cast<long>(x.size() - 1);
    const std::size_t idx = m >= 0 ? static_cast<std::size_t>(m) : n - static_cast<std::size_t>(-m);
    out[k] = yr[idx] * scale;
  }
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(px);
    fftw_destroy_plan(py);
    fftw_destroy_plan(pinv);
  }
  return out;
}

std::vector<double> centered(std::span<const double> v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [m](double x) { return x - m; });
  return out;
}

std::vector<double> prefix(const std::vector<double>& v, bool squared) {
  std::vector<double> p(v.size() + 1, 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) p[k + 1] = p[k] + (squared ? v[k] * v[k] : v[k]);
  return p;
}

}  // namespace

CorrelationResult ncc_fft(const Segment& a, const Segment& b, int max_lag) {
  check_inputs(a, b, max_lag);
  if (!has_variance(a.samples) || !has_variance(b.samples))
    throw DegenerateInputError("ncc: zero-variance segment");

  const auto x = centered(a.samples);
  const auto y = centered(b.samples);
  const auto cross = fft_cross_correlation(x, y);
  const auto px = prefix(x, false), px2 = prefix(x, true);
  const auto py = prefix(y, false), py2 = prefix(y, true);

  CorrelationResult r;
  r.max_lag = max_lag;
  r.function.assign(2 * static_cast<std::size_t>(max_lag) + 1, 0.0);
  const std::size_t need = min_overlap(a);
  const long shift = a.begin() - b.begin();

  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    const long t0 = std::max(a.begin(), b.begin() - lag);
    const long t1 = std::min(a.end(), b.end() - lag);
    if (t1 - t0 < static_cast<long>(need)) continue;
    const double n = static_cast<double>(t1 - t0);
    const auto i0 = static_cast<std::size_t>(t0 - a.begin()), i1 = static_cast<std::size_t>(t1 - a.begin());
    const auto k0 = static_cast<std::size_t>(t0 + lag - b.begin()), k1 = static_cast<std::size_t>(t1 + lag - b.begin());
    const double sa = px[i1] - px[i0], saa = px2[i1] - px2[i0];
    const double sb = py[k1] - py[k0], sbb = py2[k1] - py2[k0];
    const double sab = cross[static_cast<std::size_t>(lag + shift + static_cast<long>(x.size()) - 1)];
    const double va = saa - sa * sa / n;
    const double vb = sbb - sb * sb / n;
    if (va <= 0.0 || vb <= 0.0) continue;
    r.function[static_cast<std::size_t>(lag + max_lag)] = std::clamp((sab - sa * sb / n) / std::sqrt(va * vb), -1.0, 1.0);
  }
  locate_peak(r);
  return r;
}

double refine_peak(std::span<const double> function, std::size_t peak_index) {
  const double at = static_cast<double>(peak_index);
  if (peak_index == 0 || peak_index + 1 >= function.size()) return at;
  const double left = function[peak_index - 1];
  const double mid = function[peak_index];
  const double right = function[peak_index + 1];
  const double denom = 2.0 * (2.0 * mid - left - right);
  if (!(denom > 0.0)) return at;
  return at + std::clamp((right - left) / denom, -0.5, 0.5);
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of an empty set");
  const std::size_t mid = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
  return values[mid];
}

double subwindow_median_max(const Segment& a, const Segment& b, int n_sub, int max_lag) {
  if (n_sub < 1) throw ConfigurationError("sub-window count must be at least 1");
  const std::size_t sub_len = a.samples.size() / static_cast<std::size_t>(n_sub);
  if (sub_len < 8)
    throw ConfigurationError("sub-window of " + std::to_string(sub_len) + " samples is shorter than 8");
  if (static_cast<std::size_t>(max_lag) >= sub_len)
    throw ConfigurationError("max_lag must be shorter than a sub-window");

  std::vector<double> maxima;
  maxima.reserve(static_cast<std::size_t>(n_sub));
  std::size_t valid = 0;
  for (int s = 0; s < n_sub; ++s) {
    const Segment sub_a{a.samples.subspan(static_cast<std::size_t>(s) * sub_len, sub_len),
                        a.start_index + static_cast<long>(static_cast<std::size_t>(s) * sub_len)};
    const long lo = std::max(b.begin(), sub_a.begin() - max_lag);
    const long hi = std::min(b.end(), sub_a.end() + max_lag);
    double peak = 0.0;
    if (hi - lo >= 2) {
      const Segment sub_b{b.samples.subspan(static_cast<std::size_t>(lo - b.begin()), static_cast<std::size_t>(hi - lo)), lo};
      try {
        peak = ncc(sub_a, sub_b, max_lag).peak_value;
        ++valid;
      } catch (const DegenerateInputError&) {
      }
    }
    maxima.push_back(peak);
  }
  if (valid == 0) throw DegenerateInputError("subwindow_median_max: every sub-window is degenerate");
  return lower_median(std::move(maxima));
}

}  // namespace elasto::xcorr
