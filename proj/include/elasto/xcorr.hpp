#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace elasto::xcorr {

/// A gated run of RF samples. `start_index` places the segment on a shared
/// sample axis: sample n of the segment sits at position start_index + n.
/// Two segments are compared by pairing equal positions, so a post segment
/// that covers the pre segment plus `max_lag` on each side is correlated at
/// full overlap for every lag.
struct Segment {
  std::span<const double> samples;
  long start_index = 0;

  long begin() const { return start_index; }
  long end() const { return start_index + static_cast<long>(samples.size()); }
};

struct CorrelationResult {
  double peak_lag = 0.0;    // sub-sample
  double peak_value = 0.0;  // correlation coefficient at the integer peak
  int integer_lag = 0;
  int max_lag = 0;
  std::vector<double> function;  // index lag + max_lag

  double at_lag(int lag) const { return function[static_cast<std::size_t>(lag + max_lag)]; }
};

/// Correlation peaks at or above this are exact matches and are not refined.
inline constexpr double kExactMatch = 1.0 - 1e-12;

/// Zero-normalized cross-correlation: function[lag] is the correlation
/// coefficient between a[t] and b[t + lag] over their overlap, for lag in
/// [-max_lag, max_lag]. Lags whose overlap is shorter than half of `a`, or
/// whose overlapping part of either segment is constant, score 0.
///
/// Throws DegenerateInputError when either segment has zero variance and
/// ValidationError for segments shorter than 2 or max_lag >= length(a).
CorrelationResult ncc(const Segment& a, const Segment& b, int max_lag);

/// Same result as ncc() computed with FFT cross-correlation and prefix sums.
CorrelationResult ncc_fft(const Segment& a, const Segment& b, int max_lag);

/// Vertex of the parabola through function[peak-1..peak+1], returned as a
/// fractional index. Offsets are clamped to +/-0.5; a peak on either end of
/// the function, or a non-concave triple, returns the integer index.
double refine_peak(std::span<const double> function, std::size_t peak_index);

/// Correlation coefficient of two equal-length sequences; 0 when either is
/// constant.
double correlation_coefficient(std::span<const double> a, std::span<const double> b);

/// Lower median (the smaller middle value for even counts).
double lower_median(std::vector<double> values);

/// Splits `a` into n_sub equal contiguous sub-windows (remainder samples at
/// the end are dropped), correlates each with the part of `b` spanning the
/// same positions widened by max_lag, and returns the lower median of the
/// per-sub-window peak values.
///
/// Throws ConfigurationError when n_sub < 1 or a sub-window is shorter than
/// 8 samples.
double subwindow_median_max(const Segment& a, const Segment& b, int n_sub, int max_lag);

}  // namespace elasto::xcorr
