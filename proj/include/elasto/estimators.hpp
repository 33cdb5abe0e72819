#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "elasto/rf_frame.hpp"

namespace elasto {

enum class Method { gradient, adaptive };

std::string to_string(Method m);
Method parse_method(const std::string& name);  // throws ValidationError

struct EstimatorConfig {
  double window_mm = 3.0;
  double shift_mm = 0.5;
  int lateral_radius_n = 6;
  int n_sub = 3;
  double alpha_min = 0.70;
  double alpha_coarse_step = 0.005;
  int alpha_refine_iters = 10;
  double max_lag_mm = 0.2;
  // Windows whose peak correlation falls below this neither seed the next
  // window's axial prediction nor keep a narrowed lateral search.
  double corr_threshold = 0.5;
  // Lateral scores this close to the best count as tied, so the smaller |j|
  // wins unless a shift is clearly better.
  double lateral_tie_tol = 0.03;

  void validate() const;
};

/// Window geometry resolved against one acquisition.
struct WindowPlan {
  std::size_t length = 0;
  std::size_t stride = 0;
  int max_lag = 0;
  double samples_per_mm = 0.0;
  std::vector<std::size_t> starts;

  std::size_t rows() const { return starts.size(); }
  double center_mm(std::size_t k) const {
    return (static_cast<double>(starts[k]) + 0.5 * static_cast<double>(length)) / samples_per_mm;
  }
};

/// Tiles a line of n_samples with windows of round(window_mm * samples_per_mm)
/// samples every round(shift_mm * samples_per_mm); a trailing partial window is
/// dropped. Throws ConfigurationError when not even one window fits.
WindowPlan window_grid(std::size_t n_samples, double samples_per_mm, const EstimatorConfig& cfg);
WindowPlan window_grid(const RFFrame& frame, const EstimatorConfig& cfg);

/// Dense double copy of an RFFrame used by the estimators.
class SampleMatrix {
public:
  explicit SampleMatrix(const RFFrame& frame);

  std::size_t n_lines() const { return n_lines_; }
  std::size_t n_samples() const { return n_samples_; }
  std::span<const double> line(std::size_t i) const { return {data_.data() + i * n_samples_, n_samples_}; }

private:
  std::size_t n_lines_;
  std::size_t n_samples_;
  std::vector<double> data_;
};

/// Where the estimator expects the current pre window to start on the post
/// line, and the local stretch factor expected there.
struct AxialPrediction {
  double post_start = 0.0;
  double alpha = 1.0;
};

/// Post-line samples read at positions round(post_start) + alpha * m for
/// m in [-margin, length + margin), clipped to the line. `start_index`
/// places m = 0 on the pre window's start so that xcorr pairs positions.
struct PostSegment {
  std::vector<double> samples;
  long start_index = 0;
};
PostSegment predicted_post_segment(std::span<const double> post_line, std::size_t window_start, std::size_t length,
                                   const AxialPrediction& prediction, int margin);

struct DisplacementLine {
  std::vector<double> displacement;  // delay of post vs pre, samples (positive = later)
  std::vector<double> peak;
  std::vector<std::uint8_t> flagged;
};

/// Per-window delay between pre and post on one line. Each window searches
/// +/-max_lag around the delay of the last window whose peak correlation
/// reached corr_threshold. Degenerate windows copy the previous delay and
/// are flagged.
DisplacementLine estimate_displacement_line(std::span<const double> pre_line, std::span<const double> post_line,
                                            const WindowPlan& plan, const EstimatorConfig& cfg);

/// strain[k] = (u[k+1] - u[k]) / stride, last row replicated. `displacements`
/// are axial displacements towards the transducer (compression positive).
std::vector<double> gradient_strain_line(std::span<const double> displacements, double stride_samples);

struct StretchResult {
  double alpha = 1.0;
  double strain = 0.0;  // exactly 1 - alpha
  double peak_cc = 0.0;
  double lag_samples = 0.0;    // refined post start minus `start`
  double post_position = 0.0;  // refined absolute post start
};

/// Adaptive stretching for one window: for each stretch factor alpha the
/// post line is read at p + alpha * n (linear interpolation), n in [0, len),
/// for integer starts p in start +/- max_lag, and correlated with the pre
/// segment. alpha maximises the best correlation: coarse grid over
/// [alpha_min, 1] then golden-section refinement.
///
/// Throws DegenerateInputError when no candidate can be evaluated.
StretchResult adaptive_stretch_segment(std::span<const double> pre_segment, std::span<const double> post_line,
                                       long start, const EstimatorConfig& cfg, int max_lag);

struct LateralMatch {
  int j = 0;
  double score = 0.0;
  double alpha = 1.0;  // stretch applied to the post read for the winning score
  bool degenerate = false;
  bool full_scan = false;
  std::vector<std::pair<int, double>> scores;  // every evaluated candidate
};

/// Candidate lateral offsets for line_i. With no previous shift, or when
/// `full` is set, every j in [-radius, radius]; otherwise
/// {prev-1, prev, prev+1, 0} restricted to |j| <= radius. Always restricted to
/// 0 <= line_i + j < n_lines. Ascending order.
std::vector<int> lateral_candidates(std::size_t line_i, std::size_t n_lines, int radius, std::optional<int> prev_shift_j,
                                    bool full);

/// Stretch factors tried when scoring a lateral candidate: the predicted one
/// first, then 1.0, 0.96, ... down to alpha_min.
std::vector<double> lateral_alpha_set(const AxialPrediction& prediction, const EstimatorConfig& cfg);

/// Sub-window median-of-maxima between the pre window and post line
/// i + j read at the axial prediction, maximised over `alphas`. Returns
/// (score, alpha). Throws DegenerateInputError when no alpha can be scored.
std::pair<double, double> lateral_score(const SampleMatrix& pre, const SampleMatrix& post, std::size_t line_i, int j,
                                        std::size_t window_k, const AxialPrediction& prediction,
                                        std::span<const double> alphas, const WindowPlan& plan,
                                        const EstimatorConfig& cfg);

/// Scores post lines i + j against the pre window (line_i, window_k).
/// Without prev_shift_j the full +/-n range is scored. Otherwise candidates
/// are narrowed around it, falling back to the full scan when the best score
/// is below corr_threshold. Each candidate's score is its best over
/// lateral_alpha_set. Candidates within lateral_tie_tol of the best score are
/// tied; ties go to smaller |j|, then to the candidate closest to
/// prev_shift_j (0 when absent). The reported score is the chosen candidate's.
LateralMatch lateral_search_segment(const SampleMatrix& pre, const SampleMatrix& post, std::size_t line_i,
                                    std::size_t window_k, std::optional<int> prev_shift_j,
                                    const AxialPrediction& prediction, const WindowPlan& plan,
                                    const EstimatorConfig& cfg);

struct StrainMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major [window row][line]
  std::vector<double> axial_positions_mm;
  Method method = Method::adaptive;
  bool lateral = false;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::string method_tag() const;
};

struct LateralShiftMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<int> shifts;

  int at(std::size_t r, std::size_t c) const { return shifts[r * cols + c]; }
};

struct QualityRaw {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> peak_correlation;
  std::vector<std::uint8_t> flagged;

  double at(std::size_t r, std::size_t c) const { return peak_correlation[r * cols + c]; }
};

struct StrainEstimate {
  StrainMap strain;
  LateralShiftMap shifts;
  QualityRaw quality;
  WindowPlan plan;
};

/// State of one window as seen by the line estimator, for diagnostics.
struct WindowTrace {
  AxialPrediction prediction;
  LateralMatch match;
};

struct LineEstimate {
  std::vector<double> strain;
  std::vector<int> shifts;
  std::vector<double> peak;
  std::vector<std::uint8_t> flagged;
};

/// Runs the window sequence of one A-line. When `trace` is given it receives
/// one entry per window.
LineEstimate estimate_line(const SampleMatrix& pre, const SampleMatrix& post, std::size_t line_i, Method method,
                           bool use_1p5d, const WindowPlan& plan, const EstimatorConfig& cfg,
                           std::vector<WindowTrace>* trace = nullptr);

/// Full strain map. With use_1p5d each window first picks the lateral
/// offset j, then runs the 1D estimator against post line i + j.
StrainEstimate estimate_strain_map(const RFFrame& pre, const RFFrame& post, Method method, bool use_1p5d,
                                   const EstimatorConfig& cfg);

}  // namespace elasto
