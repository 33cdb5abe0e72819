#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "elasto/estimators.hpp"
#include "elasto/rf_frame.hpp"

namespace elasto {

/// Half-open window-row and line intervals of a strain map.
struct ROI {
  std::size_t row_begin = 0, row_end = 0;
  std::size_t col_begin = 0, col_end = 0;

  std::size_t size() const { return (row_end - row_begin) * (col_end - col_begin); }
};

/// A rectangle in phantom coordinates (mm), centred at (cx, cy).
struct RoiMm {
  double cx_mm = 0.0, cy_mm = 0.0;
  double width_mm = 4.0, height_mm = 4.0;
};

/// Rows whose window centre and lines whose lateral centre fall inside the
/// rectangle. Throws ValidationError when nothing falls inside.
ROI roi_from_mm(const StrainMap& map, double pitch_mm, const RoiMm& rect);

/// Lesion ROIs centred on the four inclusions of the reference phantom
/// (top, centre, bottom-left, bottom-right).
std::vector<RoiMm> default_lesion_rois();

/// Background ROIs paired one-to-one with default_lesion_rois(); also the SNR
/// regions.
std::vector<RoiMm> default_background_rois();

/// mean / population std over the ROI. Throws DegenerateInputError on zero std.
double snr_e(const StrainMap& map, const ROI& roi);

/// |mean_b - mean_l| / sqrt(var_b + var_l), population variances.
double cnr_e(const StrainMap& map, const ROI& lesion, const ROI& background);

/// Mean over window rows of each line's peak correlation.
std::vector<double> per_line_mean_max_corr(const QualityRaw& quality);

struct QualityReport {
  std::vector<std::pair<RoiMm, double>> snr_by_roi;
  std::vector<double> cnr_by_lesion;
  std::vector<double> per_line_mean_max_corr;
  std::string method_tag;

  double mean_snr() const;
};

QualityReport quality_report(const StrainEstimate& estimate, double pitch_mm, const std::vector<RoiMm>& lesions,
                             const std::vector<RoiMm>& backgrounds);

struct CorrelationCurve {
  int j = 0;
  int max_lag = 0;
  std::vector<double> function;  // NCC per integer lag, index lag + max_lag
  double max = 0.0;
  double lateral_score = 0.0;  // sub-window median-of-maxima used by the lateral search
  double alpha = 1.0;          // stretch of the post read behind `function`
  bool valid = true;
};

struct CorrelationDump {
  std::size_t line = 0;
  std::size_t window = 0;
  AxialPrediction prediction;
  int selected_j = 0;
  std::vector<CorrelationCurve> curves;
};

/// Replays the 1.5D estimator on `line_i` up to `window_k` and, at the axial
/// prediction it holds there, returns the full NCC function of the pre window
/// against every admissible post line i + j, |j| <= lateral radius. Each
/// curve is read at the stretch that maximised its lateral score.
CorrelationDump correlation_profile_dump(const RFFrame& pre, const RFFrame& post, std::size_t line_i,
                                         std::size_t window_k, Method method, const EstimatorConfig& cfg);

}  // namespace elasto
