#include "elasto/metrics.hpp"

#include <cmath>
#include <numeric>

#include "elasto/errors.hpp"
#include "elasto/xcorr.hpp"

namespace elasto {

ROI roi_from_mm(const StrainMap& map, double pitch_mm, const RoiMm& rect) {
  ROI roi;
  bool have_row = false, have_col = false;
  const double y0 = rect.cy_mm - 0.5 * rect.height_mm, y1 = rect.cy_mm + 0.5 * rect.height_mm;
  for (std::size_t r = 0; r < map.rows; ++r) {
    const double y = map.axial_positions_mm[r];
    if (y < y0 || y > y1) continue;
    if (!have_row) roi.row_begin = r;
    roi.row_end = r + 1;
    have_row = true;
  }
  const double x0 = rect.cx_mm - 0.5 * rect.width_mm, x1 = rect.cx_mm + 0.5 * rect.width_mm;
  for (std::size_t c = 0; c < map.cols; ++c) {
    const double x = (static_cast<double>(c) + 0.5) * pitch_mm;
    if (x < x0 || x > x1) continue;
    if (!have_col) roi.col_begin = c;
    roi.col_end = c + 1;
    have_col = true;
  }
  if (!have_row || !have_col)
    throw ValidationError("ROI centred at (" + std::to_string(rect.cx_mm) + ", " + std::to_string(rect.cy_mm) +
                          ") mm covers no map cell");
  return roi;
}

// Narrow laterally: towards an inclusion's side edges the chord length, and
// with it the column displacement, varies quickly across one beam width.
std::vector<RoiMm> default_lesion_rois() {
  return {
      {20.0, 10.0, 2.0, 3.0},
      {20.0, 20.0, 2.0, 3.0},
      {10.0, 30.0, 2.0, 3.0},
      {30.0, 30.0, 2.0, 3.0},
  };
}

// Every background ROI sits in a column that crosses no inclusion, where the
// deformation model gives uniform strain.
std::vector<RoiMm> default_background_rois() {
  return {
      {15.0, 10.0, 2.0, 4.0},
      {25.0, 20.0, 2.0, 4.0},
      {3.5, 30.0, 3.0, 4.0},
      {36.5, 30.0, 3.0, 4.0},
  };
}

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments roi_moments(const StrainMap& map, const ROI& roi) {
  if (roi.row_begin >= roi.row_end || roi.col_begin >= roi.col_end) throw ValidationError("empty ROI");
  if (roi.row_end > map.rows || roi.col_end > map.cols) throw ValidationError("ROI exceeds the map");
  double sum = 0.0;
  for (std::size_t r = roi.row_begin; r < roi.row_end; ++r)
    for (std::size_t c = roi.col_begin; c < roi.col_end; ++c) sum += map.at(r, c);
  const double n = static_cast<double>(roi.size());
  Moments m;
  m.mean = sum / n;
  double ss = 0.0;
  for (std::size_t r = roi.row_begin; r < roi.row_end; ++r)
    for (std::size_t c = roi.col_begin; c < roi.col_end; ++c) {
      const double d = map.at(r, c) - m.mean;
      ss += d * d;
    }
  m.var = ss / n;
  return m;
}

}  // namespace

double snr_e(const StrainMap& map, const ROI& roi) {
  const auto m = roi_moments(map, roi);
  if (!(m.var > 0.0)) throw DegenerateInputError("SNR of a constant ROI");
  return m.mean / std::sqrt(m.var);
}

double cnr_e(const StrainMap& map, const ROI& lesion, const ROI& background) {
  const auto l = roi_moments(map, lesion);
  const auto b = roi_moments(map, background);
  if (!(l.var + b.var > 0.0)) throw DegenerateInputError("CNR with two constant ROIs");
  return std::abs(b.mean - l.mean) / std::sqrt(b.var + l.var);
}

std::vector<double> per_line_mean_max_corr(const QualityRaw& quality) {
  std::vector<double> out(quality.cols, 0.0);
  if (quality.rows == 0) return out;
  for (std::size_t c = 0; c < quality.cols; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < quality.rows; ++r) s += quality.at(r, c);
    out[c] = s / static_cast<double>(quality.rows);
  }
  return out;
}

double QualityReport::mean_snr() const {
  if (snr_by_roi.empty()) return 0.0;
  double s = 0.0;
  for (const auto& [roi, v] : snr_by_roi) s += v;
  return s / static_cast<double>(snr_by_roi.size());
}

QualityReport quality_report(const StrainEstimate& estimate, double pitch_mm, const std::vector<RoiMm>& lesions,
                             const std::vector<RoiMm>& backgrounds) {
  if (lesions.size() > backgrounds.size()) throw ValidationError("every lesion ROI needs a paired background ROI");
  QualityReport rep;
  rep.method_tag = estimate.strain.method_tag();
  for (const auto& b : backgrounds) {
    const ROI roi = roi_from_mm(estimate.strain, pitch_mm, b);
    double v = 0.0;
    try {
      v = snr_e(estimate.strain, roi);
    } catch (const DegenerateInputError&) {
    }
    rep.snr_by_roi.emplace_back(b, v);
  }
  for (std::size_t k = 0; k < lesions.size(); ++k) {
    const ROI l = roi_from_mm(estimate.strain, pitch_mm, lesions[k]);
    const ROI b = roi_from_mm(estimate.strain, pitch_mm, backgrounds[k]);
    double v = 0.0;
    try {
      v = cnr_e(estimate.strain, l, b);
    } catch (const DegenerateInputError&) {
    }
    rep.cnr_by_lesion.push_back(v);
  }
  rep.per_line_mean_max_corr = per_line_mean_max_corr(estimate.quality);
  return rep;
}

CorrelationDump correlation_profile_dump(const RFFrame& pre, const RFFrame& post, std::size_t line_i,
                                         std::size_t window_k, Method method, const EstimatorConfig& cfg) {
  cfg.validate();
  if (!pre.same_geometry(post)) throw ValidationError("pre and post frames differ in shape or acquisition metadata");
  const WindowPlan plan = window_grid(pre, cfg);
  if (line_i >= pre.n_lines) throw ValidationError("dump: line " + std::to_string(line_i) + " out of range");
  if (window_k >= plan.rows()) throw ValidationError("dump: window " + std::to_string(window_k) + " out of range");

  const SampleMatrix pre_m(pre), post_m(post);
  std::vector<WindowTrace> trace;
  // Later windows cannot change the state at window_k.
  WindowPlan partial = plan;
  partial.starts.resize(window_k + 1);
  if (method == Method::gradient && partial.rows() < 2) partial.starts = plan.starts;
  estimate_line(pre_m, post_m, line_i, method, true, partial, cfg, &trace);

  CorrelationDump dump;
  dump.line = line_i;
  dump.window = window_k;
  dump.prediction = trace[window_k].prediction;
  dump.selected_j = trace[window_k].match.j;
  const auto alphas = lateral_alpha_set(dump.prediction, cfg);

  const std::size_t s = plan.starts[window_k];
  const xcorr::Segment a{pre_m.line(line_i).subspan(s, plan.length), static_cast<long>(s)};
  for (int j : lateral_candidates(line_i, pre.n_lines, cfg.lateral_radius_n, std::nullopt, true)) {
    CorrelationCurve curve;
    curve.j = j;
    curve.max_lag = plan.max_lag;
    try {
      const auto [score, alpha] = lateral_score(pre_m, post_m, line_i, j, window_k, dump.prediction, alphas, partial, cfg);
      curve.lateral_score = score;
      curve.alpha = alpha;
      const auto seg = predicted_post_segment(post_m.line(static_cast<std::size_t>(static_cast<long>(line_i) + j)), s,
                                              plan.length, {dump.prediction.post_start, alpha}, plan.max_lag);
      const auto r = xcorr::ncc(a, {seg.samples, seg.start_index}, plan.max_lag);
      curve.function = r.function;
      curve.max = r.peak_value;
    } catch (const DegenerateInputError&) {
      curve.valid = false;
      curve.function.assign(2 * static_cast<std::size_t>(plan.max_lag) + 1, 0.0);
    }
    dump.curves.push_back(std::move(curve));
  }
  return dump;
}

}  // namespace elasto
