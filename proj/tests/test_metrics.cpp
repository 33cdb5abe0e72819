#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "elasto/errors.hpp"
#include "elasto/metrics.hpp"
#include "elasto/simulation.hpp"
#include "test_support.hpp"

using namespace elasto;

namespace {

StrainMap map_of(std::size_t rows, std::size_t cols, std::vector<double> values) {
  StrainMap m;
  m.rows = rows;
  m.cols = cols;
  m.values = std::move(values);
  for (std::size_t r = 0; r < rows; ++r) m.axial_positions_mm.push_back(1.0 + 0.5 * static_cast<double>(r));
  return m;
}

}  // namespace

TEST(Snr, ConstantRoiIsDegenerate) {
  const auto m = map_of(2, 2, {0.02, 0.02, 0.02, 0.02});
  EXPECT_THROW(snr_e(m, {0, 2, 0, 2}), DegenerateInputError);
}

TEST(Snr, DirectArithmetic) {
  const auto m = map_of(2, 2, {0.018, 0.020, 0.022, 0.020});
  // mean 0.02, population std sqrt(2e-6)
  EXPECT_NEAR(snr_e(m, {0, 2, 0, 2}), 0.02 / std::sqrt(2e-6), 1e-9);
  EXPECT_NEAR(snr_e(m, {0, 2, 0, 2}), 14.14, 0.01);
  auto scaled = m;
  for (auto& v : scaled.values) v *= 3;
  EXPECT_NEAR(snr_e(scaled, {0, 2, 0, 2}), snr_e(m, {0, 2, 0, 2}), 1e-9);
}

TEST(Snr, RoiBounds) {
  const auto m = map_of(2, 2, {1, 2, 3, 4});
  EXPECT_THROW(snr_e(m, {0, 3, 0, 2}), ValidationError);
  EXPECT_THROW(snr_e(m, {1, 1, 0, 2}), ValidationError);
}

TEST(Cnr, DirectArithmetic) {
  // Row 0: lesion {0.003, 0.007}; row 1: background {0.018, 0.022}.
  const auto m = map_of(2, 2, {0.003, 0.007, 0.018, 0.022});
  const ROI lesion{0, 1, 0, 2}, bg{1, 2, 0, 2};
  EXPECT_NEAR(cnr_e(m, lesion, bg), 0.015 / std::sqrt(8e-6), 1e-9);
  EXPECT_NEAR(cnr_e(m, lesion, bg), 5.30, 0.01);
  EXPECT_NEAR(cnr_e(m, bg, lesion), cnr_e(m, lesion, bg), 1e-15);
  const auto same = map_of(2, 2, {0.01, 0.03, 0.01, 0.03});
  EXPECT_NEAR(cnr_e(same, lesion, bg), 0.0, 1e-15);
  const auto flat = map_of(2, 2, {0.01, 0.01, 0.02, 0.02});
  EXPECT_THROW(cnr_e(flat, lesion, bg), DegenerateInputError);
}

TEST(PerLine, Means) {
  QualityRaw q;
  q.rows = 3;
  q.cols = 2;
  q.peak_correlation = {0.9, 1.0, 0.8, 1.0, 0.7, 1.0};
  const auto m = per_line_mean_max_corr(q);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_NEAR(m[0], 0.8, 1e-12);
  EXPECT_DOUBLE_EQ(m[1], 1.0);
}

TEST(RoiMm, SelectsCellsInsideRectangle) {
  const auto m = map_of(10, 16, std::vector<double>(160, 0.0));  // rows at 1.0, 1.5, ... 5.5 mm
  const auto roi = roi_from_mm(m, 0.3125, {2.5, 2.0, 1.0, 1.0});
  EXPECT_EQ(roi.row_begin, 1u);  // 1.5 mm
  EXPECT_EQ(roi.row_end, 4u);    // 2.5 mm inclusive
  // Line centres (c + 0.5) * 0.3125 within [2.0, 3.0]: c = 6..9
  EXPECT_EQ(roi.col_begin, 6u);
  EXPECT_EQ(roi.col_end, 9u + 1u);
  EXPECT_THROW(roi_from_mm(m, 0.3125, {30.0, 2.0, 1.0, 1.0}), ValidationError);
}

TEST(RoiMm, DefaultsPaired) {
  const auto l = default_lesion_rois();
  const auto b = default_background_rois();
  ASSERT_EQ(l.size(), 4u);
  ASSERT_EQ(b.size(), 4u);
  const auto spec = reference_phantom();
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_DOUBLE_EQ(l[k].cx_mm, spec.inclusions[k].cx_mm);
    EXPECT_DOUBLE_EQ(l[k].cy_mm, spec.inclusions[k].cy_mm);
    // Background corners sit on 60 kPa tissue.
    for (double sx : {-0.5, 0.5})
      for (double sy : {-0.5, 0.5})
        EXPECT_DOUBLE_EQ(modulus_at(spec, b[k].cx_mm + sx * b[k].width_mm, b[k].cy_mm + sy * b[k].height_mm), 60.0);
  }
}

TEST(Quality, ReportScaleInvariant) {
  StrainEstimate est;
  std::vector<double> v(74 * 128);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = 0.02 + 0.001 * std::sin(0.37 * static_cast<double>(k));
  est.strain = map_of(74, 128, v);
  est.quality.rows = 74;
  est.quality.cols = 128;
  est.quality.peak_correlation.assign(v.size(), 0.9);
  const auto a = quality_report(est, 0.3125, default_lesion_rois(), default_background_rois());
  for (auto& x : est.strain.values) x *= 2.5;
  const auto b = quality_report(est, 0.3125, default_lesion_rois(), default_background_rois());
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(a.snr_by_roi[k].second, b.snr_by_roi[k].second, 1e-9 * std::abs(a.snr_by_roi[k].second));
    EXPECT_NEAR(a.cnr_by_lesion[k], b.cnr_by_lesion[k], 1e-9 * (1 + a.cnr_by_lesion[k]));
  }
  for (double c : a.per_line_mean_max_corr) {
    EXPECT_GE(c, -1.0);
    EXPECT_LE(c, 1.0);
  }
}

namespace {

SimulatedPair dump_pair(int column_shift) {
  auto cfg = elasto::testing::small_simulation(0.0);
  cfg.column_shift = column_shift;
  return simulate_pair(cfg);
}

}  // namespace

TEST(CorrelationDump, NoMotionPeaksAtZero) {
  const auto p = dump_pair(0);
  const auto d = correlation_profile_dump(p.pre, p.post, 16, 20, Method::adaptive, EstimatorConfig{});
  ASSERT_EQ(d.curves.size(), 13u);
  const auto best = std::max_element(d.curves.begin(), d.curves.end(), [](auto& a, auto& b) { return a.max < b.max; });
  EXPECT_EQ(best->j, 0);
  EXPECT_EQ(d.selected_j, 0);
  for (const auto& c : d.curves) EXPECT_EQ(c.function.size(), 2u * static_cast<std::size_t>(c.max_lag) + 1u);
}

TEST(CorrelationDump, ColumnShiftPeaksAtTwo) {
  const auto p = dump_pair(2);
  const auto d = correlation_profile_dump(p.pre, p.post, 16, 20, Method::adaptive, EstimatorConfig{});
  double at2 = 0, other = -1;
  for (const auto& c : d.curves) {
    if (c.j == 2)
      at2 = c.max;
    else
      other = std::max(other, c.max);
  }
  EXPECT_GT(at2, other);
  EXPECT_EQ(d.selected_j, 2);
}

TEST(CorrelationDump, EdgeAndAddressChecks) {
  const auto p = dump_pair(0);
  EXPECT_EQ(correlation_profile_dump(p.pre, p.post, 0, 5, Method::adaptive, EstimatorConfig{}).curves.size(), 7u);
  EXPECT_THROW(correlation_profile_dump(p.pre, p.post, 32, 5, Method::adaptive, EstimatorConfig{}), ValidationError);
  EXPECT_THROW(correlation_profile_dump(p.pre, p.post, 3, 500, Method::adaptive, EstimatorConfig{}), ValidationError);
}

TEST(CorrelationDump, AgreesWithPipeline) {
  auto cfg = elasto::testing::small_simulation(0.08);
  const auto p = simulate_pair(cfg);
  const EstimatorConfig ec;
  const auto plan = window_grid(p.pre, ec);
  const SampleMatrix pre(p.pre), post(p.post);
  std::vector<WindowTrace> trace;
  const std::size_t line = 28;  // 3.75 mm off the centreline
  estimate_line(pre, post, line, Method::adaptive, true, plan, ec, &trace);
  for (std::size_t k : {5u, 20u, 30u}) {
    const auto d = correlation_profile_dump(p.pre, p.post, line, k, Method::adaptive, ec);
    EXPECT_EQ(d.selected_j, trace[k].match.j);
    for (const auto& [j, score] : trace[k].match.scores) {
      const auto it = std::find_if(d.curves.begin(), d.curves.end(), [j = j](auto& c) { return c.j == j; });
      ASSERT_NE(it, d.curves.end());
      EXPECT_DOUBLE_EQ(it->lateral_score, score) << "window " << k << " j " << j;
    }
  }
}
