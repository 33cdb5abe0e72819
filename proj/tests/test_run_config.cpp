#include <gtest/gtest.h>

#include <cmath>

#include "elasto/errors.hpp"
#include "elasto/run_config.hpp"

using namespace elasto;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(RunConfig, EmptyGivesDefaults) {
  const auto cfg = parse_run_config("# nothing\n\n");
  EXPECT_EQ(cfg.estimator.window_mm, 3.0);
  EXPECT_EQ(cfg.estimator.shift_mm, 0.5);
  EXPECT_EQ(cfg.estimator.lateral_radius_n, 6);
  EXPECT_EQ(cfg.simulation.phantom.inclusions.size(), 4u);
  EXPECT_EQ(cfg.simulation.phantom.n_scatterers, 30372u);
  EXPECT_EQ(cfg.simulation.transducer.n_lines, 128u);
  EXPECT_EQ(cfg.simulation.snr_db, 40.0);
  EXPECT_EQ(cfg.compare.strains, (std::vector<double>{0.02, 0.04, 0.06, 0.08, 0.12, 0.16}));
  EXPECT_EQ(cfg.lesion_rois.size(), 4u);
}

TEST(RunConfig, OverridesEveryEstimatorDefault) {
  const auto cfg = parse_run_config(
      "estimator.window_mm = 2.5  # shorter\n"
      "estimator.shift_mm=0.25\n"
      "  estimator.lateral_n = 3\n"
      "estimator.n_sub = 5\n"
      "estimator.alpha_min = 0.8\n"
      "estimator.alpha_step = 0.01\n"
      "estimator.alpha_refine_iters = 4\n"
      "estimator.max_lag_mm = 0.3\n"
      "estimator.corr_threshold = 0.6\n"
      "estimator.lateral_tie_tol = 0\n");
  EXPECT_EQ(cfg.estimator.window_mm, 2.5);
  EXPECT_EQ(cfg.estimator.shift_mm, 0.25);
  EXPECT_EQ(cfg.estimator.lateral_radius_n, 3);
  EXPECT_EQ(cfg.estimator.n_sub, 5);
  EXPECT_EQ(cfg.estimator.alpha_min, 0.8);
  EXPECT_EQ(cfg.estimator.alpha_coarse_step, 0.01);
  EXPECT_EQ(cfg.estimator.alpha_refine_iters, 4);
  EXPECT_EQ(cfg.estimator.max_lag_mm, 0.3);
  EXPECT_EQ(cfg.estimator.corr_threshold, 0.6);
  EXPECT_EQ(cfg.estimator.lateral_tie_tol, 0.0);
}

TEST(RunConfig, SimulationKeys) {
  const auto cfg = parse_run_config(
      "phantom.width_mm = 30\nphantom.height_mm = 25\nphantom.n_scatterers = 100\nphantom.background_kpa = 50\n"
      "phantom.seed = 9\nphantom.inclusion.1 = 10, 12, 3, 6\nphantom.inclusion.0 = 20,12,2,20\n"
      "transducer.f0_hz = 4e6\ntransducer.bandwidth = 0.5\ntransducer.beam_width_mm = 1\ntransducer.n_lines = 96\n"
      "transducer.pitch_mm = 0.3\ntransducer.fs_hz = 30e6\ntransducer.c_mps = 1500\n"
      "deformation.applied_strain = 0.05\ndeformation.poisson_ratio = 0\ndeformation.centerline_x_mm = 15\n"
      "deformation.column_shift = -2\nnoise.snr_db = inf\nnoise.seed_pre = 1\nnoise.seed_post = 2\n"
      "roi.lesion.0 = 20,12,1,1\nroi.background.0 = 25,20,2,2\noutput.dir = out/x\n"
      "compare.strains = 0.02, 0.1\ncompare.seeds = 3,4,5\ncompare.probe_line = 7\ncompare.probe_window = 8\n");
  const auto& s = cfg.simulation;
  EXPECT_EQ(s.phantom.width_mm, 30.0);
  EXPECT_EQ(s.phantom.seed, 9u);
  ASSERT_EQ(s.phantom.inclusions.size(), 2u);
  EXPECT_EQ(s.phantom.inclusions[0].cx_mm, 20.0);  // ordered by index
  EXPECT_EQ(s.phantom.inclusions[1].contrast_db, 6.0);
  EXPECT_EQ(s.transducer.n_lines, 96u);
  EXPECT_EQ(s.transducer.fs_hz, 30e6);
  EXPECT_EQ(s.deformation.poisson_ratio, 0.0);
  EXPECT_EQ(s.column_shift, -2);
  EXPECT_TRUE(std::isinf(s.snr_db));
  EXPECT_EQ(cfg.lesion_rois.size(), 1u);
  EXPECT_EQ(cfg.output_dir, "out/x");
  EXPECT_EQ(cfg.compare.seeds, (std::vector<std::uint64_t>{3, 4, 5}));
  EXPECT_EQ(cfg.compare.probe_window, 8u);
}

TEST(RunConfig, Homogeneous) {
  EXPECT_TRUE(parse_run_config("phantom.homogeneous = true\n").simulation.phantom.inclusions.empty());
  EXPECT_NE(error_of("phantom.homogeneous = true\nphantom.inclusion.0 = 20,20,3,6\n"), "");
}

TEST(RunConfig, ErrorsNameKeyAndLine) {
  const auto e = error_of("estimator.window_mm = 3\n\nestimator.windw_mm = 2\n");
  EXPECT_NE(e.find("estimator.windw_mm"), std::string::npos) << e;
  EXPECT_NE(e.find("line 3"), std::string::npos) << e;
  EXPECT_NE(error_of("estimator.window_mm = 3\nestimator.window_mm = 3\n").find("more than once"), std::string::npos);
  EXPECT_NE(error_of("estimator.window_mm = abc\n").find("estimator.window_mm"), std::string::npos);
  EXPECT_NE(error_of("estimator.window_mm\n"), "");
  EXPECT_NE(error_of("estimator.lateral_n = -1\n"), "");
  EXPECT_NE(error_of("estimator.alpha_min = 1\n"), "");
  EXPECT_NE(error_of("estimator.shift_mm = 4\n"), "");  // shift > window
  EXPECT_NE(error_of("deformation.applied_strain = 1\n"), "");
  EXPECT_NE(error_of("noise.snr_db = -inf\n"), "");
  EXPECT_NE(error_of("phantom.inclusion.0 = 1,2,3\n"), "");
  EXPECT_NE(error_of("phantom.inclusion.0 = 39,20,3,6\n"), "");  // outside the phantom
  // five lesions, four default backgrounds
  EXPECT_NE(error_of("roi.lesion.0 = 5,5,1,1\nroi.lesion.1 = 5,5,1,1\nroi.lesion.2 = 5,5,1,1\n"
                     "roi.lesion.3 = 5,5,1,1\nroi.lesion.4 = 5,5,1,1\n"),
            "");
  EXPECT_NE(error_of("compare.strains = 0.02,\n"), "");
  EXPECT_NE(error_of("transducer.fs_hz = 10e6\n"), "");
}

TEST(RunConfig, MissingFile) { EXPECT_THROW(load_run_config("/nonexistent/elasto.cfg"), DataError); }

TEST(RunConfig, WithSeed) {
  SimulationConfig base;
  const auto s = with_seed(base, 4);
  EXPECT_EQ(s.phantom.seed, 4u);
  EXPECT_EQ(s.noise_seed_pre, base.noise_seed_pre + 4);
  EXPECT_EQ(s.noise_seed_post, base.noise_seed_post + 4);
  EXPECT_NE(s.noise_seed_pre, s.noise_seed_post);
}
