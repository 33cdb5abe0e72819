#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "elasto/commands.hpp"
#include "elasto/errors.hpp"
#include "elasto/rff_io.hpp"

using namespace elasto;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "elasto_cmd_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// 10 x 20 mm homogeneous phantom, 32 lines.
const char* kSmallConfig =
    "phantom.width_mm = 10\n"
    "phantom.height_mm = 20\n"
    "phantom.n_scatterers = 3796\n"
    "phantom.homogeneous = true\n"
    "transducer.n_lines = 32\n"
    "deformation.applied_strain = 0.02\n"
    "deformation.centerline_x_mm = 5\n"
    "roi.lesion.0 = 5, 8, 2, 3\n"
    "roi.background.0 = 5, 14, 2, 3\n"
    "compare.probe_line = 16\n"
    "compare.probe_window = 10\n";

int run(const std::string& args) {
  const std::string cmd = std::string(ELASTO_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST(Format, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.02), "0.02");
  EXPECT_EQ(format_number(-1.5), "-1.5");
  EXPECT_EQ(format_number(3.0), "3");
  EXPECT_EQ(std::stod(format_number(0.1 + 0.2)), 0.1 + 0.2);
}

TEST(Pgm, MappingAndDimensions) {
  StrainMap m;
  m.rows = 2;
  m.cols = 100;
  for (int k = 0; k < 200; ++k) m.values.push_back(k < 100 ? -0.01 : 0.0001 * (k - 100));
  m.axial_positions_mm = {1, 2};
  const auto pgm = encode_pgm(m);
  const std::string header = "P5\n100 2\n255\n";
  ASSERT_EQ(pgm.substr(0, header.size()), header);
  ASSERT_EQ(pgm.size(), header.size() + 200);
  const auto px = [&](int k) { return static_cast<unsigned char>(pgm[header.size() + static_cast<std::size_t>(k)]); };
  EXPECT_EQ(px(0), 0);      // negative clamps to black
  EXPECT_EQ(px(100), 0);    // zero strain is black
  EXPECT_EQ(px(199), 255);  // above p99 clamps to white
  for (int k = 101; k < 200; ++k) EXPECT_GE(px(k), px(k - 1));
  // nearest-rank p99 of 200 values is the 198th smallest
  EXPECT_DOUBLE_EQ(strain_p99(m), 0.0001 * 97);
}

TEST(Commands, SimulateEstimateRoundTrip) {
  const auto dir = scratch("sim");
  const auto cfg = parse_run_config(kSmallConfig);
  run_simulate(cfg, dir);
  const auto pre = read_rff(dir / "pre.rff");
  const auto post = read_rff(dir / "post.rff");
  EXPECT_EQ(pre.n_lines, 32u);
  EXPECT_TRUE(pre.same_geometry(post));
  const auto truth = lines_of(dir / "ground_truth.csv");
  EXPECT_EQ(truth.front().substr(0, 17), "depth_mm,line_0,l");
  EXPECT_NE(truth[1].find(",0.02"), std::string::npos);

  // Determinism.
  const auto again = scratch("sim2");
  run_simulate(cfg, again);
  EXPECT_EQ(slurp(dir / "pre.rff"), slurp(again / "pre.rff"));
  EXPECT_EQ(slurp(dir / "post.rff"), slurp(again / "post.rff"));

  const auto est = run_estimate(dir / "pre.rff", dir / "post.rff", Method::adaptive, std::nullopt, cfg.estimator, dir / "a");
  for (const char* f : {"strain.csv", "strain.pgm", "shifts.csv", "quality.csv"}) EXPECT_TRUE(fs::exists(dir / "a" / f));
  EXPECT_EQ(lines_of(dir / "a" / "strain.csv").size(), est.strain.rows + 1);
  EXPECT_EQ(lines_of(dir / "a" / "quality.csv").size(), est.strain.rows * 32 + 1);
  std::vector<double> all = est.strain.values;
  std::nth_element(all.begin(), all.begin() + static_cast<long>(all.size() / 2), all.end());
  EXPECT_NEAR(all[all.size() / 2], 0.02, 0.002);

  const auto self = run_estimate(dir / "pre.rff", dir / "pre.rff", Method::gradient, 3, cfg.estimator, dir / "s");
  for (double v : self.strain.values) ASSERT_EQ(v, 0.0);
}

TEST(Commands, EstimateShapeMismatchIsDataError) {
  const auto dir = scratch("mismatch");
  RFFrame a(4, 400, 40e6, 1540, 0.3125, 5e6), b(5, 400, 40e6, 1540, 0.3125, 5e6);
  write_rff(a, dir / "a.rff");
  write_rff(b, dir / "b.rff");
  EXPECT_THROW(run_estimate(dir / "a.rff", dir / "b.rff", Method::adaptive, std::nullopt, {}, dir), DataError);
}

TEST(Commands, CompareSingleStrain) {
  const auto dir = scratch("cmp1");
  auto cfg = parse_run_config(std::string(kSmallConfig) + "compare.strains = 0.02\n");
  run_compare(cfg, dir);
  const auto table = lines_of(dir / "snr_table.csv");
  ASSERT_EQ(table.size(), 1u + 4u);
  EXPECT_EQ(table[0], "applied_strain,method,mode,n_seeds,snr_mean,snr_roi_1,cnr_lesion_1,mean_max_corr");
  EXPECT_EQ(lines_of(dir / "per_line_corr.csv").size(), 1u + 4u * 32u);
  const auto prof = lines_of(dir / "corr_profiles.csv");
  // 2 methods x 13 curves x (2 max_lag + 1) lags
  EXPECT_EQ(prof.size(), 1u + 2u * 13u * 21u);
}

TEST(Commands, CompareDefaultSweepHas24Rows) {
  const auto dir = scratch("cmp6");
  auto cfg = parse_run_config(std::string(kSmallConfig) + "estimator.lateral_n = 2\n");
  run_compare(cfg, dir);
  const auto table = lines_of(dir / "snr_table.csv");
  ASSERT_EQ(table.size(), 1u + 24u);
  for (std::size_t k = 1; k < table.size(); ++k) {
    EXPECT_EQ(table[k].find(';'), std::string::npos);
    EXPECT_EQ(std::count(table[k].begin(), table[k].end(), ','), 7);
  }
  EXPECT_EQ(slurp(dir / "snr_table.csv").back(), '\n');
}

TEST(Cli, ExitCodesAndReduction) {
  const auto dir = scratch("cli");
  const auto cfg = write_config(dir, kSmallConfig);
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --out " + dir.string()), 0);
  const std::string frames = " --pre " + (dir / "pre.rff").string() + " --post " + (dir / "post.rff").string();
  for (const char* method : {"gradient", "adaptive"}) {
    const auto one = dir / (std::string("one_") + method), zero = dir / (std::string("zero_") + method);
    ASSERT_EQ(run("estimate" + frames + " --method " + method + " --out " + one.string()), 0);
    ASSERT_EQ(run("estimate" + frames + " --method " + method + " --lateral-n 0 --out " + zero.string()), 0);
    EXPECT_EQ(slurp(one / "strain.csv"), slurp(zero / "strain.csv")) << method;
    EXPECT_EQ(slurp(one / "strain.pgm"), slurp(zero / "strain.pgm")) << method;
  }
  EXPECT_EQ(run("dump-corr" + frames + " --line 16 --window 5 --out " + (dir / "dump").string()), 0);
  EXPECT_EQ(lines_of(dir / "dump" / "corr_dump.csv").front(), "line,window,j,selected,valid,alpha,lateral_score,lag,ncc");

  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("estimate" + frames + " --method bogus --out " + dir.string()), 2);
  EXPECT_EQ(run("estimate --pre /nonexistent.rff --post /nonexistent.rff --method adaptive --out " + dir.string()), 3);
  EXPECT_EQ(run("simulate --config /nonexistent.cfg --out " + dir.string()), 3);
  EXPECT_EQ(run("simulate --config " + write_config(dir, "estimator.bogus = 1\n").string() + " --out " + dir.string()), 2);
  EXPECT_EQ(run("simulate --config " +
                write_config(dir, "phantom.n_scatterers = 0\nphantom.homogeneous = true\n").string() + " --out " +
                dir.string()),
            4);
  std::ofstream(dir / "bad.rff") << "RFX1 1 1 1 1 1 1\n";
  EXPECT_EQ(run("estimate --pre " + (dir / "bad.rff").string() + " --post " + (dir / "bad.rff").string() +
                " --method adaptive --out " + dir.string()),
            3);
}
