// elasto: simulate RF frame pairs, estimate strain, compare estimators.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 estimation failure.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

#include "elasto/commands.hpp"
#include "elasto/errors.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kEstimation = 4 };

elasto::RunConfig config_or_default(const std::string& path) {
  return path.empty() ? elasto::RunConfig{} : elasto::load_run_config(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ultrasound strain estimation toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, pre_path, post_path, method_name = "adaptive";
  std::optional<int> lateral_n;
  bool lateral = false;
  std::size_t line = 0, window = 0;

  auto* simulate = app.add_subcommand("simulate", "Synthesize pre/post RF frames and the ideal strain field");
  simulate->add_option("--config", config_path, "Config file")->required();
  simulate->add_option("--out", out_dir, "Output directory (default: output.dir from the config)");

  auto* estimate = app.add_subcommand("estimate", "Estimate a strain map from two RFF frames");
  estimate->add_option("--pre", pre_path, "Pre-compression frame")->required();
  estimate->add_option("--post", post_path, "Post-compression frame")->required();
  estimate->add_option("--method", method_name, "gradient or adaptive")->required();
  estimate->add_option("--lateral-n", lateral_n, "Run the 1.5D search with this radius (lines)");
  estimate->add_flag("--lateral", lateral, "Run the 1.5D search with the configured radius");
  estimate->add_option("--config", config_path, "Config file for estimator settings");
  estimate->add_option("--out", out_dir, "Output directory")->required();

  auto* compare = app.add_subcommand("compare", "Sweep applied strain over all four estimator variants");
  compare->add_option("--config", config_path, "Config file")->required();
  compare->add_option("--out", out_dir, "Output directory (default: output.dir from the config)");

  auto* dump = app.add_subcommand("dump-corr", "Correlation functions of one window against every lateral candidate");
  dump->add_option("--pre", pre_path, "Pre-compression frame")->required();
  dump->add_option("--post", post_path, "Post-compression frame")->required();
  dump->add_option("--line", line, "A-line index")->required();
  dump->add_option("--window", window, "Window row index")->required();
  dump->add_option("--method", method_name, "gradient or adaptive (default adaptive)");
  dump->add_option("--config", config_path, "Config file for estimator settings");
  dump->add_option("--out", out_dir, "Write corr_dump.csv here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (simulate->parsed()) {
      const auto cfg = elasto::load_run_config(config_path);
      const std::filesystem::path dir = out_dir.empty() ? cfg.output_dir : std::filesystem::path(out_dir);
      elasto::run_simulate(cfg, dir);
      std::cout << "wrote " << (dir / "pre.rff").string() << ", " << (dir / "post.rff").string() << ", "
                << (dir / "ground_truth.csv").string() << '\n';
    } else if (estimate->parsed()) {
      const auto method = elasto::parse_method(method_name);
      const auto cfg = config_or_default(config_path);
      std::optional<int> radius = lateral_n;
      if (!radius && lateral) radius = cfg.estimator.lateral_radius_n;
      const auto est = elasto::run_estimate(pre_path, post_path, method, radius, cfg.estimator, out_dir);
      std::cout << est.strain.method_tag() << ": " << est.strain.rows << " x " << est.strain.cols << " strain map in "
                << out_dir << '\n';
    } else if (compare->parsed()) {
      const auto cfg = elasto::load_run_config(config_path);
      const std::filesystem::path dir = out_dir.empty() ? cfg.output_dir : std::filesystem::path(out_dir);
      elasto::run_compare(cfg, dir);
      std::cout << "wrote snr_table.csv, per_line_corr.csv, corr_profiles.csv to " << dir.string() << '\n';
    } else if (dump->parsed()) {
      const auto method = elasto::parse_method(method_name);
      const auto cfg = config_or_default(config_path);
      const auto result = elasto::run_dump_corr(pre_path, post_path, line, window, method, cfg.estimator);
      if (out_dir.empty()) {
        elasto::write_corr_dump_csv(result, std::cout);
      } else {
        std::filesystem::create_directories(out_dir);
        const auto path = std::filesystem::path(out_dir) / "corr_dump.csv";
        std::ofstream out(path);
        if (!out) throw elasto::DataError("cannot open '" + path.string() + "' for writing");
        elasto::write_corr_dump_csv(result, out);
        out.flush();
        if (!out) throw elasto::DataError("failed writing '" + path.string() + "'");
      }
    }
  } catch (const elasto::ValidationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const elasto::ConfigurationError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const elasto::ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const elasto::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const elasto::EstimationError& e) {
    std::cerr << "estimation failed: " << e.what() << '\n';
    return kEstimation;
  } catch (const elasto::DegenerateInputError& e) {
    std::cerr << "estimation failed: " << e.what() << '\n';
    return kEstimation;
  } catch (const elasto::DomainError& e) {
    std::cerr << "estimation failed: " << e.what() << '\n';
    return kEstimation;
  }
  return kOk;
}
