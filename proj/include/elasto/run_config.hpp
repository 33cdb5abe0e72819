#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "elasto/estimators.hpp"
#include "elasto/metrics.hpp"
#include "elasto/simulation.hpp"

namespace elasto {

struct CompareSettings {
  std::vector<double> strains{0.02, 0.04, 0.06, 0.08, 0.12, 0.16};
  std::vector<std::uint64_t> seeds{1};
  std::size_t probe_line = 100;
  std::size_t probe_window = 40;
};

/// Everything a subcommand needs, read from a flat `key = value` file.
/// Keys are listed in the README.
struct RunConfig {
  SimulationConfig simulation;
  EstimatorConfig estimator;
  std::vector<RoiMm> lesion_rois = default_lesion_rois();
  std::vector<RoiMm> background_rois = default_background_rois();
  std::filesystem::path output_dir = ".";
  CompareSettings compare;

  void validate() const;
};

/// Lines are `key = value`; `#` starts a comment. Unknown or repeated keys and
/// malformed values throw ValidationError naming the key and line.
RunConfig parse_run_config(std::string_view text);

/// Throws DataError when the file cannot be read.
RunConfig load_run_config(const std::filesystem::path& path);

/// The simulation for sweep seed `seed`: the phantom is drawn with that seed
/// and the noise seeds are offset by it.
SimulationConfig with_seed(const SimulationConfig& base, std::uint64_t seed);

}  // namespace elasto
