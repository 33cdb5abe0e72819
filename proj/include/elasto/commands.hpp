#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "elasto/estimators.hpp"
#include "elasto/metrics.hpp"
#include "elasto/run_config.hpp"

namespace elasto {

/// Shortest decimal that round-trips, independent of the C locale.
std::string format_number(double v);

void write_strain_csv(const StrainMap& map, const std::filesystem::path& path);
void write_shifts_csv(const LateralShiftMap& shifts, const StrainMap& layout, const std::filesystem::path& path);
void write_quality_csv(const QualityRaw& quality, const StrainMap& layout, const std::filesystem::path& path);

/// Nearest-rank 99th percentile of the map values.
double strain_p99(const StrainMap& map);

/// 8-bit binary PGM, one pixel per map cell: black = 0 strain, white = the
/// 99th percentile, clamped at both ends.
std::string encode_pgm(const StrainMap& map);
void write_pgm(const StrainMap& map, const std::filesystem::path& path);

/// Writes pre.rff, post.rff and ground_truth.csv (the deformation model's
/// strain on the estimator window grid) into out_dir.
void run_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Writes strain.csv, strain.pgm, shifts.csv and quality.csv into out_dir.
/// With lateral_n the 1.5D search runs with that radius; without it the 1D
/// estimator runs. Throws DataError when the frames do not match.
StrainEstimate run_estimate(const std::filesystem::path& pre_path, const std::filesystem::path& post_path,
                            Method method, std::optional<int> lateral_n, const EstimatorConfig& cfg,
                            const std::filesystem::path& out_dir);

/// Strain sweep over {gradient, adaptive} x {1D, 1.5D}; writes snr_table.csv,
/// per_line_corr.csv and corr_profiles.csv. Metrics are medians over the
/// configured seeds.
void run_compare(const RunConfig& cfg, const std::filesystem::path& out_dir);

void write_corr_dump_csv(const CorrelationDump& dump, std::ostream& out);

CorrelationDump run_dump_corr(const std::filesystem::path& pre_path, const std::filesystem::path& post_path,
                              std::size_t line, std::size_t window, Method method, const EstimatorConfig& cfg);

}  // namespace elasto
