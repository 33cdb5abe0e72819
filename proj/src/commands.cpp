#include "elasto/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "elasto/errors.hpp"
#include "elasto/rff_io.hpp"
#include "elasto/xcorr.hpp"

namespace elasto {

namespace fs = std::filesystem;

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

namespace {

std::ofstream open_output(const fs::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

template <class Cell>
void write_grid_csv(const fs::path& path, const StrainMap& layout, Cell cell) {
  auto out = open_output(path);
  out << "depth_mm";
  for (std::size_t c = 0; c < layout.cols; ++c) out << ",line_" << c;
  out << '\n';
  for (std::size_t r = 0; r < layout.rows; ++r) {
    out << format_number(layout.axial_positions_mm[r]);
    for (std::size_t c = 0; c < layout.cols; ++c) out << ',' << cell(r, c);
    out << '\n';
  }
  finish(out, path);
}

// Re-raises the active exception with `where` prefixed, keeping its type so
// the exit-code mapping still applies.
[[noreturn]] void rethrow_annotated(const std::string& where) {
  try {
    throw;
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  } catch (const ConfigurationError& e) {
    throw ConfigurationError(where + ": " + e.what());
  } catch (const DegenerateInputError& e) {
    throw DegenerateInputError(where + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(where + ": " + e.what());
  } catch (const EstimationError& e) {
    throw EstimationError(where + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(where + ": " + e.what());
  }
}

double median(std::vector<double> v) { return v.empty() ? 0.0 : xcorr::lower_median(std::move(v)); }

}  // namespace

void write_strain_csv(const StrainMap& map, const fs::path& path) {
  write_grid_csv(path, map, [&](std::size_t r, std::size_t c) { return format_number(map.at(r, c)); });
}

void write_shifts_csv(const LateralShiftMap& shifts, const StrainMap& layout, const fs::path& path) {
  write_grid_csv(path, layout, [&](std::size_t r, std::size_t c) { return std::to_string(shifts.at(r, c)); });
}

void write_quality_csv(const QualityRaw& quality, const StrainMap& layout, const fs::path& path) {
  auto out = open_output(path);
  out << "row,line,depth_mm,peak_correlation,flagged\n";
  for (std::size_t r = 0; r < quality.rows; ++r)
    for (std::size_t c = 0; c < quality.cols; ++c)
      out << r << ',' << c << ',' << format_number(layout.axial_positions_mm[r]) << ','
          << format_number(quality.at(r, c)) << ',' << int(quality.flagged[r * quality.cols + c]) << '\n';
  finish(out, path);
}

double strain_p99(const StrainMap& map) {
  if (map.values.empty()) return 0.0;
  std::vector<double> v = map.values;
  const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(v.size())));
  const std::size_t k = std::max<std::size_t>(rank, 1) - 1;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

std::string encode_pgm(const StrainMap& map) {
  std::string out = "P5\n" + std::to_string(map.cols) + " " + std::to_string(map.rows) + "\n255\n";
  const double white = strain_p99(map);
  for (double s : map.values) {
    double g = white > 0 ? s / white : 0.0;
    g = std::clamp(g, 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * g))));
  }
  return out;
}

void write_pgm(const StrainMap& map, const fs::path& path) {
  auto out = open_output(path, true);
  const auto bytes = encode_pgm(map);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  finish(out, path);
}

void run_simulate(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  const auto pair = simulate_pair(cfg.simulation);
  const auto plan = window_grid(pair.pre, cfg.estimator);
  write_rff(pair.pre, out_dir / "pre.rff");
  write_rff(pair.post, out_dir / "post.rff");
  write_strain_csv(ideal_strain_map(cfg.simulation, plan), out_dir / "ground_truth.csv");
}

StrainEstimate run_estimate(const fs::path& pre_path, const fs::path& post_path, Method method,
                            std::optional<int> lateral_n, const EstimatorConfig& cfg, const fs::path& out_dir) {
  EstimatorConfig est_cfg = cfg;
  if (lateral_n) {
    if (*lateral_n < 0) throw ValidationError("--lateral-n must be non-negative");
    est_cfg.lateral_radius_n = *lateral_n;
  }
  est_cfg.validate();
  const RFFrame pre = read_rff(pre_path);
  const RFFrame post = read_rff(post_path);
  if (!pre.same_geometry(post))
    throw DataError("pre (" + std::to_string(pre.n_lines) + "x" + std::to_string(pre.n_samples) + ") and post (" +
                    std::to_string(post.n_lines) + "x" + std::to_string(post.n_samples) +
                    ") frames differ in shape or acquisition metadata");

  const auto est = estimate_strain_map(pre, post, method, lateral_n.has_value(), est_cfg);
  ensure_dir(out_dir);
  write_strain_csv(est.strain, out_dir / "strain.csv");
  write_pgm(est.strain, out_dir / "strain.pgm");
  write_shifts_csv(est.shifts, est.strain, out_dir / "shifts.csv");
  write_quality_csv(est.quality, est.strain, out_dir / "quality.csv");
  return est;
}

void write_corr_dump_csv(const CorrelationDump& dump, std::ostream& out) {
  out << "line,window,j,selected,valid,alpha,lateral_score,lag,ncc\n";
  for (const auto& c : dump.curves)
    for (std::size_t i = 0; i < c.function.size(); ++i)
      out << dump.line << ',' << dump.window << ',' << c.j << ',' << int(c.j == dump.selected_j) << ',' << int(c.valid)
          << ',' << format_number(c.alpha) << ',' << format_number(c.lateral_score) << ','
          << static_cast<long>(i) - c.max_lag << ',' << format_number(c.function[i]) << '\n';
}

CorrelationDump run_dump_corr(const fs::path& pre_path, const fs::path& post_path, std::size_t line,
                              std::size_t window, Method method, const EstimatorConfig& cfg) {
  const RFFrame pre = read_rff(pre_path);
  const RFFrame post = read_rff(post_path);
  if (!pre.same_geometry(post)) throw DataError("pre and post frames differ in shape or acquisition metadata");
  return correlation_profile_dump(pre, post, line, window, method, cfg);
}

void run_compare(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);

  struct CellKey {
    double strain;
    Method method;
    bool lateral;
    bool operator<(const CellKey& o) const {
      return std::tie(strain, method, lateral) < std::tie(o.strain, o.method, o.lateral);
    }
  };
  struct CellRuns {
    std::vector<double> snr_mean;
    std::vector<std::vector<double>> snr_roi, cnr;
    std::vector<std::vector<double>> per_line;
    std::vector<double> mean_corr;
  };
  std::map<CellKey, CellRuns> cells;

  auto profiles = open_output(out_dir / "corr_profiles.csv");
  profiles << "applied_strain,method,line,window,j,selected,valid,alpha,lateral_score,lag,ncc\n";

  const Method methods[] = {Method::gradient, Method::adaptive};
  for (double strain : cfg.compare.strains) {
    for (std::size_t si = 0; si < cfg.compare.seeds.size(); ++si) {
      const auto seed = cfg.compare.seeds[si];
      const std::string where = "compare cell strain=" + format_number(strain) + " seed=" + std::to_string(seed);
      SimulatedPair pair;
      SimulationConfig sim = with_seed(cfg.simulation, seed);
      sim.deformation.applied_strain = strain;
      try {
        pair = simulate_pair(sim);
      } catch (...) {
        rethrow_annotated(where + " (simulate)");
      }
      for (Method m : methods) {
        for (bool lateral : {false, true}) {
          StrainMap tag;
          tag.method = m;
          tag.lateral = lateral;
          const std::string cell = where + " " + tag.method_tag();
          try {
            const auto est = estimate_strain_map(pair.pre, pair.post, m, lateral, cfg.estimator);
            const auto rep = quality_report(est, pair.pre.pitch_mm, cfg.lesion_rois, cfg.background_rois);
            auto& runs = cells[{strain, m, lateral}];
            runs.snr_mean.push_back(rep.mean_snr());
            runs.snr_roi.resize(rep.snr_by_roi.size());
            for (std::size_t k = 0; k < rep.snr_by_roi.size(); ++k) runs.snr_roi[k].push_back(rep.snr_by_roi[k].second);
            runs.cnr.resize(rep.cnr_by_lesion.size());
            for (std::size_t k = 0; k < rep.cnr_by_lesion.size(); ++k) runs.cnr[k].push_back(rep.cnr_by_lesion[k]);
            runs.per_line.resize(rep.per_line_mean_max_corr.size());
            double mean = 0.0;
            for (std::size_t c = 0; c < rep.per_line_mean_max_corr.size(); ++c) {
              runs.per_line[c].push_back(rep.per_line_mean_max_corr[c]);
              mean += rep.per_line_mean_max_corr[c];
            }
            runs.mean_corr.push_back(mean / static_cast<double>(std::max<std::size_t>(1, rep.per_line_mean_max_corr.size())));
          } catch (...) {
            rethrow_annotated(cell);
          }
        }
        if (si != 0) continue;
        try {
          const auto dump = correlation_profile_dump(pair.pre, pair.post, cfg.compare.probe_line,
                                                     cfg.compare.probe_window, m, cfg.estimator);
          std::ostringstream rows;
          write_corr_dump_csv(dump, rows);
          std::istringstream lines(rows.str());
          std::string row;
          std::getline(lines, row);  // header
          while (std::getline(lines, row)) profiles << format_number(strain) << ',' << to_string(m) << ',' << row << '\n';
        } catch (...) {
          rethrow_annotated(where + " " + to_string(m) + " probe");
        }
      }
    }
  }
  finish(profiles, out_dir / "corr_profiles.csv");

  auto table = open_output(out_dir / "snr_table.csv");
  table << "applied_strain,method,mode,n_seeds,snr_mean";
  for (std::size_t k = 0; k < cfg.background_rois.size(); ++k) table << ",snr_roi_" << k + 1;
  for (std::size_t k = 0; k < cfg.lesion_rois.size(); ++k) table << ",cnr_lesion_" << k + 1;
  table << ",mean_max_corr\n";
  auto per_line = open_output(out_dir / "per_line_corr.csv");
  per_line << "applied_strain,method,mode,line,mean_max_corr\n";
  for (const auto& [key, runs] : cells) {
    const char* mode = key.lateral ? "1.5D" : "1D";
    table << format_number(key.strain) << ',' << to_string(key.method) << ',' << mode << ',' << runs.snr_mean.size()
          << ',' << format_number(median(runs.snr_mean));
    for (const auto& v : runs.snr_roi) table << ',' << format_number(median(v));
    for (const auto& v : runs.cnr) table << ',' << format_number(median(v));
    table << ',' << format_number(median(runs.mean_corr)) << '\n';
    for (std::size_t c = 0; c < runs.per_line.size(); ++c)
      per_line << format_number(key.strain) << ',' << to_string(key.method) << ',' << mode << ',' << c << ','
               << format_number(median(runs.per_line[c])) << '\n';
  }
  finish(table, out_dir / "snr_table.csv");
  finish(per_line, out_dir / "per_line_corr.csv");
}

}  // namespace elasto
