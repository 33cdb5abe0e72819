#include "elasto/simulation.hpp"

#include <cmath>

#include "elasto/errors.hpp"

namespace elasto {

void SimulationConfig::validate() const {
  phantom.validate();
  transducer.validate();
  deformation.validate();
  if (std::abs(column_shift) >= static_cast<int>(transducer.n_lines))
    throw ValidationError("column shift must be smaller than the line count");
}

SimulatedPair simulate_pair(const SimulationConfig& cfg) {
  cfg.validate();
  const auto field = generate_scatterers(cfg.phantom);
  const auto moved = displace_scatterers(field, cfg.phantom, cfg.deformation);
  const double depth = cfg.phantom.height_mm;

  SimulatedPair out;
  out.pre = synthesize_rf(field, cfg.transducer, depth);
  RFFrame post = synthesize_rf(moved, cfg.transducer, depth);
  if (cfg.column_shift != 0) post = shift_columns(post, cfg.column_shift);
  out.pre = add_noise(out.pre, cfg.snr_db, cfg.noise_seed_pre);
  out.post = add_noise(post, cfg.snr_db, cfg.noise_seed_post);
  return out;
}

StrainMap ideal_strain_map(const SimulationConfig& cfg, const WindowPlan& plan) {
  StrainMap map;
  map.rows = plan.rows();
  map.cols = cfg.transducer.n_lines;
  map.values.assign(map.rows * map.cols, 0.0);
  for (std::size_t k = 0; k < map.rows; ++k) map.axial_positions_mm.push_back(plan.center_mm(k));
  for (std::size_t i = 0; i < map.cols; ++i) {
    const double x = (static_cast<double>(i) + 0.5) * cfg.transducer.pitch_mm;
    const ColumnProfile column(cfg.phantom, x, cfg.deformation.applied_strain);
    for (std::size_t k = 0; k < map.rows; ++k) map.values[k * map.cols + i] = column.strain_at(map.axial_positions_mm[k]);
  }
  return map;
}

}  // namespace elasto
