#pragma once

#include <cstdint>

#include "elasto/estimators.hpp"
#include "elasto/phantom.hpp"

namespace elasto {

/// Everything needed to produce one pre/post frame pair.
struct SimulationConfig {
  PhantomSpec phantom = reference_phantom();
  TransducerSpec transducer;
  DeformationSpec deformation;
  double snr_db = 40.0;
  std::uint64_t noise_seed_pre = 101;
  std::uint64_t noise_seed_post = 202;
  int column_shift = 0;  // extra rigid lateral shift of the post frame, in lines

  void validate() const;
};

struct SimulatedPair {
  RFFrame pre;
  RFFrame post;
};

/// Scatterers are generated once; the pre frame images them as generated,
/// the post frame after deformation (and the optional rigid column shift).
/// Each frame receives its own noise realisation.
SimulatedPair simulate_pair(const SimulationConfig& cfg);

/// Local axial strain of the deformation model sampled at each window centre
/// (pre-compression depth) and line centre of `plan`.
StrainMap ideal_strain_map(const SimulationConfig& cfg, const WindowPlan& plan);

}  // namespace elasto
