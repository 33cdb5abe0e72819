#pragma once

#include <cmath>
#include <functional>

namespace elasto {

struct ScalarMaximum {
  double x = 0.0;
  double value = -INFINITY;
};

/// Golden-section search for the maximum of f on [lo, hi]. Runs `iterations`
/// bracket reductions and returns the best point evaluated, never worse than
/// `seed` (a known point and value inside the bracket, typically the grid
/// winner that produced it).
ScalarMaximum golden_section_maximize(const std::function<double(double)>& f, double lo, double hi, int iterations,
                                      ScalarMaximum seed = {});

/// Coarse grid scan over [lo, hi] with the given step (hi always included),
/// then golden-section refinement on [best - step, best + step] clipped to
/// [lo, hi]. Grid ties keep the point closest to `hi`.
ScalarMaximum grid_then_golden(const std::function<double(double)>& f, double lo, double hi, double step,
                               int refine_iterations);

}  // namespace elasto
