#include "elasto/golden.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "elasto/errors.hpp"

namespace elasto {

ScalarMaximum golden_section_maximize(const std::function<double(double)>& f, double lo, double hi, int iterations,
                                      ScalarMaximum seed) {
  if (!(hi >= lo)) throw ValidationError("golden section: empty bracket");
  ScalarMaximum best = seed;
  auto probe = [&](double x) {
    const double v = f(x);
    if (v > best.value) best = {x, v};
    return v;
  };

  const double inv_phi = 1.0 / std::numbers::phi;
  double a = lo, b = hi;
  double c = b - (b - a) * inv_phi;
  double d = a + (b - a) * inv_phi;
  double fc = probe(c);
  double fd = probe(d);
  for (int it = 0; it < iterations; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - (b - a) * inv_phi;
      fc = probe(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + (b - a) * inv_phi;
      fd = probe(d);
    }
  }
  return best;
}

ScalarMaximum grid_then_golden(const std::function<double(double)>& f, double lo, double hi, double step,
                               int refine_iterations) {
  if (!(step > 0)) throw ValidationError("grid step must be positive");
  if (!(hi >= lo)) throw ValidationError("grid: empty range");

  ScalarMaximum best;
  const double eps = 1e-12 * std::max(1.0, std::abs(hi));
  for (int k = 0;; ++k) {
    double x = hi - k * step;
    if (x < lo - eps) break;
    x = std::max(x, lo);
    const double v = f(x);
    if (v > best.value) best = {x, v};
    if (x == lo) break;
  }
  if (refine_iterations <= 0 || !std::isfinite(best.value)) return best;
  const double a = std::max(lo, best.x - step);
  const double b = std::min(hi, best.x + step);
  return golden_section_maximize(f, a, b, refine_iterations, best);
}

}  // namespace elasto
