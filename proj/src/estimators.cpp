#include "elasto/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "elasto/errors.hpp"
#include "elasto/golden.hpp"
#include "elasto/xcorr.hpp"

namespace elasto {

std::string to_string(Method m) { return m == Method::gradient ? "gradient" : "adaptive"; }

Method parse_method(const std::string& name) {
  if (name == "gradient") return Method::gradient;
  if (name == "adaptive") return Method::adaptive;
  throw ValidationError("unknown method '" + name + "' (expected gradient or adaptive)");
}

std::string StrainMap::method_tag() const { return to_string(method) + (lateral ? "_1.5d" : "_1d"); }

void EstimatorConfig::validate() const {
  if (!(window_mm > 0)) throw ValidationError("estimator.window_mm must be positive");
  if (!(shift_mm > 0 && shift_mm <= window_mm)) throw ValidationError("estimator.shift_mm must lie in (0, window_mm]");
  if (lateral_radius_n < 0) throw ValidationError("estimator.lateral_n must be non-negative");
  if (n_sub < 1) throw ValidationError("estimator.n_sub must be at least 1");
  if (!(alpha_min > 0 && alpha_min < 1)) throw ValidationError("estimator.alpha_min must lie in (0, 1)");
  if (!(alpha_coarse_step > 0)) throw ValidationError("estimator.alpha_step must be positive");
  if (alpha_refine_iters < 0) throw ValidationError("estimator.alpha_refine_iters must be non-negative");
  if (!(max_lag_mm >= 0)) throw ValidationError("estimator.max_lag_mm must be non-negative");
  if (!(corr_threshold >= -1 && corr_threshold <= 1)) throw ValidationError("estimator.corr_threshold must lie in [-1, 1]");
  if (!(lateral_tie_tol >= 0)) throw ValidationError("estimator.lateral_tie_tol must be non-negative");
}

WindowPlan window_grid(std::size_t n_samples, double samples_per_mm, const EstimatorConfig& cfg) {
  cfg.validate();
  WindowPlan plan;
  plan.samples_per_mm = samples_per_mm;
  plan.length = static_cast<std::size_t>(std::lround(cfg.window_mm * samples_per_mm));
  plan.stride = static_cast<std::size_t>(std::lround(cfg.shift_mm * samples_per_mm));
  plan.max_lag = static_cast<int>(std::lround(cfg.max_lag_mm * samples_per_mm));
  if (plan.length < 2) throw ConfigurationError("window shorter than 2 samples");
  if (plan.stride < 1) throw ConfigurationError("window shift rounds to 0 samples");
  if (static_cast<std::size_t>(plan.max_lag) >= plan.length) throw ConfigurationError("max lag must be shorter than the window");
  if (plan.length > n_samples)
    throw ConfigurationError("line of " + std::to_string(n_samples) + " samples is shorter than one window of " +
                             std::to_string(plan.length));
  for (std::size_t s = 0; s + plan.length <= n_samples; s += plan.stride) plan.starts.push_back(s);
  return plan;
}

WindowPlan window_grid(const RFFrame& frame, const EstimatorConfig& cfg) {
  return window_grid(frame.n_samples, frame.samples_per_mm(), cfg);
}

SampleMatrix::SampleMatrix(const RFFrame& frame)
    : n_lines_(frame.n_lines), n_samples_(frame.n_samples), data_(frame.samples.begin(), frame.samples.end()) {}

PostSegment predicted_post_segment(std::span<const double> post_line, std::size_t window_start, std::size_t length,
                                   const AxialPrediction& prediction, int margin) {
  const long n = static_cast<long>(post_line.size());
  const long base = std::lround(prediction.post_start);
  const double alpha = prediction.alpha;
  const long m_end = static_cast<long>(length) + margin;

  PostSegment seg;
  seg.samples.reserve(static_cast<std::size_t>(m_end + margin));
  bool started = false;
  for (long m = -margin; m < m_end; ++m) {
    double v;
    if (alpha == 1.0) {
      const long pos = base + m;
      if (pos < 0 || pos >= n) {
        if (started) break;
        continue;
      }
      v = post_line[static_cast<std::size_t>(pos)];
    } else {
      const double pos = static_cast<double>(base) + alpha * static_cast<double>(m);
      const double fl = std::floor(pos);
      const long idx = static_cast<long>(fl);
      const double w = pos - fl;
      if (idx < 0 || idx >= n || (w > 0.0 && idx + 1 >= n)) {
        if (started) break;
        continue;
      }
      const double lo = post_line[static_cast<std::size_t>(idx)];
      v = w > 0.0 ? lo + w * (post_line[static_cast<std::size_t>(idx + 1)] - lo) : lo;
    }
    if (!started) {
      started = true;
      seg.start_index = static_cast<long>(window_start) + m;
    }
    seg.samples.push_back(v);
  }
  return seg;
}

namespace {

struct WindowDelay {
  double delay = 0.0;
  double peak = 0.0;
};

// Throws DegenerateInputError when the window cannot be correlated.
WindowDelay track_window(std::span<const double> pre_line, std::span<const double> post_line, std::size_t start,
                         const WindowPlan& plan, double predicted_post_start) {
  const xcorr::Segment a{pre_line.subspan(start, plan.length), static_cast<long>(start)};
  const auto seg = predicted_post_segment(post_line, start, plan.length, {predicted_post_start, 1.0}, plan.max_lag);
  if (seg.samples.size() < plan.length / 2 + 1) throw DegenerateInputError("post segment outside the line");
  const auto r = xcorr::ncc(a, {seg.samples, seg.start_index}, plan.max_lag);
  const double center = static_cast<double>(std::lround(predicted_post_start) - static_cast<long>(start));
  return {center + r.peak_lag, r.peak_value};
}

}  // namespace

DisplacementLine estimate_displacement_line(std::span<const double> pre_line, std::span<const double> post_line,
                                            const WindowPlan& plan, const EstimatorConfig& cfg) {
  if (pre_line.size() != post_line.size()) throw ValidationError("pre and post lines differ in length");
  DisplacementLine out;
  const std::size_t rows = plan.rows();
  out.displacement.assign(rows, 0.0);
  out.peak.assign(rows, 0.0);
  out.flagged.assign(rows, 0);

  double anchor_delay = 0.0;
  double last = 0.0;
  for (std::size_t k = 0; k < rows; ++k) {
    const std::size_t s = plan.starts[k];
    try {
      const auto w = track_window(pre_line, post_line, s, plan, static_cast<double>(s) + anchor_delay);
      out.displacement[k] = w.delay;
      out.peak[k] = w.peak;
      if (w.peak >= cfg.corr_threshold) anchor_delay = w.delay;
    } catch (const DegenerateInputError&) {
      out.displacement[k] = last;
      out.flagged[k] = 1;
    }
    last = out.displacement[k];
  }
  return out;
}

std::vector<double> gradient_strain_line(std::span<const double> displacements, double stride_samples) {
  if (displacements.size() < 2) throw EstimationError("gradient strain needs at least two windows");
  if (!(stride_samples > 0)) throw ValidationError("stride must be positive");
  std::vector<double> strain(displacements.size());
  for (std::size_t k = 0; k + 1 < displacements.size(); ++k)
    strain[k] = (displacements[k + 1] - displacements[k]) / stride_samples;
  strain.back() = strain[strain.size() - 2];
  return strain;
}

namespace {

class StretchObjective {
public:
  StretchObjective(std::span<const double> pre, std::span<const double> post, long start, int max_lag)
      : post_(post), start_(start), max_lag_(max_lag), a_(pre.begin(), pre.end()), idx_(pre.size()), w_(pre.size()) {
    double mean = 0.0;
    for (double v : a_) mean += v;
    mean /= static_cast<double>(a_.size());
    for (double& v : a_) {
      v -= mean;
      saa_ += v * v;
    }
  }

  bool degenerate() const { return !(saa_ > 0.0); }

  // Best correlation over post starts within start +/- max_lag. Integer
  // starts are scanned, then the start is refined to sub-sample precision
  // (parabola through the integer scores, re-evaluated exactly). Without the
  // refinement a misaligned start is absorbed by a biased alpha.
  double operator()(double alpha, double* best_start = nullptr) {
    const std::size_t len = a_.size();
    for (std::size_t n = 0; n < len; ++n) {
      const double pos = alpha * static_cast<double>(n);
      const double fl = std::floor(pos);
      idx_[n] = static_cast<long>(fl);
      w_[n] = pos - fl;
    }
    const long n_post = static_cast<long>(post_.size());
    const long p_lo = std::max(0L, start_ - max_lag_);
    const long p_hi = std::min(start_ + max_lag_, n_post - 2 - idx_[len - 1]);
    by_p_.clear();

    double best = -std::numeric_limits<double>::infinity();
    long p_best = p_lo;
    for (long p = p_lo; p <= p_hi; ++p) {
      const double cc = at_start(static_cast<double>(p), alpha, true);
      by_p_.push_back(std::isnan(cc) ? -1.0 : cc);
      if (!std::isnan(cc) && cc > best) {
        best = cc;
        p_best = p;
      }
    }
    double start = static_cast<double>(p_best);
    if (std::isfinite(best) && best < xcorr::kExactMatch) {
      const auto k = static_cast<std::size_t>(p_best - p_lo);
      const double off = xcorr::refine_peak(by_p_, k) - static_cast<double>(k);
      if (off != 0.0) {
        const double cc = at_start(start + off, alpha, false);
        if (!std::isnan(cc) && cc > best) {
          best = cc;
          start += off;
        }
      }
    }
    if (best_start) *best_start = start;
    return best;
  }

private:
  std::span<const double> post_;
  long start_;
  long max_lag_;
  std::vector<double> a_;
  double saa_ = 0.0;
  std::vector<long> idx_;
  std::vector<double> w_;
  std::vector<double> by_p_;

  // Correlation of the pre segment with post read at p + alpha n; NaN when
  // the read is constant or leaves the line. `integer_p` reuses the
  // interpolation table built for alpha.
  double at_start(double p, double alpha, bool integer_p) const {
    const std::size_t len = a_.size();
    const long n_post = static_cast<long>(post_.size());
    double sr = 0.0, srr = 0.0, sar = 0.0;
    if (integer_p) {
      const double* base = post_.data() + static_cast<long>(p);
      for (std::size_t n = 0; n < len; ++n) {
        const double lo = base[idx_[n]];
        const double r = lo + w_[n] * (base[idx_[n] + 1] - lo);
        sr += r;
        srr += r * r;
        sar += a_[n] * r;
      }
    } else {
      for (std::size_t n = 0; n < len; ++n) {
        const double pos = p + alpha * static_cast<double>(n);
        const double fl = std::floor(pos);
        const long i = static_cast<long>(fl);
        if (i < 0 || i + 1 >= n_post) return std::numeric_limits<double>::quiet_NaN();
        const double lo = post_[static_cast<std::size_t>(i)];
        const double r = lo + (pos - fl) * (post_[static_cast<std::size_t>(i + 1)] - lo);
        sr += r;
        srr += r * r;
        sar += a_[n] * r;
      }
    }
    const double var_r = srr - sr * sr / static_cast<double>(len);
    if (!(var_r > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return std::clamp(sar / std::sqrt(saa_ * var_r), -1.0, 1.0);
  }
};

}  // namespace

StretchResult adaptive_stretch_segment(std::span<const double> pre_segment, std::span<const double> post_line,
                                       long start, const EstimatorConfig& cfg, int max_lag) {
  if (pre_segment.size() < 2) throw ValidationError("stretch: pre segment needs at least 2 samples");
  StretchObjective objective(pre_segment, post_line, start, max_lag);
  if (objective.degenerate()) throw DegenerateInputError("stretch: zero-variance pre segment");

  const auto best = grid_then_golden([&](double alpha) { return objective(alpha); }, cfg.alpha_min, 1.0,
                                     cfg.alpha_coarse_step, cfg.alpha_refine_iters);
  if (!std::isfinite(best.value)) throw DegenerateInputError("stretch: no stretch candidate could be evaluated");

  double post_start = 0.0;
  objective(best.x, &post_start);

  StretchResult r;
  r.alpha = best.x;
  r.strain = 1.0 - best.x;
  r.peak_cc = best.value;
  r.post_position = post_start;
  r.lag_samples = r.post_position - static_cast<double>(start);
  return r;
}

std::vector<int> lateral_candidates(std::size_t line_i, std::size_t n_lines, int radius, std::optional<int> prev_shift_j,
                                    bool full) {
  std::vector<int> out;
  auto admissible = [&](int j) {
    const long line = static_cast<long>(line_i) + j;
    return std::abs(j) <= radius && line >= 0 && line < static_cast<long>(n_lines);
  };
  if (full || !prev_shift_j) {
    for (int j = -radius; j <= radius; ++j)
      if (admissible(j)) out.push_back(j);
    return out;
  }
  const int p = *prev_shift_j;
  for (int j : {p - 1, p, p + 1, 0})
    if (admissible(j) && std::find(out.begin(), out.end(), j) == out.end()) out.push_back(j);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

constexpr double kLateralAlphaStep = 0.04;
constexpr std::size_t kAlphaHistory = 5;

struct ScoredCandidate {
  int j;
  double score;
  double alpha;
};

// Among candidates within `tol` of the best score: smaller |j|, then closer
// to prev, then higher score.
const ScoredCandidate& pick_candidate(const std::vector<ScoredCandidate>& scored, int prev, double tol) {
  double top = scored.front().score;
  for (const auto& c : scored) top = std::max(top, c.score);
  const ScoredCandidate* best = nullptr;
  for (const auto& c : scored) {
    if (c.score < top - tol) continue;
    if (!best) {
      best = &c;
      continue;
    }
    const int a = std::abs(c.j), b = std::abs(best->j);
    const int da = std::abs(c.j - prev), db = std::abs(best->j - prev);
    if (a != b ? a < b : da != db ? da < db : c.score > best->score) best = &c;
  }
  return *best;
}

}  // namespace

std::vector<double> lateral_alpha_set(const AxialPrediction& prediction, const EstimatorConfig& cfg) {
  std::vector<double> alphas{prediction.alpha};
  for (int m = 0;; ++m) {
    const double a = 1.0 - kLateralAlphaStep * m;
    if (a < cfg.alpha_min - 1e-12) break;
    if (a != prediction.alpha) alphas.push_back(a);
  }
  return alphas;
}

std::pair<double, double> lateral_score(const SampleMatrix& pre, const SampleMatrix& post, std::size_t line_i, int j,
                                        std::size_t window_k, const AxialPrediction& prediction,
                                        std::span<const double> alphas, const WindowPlan& plan,
                                        const EstimatorConfig& cfg) {
  const std::size_t s = plan.starts[window_k];
  const xcorr::Segment a{pre.line(line_i).subspan(s, plan.length), static_cast<long>(s)};
  const auto post_line = post.line(static_cast<std::size_t>(static_cast<long>(line_i) + j));
  double best = -std::numeric_limits<double>::infinity();
  double best_alpha = prediction.alpha;
  for (double alpha : alphas) {
    const auto seg = predicted_post_segment(post_line, s, plan.length, {prediction.post_start, alpha}, plan.max_lag);
    if (seg.samples.size() < 2) continue;
    try {
      const double v = xcorr::subwindow_median_max(a, {seg.samples, seg.start_index}, cfg.n_sub, plan.max_lag);
      if (v > best) {
        best = v;
        best_alpha = alpha;
      }
    } catch (const DegenerateInputError&) {
    }
  }
  if (!std::isfinite(best)) throw DegenerateInputError("lateral candidate cannot be scored");
  return {best, best_alpha};
}

LateralMatch lateral_search_segment(const SampleMatrix& pre, const SampleMatrix& post, std::size_t line_i,
                                    std::size_t window_k, std::optional<int> prev_shift_j,
                                    const AxialPrediction& prediction, const WindowPlan& plan,
                                    const EstimatorConfig& cfg) {
  if (line_i >= pre.n_lines()) throw ValidationError("lateral search: line out of range");
  if (window_k >= plan.rows()) throw ValidationError("lateral search: window out of range");
  if (prev_shift_j && std::abs(*prev_shift_j) > cfg.lateral_radius_n)
    throw ValidationError("lateral search: previous shift exceeds the search radius");

  // Without a previous window every offset is scored; near-ties then fall
  // to j = 0.
  const int prev = prev_shift_j.value_or(0);
  const auto alphas = lateral_alpha_set(prediction, cfg);
  LateralMatch match;
  std::vector<ScoredCandidate> scored;
  double top = 0.0;
  auto evaluate = [&](const std::vector<int>& candidates) {
    scored.clear();
    match.scores.clear();
    for (int j : candidates) {
      try {
        const auto [score, alpha] = lateral_score(pre, post, line_i, j, window_k, prediction, alphas, plan, cfg);
        scored.push_back({j, score, alpha});
        match.scores.emplace_back(j, score);
      } catch (const DegenerateInputError&) {
      }
    }
    if (scored.empty()) return false;
    top = std::max_element(scored.begin(), scored.end(), [](const auto& x, const auto& y) { return x.score < y.score; })
              ->score;
    const auto& c = pick_candidate(scored, prev, cfg.lateral_tie_tol);
    match.j = c.j;
    match.score = c.score;
    match.alpha = c.alpha;
    return true;
  };

  const std::size_t n_lines = post.n_lines();
  bool any = evaluate(lateral_candidates(line_i, n_lines, cfg.lateral_radius_n, prev_shift_j, false));
  match.full_scan = !prev_shift_j;
  if (!match.full_scan && (!any || top < cfg.corr_threshold)) {
    match.full_scan = true;
    any = evaluate(lateral_candidates(line_i, n_lines, cfg.lateral_radius_n, prev, true));
  }
  if (!any) {
    match.j = prev;
    match.score = 0.0;
    match.alpha = prediction.alpha;
    match.degenerate = true;
  }
  return match;
}

LineEstimate estimate_line(const SampleMatrix& pre, const SampleMatrix& post, std::size_t line_i, Method method,
                           bool use_1p5d, const WindowPlan& plan, const EstimatorConfig& cfg,
                           std::vector<WindowTrace>* trace) {
  const std::size_t rows = plan.rows();
  LineEstimate out;
  out.strain.assign(rows, 0.0);
  out.shifts.assign(rows, 0);
  out.peak.assign(rows, 0.0);
  out.flagged.assign(rows, 0);
  std::vector<double> delay(rows, 0.0);

  const auto pre_line = pre.line(line_i);
  std::optional<int> prev_j;
  bool anchored = false;
  double anchor_start = 0.0, anchor_post = 0.0, alpha_pred = 1.0;
  std::deque<double> recent_alpha;

  for (std::size_t k = 0; k < rows; ++k) {
    const std::size_t s = plan.starts[k];
    AxialPrediction pred;
    pred.alpha = method == Method::adaptive ? alpha_pred : 1.0;
    pred.post_start = anchored ? anchor_post + pred.alpha * (static_cast<double>(s) - anchor_start) : static_cast<double>(s);

    LateralMatch match;
    int j = 0;
    if (use_1p5d) {
      match = lateral_search_segment(pre, post, line_i, k, prev_j, pred, plan, cfg);
      j = match.j;
      prev_j = j;
    }
    const auto post_line = post.line(static_cast<std::size_t>(static_cast<long>(line_i) + j));

    if (method == Method::gradient) {
      try {
        const auto w = track_window(pre_line, post_line, s, plan, pred.post_start);
        delay[k] = w.delay;
        out.peak[k] = w.peak;
        if (w.peak >= cfg.corr_threshold) {
          anchored = true;
          anchor_start = static_cast<double>(s);
          anchor_post = static_cast<double>(s) + w.delay;
        }
      } catch (const DegenerateInputError&) {
        delay[k] = k > 0 ? delay[k - 1] : 0.0;
        out.flagged[k] = 1;
      }
    } else {
      try {
        const auto r = adaptive_stretch_segment(pre_line.subspan(s, plan.length), post_line, std::lround(pred.post_start),
                                                cfg, plan.max_lag);
        out.strain[k] = r.strain;
        out.peak[k] = r.peak_cc;
        if (r.peak_cc >= cfg.corr_threshold) {
          anchored = true;
          anchor_start = static_cast<double>(s);
          anchor_post = r.post_position;
          recent_alpha.push_back(r.alpha);
          if (recent_alpha.size() > kAlphaHistory) recent_alpha.pop_front();
          alpha_pred = xcorr::lower_median({recent_alpha.begin(), recent_alpha.end()});
        }
      } catch (const DegenerateInputError&) {
        out.strain[k] = k > 0 ? out.strain[k - 1] : 0.0;
        out.flagged[k] = 1;
      }
    }
    out.shifts[k] = j;
    if (trace) trace->push_back({pred, match});
  }

  if (method == Method::gradient) {
    // Delay is positive when the post echo arrives later; compression moves
    // echoes towards the transducer, so the axial displacement is -delay.
    for (auto& d : delay) d = -d;
    out.strain = gradient_strain_line(delay, static_cast<double>(plan.stride));
  }
  return out;
}

StrainEstimate estimate_strain_map(const RFFrame& pre, const RFFrame& post, Method method, bool use_1p5d,
                                   const EstimatorConfig& cfg) {
  cfg.validate();
  pre.validate();
  post.validate();
  if (!pre.same_geometry(post)) throw ValidationError("pre and post frames differ in shape or acquisition metadata");

  StrainEstimate est;
  est.plan = window_grid(pre, cfg);
  if (method == Method::gradient && est.plan.rows() < 2)
    throw ConfigurationError("gradient strain needs at least two windows per line");

  const SampleMatrix pre_m(pre), post_m(post);
  const std::size_t rows = est.plan.rows(), cols = pre.n_lines;

  est.strain.rows = est.shifts.rows = est.quality.rows = rows;
  est.strain.cols = est.shifts.cols = est.quality.cols = cols;
  est.strain.values.assign(rows * cols, 0.0);
  est.strain.method = method;
  est.strain.lateral = use_1p5d;
  for (std::size_t k = 0; k < rows; ++k) est.strain.axial_positions_mm.push_back(est.plan.center_mm(k));
  est.shifts.shifts.assign(rows * cols, 0);
  est.quality.peak_correlation.assign(rows * cols, 0.0);
  est.quality.flagged.assign(rows * cols, 0);

  for (std::size_t i = 0; i < cols; ++i) {
    const auto line = estimate_line(pre_m, post_m, i, method, use_1p5d, est.plan, cfg);
    for (std::size_t k = 0; k < rows; ++k) {
      est.strain.values[k * cols + i] = line.strain[k];
      est.shifts.shifts[k * cols + i] = line.shifts[k];
      est.quality.peak_correlation[k * cols + i] = line.peak[k];
      est.quality.flagged[k * cols + i] = line.flagged[k];
    }
  }
  return est;
}

}  // namespace elasto
