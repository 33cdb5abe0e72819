#include "elasto/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "elasto/errors.hpp"

namespace elasto {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Where a value came from, for error messages.
struct Origin {
  std::string key;
  std::size_t line;

  [[noreturn]] void fail(const std::string& why) const {
    throw ValidationError("config key '" + key + "' (line " + std::to_string(line) + "): " + why);
  }
};

double to_double(std::string_view v, const Origin& o) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || std::isnan(out))
    o.fail("expected a number, got '" + std::string(v) + "'");
  return out;
}

double to_finite(std::string_view v, const Origin& o) {
  const double d = to_double(v, o);
  if (!std::isfinite(d)) o.fail("must be finite");
  return d;
}

double to_positive(std::string_view v, const Origin& o) {
  const double d = to_finite(v, o);
  if (!(d > 0)) o.fail("must be positive");
  return d;
}

long long to_integer(std::string_view v, const Origin& o) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) o.fail("expected an integer, got '" + std::string(v) + "'");
  return out;
}

std::uint64_t to_unsigned(std::string_view v, const Origin& o) {
  const long long i = to_integer(v, o);
  if (i < 0) o.fail("must be non-negative");
  return static_cast<std::uint64_t>(i);
}

bool to_bool(std::string_view v, const Origin& o) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  o.fail("expected true or false, got '" + std::string(v) + "'");
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = v.find(',', start);
    out.push_back(trim(v.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<double> to_numbers(std::string_view v, const Origin& o, std::size_t expected = 0) {
  std::vector<double> out;
  for (auto item : split_list(v)) out.push_back(to_finite(item, o));
  if (expected && out.size() != expected)
    o.fail("expected " + std::to_string(expected) + " comma-separated numbers, got " + std::to_string(out.size()));
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view, const Origin&)>;

const std::map<std::string, Setter, std::less<>>& scalar_keys() {
  static const std::map<std::string, Setter, std::less<>> keys = {
      {"phantom.width_mm", [](RunConfig& c, auto v, const auto& o) { c.simulation.phantom.width_mm = to_positive(v, o); }},
      {"phantom.height_mm", [](RunConfig& c, auto v, const auto& o) { c.simulation.phantom.height_mm = to_positive(v, o); }},
      {"phantom.n_scatterers",
       [](RunConfig& c, auto v, const auto& o) { c.simulation.phantom.n_scatterers = to_unsigned(v, o); }},
      {"phantom.background_kpa",
       [](RunConfig& c, auto v, const auto& o) { c.simulation.phantom.background_modulus_kpa = to_positive(v, o); }},
      {"phantom.seed", [](RunConfig& c, auto v, const auto& o) { c.simulation.phantom.seed = to_unsigned(v, o); }},
      {"transducer.f0_hz", [](RunConfig& c, auto v, const auto& o) { c.simulation.transducer.f0_hz = to_positive(v, o); }},
      {"transducer.bandwidth",
       [](RunConfig& c, auto v, const auto& o) { c.simulation.transducer.fractional_bandwidth = to_positive(v, o); }},
      {"transducer.beam_width_mm",
       [](RunConfig& c, auto v, const auto& o) { c.simulation.transducer.beam_width_mm = to_positive(v, o); }},
      {"transducer.n_lines",
       [](RunConfig& c, auto v, const auto& o) {
         const auto n = to_unsigned(v, o);
         if (n == 0) o.fail("must be positive");
         c.simulation.transducer.n_lines = n;
       }},
      {"transducer.pitch_mm", [](RunConfig& c, auto v, const auto& o) { c.simulation.transducer.pitch_mm = to_positive(v, o); }},
      {"transducer.fs_hz", [](RunConfig& c, auto v, const auto& o) { c.simulation.transducer.fs_hz = to_positive(v, o); }},
      {"transducer.c_mps", [](RunConfig& c, auto v, const auto& o) { c.simulation.transducer.c_mps = to_positive(v, o); }},
      {"deformation.applied_strain",
       [](RunConfig& c, auto v, const auto& o) {
         const double s = to_finite(v, o);
         if (s < 0 || s >= 1) o.fail("must lie in [0, 1)");
         c.simulation.deformation.applied_strain = s;
       }},
      {"deformation.poisson_ratio",
       [](RunConfig& c, auto v, const auto& o) {
         const double nu = to_finite(v, o);
         if (nu < 0 || nu > 0.5) o.fail("must lie in [0, 0.5]");
         c.simulation.deformation.poisson_ratio = nu;
       }},
      {"deformation.centerline_x_mm",
       [](RunConfig& c, auto v, const auto& o) { c.simulation.deformation.centerline_x_mm = to_finite(v, o); }},
      {"deformation.column_shift",
       [](RunConfig& c, auto v, const auto& o) { c.simulation.column_shift = static_cast<int>(to_integer(v, o)); }},
      {"noise.snr_db",
       [](RunConfig& c, auto v, const auto& o) {
         const double snr = to_double(v, o);
         if (snr == -std::numeric_limits<double>::infinity()) o.fail("must be finite or inf");
         c.simulation.snr_db = snr;
       }},
      {"noise.seed_pre", [](RunConfig& c, auto v, const auto& o) { c.simulation.noise_seed_pre = to_unsigned(v, o); }},
      {"noise.seed_post", [](RunConfig& c, auto v, const auto& o) { c.simulation.noise_seed_post = to_unsigned(v, o); }},
      {"estimator.window_mm", [](RunConfig& c, auto v, const auto& o) { c.estimator.window_mm = to_positive(v, o); }},
      {"estimator.shift_mm", [](RunConfig& c, auto v, const auto& o) { c.estimator.shift_mm = to_positive(v, o); }},
      {"estimator.lateral_n",
       [](RunConfig& c, auto v, const auto& o) { c.estimator.lateral_radius_n = static_cast<int>(to_unsigned(v, o)); }},
      {"estimator.n_sub",
       [](RunConfig& c, auto v, const auto& o) {
         const auto n = to_unsigned(v, o);
         if (n == 0) o.fail("must be at least 1");
         c.estimator.n_sub = static_cast<int>(n);
       }},
      {"estimator.alpha_min",
       [](RunConfig& c, auto v, const auto& o) {
         const double a = to_finite(v, o);
         if (!(a > 0 && a < 1)) o.fail("must lie in (0, 1)");
         c.estimator.alpha_min = a;
       }},
      {"estimator.alpha_step", [](RunConfig& c, auto v, const auto& o) { c.estimator.alpha_coarse_step = to_positive(v, o); }},
      {"estimator.alpha_refine_iters",
       [](RunConfig& c, auto v, const auto& o) { c.estimator.alpha_refine_iters = static_cast<int>(to_unsigned(v, o)); }},
      {"estimator.max_lag_mm",
       [](RunConfig& c, auto v, const auto& o) {
         const double m = to_finite(v, o);
         if (m < 0) o.fail("must be non-negative");
         c.estimator.max_lag_mm = m;
       }},
      {"estimator.corr_threshold",
       [](RunConfig& c, auto v, const auto& o) {
         const double t = to_finite(v, o);
         if (t < -1 || t > 1) o.fail("must lie in [-1, 1]");
         c.estimator.corr_threshold = t;
       }},
      {"estimator.lateral_tie_tol",
       [](RunConfig& c, auto v, const auto& o) {
         const double t = to_finite(v, o);
         if (t < 0) o.fail("must be non-negative");
         c.estimator.lateral_tie_tol = t;
       }},
      {"output.dir", [](RunConfig& c, auto v, const auto&) { c.output_dir = std::string(v); }},
      {"compare.strains",
       [](RunConfig& c, auto v, const auto& o) {
         c.compare.strains = to_numbers(v, o);
         for (double s : c.compare.strains)
           if (s < 0 || s >= 1) o.fail("every strain must lie in [0, 1)");
       }},
      {"compare.seeds",
       [](RunConfig& c, auto v, const auto& o) {
         c.compare.seeds.clear();
         for (auto item : split_list(v)) c.compare.seeds.push_back(to_unsigned(item, o));
       }},
      {"compare.probe_line", [](RunConfig& c, auto v, const auto& o) { c.compare.probe_line = to_unsigned(v, o); }},
      {"compare.probe_window", [](RunConfig& c, auto v, const auto& o) { c.compare.probe_window = to_unsigned(v, o); }},
  };
  return keys;
}

// "prefix.N" -> N
std::optional<long long> indexed(std::string_view key, std::string_view prefix, const Origin& o) {
  if (key.substr(0, prefix.size()) != prefix) return std::nullopt;
  const auto rest = key.substr(prefix.size());
  const long long n = to_integer(rest, o);
  if (n < 0) o.fail("index must be non-negative");
  return n;
}

}  // namespace

void RunConfig::validate() const {
  try {
    simulation.validate();
    estimator.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  if (lesion_rois.size() > background_rois.size())
    throw ValidationError("config: every roi.lesion.N needs a roi.background.N partner");
  for (const auto& r : lesion_rois)
    if (!(r.width_mm > 0 && r.height_mm > 0)) throw ValidationError("config: roi.lesion sizes must be positive");
  for (const auto& r : background_rois)
    if (!(r.width_mm > 0 && r.height_mm > 0)) throw ValidationError("config: roi.background sizes must be positive");
  if (compare.strains.empty()) throw ValidationError("config: compare.strains must not be empty");
  if (compare.seeds.empty()) throw ValidationError("config: compare.seeds must not be empty");
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::map<long long, InclusionSpec> inclusions;
  std::map<long long, RoiMm> lesions, backgrounds;
  std::optional<bool> homogeneous;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ValidationError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    const Origin origin{key, line_no};
    if (key.empty()) throw ValidationError("config line " + std::to_string(line_no) + ": empty key");
    if (!seen.insert(key).second) origin.fail("given more than once");
    if (value.empty()) origin.fail("missing value");

    if (const auto it = scalar_keys().find(key); it != scalar_keys().end()) {
      it->second(cfg, value, origin);
    } else if (key == "phantom.homogeneous") {
      homogeneous = to_bool(value, origin);
    } else if (auto n = indexed(key, "phantom.inclusion.", origin)) {
      const auto v = to_numbers(value, origin, 4);
      if (!(v[2] > 0)) origin.fail("radius must be positive");
      inclusions[*n] = {v[0], v[1], v[2], v[3]};
    } else if (auto n = indexed(key, "roi.lesion.", origin)) {
      const auto v = to_numbers(value, origin, 4);
      lesions[*n] = {v[0], v[1], v[2], v[3]};
    } else if (auto n = indexed(key, "roi.background.", origin)) {
      const auto v = to_numbers(value, origin, 4);
      backgrounds[*n] = {v[0], v[1], v[2], v[3]};
    } else {
      origin.fail("unknown key");
    }
  }

  if (homogeneous.value_or(false)) {
    if (!inclusions.empty()) throw ValidationError("config: phantom.homogeneous = true conflicts with phantom.inclusion.N");
    cfg.simulation.phantom.inclusions.clear();
  } else if (!inclusions.empty()) {
    cfg.simulation.phantom.inclusions.clear();
    for (const auto& [n, inc] : inclusions) cfg.simulation.phantom.inclusions.push_back(inc);
  }
  if (!lesions.empty()) {
    cfg.lesion_rois.clear();
    for (const auto& [n, r] : lesions) cfg.lesion_rois.push_back(r);
  }
  if (!backgrounds.empty()) {
    cfg.background_rois.clear();
    for (const auto& [n, r] : backgrounds) cfg.background_rois.push_back(r);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path.string() + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

SimulationConfig with_seed(const SimulationConfig& base, std::uint64_t seed) {
  SimulationConfig cfg = base;
  cfg.phantom.seed = seed;
  cfg.noise_seed_pre = base.noise_seed_pre + seed;
  cfg.noise_seed_post = base.noise_seed_post + seed;
  return cfg;
}

}  // namespace elasto
