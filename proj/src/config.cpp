#include "leafheat/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace leafheat {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

double get_real(const json& obj, const std::string& key, double def, double lo, double hi,
                const std::string& where) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
  const double x = v.get<double>();
  if (!(x >= lo && x <= hi)) {
    throw ConfigError(where + "." + key + ": value out of range");
  }
  return x;
}

long get_int(const json& obj, const std::string& key, long def, long lo, long hi,
             const std::string& where) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
  const long x = v.get<long>();
  if (x < lo || x > hi) throw ConfigError(where + "." + key + ": value out of range");
  return x;
}

std::uint64_t get_seed(const json& obj, const std::string& key, std::uint64_t def,
                       const std::string& where) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConfigError(where + "." + key + ": expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::vector<double> get_times(const json& obj, const std::string& key,
                              const std::vector<double>& def, const std::string& where) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_array() || v.empty()) throw ConfigError(where + "." + key + ": expected a list");
  std::vector<double> out;
  for (const json& x : v) {
    if (!x.is_number() || !(x.get<double>() > 0.0) || !std::isfinite(x.get<double>())) {
      throw ConfigError(where + "." + key + ": times must be positive numbers");
    }
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<int> get_indices(const json& obj, const std::string& key, const std::vector<int>& def,
                             int count, const std::string& where) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_array() || v.empty()) throw ConfigError(where + "." + key + ": expected a list");
  std::vector<int> out;
  for (const json& x : v) {
    if (!x.is_number_integer() || x.get<int>() < 0 || x.get<int>() >= count) {
      throw ConfigError(where + "." + key + ": leaf index out of range");
    }
    out.push_back(x.get<int>());
  }
  return out;
}

std::pair<double, double> get_interval(const json& obj, const std::string& key,
                                       std::pair<double, double> def, const std::string& where) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number() ||
      !(v[0].get<double>() <= v[1].get<double>())) {
    throw ConfigError(where + "." + key + ": expected [lo, hi] with lo <= hi");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

std::vector<std::string> default_functions(const json& system) {
  if (system.value("type", std::string()) == "solenoid") {
    return {"cos_theta", "x_plus_half_y2", "sin2theta_plus_xy"};
  }
  return {"cos2pix", "sin2pi_x_plus_2y", "cos2pix_cos2piy"};
}

json parse_params(const std::string& type, const json& in, const ExperimentConfig& cfg) {
  const std::string where = "experiment";
  const int J = cfg.rectangle.J;
  const double eps = cfg.rectangle.eps;
  json p = json::object();
  auto keys = [&](std::set<std::string> allowed) {
    allowed.insert("type");
    check_keys(in, allowed, where);
  };
  if (type == "srb-estimate") {
    keys({});
  } else if (type == "spectrum") {
    keys({"modes"});
    p["modes"] = get_int(in, "modes", 0, 0, 1 << 20, where);
  } else if (type == "heat") {
    keys({"times", "leaf", "s"});
    p["times"] = get_times(in, "times", {0.01, 0.1, 1.0}, where);
    p["leaf"] = get_int(in, "leaf", 0, 0, J - 1, where);
    const auto s = get_interval(in, "s", {-0.25 * eps, 0.25 * eps}, where);
    p["s"] = {s.first, s.second};
  } else if (type == "quasi-invariance") {
    keys({"n", "functions", "samples", "spectral_times"});
    p["n"] = get_int(in, "n", 1, 0, 12, where);
    std::vector<std::string> fns = default_functions(cfg.system);
    if (in.contains("functions")) {
      const json& v = in.at("functions");
      if (!v.is_array() || v.empty()) throw ConfigError(where + ".functions: expected a list");
      std::vector<std::string> chosen;
      for (const json& x : v) {
        if (!x.is_string() || std::find(fns.begin(), fns.end(), x.get<std::string>()) == fns.end()) {
          throw ConfigError(where + ".functions: unknown test function");
        }
        chosen.push_back(x.get<std::string>());
      }
      fns = chosen;
    }
    p["functions"] = fns;
    p["samples"] = get_int(in, "samples", 10000, 1, 100000000, where);
    p["spectral_times"] = get_times(in, "spectral_times", {0.01, 0.1, 1.0}, where);
  } else if (type == "varadhan") {
    keys({"a", "b", "times", "leaf", "constant_density"});
    const auto a = get_interval(in, "a", {-eps, -0.4 * eps}, where);
    const auto b = get_interval(in, "b", {0.4 * eps, eps}, where);
    if (!(a.second < b.first || b.second < a.first)) {
      throw ConfigError(where + ": sets a and b must be disjoint");
    }
    p["a"] = {a.first, a.second};
    p["b"] = {b.first, b.second};
    const double d = std::max(b.first - a.second, a.first - b.second);
    p["times"] = get_times(in, "times", {d * d / 20, d * d / 10, d * d / 5, 2 * d * d / 5}, where);
    p["leaf"] = get_int(in, "leaf", 0, 0, J - 1, where);
    if (in.contains("constant_density") && !in.at("constant_density").is_boolean()) {
      throw ConfigError(where + ".constant_density: expected a boolean");
    }
    p["constant_density"] = in.value("constant_density", false);
  } else if (type == "walk") {
    keys({"times", "paths", "leaf", "node"});
    p["times"] = get_times(in, "times", {0.05, 0.5}, where);
    p["paths"] = get_int(in, "paths", 10000, 1000, 100000000, where);
    p["leaf"] = get_int(in, "leaf", 0, 0, J - 1, where);
    const long nodes = 2L * half_node_count(cfg.rectangle.eps, cfg.rectangle.h) + 1;
    p["node"] = get_int(in, "node", nodes / 2, 0, nodes - 1, where);
  } else if (type == "domains") {
    keys({"times", "leaves", "s"});
    p["times"] = get_times(in, "times", {0.01, 0.1, 1.0}, where);
    p["leaves"] = get_indices(in, "leaves", {0}, J, where);
    const auto s = get_interval(in, "s", {-0.5 * eps, 0.5 * eps}, where);
    p["s"] = {s.first, s.second};
  } else if (type == "zero-energy") {
    keys({"leaves", "times"});
    std::vector<int> half;
    for (int j = 0; j < std::max(1, J / 2); ++j) half.push_back(j);
    p["leaves"] = get_indices(in, "leaves", half, J, where);
    std::set<int> uniq(p["leaves"].begin(), p["leaves"].end());
    if (uniq.size() != p["leaves"].size()) throw ConfigError(where + ".leaves: duplicate leaf");
    p["times"] = get_times(in, "times", {0.01, 0.1, 1.0}, where);
  } else {
    throw ConfigError("unknown experiment '" + type + "'");
  }
  return p;
}

RectangleSpec parse_rectangle(const json& in, const json& system, std::uint64_t seed) {
  const std::string where = "rectangle";
  check_keys(in, {"base", "seed", "burn_in", "eps", "h", "J", "stable_radius", "n_back", "mode",
                  "orbit_steps"},
             where);
  const bool toral = system.value("type", std::string()) == "cat" ||
                     system.value("type", std::string()) == "toral";
  RectangleSpec r;
  if (in.contains("base")) {
    const json& b = in.at("base");
    if (!b.is_array() || b.size() < 2 || b.size() > 3) {
      throw ConfigError(where + ".base: expected 2 or 3 coordinates");
    }
    Point p = Point::Zero();
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (!b[i].is_number()) throw ConfigError(where + ".base: expected numbers");
      p[i] = b[i].get<double>();
    }
    r.base = p;
  }
  r.seed = get_seed(in, "seed", seed, where);
  r.burn_in = static_cast<int>(get_int(in, "burn_in", kDefaultBurnIn, 0, 100000000, where));
  r.eps = get_real(in, "eps", 0.2, 1e-6, 1.0, where);
  r.h = get_real(in, "h", r.eps / 64, 1e-9, r.eps, where);
  r.J = static_cast<int>(get_int(in, "J", 8, 1, 4096, where));
  r.stable_radius = get_real(in, "stable_radius", 0.1, 1e-9, 1.0, where);
  r.n_back = static_cast<int>(get_int(in, "n_back", kDefaultLeafDepth, 0, 200, where));
  r.orbit_steps = get_int(in, "orbit_steps", r.orbit_steps, 1, 1000000000, where);
  std::string mode = in.value("mode", toral ? "equally-spaced" : "orbit-sampled");
  if (mode == "equally-spaced") {
    if (!toral) throw ConfigError(where + ".mode: equally-spaced needs a toral automorphism");
    r.mode = TransversalMode::EquallySpaced;
  } else if (mode == "orbit-sampled") {
    r.mode = TransversalMode::OrbitSampled;
  } else {
    throw ConfigError(where + ".mode: expected equally-spaced or orbit-sampled");
  }
  try {
    half_node_count(r.eps, r.h);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("rectangle: ") + e.what());
  }
  return r;
}

SRBSpec parse_srb(const json& in, std::uint64_t seed) {
  const std::string where = "srb";
  check_keys(in, {"n", "n_samples", "seed", "burn_in", "max_steps", "holder_pairs", "tail_tol"},
             where);
  SRBSpec s;
  if (in.contains("n")) s.n = static_cast<int>(get_int(in, "n", 1, 0, 200, where));
  s.n_samples = get_int(in, "n_samples", s.n_samples, 0, 10000000000L, where);
  s.seed = get_seed(in, "seed", seed, where);
  s.burn_in = static_cast<int>(get_int(in, "burn_in", s.burn_in, 0, 100000000, where));
  s.max_steps = get_int(in, "max_steps", s.max_steps, 0, 100000000000L, where);
  s.holder_pairs = static_cast<int>(get_int(in, "holder_pairs", s.holder_pairs, 2, 10000000, where));
  s.tail_tol = get_real(in, "tail_tol", s.tail_tol, 1e-15, 1.0, where);
  return s;
}

json rectangle_json(const RectangleSpec& r) {
  json j = {{"seed", r.seed},
            {"burn_in", r.burn_in},
            {"eps", r.eps},
            {"h", r.h},
            {"J", r.J},
            {"stable_radius", r.stable_radius},
            {"n_back", r.n_back},
            {"orbit_steps", r.orbit_steps},
            {"mode", r.mode == TransversalMode::EquallySpaced ? "equally-spaced" : "orbit-sampled"}};
  if (r.base) j["base"] = {(*r.base)[0], (*r.base)[1], (*r.base)[2]};
  return j;
}

json srb_json(const SRBSpec& s) {
  json j = {{"n_samples", s.n_samples}, {"seed", s.seed},
            {"burn_in", s.burn_in},     {"max_steps", s.max_steps},
            {"holder_pairs", s.holder_pairs}, {"tail_tol", s.tail_tol}};
  if (s.n) j["n"] = *s.n;
  return j;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"srb-estimate", "spectrum", "heat",
                                                 "quasi-invariance", "varadhan", "walk",
                                                 "domains", "zero-energy"};
  return names;
}

HyperbolicSystem ExperimentConfig::build_system() const {
  try {
    return HyperbolicSystem::from_json(system);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("system: ") + e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
}

json ExperimentConfig::to_json() const {
  json e = params;
  e["type"] = experiment;
  json j = {{"system", system},       {"rectangle", rectangle_json(rectangle)},
            {"srb", srb_json(srb)},   {"experiment", e},
            {"cache_dir", cache_dir}, {"threads", threads},
            {"seed", seed}};
  if (!output.empty()) j["output"] = output;
  return j;
}

std::string ExperimentConfig::hash() const {
  json j = to_json();
  j.erase("output");
  j.erase("cache_dir");
  j.erase("threads");
  return content_hash(j);
}

ExperimentConfig parse_config(const json& j, const std::string& experiment) {
  check_keys(j, {"system", "rectangle", "srb", "experiment", "output", "cache_dir", "threads",
                 "seed"},
             "config");
  ExperimentConfig cfg;
  if (!j.contains("system")) throw ConfigError("config: missing 'system'");
  cfg.seed = get_seed(j, "seed", 1, "config");
  cfg.threads = static_cast<unsigned>(get_int(j, "threads", 0, 0, 1024, "config"));
  if (j.contains("output")) {
    if (!j.at("output").is_string()) throw ConfigError("config.output: expected a string");
    cfg.output = j.at("output").get<std::string>();
  }
  if (j.contains("cache_dir")) {
    if (!j.at("cache_dir").is_string()) throw ConfigError("config.cache_dir: expected a string");
    cfg.cache_dir = j.at("cache_dir").get<std::string>();
  }
  cfg.system = j.at("system");
  const HyperbolicSystem sys = cfg.build_system();
  cfg.system = sys.to_json();
  cfg.rectangle = parse_rectangle(j.value("rectangle", json::object()), cfg.system, cfg.seed);
  cfg.srb = parse_srb(j.value("srb", json::object()), cfg.seed);

  const json ex = j.value("experiment", json::object());
  if (!ex.is_object()) throw ConfigError("experiment: expected an object");
  std::string type = experiment;
  if (ex.contains("type")) {
    if (!ex.at("type").is_string()) throw ConfigError("experiment.type: expected a string");
    if (type.empty()) type = ex.at("type").get<std::string>();
  }
  if (type.empty()) throw ConfigError("experiment: no experiment type given");
  cfg.experiment = type;
  cfg.params = parse_params(type, ex, cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::string& experiment) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j, experiment);
}

}  // namespace leafheat
