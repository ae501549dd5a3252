#include "leafheat/runner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "leafheat/heat.hpp"
#include "leafheat/io.hpp"
#include "leafheat/parallel.hpp"
#include "leafheat/stochastic.hpp"

namespace leafheat {

using nlohmann::json;

std::vector<PhaseFunction> phase_functions(const HyperbolicSystem& sys) {
  constexpr double tp = 2.0 * std::numbers::pi;
  if (sys.kind() == SystemKind::Solenoid) {
    return {
        {"cos_theta", [](const Point& p) { return std::cos(p[2]); },
         [](const Point& p) { return Vec3(0.0, 0.0, -std::sin(p[2])); }},
        {"x_plus_half_y2", [](const Point& p) { return p[0] + 0.5 * p[1] * p[1]; },
         [](const Point& p) { return Vec3(1.0, p[1], 0.0); }},
        {"sin2theta_plus_xy", [](const Point& p) { return std::sin(2.0 * p[2]) + p[0] * p[1]; },
         [](const Point& p) { return Vec3(p[1], p[0], 2.0 * std::cos(2.0 * p[2])); }},
    };
  }
  return {
      {"cos2pix", [](const Point& p) { return std::cos(tp * p[0]); },
       [](const Point& p) { return Vec3(-tp * std::sin(tp * p[0]), 0.0, 0.0); }},
      {"sin2pi_x_plus_2y", [](const Point& p) { return std::sin(tp * (p[0] + 2.0 * p[1])); },
       [](const Point& p) {
         const double c = tp * std::cos(tp * (p[0] + 2.0 * p[1]));
         return Vec3(c, 2.0 * c, 0.0);
       }},
      {"cos2pix_cos2piy", [](const Point& p) { return std::cos(tp * p[0]) * std::cos(tp * p[1]); },
       [](const Point& p) {
         return Vec3(-tp * std::sin(tp * p[0]) * std::cos(tp * p[1]),
                     -tp * std::cos(tp * p[0]) * std::sin(tp * p[1]), 0.0);
       }},
  };
}

void apply_overrides(json& config, const Overrides& o, const std::string& experiment) {
  if (!config.is_object()) throw ConfigError("config: expected an object");
  if (o.seed) config["seed"] = *o.seed;
  if (o.cache_dir) config["cache_dir"] = *o.cache_dir;
  if (o.threads) config["threads"] = *o.threads;
  if (o.out) config["output"] = *o.out;
  if (o.n) {
    if (experiment == "quasi-invariance") {
      if (!config.contains("experiment") || !config["experiment"].is_object()) {
        config["experiment"] = json::object();
      }
      config["experiment"]["n"] = *o.n;
    } else if (experiment == "srb-estimate") {
      if (!config.contains("srb") || !config["srb"].is_object()) config["srb"] = json::object();
      config["srb"]["n"] = *o.n;
    } else {
      throw ConfigError("--n is not used by the " + experiment + " experiment");
    }
  }
  if (config.contains("experiment") && config["experiment"].is_object()) {
    config["experiment"]["type"] = experiment;
  }
}

namespace {

std::string num(double v) { return format_number(v); }
std::string num(long v) { return format_number(v); }
std::string num(int v) { return format_number(static_cast<long>(v)); }
std::string num(std::size_t v) { return format_number(static_cast<long>(v)); }

struct Context {
  const ExperimentConfig& cfg;
  HyperbolicSystem sys;
  Rectangle rect;
  SRBTable table;
  Assembly assembly;
  bool cache_hit = false;

  explicit Context(const ExperimentConfig& c) : cfg(c), sys(c.build_system()) {
    rect = build_rectangle(sys, cfg.rectangle);
    if (cfg.cache_dir.empty()) {
      table = compute_srb_table(sys, rect, cfg.srb);
    } else {
      table = cached_srb_table(sys, rect, cfg.srb, cfg.cache_dir, &cache_hit);
    }
    assembly = assemble(rect, table);
  }

  json meta() const {
    return {{"experiment", cfg.experiment},
            {"config_hash", cfg.hash()},
            {"seed", cfg.seed},
            {"version", LEAFHEAT_VERSION},
            {"system", sys.to_json()},
            {"grid", {{"eps", rect.eps}, {"h", rect.h}, {"J", rect.leaf_count()}}},
            {"srb_key", table.key},
            {"params", cfg.params}};
  }

  NodeSet leaf_interval(int leaf, double lo, double hi) const {
    NodeSet out;
    const auto& arc = rect.leaves.at(leaf).arc;
    for (int i = 0; i < static_cast<int>(arc.size()); ++i) {
      if (arc[i] >= lo - 1e-12 && arc[i] <= hi + 1e-12) out.push_back(rect.node_index(leaf, i));
    }
    if (out.empty()) throw ConfigError("arc-length interval contains no nodes");
    return out;
  }
};

void run_srb(Context& c, std::ostream& out) {
  json m = c.meta();
  m["order"] = c.table.order;
  m["holder"] = {{"L", c.table.holder.L}, {"alpha", c.table.holder.alpha}};
  m["K0"] = c.table.distortion.K0;
  m["hits"] = c.table.hits;
  CsvWriter w(out, m,
              {"leaf", "node", "s", "x", "y", "z", "raw", "density", "weight", "error_bound"});
  for (int j = 0; j < c.rect.leaf_count(); ++j) {
    const LeafSegment& leaf = c.rect.leaves[j];
    const SRBLeafDensity& d = c.table.leaves[j];
    for (std::size_t i = 0; i < leaf.size(); ++i) {
      w.row({num(j), num(i), num(leaf.arc[i]), num(leaf.nodes[i][0]), num(leaf.nodes[i][1]),
             num(leaf.nodes[i][2]), num(d.raw[i]), num(d.normalized[i]), num(c.table.weights[j]),
             num(d.error_bound)});
    }
  }
}

void run_spectrum(Context& c, std::ostream& out) {
  const HeatOperator hop(c.assembly.form, c.assembly.measure);
  const long modes = c.cfg.params["modes"].get<long>();
  CsvWriter w(out, c.meta(), {"leaf", "k", "theta"});
  for (std::size_t j = 0; j < hop.blocks().size(); ++j) {
    const auto& theta = hop.blocks()[j].theta;
    const long n = modes > 0 ? std::min<long>(modes, theta.size()) : theta.size();
    for (long k = 0; k < n; ++k) w.row({num(j), num(k), num(theta[k])});
  }
}

void run_heat(Context& c, std::ostream& out) {
  const HeatOperator hop(c.assembly.form, c.assembly.measure);
  const auto& p = c.cfg.params;
  const NodeSet S = c.leaf_interval(p["leaf"].get<int>(), p["s"][0], p["s"][1]);
  const NodeFunction u = set_indicator(c.rect.node_count(), S);
  CsvWriter w(out, c.meta(), {"t", "leaf", "node", "s", "value"});
  for (double t : p["times"].get<std::vector<double>>()) {
    const NodeFunction v = hop.apply(t, u);
    for (std::size_t k = 0; k < v.size(); ++k) {
      const int j = c.rect.leaf_of(k);
      const int i = static_cast<int>(k % c.rect.nodes_per_leaf());
      w.row({num(t), num(j), num(i), num(c.rect.leaves[j].arc[i]), num(v[k])});
    }
  }
}

/// max |P^{(n)}_t v − P_{a^{2n} t} v| over probe vectors v.
double spectral_rescaling_defect(Context& c, int n, double a, const std::vector<double>& times,
                                 const std::vector<NodeFunction>& probes) {
  const HeatOperator base(c.assembly.form, c.assembly.measure);
  const DiscreteForm pulled =
      reweighted_form(c.assembly.form, pulled_back_weights(c.sys, c.rect, n));
  const HeatOperator hop_n(pulled, c.assembly.measure);
  const double scale = std::pow(a, 2 * n);
  double worst = 0.0;
  for (double t : times) {
    for (const NodeFunction& v : probes) {
      const NodeFunction x = hop_n.apply(t, v);
      const NodeFunction y = base.apply(scale * t, v);
      for (std::size_t k = 0; k < x.size(); ++k) worst = std::max(worst, std::abs(x[k] - y[k]));
    }
  }
  return worst;
}

void run_quasi(Context& c, std::ostream& out) {
  const auto& p = c.cfg.params;
  const int n = p["n"].get<int>();
  if (!c.sys.conformal_constant()) {
    throw InvalidArgument("quasi-invariance needs a u-conformal system");
  }
  const ExpansionRange range =
      expansion_range(c.sys, c.rect, p["samples"].get<int>(), c.cfg.seed);
  const auto names = p["functions"].get<std::vector<std::string>>();
  std::vector<PhaseFunction> fns;
  for (const PhaseFunction& f : phase_functions(c.sys)) {
    if (std::find(names.begin(), names.end(), f.name) != names.end()) fns.push_back(f);
  }

  std::vector<QuasiInvarianceReport> reports;
  for (const PhaseFunction& f : fns) {
    reports.push_back(quasi_invariance_report(c.sys, c.rect, c.assembly, f, n, range));
  }
  json m = c.meta();
  const bool conformal = reports.empty() ? false : reports.front().conformal.has_value();
  if (conformal) {
    const double a = *reports.front().conformal;
    std::vector<NodeFunction> probes;
    for (const PhaseFunction& f : fns) probes.push_back(evaluate_composed(c.sys, c.rect, f, 0));
    std::mt19937_64 rng(c.cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    NodeFunction r(c.rect.node_count());
    for (double& v : r) v = unif(rng);
    probes.push_back(r);
    m["spectral_defect"] =
        spectral_rescaling_defect(c, n, a, p["spectral_times"].get<std::vector<double>>(), probes);
  }
  CsvWriter w(out, m,
              {"function", "n", "energy_pullback", "energy_weighted", "energy_image", "ratio",
               "expected", "a_min", "a_max", "lower", "upper"});
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    const double expected = r.conformal ? std::pow(*r.conformal, 2 * n) : std::nan("");
    w.row({fns[i].name, num(n), num(r.energy_pullback), num(r.energy_weighted),
           num(r.energy_image), num(r.ratio), num(expected), num(r.a_min), num(r.a_max),
           num(r.lower), num(r.upper)});
  }
}

void run_varadhan(Context& c, std::ostream& out) {
  const auto& p = c.cfg.params;
  const int leaf = p["leaf"].get<int>();
  const NodeSet A = c.leaf_interval(leaf, p["a"][0], p["a"][1]);
  const NodeSet B = c.leaf_interval(leaf, p["b"][0], p["b"][1]);
  const auto times = p["times"].get<std::vector<double>>();
  VaradhanTable tab;
  if (p["constant_density"].get<bool>()) {
    const Assembly one = assemble_uniform(1, c.rect.eps, c.rect.h);
    const std::size_t off = c.rect.node_index(leaf, 0);
    NodeSet a;
    NodeSet b;
    for (std::size_t k : A) a.push_back(k - off);
    for (std::size_t k : B) b.push_back(k - off);
    const HeatOperator hop(one.form, one.measure);
    tab = varadhan_check(one.form, hop, one.measure, a, b, times);
  } else {
    const HeatOperator hop(c.assembly.form, c.assembly.measure);
    tab = varadhan_check(c.assembly.form, hop, c.assembly.measure, A, B, times);
  }
  json m = c.meta();
  m["distance"] = tab.distance;
  m["mass_a"] = tab.mass_a;
  m["mass_b"] = tab.mass_b;
  m["limit"] = -0.5 * tab.distance * tab.distance;
  CsvWriter w(out, m, {"t", "integral", "t_log", "gaffney_ratio", "davies_ratio"});
  for (const VaradhanRow& r : tab.rows) {
    w.row({num(r.t), num(r.integral), num(r.t_log), num(r.gaffney_ratio), num(r.davies_ratio)});
  }
}

void run_walk(Context& c, std::ostream& out) {
  const auto& p = c.cfg.params;
  const HeatOperator hop(c.assembly.form, c.assembly.measure);
  const Generator gen = make_generator(c.assembly.form, c.assembly.measure);
  const std::size_t x0 = c.rect.node_index(p["leaf"].get<int>(), p["node"].get<int>());
  const int paths = p["paths"].get<int>();
  json m = c.meta();
  m["detailed_balance_defect"] = detailed_balance_defect(gen);
  CsvWriter w(out, m, {"t", "paths", "tv", "band", "within", "leaf_changes"});
  for (double t : p["times"].get<std::vector<double>>()) {
    const HeatComparison h = compare_to_heat(hop, gen, x0, t, paths, c.cfg.seed);
    w.row({num(t), num(paths), num(h.tv), num(h.band), h.within ? "1" : "0",
           num(h.leaf_changes)});
  }
}

void run_domains(Context& c, std::ostream& out) {
  const auto& p = c.cfg.params;
  NodeSet O;
  for (int leaf : p["leaves"].get<std::vector<int>>()) {
    const NodeSet s = c.leaf_interval(leaf, p["s"][0], p["s"][1]);
    O.insert(O.end(), s.begin(), s.end());
  }
  const DirichletDomain dom(c.assembly.form, c.assembly.measure, O);
  json m = c.meta();
  m["domain_nodes"] = dom.nodes().size();
  CsvWriter w(out, m, {"t", "max_excess", "max_difference", "min_row_sum", "max_row_sum"});
  for (double t : p["times"].get<std::vector<double>>()) {
    const Eigen::MatrixXd G = dom.global_matrix(t);
    const Eigen::MatrixXd L = dom.leafwise_matrix(t);
    const Eigen::VectorXd rows = G.rowwise().sum();
    w.row({num(t), num((G - L).maxCoeff()), num((G - L).cwiseAbs().maxCoeff()),
           num(rows.minCoeff()), num(rows.maxCoeff())});
  }
}

void run_zero_energy(Context& c, std::ostream& out) {
  const auto& p = c.cfg.params;
  const auto leaves = p["leaves"].get<std::vector<int>>();
  const DiscreteForm& form = c.assembly.form;
  const DiscreteMeasure& mu = c.assembly.measure;
  const NodeFunction u = zero_energy_indicator(form, leaves);
  const NodeFunction rest = zero_energy_indicator(form, [&] {
    std::vector<int> all;
    for (int j = 0; j < c.rect.leaf_count(); ++j) {
      if (std::find(leaves.begin(), leaves.end(), j) == leaves.end()) all.push_back(j);
    }
    if (all.empty()) all = leaves;
    return all;
  }());
  const double wsel = mu.integral(u) / mu.total();
  const HeatOperator hop(form, mu);
  json m = c.meta();
  m["energy"] = form.energy(u);
  m["variance"] = mu.variance(u);
  m["expected_variance"] = wsel * (1.0 - wsel);
  m["selected_mass"] = wsel;
  CsvWriter w(out, m, {"t", "max_heat_change", "blocking_integral"});
  for (double t : p["times"].get<std::vector<double>>()) {
    const NodeFunction v = hop.apply(t, u);
    double change = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) change = std::max(change, std::abs(v[k] - u[k]));
    const double block = leaves.size() == static_cast<std::size_t>(c.rect.leaf_count())
                             ? std::nan("")
                             : mu.inner(u, hop.apply(t, rest));
    w.row({num(t), num(change), num(block)});
  }
}

}  // namespace

RunOutput run_experiment(const ExperimentConfig& cfg) {
  set_thread_count(cfg.threads);
  Context c(cfg);
  std::ostringstream out;
  const std::string& e = cfg.experiment;
  if (e == "srb-estimate") {
    run_srb(c, out);
  } else if (e == "spectrum") {
    run_spectrum(c, out);
  } else if (e == "heat") {
    run_heat(c, out);
  } else if (e == "quasi-invariance") {
    run_quasi(c, out);
  } else if (e == "varadhan") {
    run_varadhan(c, out);
  } else if (e == "walk") {
    run_walk(c, out);
  } else if (e == "domains") {
    run_domains(c, out);
  } else if (e == "zero-energy") {
    run_zero_energy(c, out);
  } else {
    throw ConfigError("unknown experiment '" + e + "'");
  }
  return {out.str(), c.cache_hit};
}

RunOutput run(const ExperimentConfig& cfg) {
  RunOutput r = run_experiment(cfg);
  if (!cfg.output.empty()) write_file_atomic(cfg.output, r.csv);
  return r;
}

}  // namespace leafheat
