#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <numeric>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "leafheat/runner.hpp"
#include "leafheat/stochastic.hpp"
#include "oracles.hpp"

using namespace leafheat;
using nlohmann::json;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

NodeFunction random_function(std::size_t n, std::mt19937_64& rng, double lo = 0.0,
                             double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  NodeFunction v(n);
  for (double& x : v) x = u(rng);
  return v;
}

double max_abs_diff(const NodeFunction& a, const NodeFunction& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

RectangleSpec solenoid_spec() {
  RectangleSpec rs;
  rs.eps = 0.3;
  rs.h = 0.3 / 32;
  rs.J = 8;
  rs.stable_radius = 0.2;
  rs.mode = TransversalMode::OrbitSampled;
  rs.seed = 3;
  return rs;
}

/// Solenoid rectangle with its SRB table, shared by several criteria.
struct SolenoidSetup {
  HyperbolicSystem sys = HyperbolicSystem::solenoid();
  Rectangle rect;
  SRBTable table;
  Assembly assembly;

  SolenoidSetup() : rect(build_rectangle(sys, solenoid_spec())) {
    SRBSpec spec;
    spec.n_samples = 100000;
    spec.seed = 3;
    table = compute_srb_table(sys, rect, spec);
    assembly = assemble(rect, table);
  }
};

SolenoidSetup& solenoid() {
  static SolenoidSetup s;
  return s;
}

json cat_config(const std::string& experiment) {
  return {{"system", {{"type", "cat"}}},
          {"rectangle",
           {{"eps", 0.25}, {"h", 0.25 / 256}, {"J", 32}, {"stable_radius", 0.1}}},
          {"srb", {{"n_samples", 100000}}},
          {"experiment", {{"type", experiment}}},
          {"cache_dir", ""},
          {"seed", 7}};
}

/// Rows of a runner CSV as header-keyed maps, plus the metadata object.
struct Csv {
  json meta;
  std::vector<std::map<std::string, std::string>> rows;
};

Csv parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Csv out;
  std::getline(in, line);
  out.meta = json::parse(line.substr(2));
  std::getline(in, line);
  std::vector<std::string> cols;
  std::stringstream hs(line);
  for (std::string c; std::getline(hs, c, ',');) cols.push_back(c);
  while (std::getline(in, line)) {
    std::stringstream rs(line);
    std::map<std::string, std::string> row;
    std::size_t k = 0;
    for (std::string c; std::getline(rs, c, ',') && k < cols.size(); ++k) row[cols[k]] = c;
    out.rows.push_back(row);
  }
  return out;
}

Verdict c1_cat_srb() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto cat = HyperbolicSystem::cat_map();
  RectangleSpec rs;
  rs.eps = 0.25;
  rs.h = 0.25 / 32;
  rs.J = 32;
  rs.stable_radius = 0.1;
  rs.base = Point(0.1, 0.2, 0.0);
  const Rectangle rect = build_rectangle(cat, rs);
  const HolderFit fit = estimate_holder(cat, sample_holder_pairs(cat, 500, 0.2, 1));
  const DistortionConstants dc = distortion_constants(cat, fit, 2 * rs.eps);
  double worst = 0.0;
  for (int n : {1, 2, 5, 10, 20, 40}) {
    for (const LeafSegment& leaf : rect.leaves) {
      for (double r : srb_density(cat, leaf, n, dc).raw) worst = std::max(worst, std::abs(r - 1.0));
    }
  }
  v.check(worst <= 1e-12, "density deviation");
  const long N = 1000000;
  const QuotientEstimate q = estimate_quotient_weights(cat, rect, 1000, N, 7);
  const double p = 1.0 / 32;
  const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(N));
  double zmax = 0.0;
  for (double w : q.weights) zmax = std::max(zmax, std::abs(w - p) / sigma);
  v.check(zmax <= 3.0, "quotient weights outside 3 sigma");
  const double secs = seconds_since(t0);
  v.check(secs < 30.0, "runtime");
  v.detail << "max|rho_n - 1| = " << worst << ", max |w - 1/32|/sigma = " << zmax
           << ", runtime " << secs << " s";
  return v;
}

Verdict c2_distortion() {
  Verdict v;
  SolenoidSetup& s = solenoid();
  const DistortionConstants& dc = s.table.distortion;
  double lo = INFINITY;
  double hi = 0.0;
  std::vector<double> ns;
  std::vector<double> logs;
  std::vector<std::vector<double>> prev;
  for (int n = 5; n <= 26; ++n) {
    double diff = 0.0;
    std::vector<std::vector<double>> cur;
    for (std::size_t j = 0; j < s.rect.leaves.size(); ++j) {
      const SRBLeafDensity d = srb_density(s.sys, s.rect.leaves[j], n, dc);
      for (double r : d.raw) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      if (!prev.empty()) {
        for (std::size_t i = 0; i < d.raw.size(); ++i) diff = std::max(diff, std::abs(d.raw[i] - prev[j][i]));
      }
      cur.push_back(d.raw);
    }
    if (!prev.empty()) {
      ns.push_back(n - 1);
      logs.push_back(std::log(diff));
    }
    prev = std::move(cur);
  }
  v.check(lo >= 1.0 / dc.K0 && hi <= dc.K0, "density outside [1/K0, K0]");
  const double nbar = std::accumulate(ns.begin(), ns.end(), 0.0) / ns.size();
  const double lbar = std::accumulate(logs.begin(), logs.end(), 0.0) / logs.size();
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    sxy += (ns[i] - nbar) * (logs[i] - lbar);
    sxx += (ns[i] - nbar) * (ns[i] - nbar);
  }
  const double rate = std::exp(sxy / sxx);
  const double bound = std::pow(dc.lambda, dc.alpha);
  v.check(rate <= 1.1 * bound, "Cauchy rate above lambda^alpha");
  v.detail << "rho in [" << lo << ", " << hi << "], K0 = " << dc.K0 << " (L = " << dc.L
           << ", alpha = " << dc.alpha << "); fitted rate " << rate << " vs lambda^alpha = " << bound;
  return v;
}

Verdict c3_gauss_green() {
  Verdict v;
  const Assembly& a = solenoid().assembly;
  std::mt19937_64 rng(31);
  double gg = 0.0;
  double inv = 0.0;
  for (int k = 0; k < 20; ++k) {
    const NodeFunction u = random_function(a.form.node_count, rng, -1.0, 1.0);
    const NodeFunction phi = random_function(a.form.node_count, rng, -1.0, 1.0);
    const NodeFunction Lu = laplacian_apply(a.form, a.measure, u);
    const double scale = std::max(1.0, a.form.energy(u));
    gg = std::max(gg, std::abs(a.measure.inner(Lu, phi) + a.form.bilinear(u, phi)) / scale);
    inv = std::max(inv, std::abs(a.measure.integral(Lu)) / scale);
  }
  v.check(gg <= 1e-12, "Gauss-Green");
  v.check(inv <= 1e-12, "1^T M L");
  const HeatOperator hop(a.form, a.measure);
  double const_dev = 0.0;
  double theta_min = INFINITY;
  bool zero = true;
  for (const BlockSpectrum& b : hop.blocks()) {
    zero = zero && b.theta[0] == 0.0;
    const Eigen::VectorXd psi0 = b.psi.col(0);
    const_dev = std::max(const_dev, (psi0.array() - psi0[0]).abs().maxCoeff() / std::abs(psi0[0]));
    theta_min = std::min(theta_min, b.theta.minCoeff());
  }
  v.check(zero, "theta_0 = 0");
  v.check(const_dev <= 1e-12, "constant ground state");
  v.check(theta_min >= -1e-12, "spectral floor");
  v.detail << "Gauss-Green " << gg << ", 1^T M L " << inv << " (relative to max(1, E(u))); psi_0 spread "
           << const_dev << ", min theta " << theta_min;
  return v;
}

Verdict c4_semigroup() {
  Verdict v;
  const Assembly& a = solenoid().assembly;
  const HeatOperator hop(a.form, a.measure);
  const std::size_t N = a.form.node_count;
  std::mt19937_64 rng(41);
  double markov = 0.0;
  double cons = 0.0;
  double invariance = 0.0;
  double symmetry = 0.0;
  double semigroup = 0.0;
  for (double t : {0.01, 0.1, 1.0}) {
    const NodeFunction u = random_function(N, rng);
    const NodeFunction w = random_function(N, rng);
    const NodeFunction pu = hop.apply(t, u);
    for (double x : pu) markov = std::max({markov, -x, x - 1.0});
    for (double x : hop.apply(t, NodeFunction(N, 1.0))) cons = std::max(cons, std::abs(x - 1.0));
    invariance = std::max(invariance, std::abs(a.measure.integral(pu) - a.measure.integral(u)));
    symmetry = std::max(symmetry, std::abs(a.measure.inner(pu, w) - a.measure.inner(u, hop.apply(t, w))));
    for (double s : {0.01, 0.1, 1.0}) {
      semigroup = std::max(semigroup, max_abs_diff(hop.apply(s, pu), hop.apply(s + t, u)));
    }
  }
  v.check(markov <= 1e-12, "Markov");
  v.check(cons <= 1e-12, "conservative");
  v.check(invariance <= 1e-12, "invariance");
  v.check(symmetry <= 1e-12, "symmetry");
  v.check(semigroup <= 1e-12, "semigroup law");
  const NodeFunction phi = random_function(N, rng, -1.0, 1.0);
  const double E = a.form.energy(phi);
  double best = 0.0;
  for (int k = 0; k <= 16; ++k) best = std::max(best, hop.heat_defect(std::pow(10.0, -k), phi));
  const double var = std::abs(best / E - 1.0);
  v.check(var <= 1e-10, "variational identity");
  v.detail << "Markov " << markov << ", conservative " << cons << ", invariance " << invariance
           << ", symmetry " << symmetry << ", semigroup " << semigroup
           << "; variational relative error " << var;
  return v;
}

Verdict c5_quasi_invariance() {
  Verdict v;
  const double golden = (3.0 + std::sqrt(5.0)) / 2.0;
  double worst = 0.0;
  double spectral = 0.0;
  for (int n : {1, 2}) {
    json j = cat_config("quasi-invariance");
    j["experiment"]["n"] = n;
    const Csv csv = parse_csv(run_experiment(parse_config(j)).csv);
    const double expected = std::pow(golden, 2 * n);
    v.check(csv.rows.size() == 3, "three test functions");
    for (const auto& row : csv.rows) {
      worst = std::max(worst, std::abs(std::stod(row.at("ratio")) / expected - 1.0));
    }
    spectral = std::max(spectral, csv.meta.at("spectral_defect").get<double>());
  }
  v.check(worst <= 1e-3, "energy ratio");
  v.check(spectral <= 1e-10, "spectral rescaling");
  v.detail << "max relative ratio error " << worst << " (n = 1, 2; h = eps/256), spectral defect "
           << spectral;
  return v;
}

Verdict c6_sandwich() {
  Verdict v;
  SolenoidSetup& s = solenoid();
  const ExpansionRange range = expansion_range(s.sys, s.rect, 10000, 6);
  double slack = INFINITY;
  for (const PhaseFunction& f : phase_functions(s.sys)) {
    const QuasiInvarianceReport r = quasi_invariance_report(s.sys, s.rect, s.assembly, f, 1, range);
    v.check(r.lower <= r.energy_pullback && r.energy_pullback <= r.upper, "sandwich for " + f.name);
    slack = std::min({slack, r.energy_pullback / r.lower - 1.0, 1.0 - r.energy_pullback / r.upper});
  }
  const double chi = lyapunov_exponent(s.sys, attractor_point(s.sys, 2), 10000);
  v.check(std::abs(chi - std::log(2.0)) <= 0.01, "Birkhoff exponent");
  v.detail << "a in [" << range.a_min << ", " << range.a_max << "], min relative slack " << slack
           << "; Birkhoff exponent " << chi << " vs log 2 = " << std::log(2.0);
  return v;
}

Verdict c7_zero_energy() {
  Verdict v;
  const Assembly& a = solenoid().assembly;
  const int J = static_cast<int>(a.form.blocks.size());
  std::vector<int> left;
  std::vector<int> right;
  for (int j = 0; j < J; ++j) (j < J / 2 ? left : right).push_back(j);
  const NodeFunction u = zero_energy_indicator(a.form, left);
  const NodeFunction rest = zero_energy_indicator(a.form, right);
  const double E = a.form.energy(u);
  const double w = a.measure.integral(u) / a.measure.total();
  const double var_err = std::abs(a.measure.variance(u) - w * (1.0 - w));
  const HeatOperator hop(a.form, a.measure);
  double block = 0.0;
  for (double t : {0.001, 0.01, 0.1, 1.0, 10.0}) {
    block = std::max(block, std::abs(a.measure.inner(u, hop.apply(t, rest))));
  }
  v.check(E == 0.0, "energy exactly zero");
  v.check(var_err <= 1e-12, "variance");
  v.check(block <= 1e-14, "transversal blocking");
  v.detail << "E = " << E << ", |Var - w(1-w)| = " << var_err << " (w = " << w
           << "), max blocking integral " << block;
  return v;
}

Verdict c8_varadhan() {
  Verdict v;
  const double eps = 0.5;
  const double h = 1.0 / 400;
  const double d = 0.4;
  const Assembly a = assemble_uniform(1, eps, h);
  const HeatOperator hop(a.form, a.measure);
  NodeSet A;
  NodeSet B;
  for (std::size_t k = 0; k < a.form.node_count; ++k) {
    if (a.form.arc(k) <= -0.2 + 1e-12) A.push_back(k);
    if (a.form.arc(k) >= 0.2 - 1e-12) B.push_back(k);
  }
  std::vector<double> times;
  for (double t = 0.064; t > 0.0009; t /= 2) times.push_back(t);
  const VaradhanTable tab = varadhan_check(a.form, hop, a.measure, A, B, times);
  v.check(std::abs(tab.distance - d) <= 1e-12, "intrinsic distance");
  // stable: discrete value agrees with the continuum kernel on the node cells
  double smallest = NAN;
  double t_log = NAN;
  double oracle_err = 0.0;
  double gaffney = 0.0;
  double davies = 0.0;
  for (const VaradhanRow& r : tab.rows) {
    const double exact = oracle::neumann_box(eps, -eps, -0.2 + h / 2, 0.2 - h / 2, eps, r.t);
    const double rel = std::abs(r.integral / exact - 1.0);
    if (rel <= 0.05 && r.integral > 1e-10 * std::sqrt(tab.mass_a * tab.mass_b)) {
      smallest = r.t;
      t_log = r.t_log;
      oracle_err = std::max(oracle_err, rel);
    }
    gaffney = std::max(gaffney, r.gaffney_ratio);
    davies = std::max(davies, r.davies_ratio);
  }
  const double limit = -0.5 * d * d;
  v.check(!std::isnan(smallest), "no stable t");
  v.check(std::abs(t_log / limit - 1.0) <= 0.1, "t log integral vs -d^2/2");
  v.check(gaffney <= 1.0 + 1e-6, "t-scaled Gaffney ratio");
  v.detail << "smallest stable t = " << smallest << ": t log = " << t_log << " vs " << limit
           << " (oracle agreement " << oracle_err << "); max Gaffney ratio (e^{-d^2/2t}) " << gaffney
           << "; max ratio with e^{-d^2/4t} " << davies;
  return v;
}

Verdict c9_distance() {
  Verdict v;
  const double h = 0.25 / 8;
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> dens(0.5, 1.5);
  std::vector<std::vector<double>> rho(2, std::vector<double>(17));
  for (auto& r : rho) {
    for (double& x : r) x = dens(rng);
  }
  const Assembly a = assemble({1.0, 2.0}, rho, h);
  std::uniform_int_distribution<int> pick(0, 33);
  double worst = 0.0;
  bool inf_ok = true;
  int trials = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> label(34, 0);
    for (int k = 0; k < 3; ++k) label[pick(rng)] = 1;
    for (int k = 0; k < 3; ++k) {
      const int i = pick(rng);
      if (label[i] == 0) label[i] = 2;
    }
    std::vector<int> Ai;
    std::vector<int> Bi;
    NodeSet As;
    NodeSet Bs;
    for (int i = 0; i < 34; ++i) {
      if (label[i] == 1) {
        Ai.push_back(i);
        As.push_back(i);
      } else if (label[i] == 2) {
        Bi.push_back(i);
        Bs.push_back(i);
      }
    }
    if (Ai.empty() || Bi.empty()) continue;
    ++trials;
    const double lp = oracle::lp_distance({17, 17}, h, Ai, Bi);
    const double dist = intrinsic_distance(a.form, As, Bs);
    if (std::isinf(lp) || std::isinf(dist)) {
      inf_ok = inf_ok && std::isinf(lp) && std::isinf(dist);
    } else {
      worst = std::max(worst, std::abs(dist - lp));
    }
  }
  v.check(worst <= 1e-9, "LP agreement");
  v.check(inf_ok, "infinite distances agree");
  NodeSet left;
  NodeSet right;
  for (std::size_t k = 0; k < 17; ++k) left.push_back(k);
  for (std::size_t k = 17; k < 34; ++k) right.push_back(k);
  const HeatOperator hop(a.form, a.measure);
  const VaradhanTable blocked = varadhan_check(a.form, hop, a.measure, left, right, {0.001, 0.1, 10.0});
  bool zero = std::isinf(blocked.distance);
  for (const VaradhanRow& r : blocked.rows) zero = zero && r.integral == 0.0;
  v.check(zero, "disjoint leaves");
  v.detail << trials << " LP trials on 34 nodes, max |d - d_LP| = " << worst
           << "; leaf-disjoint distance " << blocked.distance << " with zero integrals";
  return v;
}

Verdict c10_domains() {
  Verdict v;
  const Assembly& a = solenoid().assembly;
  NodeSet O;
  for (const LeafBlock& b : a.form.blocks) {
    for (int i = 5; i < b.size - 20; ++i) O.push_back(b.offset + i);
  }
  const DirichletDomain dom(a.form, a.measure, O);
  double excess = -INFINITY;
  for (double t : {0.0001, 0.001, 0.01, 0.1}) {
    excess = std::max(excess, (dom.global_matrix(t) - dom.leafwise_matrix(t)).maxCoeff());
  }
  v.check(excess <= 1e-12, "domination");
  const double h = 0.5 / 65;
  const Assembly one = assemble({1.0}, {std::vector<double>(131, 1.0)}, h);
  NodeSet O1;
  for (std::size_t k = 1; k <= 128; ++k) O1.push_back(k);
  const DirichletDomain line(one.form, one.measure, O1);
  double err = 0.0;
  for (double t : {10 * h * h, 100 * h * h, 1000 * h * h}) {
    const Eigen::MatrixXd G = line.global_matrix(t);
    for (int i = 0; i < 128; ++i) {
      for (int j = 0; j < 128; ++j) err = std::max(err, std::abs(G(i, j) - oracle::sine_series(128, h, t, i, j)));
    }
  }
  v.check(err <= 1e-8, "sine series");
  v.detail << "max (P^O - P^O_leafwise) = " << excess << " on " << O.size()
           << " nodes; sine-series error " << err << " at 128 nodes";
  return v;
}

Verdict c11_walk() {
  Verdict v;
  const auto t0 = Clock::now();
  const Assembly& a = solenoid().assembly;
  const HeatOperator hop(a.form, a.measure);
  const Generator gen = make_generator(a.form, a.measure);
  const double db = detailed_balance_defect(gen);
  v.check(db == 0.0, "detailed balance");
  const std::size_t x0 = a.form.blocks[2].offset + 20;
  std::ostringstream rows;
  for (double t : {0.05, 0.5}) {
    const HeatComparison c = compare_to_heat(hop, gen, x0, t, 10000, 11);
    v.check(c.within, "TV band");
    v.check(c.leaf_changes == 0, "leaf confinement");
    rows << "t = " << t << ": TV " << c.tv << " (band " << c.band << "), leaf changes "
         << c.leaf_changes << "; ";
  }
  const double secs = seconds_since(t0);
  v.check(secs < 60.0, "runtime");
  v.detail << "detailed balance defect " << db << "; " << rows.str() << "runtime " << secs << " s";
  return v;
}

Verdict c12_order() {
  Verdict v;
  const auto cat = HyperbolicSystem::cat_map();
  const auto& T = std::get<ToralAutomorphism>(cat.variant());
  const double eps = 0.25;
  const int J = 8;
  const PhaseFunction phi = phase_functions(cat).front();
  std::vector<double> E;
  double exact = 0.0;
  for (int level = 0; level < 3; ++level) {
    RectangleSpec rs;
    rs.eps = eps;
    rs.h = eps / (16 << level);
    rs.J = J;
    rs.stable_radius = 0.1;
    rs.base = Point(0.1, 0.2, 0.0);
    const Rectangle rect = build_rectangle(cat, rs);
    const int n = rect.nodes_per_leaf();
    const Assembly a = assemble(std::vector<double>(J, 1.0),
                                std::vector<std::vector<double>>(J, std::vector<double>(n, 1.0 / (2 * eps))),
                                rs.h);
    E.push_back(a.form.energy(evaluate_composed(cat, rect, phi, 0)));
    if (level == 0) {
      // φ = cos 2πx along x(s) = x_0 + s v_x: ∫ 4π² v_x² sin²(2π(x_0 + s v_x)) ds
      const double vx = T.v_u[0];
      const double k = 2 * std::numbers::pi;
      for (const LeafSegment& leaf : rect.leaves) {
        const double x0 = leaf.nodes[leaf.base_index()][0];
        auto F = [&](double s) {
          return k * k * vx * vx * (s / 2 - std::sin(2 * k * (x0 + s * vx)) / (4 * k * vx));
        };
        exact += (F(eps) - F(-eps)) / (2 * eps) / J;
      }
    }
  }
  const double order = std::log2((E[0] - E[1]) / (E[1] - E[2]));
  const double extrapolated = E[2] + (E[2] - E[1]) / 3.0;
  const double rel = std::abs(extrapolated / exact - 1.0);
  v.check(std::abs(order - 2.0) <= 0.2, "observed order");
  v.check(rel <= 1e-4, "extrapolation vs analytic energy");
  v.detail << phi.name << ": E_h = " << E[0] << ", " << E[1] << ", " << E[2] << "; order " << order
           << "; Richardson value vs analytic " << exact << " relative " << rel;
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected_fail;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--expect-fail") == 0 && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) expected_fail.insert(std::stoi(tok));
    }
  }
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"cat SRB triviality", c1_cat_srb},
      {"bounded distortion", c2_distortion},
      {"Gauss-Green and spectral floor", c3_gauss_green},
      {"semigroup axioms", c4_semigroup},
      {"quasi-invariance (cat)", c5_quasi_invariance},
      {"sandwich bounds (solenoid)", c6_sandwich},
      {"zero-energy function", c7_zero_energy},
      {"Varadhan limit", c8_varadhan},
      {"intrinsic distance", c9_distance},
      {"domain domination", c10_domains},
      {"walker fidelity", c11_walk},
      {"discretization order", c12_order},
  };
  int unexpected = 0;
  int passed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    const bool xfail = expected_fail.count(id) > 0;
    std::printf("C%-2d %s  %s: %s%s\n", id, v.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                v.detail.str().c_str(), xfail ? (v.pass ? " (expected to fail)" : " (known failure)") : "");
    std::fflush(stdout);
    if (v.pass) ++passed;
    if (v.pass == xfail) ++unexpected;
  }
  std::printf("%d/%zu criteria pass", passed, criteria.size());
  if (!expected_fail.empty()) {
    std::printf("; known failures:");
    for (int id : expected_fail) std::printf(" C%d", id);
  }
  std::printf("\n");
  return unexpected == 0 ? 0 : 1;
}
