#include "leafheat/srb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "leafheat/parallel.hpp"

namespace leafheat {

std::vector<std::pair<Point, Point>> sample_holder_pairs(const HyperbolicSystem& sys, int count,
                                                         double max_dist, std::uint64_t seed) {
  if (count < 1 || !(max_dist > 0.0)) throw InvalidArgument("holder pairs need count >= 1");
  const int pool_size = std::max(200, 2 * count);
  std::vector<Point> pool;
  pool.reserve(pool_size);
  Point x = attractor_point(sys, seed);
  for (int k = 0; k < pool_size; ++k) {
    x = sys.apply(x);
    pool.push_back(x);
  }
  std::mt19937_64 rng(seed ^ 0xa5a5a5a5a5a5a5a5ULL);
  std::uniform_int_distribution<int> pick(0, pool_size - 1);
  std::vector<std::pair<Point, Point>> pairs;
  const long budget = 2000L * count;
  for (long tries = 0; tries < budget && static_cast<int>(pairs.size()) < count; ++tries) {
    const Point& a = pool[pick(rng)];
    const Point& b = pool[pick(rng)];
    const double d = sys.distance(a, b);
    if (d > 0.0 && d < max_dist) pairs.emplace_back(a, b);
  }
  if (static_cast<int>(pairs.size()) < count) {
    throw NumericalError("holder pairs: too few attractor points within the requested distance");
  }
  return pairs;
}

HolderFit fit_holder(const std::vector<double>& distances, const std::vector<double>& deltas) {
  if (distances.size() != deltas.size()) throw InvalidArgument("fit_holder: size mismatch");
  double max_delta = 0.0;
  for (double v : deltas) max_delta = std::max(max_delta, v);
  if (max_delta <= 1e-12) return {0.0, 1.0};
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    if (deltas[k] > 1e-14 && distances[k] > 0.0) {
      lx.push_back(std::log(distances[k]));
      ly.push_back(std::log(deltas[k]));
    }
  }
  if (lx.size() < 3) return {0.0, 1.0};
  const double n = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  double alpha = sxx > 0.0 ? sxy / sxx : 1.0;
  if (!(alpha > 0.0)) throw NumericalError("holder fit: non-positive exponent");
  alpha = std::min(alpha, 1.0);
  const double intercept = my - alpha * mx;
  return {1.5 * std::exp(intercept), alpha};
}

HolderFit estimate_holder(const HyperbolicSystem& sys,
                          const std::vector<std::pair<Point, Point>>& pairs) {
  std::vector<double> d(pairs.size());
  std::vector<double> delta(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t k) {
    const auto& [a, b] = pairs[k];
    d[k] = sys.distance(a, b);
    delta[k] = std::abs(std::log(unstable_jacobian(sys, a)) - std::log(unstable_jacobian(sys, b)));
  });
  return fit_holder(d, delta);
}

DistortionConstants distortion_constants(const HyperbolicSystem& sys, const HolderFit& fit,
                                         double diameter) {
  DistortionConstants dc;
  dc.L = fit.L;
  dc.alpha = fit.alpha;
  dc.C = sys.hyperbolicity().C;
  dc.lambda = sys.hyperbolicity().lambda;
  dc.diameter = diameter;
  const double la = std::pow(dc.lambda, dc.alpha);
  dc.K0 = std::exp(dc.L * std::pow(dc.C, dc.alpha) * la * std::pow(diameter, dc.alpha) / (1.0 - la));
  return dc;
}

double truncation_bound(const DistortionConstants& dc, int n) {
  const double la = std::pow(dc.lambda, dc.alpha);
  return dc.L * std::pow(dc.C, dc.alpha) * std::pow(dc.lambda, n * dc.alpha) *
         std::pow(dc.diameter, dc.alpha) * dc.K0 / (1.0 - la);
}

int default_order(const DistortionConstants& dc, double tol) {
  for (int n = 0; n <= 400; ++n) {
    if (truncation_bound(dc, n) < tol) return n;
  }
  throw NumericalError("default_order: truncation bound does not reach the tolerance");
}

LeafJacobians leaf_log_jacobians(const HyperbolicSystem& sys, const LeafSegment& leaf, int depth) {
  if (depth < 0) throw InvalidArgument("leaf_log_jacobians needs depth >= 0");
  LeafJacobians out;
  out.depth = depth;
  out.base_index = leaf.base_index();
  out.log_j.assign(leaf.size(), std::vector<double>(depth));
  if (depth == 0) return out;
  parallel_for(leaf.size(), [&](std::size_t i) {
    const BackwardFrame frame = backward_frame(sys, leaf.qnodes[i], depth);
    for (int j = 1; j <= depth; ++j) {
      if (!sys.in_trapping_region(frame.points[j], 1e-6)) {
        throw NumericalError("srb_density: backward orbit left the attractor neighbourhood");
      }
      out.log_j[i][j - 1] = frame.log_jacobians[j];
    }
  });
  return out;
}

double trapezoid(const std::vector<double>& values, double h) {
  if (values.size() < 2) throw InvalidArgument("trapezoid needs at least two values");
  double s = 0.5 * (values.front() + values.back());
  for (std::size_t i = 1; i + 1 < values.size(); ++i) s += values[i];
  return s * h;
}

SRBLeafDensity srb_density(const LeafSegment& leaf, const LeafJacobians& jac, int n,
                           const DistortionConstants& dc) {
  if (n < 0) throw InvalidArgument("srb_density needs n >= 0");
  if (n > jac.depth) throw InvalidArgument("srb_density: order exceeds the available depth");
  if (jac.log_j.size() != leaf.size()) throw InvalidArgument("srb_density: table/leaf mismatch");
  SRBLeafDensity out;
  out.order = n;
  out.distortion = dc;
  out.raw.resize(leaf.size());
  const auto& base = jac.log_j[jac.base_index];
  for (std::size_t i = 0; i < leaf.size(); ++i) {
    double log_rho = 0.0;
    for (int j = 0; j < n; ++j) log_rho += base[j] - jac.log_j[i][j];
    out.raw[i] = std::exp(log_rho);
  }
  const double mass = trapezoid(out.raw, leaf.h);
  out.normalized.resize(leaf.size());
  for (std::size_t i = 0; i < leaf.size(); ++i) out.normalized[i] = out.raw[i] / mass;
  out.error_bound = truncation_bound(dc, n);
  return out;
}

SRBLeafDensity srb_density(const HyperbolicSystem& sys, const LeafSegment& leaf, int n,
                           const DistortionConstants& dc) {
  return srb_density(leaf, leaf_log_jacobians(sys, leaf, n), n, dc);
}

QuotientEstimate estimate_quotient_weights(const HyperbolicSystem& sys, const Rectangle& rect,
                                           int n_iter, long n_samples, std::uint64_t seed,
                                           long max_steps) {
  if (n_samples < 1) throw InvalidArgument("quotient weights need n_samples >= 1");
  if (n_iter < 0) throw InvalidArgument("quotient weights need n_iter >= 0");
  QuotientEstimate est;
  est.seed = seed;
  est.burn_in = n_iter;
  est.counts.assign(rect.leaf_count(), 0);
  const long cap = max_steps > 0 ? max_steps : 1000 * n_samples;
  Point x = attractor_point(sys, seed, n_iter);
  while (est.hits < n_samples && est.steps < cap) {
    x = sys.apply(x);
    ++est.steps;
    const auto loc = locate(sys, rect, x);
    if (!loc) continue;
    ++est.counts[loc->leaf];
    ++est.hits;
  }
  if (est.hits == 0) throw NumericalError("quotient weights: the orbit never hit the rectangle");
  est.weights.resize(est.counts.size());
  for (std::size_t j = 0; j < est.counts.size(); ++j) {
    est.weights[j] = static_cast<double>(est.counts[j]) / static_cast<double>(est.hits);
  }
  return est;
}

Disintegration disintegrate(const HyperbolicSystem& sys, const std::vector<Point>& samples,
                            const Rectangle& rect) {
  const int bins = rect.nodes_per_leaf() - 1;
  Disintegration out;
  out.counts.assign(rect.leaf_count(), std::vector<long>(bins, 0));
  for (const Point& q : samples) {
    const auto loc = locate(sys, rect, q);
    if (!loc) throw InvalidArgument("disintegrate: sample outside the rectangle");
    const auto& arc = rect.leaves[loc->leaf].arc;
    int b = static_cast<int>(std::floor((loc->s - arc.front()) / rect.h));
    b = std::clamp(b, 0, bins - 1);
    ++out.counts[loc->leaf][b];
    ++out.total;
  }
  out.weights.assign(rect.leaf_count(), 0.0);
  out.conditional.assign(rect.leaf_count(), std::vector<double>(bins, 0.0));
  for (int j = 0; j < rect.leaf_count(); ++j) {
    long n = 0;
    for (long c : out.counts[j]) n += c;
    if (out.total > 0) out.weights[j] = static_cast<double>(n) / static_cast<double>(out.total);
    if (n == 0) continue;
    for (int b = 0; b < bins; ++b) {
      out.conditional[j][b] = static_cast<double>(out.counts[j][b]) / static_cast<double>(n);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tables and cache

std::string content_hash(const nlohmann::json& j) {
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

nlohmann::json spec_json(const SRBSpec& spec) {
  nlohmann::json j;
  j["n"] = spec.n ? nlohmann::json(*spec.n) : nlohmann::json(nullptr);
  j["n_samples"] = spec.n_samples;
  j["seed"] = spec.seed;
  j["burn_in"] = spec.burn_in;
  j["max_steps"] = spec.max_steps;
  j["holder_pairs"] = spec.holder_pairs;
  j["tail_tol"] = spec.tail_tol;
  return j;
}

}  // namespace

std::string srb_cache_key(const HyperbolicSystem& sys, const Rectangle& rect,
                          const SRBSpec& spec) {
  nlohmann::json j;
  j["system"] = sys.to_json();
  j["rectangle"] = rect.to_json();
  j["srb"] = spec_json(spec);
  j["version"] = LEAFHEAT_VERSION;
  return content_hash(j);
}

SRBTable compute_srb_table(const HyperbolicSystem& sys, const Rectangle& rect,
                           const SRBSpec& spec) {
  SRBTable table;
  table.holder = estimate_holder(
      sys, sample_holder_pairs(sys, spec.holder_pairs, sys.scales().eps, spec.seed));
  table.distortion = distortion_constants(sys, table.holder, 2.0 * rect.eps);
  table.order = spec.n ? *spec.n : default_order(table.distortion, spec.tail_tol);
  for (const LeafSegment& leaf : rect.leaves) {
    table.leaves.push_back(srb_density(sys, leaf, table.order, table.distortion));
  }
  table.n_samples = spec.n_samples;
  table.seed = spec.seed;
  table.burn_in = spec.burn_in;
  if (rect.leaf_count() == 1) {
    table.weights = {1.0};
  } else if (spec.n_samples > 0) {
    const QuotientEstimate q = estimate_quotient_weights(sys, rect, spec.burn_in, spec.n_samples,
                                                         spec.seed, spec.max_steps);
    table.weights = q.weights;
    table.hits = q.hits;
  } else {
    table.weights = rect.quotient_weights;
  }
  table.key = srb_cache_key(sys, rect, spec);
  return table;
}

nlohmann::json SRBTable::to_json() const {
  nlohmann::json j;
  j["key"] = key;
  j["order"] = order;
  j["n_samples"] = n_samples;
  j["hits"] = hits;
  j["seed"] = seed;
  j["burn_in"] = burn_in;
  j["weights"] = weights;
  j["holder"] = {{"L", holder.L}, {"alpha", holder.alpha}};
  j["distortion"] = {{"L", distortion.L},         {"alpha", distortion.alpha},
                     {"C", distortion.C},         {"lambda", distortion.lambda},
                     {"diameter", distortion.diameter}, {"K0", distortion.K0}};
  nlohmann::json lj = nlohmann::json::array();
  for (const auto& d : leaves) {
    lj.push_back({{"order", d.order},
                  {"raw", d.raw},
                  {"normalized", d.normalized},
                  {"error_bound", d.error_bound}});
  }
  j["leaves"] = std::move(lj);
  return j;
}

SRBTable SRBTable::from_json(const nlohmann::json& j) {
  try {
    SRBTable t;
    t.key = j.at("key").get<std::string>();
    t.order = j.at("order").get<int>();
    t.n_samples = j.at("n_samples").get<long>();
    t.hits = j.at("hits").get<long>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.burn_in = j.at("burn_in").get<int>();
    t.weights = j.at("weights").get<std::vector<double>>();
    t.holder = {j.at("holder").at("L").get<double>(), j.at("holder").at("alpha").get<double>()};
    const auto& dj = j.at("distortion");
    t.distortion = {dj.at("L").get<double>(),      dj.at("alpha").get<double>(),
                    dj.at("C").get<double>(),      dj.at("lambda").get<double>(),
                    dj.at("diameter").get<double>(), dj.at("K0").get<double>()};
    for (const auto& lj : j.at("leaves")) {
      SRBLeafDensity d;
      d.order = lj.at("order").get<int>();
      d.raw = lj.at("raw").get<std::vector<double>>();
      d.normalized = lj.at("normalized").get<std::vector<double>>();
      d.error_bound = lj.at("error_bound").get<double>();
      d.distortion = t.distortion;
      t.leaves.push_back(std::move(d));
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed SRB table: ") + e.what());
  }
}

SRBTable cached_srb_table(const HyperbolicSystem& sys, const Rectangle& rect, const SRBSpec& spec,
                          const std::string& cache_dir, bool* hit) {
  namespace fs = std::filesystem;
  const std::string key = srb_cache_key(sys, rect, spec);
  const fs::path path = fs::path(cache_dir) / ("srb-" + key + ".json");
  if (fs::exists(path)) {
    std::ifstream in(path);
    nlohmann::json j;
    try {
      in >> j;
      SRBTable t = SRBTable::from_json(j);
      if (t.key == key && t.leaves.size() == rect.leaves.size()) {
        if (hit) *hit = true;
        return t;
      }
    } catch (const std::exception&) {
      // unreadable cache entries are recomputed and overwritten
    }
  }
  SRBTable t = compute_srb_table(sys, rect, spec);
  fs::create_directories(cache_dir);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << t.to_json().dump();
  }
  fs::rename(tmp, path);
  if (hit) *hit = false;
  return t;
}

}  // namespace leafheat
