#include "leafheat/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "leafheat/parallel.hpp"

namespace leafheat {

namespace {

std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

std::size_t next_node(const Generator& gen, std::size_t x, double u) {
  const auto& js = gen.jumps[x];
  double acc = 0.0;
  const double target = u * gen.total_rate[x];
  for (const auto& [y, r] : js) {
    acc += r;
    if (target < acc) return y;
  }
  return js.back().first;
}

template <class Visit>
void run_chain(const Generator& gen, std::size_t x0, double T, std::mt19937_64& rng, Visit visit) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::size_t x = x0;
  double t = 0.0;
  while (gen.total_rate[x] > 0.0) {
    std::exponential_distribution<double> hold(gen.total_rate[x]);
    t += hold(rng);
    if (t > T) break;
    x = next_node(gen, x, unif(rng));
    visit(t, x);
  }
}

}  // namespace

Generator make_generator(const DiscreteForm& form, const DiscreteMeasure& measure) {
  if (measure.mass.size() != form.node_count) {
    throw InvalidArgument("make_generator: form and measure sizes differ");
  }
  Generator g;
  const std::size_t n = form.node_count;
  g.jumps.resize(n);
  g.flux.resize(n);
  g.total_rate.assign(n, 0.0);
  g.leaf.assign(n, -1);
  g.mass = measure.mass;
  for (std::size_t j = 0; j < form.blocks.size(); ++j) {
    const LeafBlock& b = form.blocks[j];
    for (int i = 0; i < b.size; ++i) g.leaf[b.offset + i] = static_cast<int>(j);
    for (int i = 0; i + 1 < b.size; ++i) {
      const std::size_t k = b.offset + i;
      const double c = b.conductance[i];
      g.jumps[k].emplace_back(k + 1, c / g.mass[k]);
      g.jumps[k + 1].emplace_back(k, c / g.mass[k + 1]);
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (const auto& [y, r] : g.jumps[k]) {
      g.total_rate[k] += r;
      g.flux[k].push_back(g.mass[k] * r);
    }
  }
  return g;
}

double detailed_balance_defect(const Generator& gen) {
  double worst = 0.0;
  for (std::size_t i = 0; i < gen.size(); ++i) {
    for (std::size_t a = 0; a < gen.jumps[i].size(); ++a) {
      const std::size_t j = gen.jumps[i][a].first;
      for (std::size_t b = 0; b < gen.jumps[j].size(); ++b) {
        if (gen.jumps[j][b].first == i) {
          worst = std::max(worst, std::abs(gen.flux[i][a] - gen.flux[j][b]));
        }
      }
    }
  }
  return worst;
}

std::size_t WalkPath::position(double t) const {
  if (t < 0.0) throw InvalidArgument("WalkPath::position needs t >= 0");
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  return nodes[static_cast<std::size_t>(it - times.begin()) - 1];
}

int WalkPath::leaf_changes(const Generator& gen) const {
  int n = 0;
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    if (gen.leaf[nodes[k]] != gen.leaf[nodes[k - 1]]) ++n;
  }
  return n;
}

WalkPath simulate(const Generator& gen, std::size_t x0, double T, std::uint64_t seed,
                  std::uint64_t stream) {
  if (x0 >= gen.size()) throw InvalidArgument("simulate: start node out of range");
  if (!(T > 0.0)) throw InvalidArgument("simulate: T must be positive");
  WalkPath p;
  p.start = x0;
  p.seed = seed;
  p.stream = stream;
  p.times.push_back(0.0);
  p.nodes.push_back(x0);
  auto rng = stream_engine(seed, stream);
  run_chain(gen, x0, T, rng, [&](double t, std::size_t x) {
    p.times.push_back(t);
    p.nodes.push_back(x);
  });
  return p;
}

WalkSample simulate_positions(const Generator& gen, std::size_t x0, double t, int n_paths,
                              std::uint64_t seed) {
  if (x0 >= gen.size()) throw InvalidArgument("simulate: start node out of range");
  if (t < 0.0) throw InvalidArgument("simulate: t must be >= 0");
  if (n_paths <= 0) throw InvalidArgument("simulate: need at least one path");
  WalkSample out;
  out.positions.assign(n_paths, x0);
  std::vector<long> jumps(n_paths, 0);
  std::vector<long> changes(n_paths, 0);
  if (t > 0.0) {
    parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t k) {
      auto rng = stream_engine(seed, k);
      std::size_t prev = x0;
      run_chain(gen, x0, t, rng, [&](double, std::size_t x) {
        ++jumps[k];
        if (gen.leaf[x] != gen.leaf[prev]) ++changes[k];
        prev = x;
      });
      out.positions[k] = prev;
    });
  }
  for (int k = 0; k < n_paths; ++k) {
    out.jumps += jumps[k];
    out.leaf_changes += changes[k];
  }
  return out;
}

NodeFunction empirical_law(const std::vector<std::size_t>& positions, std::size_t node_count) {
  if (positions.empty()) throw InvalidArgument("empirical_law: no paths");
  NodeFunction law(node_count, 0.0);
  for (std::size_t x : positions) {
    if (x >= node_count) throw InvalidArgument("empirical_law: node out of range");
    law[x] += 1.0;
  }
  for (double& v : law) v /= static_cast<double>(positions.size());
  return law;
}

NodeFunction empirical_law(const std::vector<WalkPath>& paths, double t, std::size_t node_count) {
  std::vector<std::size_t> pos;
  pos.reserve(paths.size());
  for (const WalkPath& p : paths) pos.push_back(p.position(t));
  return empirical_law(pos, node_count);
}

double total_variation(const NodeFunction& p, const NodeFunction& q) {
  if (p.size() != q.size()) throw InvalidArgument("total_variation: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

double tv_band(const NodeFunction& law, int n_paths) {
  if (n_paths <= 0) throw InvalidArgument("tv_band: need paths");
  const double n = n_paths;
  double s = 0.0;
  for (double p : law) {
    const double pc = std::clamp(p, 0.0, 1.0);
    s += std::sqrt(pc * (1.0 - pc) / n);
  }
  return 0.5 * s + 3.0 / std::sqrt(2.0 * n);
}

HeatComparison compare_to_heat(const HeatOperator& hop, const Generator& gen, std::size_t x0,
                               double t, int n_paths, std::uint64_t seed) {
  if (n_paths < 1000) throw InvalidArgument("compare_to_heat: at least 1000 paths required");
  if (hop.size() != gen.size()) throw InvalidArgument("compare_to_heat: size mismatch");
  const WalkSample s = simulate_positions(gen, x0, t, n_paths, seed);
  const NodeFunction emp = empirical_law(s.positions, gen.size());
  const NodeFunction exact = hop.row_law(t, x0);
  HeatComparison c;
  c.t = t;
  c.tv = total_variation(emp, exact);
  c.band = tv_band(exact, n_paths);
  c.leaf_changes = s.leaf_changes;
  c.within = c.tv <= c.band;
  return c;
}

}  // namespace leafheat
