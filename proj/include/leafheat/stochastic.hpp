#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "leafheat/heat.hpp"

namespace leafheat {

/// Jump description of the chain with generator L = −M⁻¹A.
struct Generator {
  std::vector<std::vector<std::pair<std::size_t, double>>> jumps;  // (target, rate)
  std::vector<double> total_rate;
  std::vector<int> leaf;
  std::vector<double> mass;
  std::vector<std::vector<double>> flux;  // m_i L_ij, aligned with jumps

  std::size_t size() const { return total_rate.size(); }
};

Generator make_generator(const DiscreteForm& form, const DiscreteMeasure& measure);

/// max |m_i L_ij − m_j L_ji| over all edges.
double detailed_balance_defect(const Generator& gen);

struct WalkPath {
  std::size_t start = 0;
  std::vector<double> times;       // jump times, times[0] = 0
  std::vector<std::size_t> nodes;  // nodes[k] occupied on [times[k], times[k+1])
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::size_t position(double t) const;
  /// Number of consecutive visits that cross from one leaf to another.
  int leaf_changes(const Generator& gen) const;
};

/// Path on [0, T]; the stream index selects an independent RNG sequence.
WalkPath simulate(const Generator& gen, std::size_t x0, double T, std::uint64_t seed,
                  std::uint64_t stream = 0);

struct WalkSample {
  std::vector<std::size_t> positions;  // X_t per path
  long jumps = 0;
  long leaf_changes = 0;
};

/// Positions at time t of n_paths walkers from x0, path k using stream k.
WalkSample simulate_positions(const Generator& gen, std::size_t x0, double t, int n_paths,
                              std::uint64_t seed);

NodeFunction empirical_law(const std::vector<WalkPath>& paths, double t, std::size_t node_count);
NodeFunction empirical_law(const std::vector<std::size_t>& positions, std::size_t node_count);

double total_variation(const NodeFunction& p, const NodeFunction& q);
/// ½ Σ √(p(1−p)/n) + 3/√(2n): mean absolute deviation plus a 3σ-type
/// bounded-difference margin.
double tv_band(const NodeFunction& law, int n_paths);

struct HeatComparison {
  double t = 0.0;
  double tv = 0.0;
  double band = 0.0;
  long leaf_changes = 0;
  bool within = false;
};

HeatComparison compare_to_heat(const HeatOperator& hop, const Generator& gen, std::size_t x0,
                               double t, int n_paths, std::uint64_t seed);

}  // namespace leafheat
