#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "leafheat/leafgeom.hpp"

namespace leafheat {

struct HolderFit {
  double L = 0.0;
  double alpha = 1.0;
};

/// Constants of the bounded-distortion estimate for log J^u.
struct DistortionConstants {
  double L = 0.0;
  double alpha = 1.0;
  double C = 1.0;
  double lambda = 0.5;
  double diameter = 0.0;
  double K0 = 1.0;
};

struct SRBLeafDensity {
  int order = 0;
  std::vector<double> raw;
  std::vector<double> normalized;
  double error_bound = 0.0;
  DistortionConstants distortion;
};

/// Pairs of attractor points at distance in (0, max_dist), from one orbit.
std::vector<std::pair<Point, Point>> sample_holder_pairs(const HyperbolicSystem& sys, int count,
                                                         double max_dist, std::uint64_t seed);

/// Least-squares fit of log|Δ log J^u| against log d; L carries a 1.5 safety
/// factor and α is capped at 1. Constant Jacobians give L = 0, α = 1.
HolderFit estimate_holder(const HyperbolicSystem& sys,
                          const std::vector<std::pair<Point, Point>>& pairs);
/// Same fit on precomputed (distance, |Δ log J|) data.
HolderFit fit_holder(const std::vector<double>& distances, const std::vector<double>& deltas);

DistortionConstants distortion_constants(const HyperbolicSystem& sys, const HolderFit& fit,
                                         double diameter);

/// Certified tail L C^α λ^{nα} diam^α K₀ / (1 − λ^α).
double truncation_bound(const DistortionConstants& dc, int n);
/// Smallest n whose truncation bound is below `tol`.
int default_order(const DistortionConstants& dc, double tol = 1e-6);

/// log J^u(f^{-j}(y_i)) for every node i and 1 ≤ j ≤ depth (column j−1).
struct LeafJacobians {
  std::vector<std::vector<double>> log_j;  // [node][j-1]
  int base_index = 0;
  int depth = 0;
};

LeafJacobians leaf_log_jacobians(const HyperbolicSystem& sys, const LeafSegment& leaf, int depth);

SRBLeafDensity srb_density(const LeafSegment& leaf, const LeafJacobians& jac, int n,
                           const DistortionConstants& dc);
SRBLeafDensity srb_density(const HyperbolicSystem& sys, const LeafSegment& leaf, int n,
                           const DistortionConstants& dc);

/// Trapezoid rule on a uniform grid.
double trapezoid(const std::vector<double>& values, double h);

struct QuotientEstimate {
  std::vector<double> weights;
  std::vector<long> counts;
  long hits = 0;
  long steps = 0;
  std::uint64_t seed = 0;
  int burn_in = 0;
};

/// Orbit averaging: bins the hits of one long orbit by stable projection.
QuotientEstimate estimate_quotient_weights(const HyperbolicSystem& sys, const Rectangle& rect,
                                           int n_iter, long n_samples, std::uint64_t seed,
                                           long max_steps = 0);

struct Disintegration {
  std::vector<double> weights;
  std::vector<std::vector<long>> counts;        // [leaf][arc bin]
  std::vector<std::vector<double>> conditional;  // counts / leaf total
  long total = 0;
};

/// Bins samples by leaf and by arc-length cell [s_i, s_{i+1}).
Disintegration disintegrate(const HyperbolicSystem& sys, const std::vector<Point>& samples,
                            const Rectangle& rect);

struct SRBSpec {
  std::optional<int> n;
  long n_samples = 100000;
  std::uint64_t seed = 1;
  int burn_in = kDefaultBurnIn;
  long max_steps = 0;
  int holder_pairs = 2000;
  double tail_tol = 1e-6;
};

/// SRB data for every leaf of a rectangle plus provenance.
struct SRBTable {
  std::vector<SRBLeafDensity> leaves;
  std::vector<double> weights;
  DistortionConstants distortion;
  HolderFit holder;
  int order = 0;
  long n_samples = 0;
  long hits = 0;
  std::uint64_t seed = 0;
  int burn_in = 0;
  std::string key;

  nlohmann::json to_json() const;
  static SRBTable from_json(const nlohmann::json& j);
};

SRBTable compute_srb_table(const HyperbolicSystem& sys, const Rectangle& rect,
                           const SRBSpec& spec);

/// 64-bit FNV-1a of the compact JSON dump, as 16 hex digits.
std::string content_hash(const nlohmann::json& j);
std::string srb_cache_key(const HyperbolicSystem& sys, const Rectangle& rect, const SRBSpec& spec);

/// Loads the table from `cache_dir` when present, otherwise computes and
/// stores it. `hit` reports which happened.
SRBTable cached_srb_table(const HyperbolicSystem& sys, const Rectangle& rect, const SRBSpec& spec,
                          const std::string& cache_dir, bool* hit = nullptr);

}  // namespace leafheat
