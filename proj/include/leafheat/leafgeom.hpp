#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "leafheat/dynamics.hpp"

namespace leafheat {

inline constexpr int kDefaultLeafDepth = 25;

/// γ(τ) = f^n(anchor + τ e / G), anchor = f^{-n}(x), e = e^u(anchor) and G
/// the growth of e under df^n, so that τ is close to arc length near τ = 0.
class LeafCurve {
 public:
  LeafCurve(const HyperbolicSystem& sys, const QPoint& x, int n_back);

  QPoint position(double tau) const;
  /// Position and velocity dγ/dτ.
  void evaluate(double tau, QPoint& pos, Vec3& velocity) const;
  double speed(double tau) const;
  /// ∫_a^b ‖γ'(τ)‖ dτ by adaptive Gauss–Legendre quadrature.
  double arc_length(double a, double b) const;
  /// f^{-k}(γ(τ)) for k = 0..n (entry k), in extended precision.
  std::vector<QPoint> backward_images(double tau) const;

  int depth() const { return n_; }

 private:
  const HyperbolicSystem* sys_;
  QPoint anchor_;
  Vec3 direction_;
  double scale_;
  int n_;
};

/// Arc-length gridded piece of a local unstable leaf: node i sits at
/// s_i = (i − m) h, the base is node m.
struct LeafSegment {
  QPoint base_q;
  Point base;
  double eps = 0.0;
  double h = 0.0;
  int n_back = 0;
  std::vector<QPoint> qnodes;
  std::vector<Point> nodes;
  std::vector<TangentVector> tangents;
  std::vector<double> arc;

  std::size_t size() const { return nodes.size(); }
  int base_index() const { return static_cast<int>(nodes.size() / 2); }
};

/// Number m of grid steps on each side of the base; validates eps and h.
int half_node_count(double eps, double h);

LeafSegment trace_leaf(const HyperbolicSystem& sys, const QPoint& x, double eps, double h,
                       int n_back = kDefaultLeafDepth);
LeafSegment trace_leaf(const HyperbolicSystem& sys, const Point& x, double eps, double h,
                       int n_back = kDefaultLeafDepth);

/// Largest d(f^{-n} y, f^{-n} base) / eps over nodes y and 0 ≤ n ≤ n_check.
double backward_contraction_ratio(const HyperbolicSystem& sys, const LeafSegment& leaf,
                                  int n_check);

/// [p, q] = W^s(p) ∩ W^u(q). Uses exact formulas where the system has them.
QPoint bracket(const HyperbolicSystem& sys, const QPoint& p, const QPoint& q);
Point bracket(const HyperbolicSystem& sys, const Point& p, const Point& q);
/// Newton iteration along the unstable leaf of q onto the stable leaf of p.
QPoint bracket_iterative(const HyperbolicSystem& sys, const QPoint& p, const QPoint& q,
                         int max_iter = 100, double tol = 1e-10);

enum class TransversalMode { EquallySpaced, OrbitSampled };

struct RectangleSpec {
  std::optional<Point> base;
  std::uint64_t seed = 1;
  int burn_in = kDefaultBurnIn;
  double eps = 0.25;
  double h = 0.25 / 32;
  int J = 8;
  double stable_radius = 0.1;
  int n_back = kDefaultLeafDepth;
  TransversalMode mode = TransversalMode::EquallySpaced;
  long orbit_steps = 200000;
};

struct LeafLocation {
  int leaf = 0;
  double s = 0.0;
};

/// Finite family of leaf segments through transversal points z_j on the
/// local stable manifold of the base.
struct Rectangle {
  QPoint base_q;
  Point base;
  double eps = 0.0;
  double h = 0.0;
  double stable_radius = 0.0;
  int n_back = 0;
  TransversalMode mode = TransversalMode::EquallySpaced;
  std::vector<QPoint> transversals_q;
  std::vector<Point> transversals;
  std::vector<Eigen::Vector2d> stable_coords;
  std::vector<LeafSegment> leaves;
  // ξ_{j,i} = unstable_offset(base, node) and dξ/ds per node.
  std::vector<std::vector<double>> xi;
  std::vector<std::vector<double>> dxi;
  std::vector<double> quotient_weights;
  double diameter = 0.0;

  int leaf_count() const { return static_cast<int>(leaves.size()); }
  int nodes_per_leaf() const { return leaves.empty() ? 0 : static_cast<int>(leaves[0].size()); }
  std::size_t node_count() const {
    return static_cast<std::size_t>(leaf_count()) * static_cast<std::size_t>(nodes_per_leaf());
  }
  std::size_t node_index(int leaf, int i) const {
    return static_cast<std::size_t>(leaf) * nodes_per_leaf() + static_cast<std::size_t>(i);
  }
  const Point& node(std::size_t k) const {
    return leaves[k / nodes_per_leaf()].nodes[k % nodes_per_leaf()];
  }
  int leaf_of(std::size_t k) const { return static_cast<int>(k / nodes_per_leaf()); }

  nlohmann::json to_json() const;
  static Rectangle from_json(const nlohmann::json& j);
};

Rectangle build_rectangle(const HyperbolicSystem& sys, const RectangleSpec& spec);

/// Checks bracket closure on `pairs` sampled node pairs; returns the largest
/// excess (0 when every bracket lands in the rectangle up to `tol`).
double bracket_closure_defect(const HyperbolicSystem& sys, const Rectangle& rect, int pairs,
                              std::uint64_t seed, double tol = 1e-9);

/// Stable-side coordinate of [base, q] relative to the base.
Eigen::Vector2d stable_coordinate(const HyperbolicSystem& sys, const Rectangle& rect,
                                  const Point& q);
/// Arc-length coordinate on leaf j of the point whose offset is ξ.
std::optional<double> leaf_coordinate(const Rectangle& rect, int leaf, double xi);
/// Leaf index and arc-length coordinate of q, or nullopt when q is outside.
std::optional<LeafLocation> locate(const HyperbolicSystem& sys, const Rectangle& rect,
                                   const Point& q);
/// Leaf whose transversal is nearest to [base, q]; throws when q is outside.
int stable_projection(const HyperbolicSystem& sys, const Rectangle& rect, const Point& q);

}  // namespace leafheat
