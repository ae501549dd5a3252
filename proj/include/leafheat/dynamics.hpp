#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "leafheat/types.hpp"

namespace leafheat {

/// Constants of the hyperbolicity inequalities ‖df^n v‖ ≤ C λ^n ‖v‖ on E^s
/// and ‖df^{-n} v‖ ≤ C λ^n ‖v‖ on E^u.
struct Hyperbolicity {
  double C = 1.0;
  double lambda = 0.5;
};

/// Sizes for which the local product structure is used: points closer than
/// `delta` have a bracket, local manifolds have radius `eps`.
struct LocalScales {
  double delta = 0.2;
  double eps = 0.25;
};

enum class SystemKind { ToralAutomorphism, Solenoid, DAMap };

/// f_A([x]) = [Ax] on the two-torus.
struct ToralAutomorphism {
  explicit ToralAutomorphism(const Eigen::Matrix2i& matrix);

  Eigen::Matrix2i A;
  Eigen::Matrix2i A_inv;
  double lambda_u = 0.0;  // eigenvalue of modulus > 1 (sign kept)
  double lambda_s = 0.0;
  Eigen::Vector2d v_u;  // unit eigenvectors
  Eigen::Vector2d v_s;
  Eigen::Vector2d w_u;  // dual covector: <w_u, v_u> = 1, <w_u, v_s> = 0
  Eigen::Vector2d w_s;

  template <class R>
  std::array<R, 3> forward(const std::array<R, 3>& x) const;
  template <class R>
  std::array<R, 3> backward(const std::array<R, 3>& x) const;
  Mat3 differential(const Point& x) const;
};

/// f(x, y, θ) = (αx + r cos θ, βy + r sin θ, 2θ) on the solid torus D² × S¹.
struct Solenoid {
  Solenoid(double r, double alpha, double beta);

  double r;
  double alpha;
  double beta;

  template <class R>
  std::array<R, 3> forward(const std::array<R, 3>& x) const;
  /// Preimage on the branch whose (x, y) lands nearest the disk centre.
  template <class R>
  std::array<R, 3> backward(const std::array<R, 3>& x) const;
  Mat3 differential(const Point& x) const;
  /// Bound on |(dx/dθ, dy/dθ)| along unstable leaves.
  double max_leaf_slope() const;
};

/// C¹ cutoff: 1 on [0, r0/2], cubic smoothstep down to 0 at r0, 0 beyond.
struct CutoffProfile {
  double r0 = 0.2;

  template <class R>
  R value(R s) const;
  template <class R>
  R derivative(R s) const;
};

/// Derived-from-Anosov map: F = φ^τ ∘ f_A near the fixed point 0, where φ^t is
/// the flow of α̇₁ = 0, α̇₂ = α₂ h(|α|) in eigen-coordinates. The flow is
/// discretized with the implicit midpoint rule, which is time-reversible, so
/// the inverse map is exact up to the Newton tolerance.
struct DAMap {
  DAMap(const ToralAutomorphism& base, double r0, double tau, int flow_steps = 64);

  ToralAutomorphism base;
  CutoffProfile bump;
  double tau;
  int flow_steps;

  template <class R>
  std::array<R, 3> forward(const std::array<R, 3>& x) const;
  template <class R>
  std::array<R, 3> backward(const std::array<R, 3>& x) const;
  Mat3 differential(const Point& x) const;
};

class HyperbolicSystem {
 public:
  using Variant = std::variant<ToralAutomorphism, Solenoid, DAMap>;

  static HyperbolicSystem cat_map();
  static HyperbolicSystem toral(const Eigen::Matrix2i& A);
  static HyperbolicSystem solenoid(double r = 0.5, double alpha = 0.4, double beta = 0.3);
  /// τ defaults to the value with e^τ λ_s = 1.1.
  static HyperbolicSystem da_map(double r0 = 0.2, std::optional<double> tau = std::nullopt);

  static HyperbolicSystem from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  SystemKind kind() const;
  const Variant& variant() const { return impl_; }
  const std::string& name() const { return name_; }
  int phase_dim() const;
  int unstable_dim() const { return 1; }
  const Hyperbolicity& hyperbolicity() const { return hyp_; }
  const LocalScales& scales() const { return scales_; }

  /// Nominal u-conformal constant a, when the system has one.
  std::optional<double> conformal_constant() const;

  Point apply(const Point& x) const;
  QPoint apply(const QPoint& x) const;
  Point apply_inverse(const Point& x) const;
  QPoint apply_inverse(const QPoint& x) const;
  Mat3 differential(const Point& x) const;

  Point wrap(const Point& x) const;
  QPoint wrap(const QPoint& x) const;
  /// Tangent-chart difference to − from (torus coordinates and θ wrapped).
  Vec3 displacement(const Point& from, const Point& to) const;
  double distance(const Point& p, const Point& q) const;
  /// Moves `x` by the tangent vector `v` and wraps.
  Point translate(const Point& x, const Vec3& v) const;
  QPoint translate(const QPoint& x, const Vec3& v, Quad scale) const;

  /// Reference used to orient unstable directions consistently.
  Vec3 orientation_reference() const;

  /// Coordinate of q's local stable leaf relative to p's: constant along
  /// local stable manifolds, increasing along unstable leaves.
  double unstable_offset(const Point& p, const Point& q) const;
  /// Gradient of q ↦ unstable_offset(p, q).
  Vec3 unstable_offset_gradient(const Point& q) const;
  /// Position of z relative to p inside p's local stable manifold.
  Eigen::Vector2d stable_offset(const Point& p, const Point& z) const;

  /// Uniform sample from the trapping region U.
  Point sample_trapping_region(std::mt19937_64& rng) const;
  /// True when x lies in the (closed) trapping region up to `slack`.
  bool in_trapping_region(const Point& x, double slack = 1e-9) const;

 private:
  HyperbolicSystem(std::string name, Variant impl, Hyperbolicity hyp, LocalScales scales);

  std::string name_;
  Variant impl_;
  Hyperbolicity hyp_;
  LocalScales scales_;
};

inline constexpr int kDefaultDirectionDepth = 30;
inline constexpr int kDefaultBurnIn = 1000;

/// Unit vector spanning E^u(x), obtained by pushing a seed vector forward
/// along the orbit segment f^{-depth}(x), …, x. A seed that collapses onto
/// E^s is replaced by the next deterministic candidate.
TangentVector unstable_direction(const HyperbolicSystem& sys, const Point& x,
                                 int depth = kDefaultDirectionDepth);
TangentVector unstable_direction(const HyperbolicSystem& sys, const Point& x, int depth,
                                 const TangentVector& seed);

/// ‖df(x) e^u(x)‖ (d_u = 1).
double unstable_jacobian(const HyperbolicSystem& sys, const Point& x,
                         int depth = kDefaultDirectionDepth);

/// (1/N) Σ_{k<N} log J^u(f^k x); e^u is transported along the orbit.
double lyapunov_exponent(const HyperbolicSystem& sys, const Point& x, long N,
                         int depth = kDefaultDirectionDepth);

/// x, f^{-1}(x), …, f^{-depth}(x) in extended precision.
std::vector<QPoint> backward_orbit(const HyperbolicSystem& sys, const QPoint& x, int depth);

/// Unstable data along a backward orbit: entry j refers to f^{-j}(x).
struct BackwardFrame {
  std::vector<Point> points;
  std::vector<TangentVector> directions;
  std::vector<double> log_jacobians;
};

/// Backward orbit of x to depth `depth` with e^u and log J^u at every point,
/// each direction resolved with at least `extra` further backward steps.
BackwardFrame backward_frame(const HyperbolicSystem& sys, const QPoint& x, int depth,
                             int extra = kDefaultDirectionDepth);

/// Point on the attractor: `burn_in` forward iterates of a seeded sample
/// from the trapping region.
Point attractor_point(const HyperbolicSystem& sys, std::uint64_t seed,
                      int burn_in = kDefaultBurnIn);
/// Same orbit, with the last `quad_steps` iterates taken in extended precision
/// so that the result lies on the attractor to quad accuracy.
QPoint attractor_point_q(const HyperbolicSystem& sys, std::uint64_t seed,
                         int burn_in = kDefaultBurnIn, int quad_steps = 80);

}  // namespace leafheat
