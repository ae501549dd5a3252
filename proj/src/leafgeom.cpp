#include "leafheat/leafgeom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <boost/math/constants/constants.hpp>

namespace leafheat {

namespace {

constexpr double kGaussNodes[5] = {0.0, -0.5384693101056831, 0.5384693101056831,
                                   -0.9061798459386640, 0.9061798459386640};
constexpr double kGaussWeights[5] = {0.5688888888888889, 0.4786286704993665,
                                     0.4786286704993665, 0.2369268850561891,
                                     0.2369268850561891};

Quad centered_unit(Quad v) {
  using boost::multiprecision::round;
  return v - round(v);
}

Quad centered_angle(Quad v) {
  using boost::multiprecision::round;
  const Quad tp = boost::math::constants::two_pi<Quad>();
  return v - tp * round(v / tp);
}

// to − from in the tangent chart, in extended precision.
std::array<Quad, 3> displacement_q(const HyperbolicSystem& sys, const QPoint& from,
                                   const QPoint& to) {
  if (sys.kind() == SystemKind::Solenoid) {
    return {to[0] - from[0], to[1] - from[1], centered_angle(to[2] - from[2])};
  }
  return {centered_unit(to[0] - from[0]), centered_unit(to[1] - from[1]), Quad(0)};
}

// Inverse-limit series: the point of W^u(q) on the θ-slice of p.
template <class R>
std::array<R, 3> solenoid_bracket(const Solenoid& s, const std::array<R, 3>& p,
                                  const std::array<R, 3>& q, int depth) {
  using std::cos;
  using std::sin;
  const R tp = boost::math::constants::two_pi<R>();
  R delta = p[2] - q[2];
  {
    using std::round;
    delta -= tp * round(delta / tp);
  }
  R dx = R(0);
  R dy = R(0);
  R ak = R(1);
  R bk = R(1);
  R shift = delta;
  std::array<R, 3> back = q;
  for (int k = 1; k <= depth; ++k) {
    back = s.backward(back);
    shift /= R(2);
    dx += ak * R(s.r) * (cos(back[2] + shift) - cos(back[2]));
    dy += bk * R(s.r) * (sin(back[2] + shift) - sin(back[2]));
    ak *= R(s.alpha);
    bk *= R(s.beta);
  }
  return {q[0] + dx, q[1] + dy, p[2]};
}

}  // namespace

// ---------------------------------------------------------------------------
// LeafCurve

LeafCurve::LeafCurve(const HyperbolicSystem& sys, const QPoint& x, int n_back)
    : sys_(&sys), anchor_(x), scale_(1.0), n_(n_back) {
  if (n_back < 1) throw InvalidArgument("leaf tracing needs n_back >= 1");
  for (int k = 0; k < n_; ++k) anchor_ = sys.apply_inverse(anchor_);
  direction_ = unstable_direction(sys, to_double(anchor_));
  Vec3 v = direction_;
  QPoint p = anchor_;
  double log_growth = 0.0;
  for (int k = 0; k < n_; ++k) {
    v = sys.differential(to_double(p)) * v;
    const double nv = v.norm();
    log_growth += std::log(nv);
    v /= nv;
    p = sys.apply(p);
  }
  scale_ = std::exp(-log_growth);
  if (v.dot(sys.orientation_reference()) < 0.0) scale_ = -scale_;
}

void LeafCurve::evaluate(double tau, QPoint& pos, Vec3& velocity) const {
  pos = sys_->translate(anchor_, direction_, Quad(tau) * Quad(scale_));
  velocity = direction_ * scale_;
  for (int k = 0; k < n_; ++k) {
    velocity = sys_->differential(to_double(pos)) * velocity;
    pos = sys_->apply(pos);
  }
}

QPoint LeafCurve::position(double tau) const {
  QPoint p = sys_->translate(anchor_, direction_, Quad(tau) * Quad(scale_));
  for (int k = 0; k < n_; ++k) p = sys_->apply(p);
  return p;
}

double LeafCurve::speed(double tau) const {
  QPoint p;
  Vec3 v;
  evaluate(tau, p, v);
  return v.norm();
}

std::vector<QPoint> LeafCurve::backward_images(double tau) const {
  std::vector<QPoint> forward(n_ + 1);
  forward[0] = sys_->translate(anchor_, direction_, Quad(tau) * Quad(scale_));
  for (int k = 1; k <= n_; ++k) forward[k] = sys_->apply(forward[k - 1]);
  std::reverse(forward.begin(), forward.end());
  return forward;
}

double LeafCurve::arc_length(double a, double b) const {
  if (a == b) return 0.0;
  auto gl5 = [this](double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    double sum = 0.0;
    for (int k = 0; k < 5; ++k) sum += kGaussWeights[k] * speed(mid + half * kGaussNodes[k]);
    return sum * half;
  };
  auto adapt = [&](auto&& self, double lo, double hi, double whole, int level) -> double {
    const double mid = 0.5 * (lo + hi);
    const double left = gl5(lo, mid);
    const double right = gl5(mid, hi);
    const double refined = left + right;
    if (level >= 24 || std::abs(refined - whole) <= 1e-14 * std::abs(refined)) return refined;
    return self(self, lo, mid, left, level + 1) + self(self, mid, hi, right, level + 1);
  };
  return adapt(adapt, a, b, gl5(a, b), 0);
}

// ---------------------------------------------------------------------------
// Leaf tracing

int half_node_count(double eps, double h) {
  if (!(eps > 0.0) || !(h > 0.0)) throw InvalidArgument("leaf needs eps > 0 and h > 0");
  if (h > eps / 16.0 * (1.0 + 1e-12)) throw InvalidArgument("leaf needs h <= eps/16");
  const double ratio = eps / h;
  const long m = std::lround(ratio);
  if (std::abs(static_cast<double>(m) * h - eps) > 1e-9 * eps) {
    throw InvalidArgument("leaf needs eps to be an integer multiple of h");
  }
  return static_cast<int>(m);
}

LeafSegment trace_leaf(const HyperbolicSystem& sys, const QPoint& x, double eps, double h,
                       int n_back) {
  const int m = half_node_count(eps, h);
  const LeafCurve curve(sys, x, n_back);

  std::vector<double> taus(2 * m + 1, 0.0);
  for (const int dir : {1, -1}) {
    double tau_prev = 0.0;
    for (int i = 1; i <= m; ++i) {
      double tau = tau_prev + dir * h / curve.speed(tau_prev);
      bool converged = false;
      for (int it = 0; it < 50; ++it) {
        const double residual = curve.arc_length(tau_prev, tau) - dir * h;
        const double step = residual / curve.speed(tau);
        tau -= step;
        if (std::abs(residual) <= 1e-13 * h) {
          converged = true;
          break;
        }
      }
      if (!converged) throw NumericalError("leaf tracing: arc-length Newton did not converge");
      taus[m + dir * i] = tau;
      tau_prev = tau;
    }
  }

  LeafSegment leaf;
  leaf.base_q = x;
  leaf.base = to_double(x);
  leaf.eps = eps;
  leaf.h = h;
  leaf.n_back = n_back;
  leaf.qnodes.resize(taus.size());
  leaf.nodes.resize(taus.size());
  leaf.tangents.resize(taus.size());
  leaf.arc.resize(taus.size());
  for (std::size_t i = 0; i < taus.size(); ++i) {
    Vec3 vel;
    curve.evaluate(taus[i], leaf.qnodes[i], vel);
    leaf.nodes[i] = to_double(leaf.qnodes[i]);
    leaf.tangents[i] = vel.normalized();
    leaf.arc[i] = (static_cast<double>(i) - m) * h;
  }
  leaf.qnodes[m] = x;
  leaf.nodes[m] = leaf.base;

  const Vec3& t0 = leaf.tangents[m];
  double prev = -std::numeric_limits<double>::infinity();
  for (const Point& y : leaf.nodes) {
    const double proj = sys.displacement(leaf.base, y).dot(t0);
    if (!(proj > prev)) {
      throw NumericalError("leaf tracing: fold-over along the leaf (eps too large)");
    }
    prev = proj;
  }
  return leaf;
}

LeafSegment trace_leaf(const HyperbolicSystem& sys, const Point& x, double eps, double h,
                       int n_back) {
  return trace_leaf(sys, to_quad(x), eps, h, n_back);
}

double backward_contraction_ratio(const HyperbolicSystem& sys, const LeafSegment& leaf,
                                  int n_check) {
  const auto base_orbit = backward_orbit(sys, leaf.base_q, n_check);
  double worst = 0.0;
  for (const QPoint& y : leaf.qnodes) {
    QPoint p = y;
    for (int n = 0; n <= n_check; ++n) {
      if (n > 0) p = sys.apply_inverse(p);
      const double d = sys.distance(to_double(p), to_double(base_orbit[n]));
      worst = std::max(worst, d / leaf.eps);
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Bracket

QPoint bracket_iterative(const HyperbolicSystem& sys, const QPoint& p, const QPoint& q,
                         int max_iter, double tol) {
  const LeafCurve curve(sys, q, kDefaultLeafDepth);
  const Point pd = to_double(p);
  double tau = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    QPoint pos;
    Vec3 vel;
    curve.evaluate(tau, pos, vel);
    const Point posd = to_double(pos);
    const double f = sys.unstable_offset(pd, posd);
    const double df = sys.unstable_offset_gradient(posd).dot(vel);
    if (!(std::abs(df) > 0.0)) break;
    double step = f / df;
    step = std::clamp(step, -0.5, 0.5);
    tau -= step;
    if (std::abs(f) <= 1e-15 || std::abs(step) <= 1e-16 * (1.0 + std::abs(tau))) {
      if (std::abs(f) <= tol) return curve.position(tau);
      break;
    }
  }
  const QPoint r = curve.position(tau);
  if (std::abs(sys.unstable_offset(pd, to_double(r))) <= tol) return r;
  throw NumericalError("bracket: no convergence within the iteration budget (points too far apart)");
}

QPoint bracket(const HyperbolicSystem& sys, const QPoint& p, const QPoint& q) {
  switch (sys.kind()) {
    case SystemKind::ToralAutomorphism: {
      const auto& t = std::get<ToralAutomorphism>(sys.variant());
      const auto d = displacement_q(sys, p, q);
      const Quad c = Quad(t.w_s[0]) * d[0] + Quad(t.w_s[1]) * d[1];
      return sys.wrap(QPoint{p[0] + c * Quad(t.v_s[0]), p[1] + c * Quad(t.v_s[1]), Quad(0)});
    }
    case SystemKind::Solenoid:
      return solenoid_bracket(std::get<Solenoid>(sys.variant()), p, q, 80);
    case SystemKind::DAMap:
      return bracket_iterative(sys, p, q);
  }
  throw InvalidArgument("bracket: unknown system");
}

Point bracket(const HyperbolicSystem& sys, const Point& p, const Point& q) {
  switch (sys.kind()) {
    case SystemKind::ToralAutomorphism: {
      const auto& t = std::get<ToralAutomorphism>(sys.variant());
      const double c = t.w_s.dot(sys.displacement(p, q).head<2>());
      return sys.translate(p, Vec3(c * t.v_s[0], c * t.v_s[1], 0.0));
    }
    case SystemKind::Solenoid: {
      const auto r = solenoid_bracket(std::get<Solenoid>(sys.variant()),
                                      std::array<double, 3>{p[0], p[1], p[2]},
                                      std::array<double, 3>{q[0], q[1], q[2]}, 40);
      return sys.wrap(Point(r[0], r[1], r[2]));
    }
    case SystemKind::DAMap:
      return to_double(bracket_iterative(sys, to_quad(p), to_quad(q)));
  }
  throw InvalidArgument("bracket: unknown system");
}

// ---------------------------------------------------------------------------
// Rectangle

namespace {

std::vector<QPoint> equally_spaced_transversals(const HyperbolicSystem& sys, const QPoint& base,
                                                int J, double R) {
  if (sys.kind() != SystemKind::ToralAutomorphism) {
    throw InvalidArgument("equally spaced transversals need a toral automorphism");
  }
  const auto& t = std::get<ToralAutomorphism>(sys.variant());
  const Vec3 vs(t.v_s[0], t.v_s[1], 0.0);
  std::vector<QPoint> out;
  for (int j = 0; j < J; ++j) {
    const double b = -R + (j + 0.5) * 2.0 * R / J;
    out.push_back(sys.translate(base, vs, Quad(b)));
  }
  return out;
}

std::vector<QPoint> orbit_sampled_transversals(const HyperbolicSystem& sys, const QPoint& base_q,
                                               const RectangleSpec& spec) {
  const Point base = to_double(base_q);
  constexpr int kRefine = 60;
  Point x = attractor_point(sys, spec.seed ^ 0x9e3779b97f4a7c15ULL, spec.burn_in);
  std::vector<Point> ring(kRefine, x);
  std::size_t head = 0;

  struct Candidate {
    QPoint z;
    Eigen::Vector2d c;
  };
  std::vector<Candidate> cands;
  const std::size_t cap = static_cast<std::size_t>(50) * spec.J;
  for (long step = 0; step < spec.orbit_steps && cands.size() < cap; ++step) {
    ring[head] = x;
    head = (head + 1) % kRefine;
    x = sys.apply(x);
    if (step < kRefine) continue;
    if (std::abs(sys.unstable_offset(base, x)) > 0.25 * spec.eps) continue;
    if (sys.distance(base, x) > spec.stable_radius + 0.5 * spec.eps) continue;
    QPoint zq = to_quad(ring[head]);
    for (int k = 0; k < kRefine; ++k) zq = sys.apply(zq);
    QPoint r;
    try {
      r = bracket(sys, base_q, zq);
    } catch (const NumericalError&) {
      continue;
    }
    const Eigen::Vector2d c = sys.stable_offset(base, to_double(r));
    if (c.norm() > spec.stable_radius || c.norm() < 1e-12) continue;
    cands.push_back({r, c});
  }
  if (static_cast<int>(cands.size()) < spec.J - 1) {
    throw NumericalError("rectangle: orbit hit the stable slice too rarely for J transversals");
  }

  std::vector<QPoint> out{base_q};
  std::vector<Eigen::Vector2d> chosen{Eigen::Vector2d::Zero()};
  std::vector<double> gap(cands.size(), std::numeric_limits<double>::infinity());
  while (static_cast<int>(out.size()) < spec.J) {
    std::size_t best = 0;
    double best_gap = -1.0;
    for (std::size_t k = 0; k < cands.size(); ++k) {
      gap[k] = std::min(gap[k], (cands[k].c - chosen.back()).norm());
      if (gap[k] > best_gap) {
        best_gap = gap[k];
        best = k;
      }
    }
    if (!(best_gap > 0.0)) throw NumericalError("rectangle: not enough distinct transversals");
    out.push_back(cands[best].z);
    chosen.push_back(cands[best].c);
  }
  return out;
}

}  // namespace

Rectangle build_rectangle(const HyperbolicSystem& sys, const RectangleSpec& spec) {
  if (spec.J < 1) throw InvalidArgument("rectangle needs J >= 1");
  if (!(spec.stable_radius > 0.0)) throw InvalidArgument("rectangle needs stable_radius > 0");
  half_node_count(spec.eps, spec.h);

  Rectangle rect;
  rect.base_q = spec.base ? sys.wrap(to_quad(*spec.base))
                          : attractor_point_q(sys, spec.seed, spec.burn_in);
  rect.base = to_double(rect.base_q);
  rect.eps = spec.eps;
  rect.h = spec.h;
  rect.stable_radius = spec.stable_radius;
  rect.n_back = spec.n_back;
  rect.mode = spec.mode;
  rect.transversals_q = spec.mode == TransversalMode::EquallySpaced
                            ? equally_spaced_transversals(sys, rect.base_q, spec.J,
                                                          spec.stable_radius)
                            : orbit_sampled_transversals(sys, rect.base_q, spec);
  for (const QPoint& z : rect.transversals_q) {
    rect.transversals.push_back(to_double(z));
    rect.stable_coords.push_back(sys.stable_offset(rect.base, rect.transversals.back()));
    rect.leaves.push_back(trace_leaf(sys, z, spec.eps, spec.h, spec.n_back));
  }

  for (const LeafSegment& leaf : rect.leaves) {
    std::vector<double> xi(leaf.size());
    std::vector<double> dxi(leaf.size());
    for (std::size_t i = 0; i < leaf.size(); ++i) {
      xi[i] = sys.unstable_offset(rect.base, leaf.nodes[i]);
      dxi[i] = sys.unstable_offset_gradient(leaf.nodes[i]).dot(leaf.tangents[i]);
      if (i > 0 && !(xi[i] > xi[i - 1])) {
        throw NumericalError("rectangle: unstable offset not monotone along a leaf");
      }
      rect.diameter = std::max(rect.diameter, sys.distance(rect.base, leaf.nodes[i]));
    }
    rect.xi.push_back(std::move(xi));
    rect.dxi.push_back(std::move(dxi));
  }
  rect.quotient_weights.assign(spec.J, 1.0 / spec.J);
  return rect;
}

Eigen::Vector2d stable_coordinate(const HyperbolicSystem& sys, const Rectangle& rect,
                                  const Point& q) {
  if (sys.kind() == SystemKind::ToralAutomorphism) return sys.stable_offset(rect.base, q);
  return sys.stable_offset(rect.base, bracket(sys, rect.base, q));
}

std::optional<double> leaf_coordinate(const Rectangle& rect, int leaf, double xi) {
  const auto& xs = rect.xi.at(leaf);
  const auto& ds = rect.dxi.at(leaf);
  const auto& arc = rect.leaves.at(leaf).arc;
  const double slack = 1e-12 * (xs.back() - xs.front());
  if (xi < xs.front() - slack || xi > xs.back() + slack) return std::nullopt;
  xi = std::clamp(xi, xs.front(), xs.back());
  std::size_t i = std::upper_bound(xs.begin(), xs.end(), xi) - xs.begin();
  i = std::clamp<std::size_t>(i, 1, xs.size() - 1) - 1;
  const double h = arc[i + 1] - arc[i];
  const double y0 = xs[i];
  const double y1 = xs[i + 1];
  const double m0 = ds[i] * h;
  const double m1 = ds[i + 1] * h;
  auto hermite = [&](double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * y1 +
           (t3 - t2) * m1;
  };
  auto hermite_d = [&](double t) {
    const double t2 = t * t;
    return (6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * m0 + (-6 * t2 + 6 * t) * y1 +
           (3 * t2 - 2 * t) * m1;
  };
  double lo = 0.0;
  double hi = 1.0;
  double t = (y1 > y0) ? (xi - y0) / (y1 - y0) : 0.5;
  for (int it = 0; it < 60; ++it) {
    const double f = hermite(t) - xi;
    if (f > 0.0) hi = t; else lo = t;
    const double d = hermite_d(t);
    double next = d > 0.0 ? t - f / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-16) {
      t = next;
      break;
    }
    t = next;
  }
  return arc[i] + t * h;
}

std::optional<LeafLocation> locate(const HyperbolicSystem& sys, const Rectangle& rect,
                                   const Point& q) {
  const double xi = sys.unstable_offset(rect.base, q);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& xs : rect.xi) {
    lo = std::min(lo, xs.front());
    hi = std::max(hi, xs.back());
  }
  if (xi < lo || xi > hi) return std::nullopt;
  if (sys.kind() != SystemKind::ToralAutomorphism &&
      sys.distance(rect.base, q) > rect.diameter + rect.stable_radius) {
    return std::nullopt;
  }
  Eigen::Vector2d c;
  try {
    c = stable_coordinate(sys, rect, q);
  } catch (const NumericalError&) {
    return std::nullopt;
  }
  if (c.norm() > rect.stable_radius * (1.0 + 1e-12)) return std::nullopt;
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int j = 0; j < rect.leaf_count(); ++j) {
    const double d = (c - rect.stable_coords[j]).norm();
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  const auto s = leaf_coordinate(rect, best, xi);
  if (!s) return std::nullopt;
  return LeafLocation{best, *s};
}

int stable_projection(const HyperbolicSystem& sys, const Rectangle& rect, const Point& q) {
  const auto loc = locate(sys, rect, q);
  if (!loc) throw InvalidArgument("stable_projection: point outside the rectangle");
  return loc->leaf;
}

double bracket_closure_defect(const HyperbolicSystem& sys, const Rectangle& rect, int pairs,
                              std::uint64_t seed, double tol) {
  // Product structure holds on the offsets shared by all leaves.
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& xs : rect.xi) {
    lo = std::max(lo, xs.front());
    hi = std::min(hi, xs.back());
  }
  std::vector<std::size_t> core;
  for (std::size_t k = 0; k < rect.node_count(); ++k) {
    const double x = rect.xi[rect.leaf_of(k)][k % rect.nodes_per_leaf()];
    if (x >= lo && x <= hi) core.push_back(k);
  }
  if (core.empty()) throw NumericalError("rectangle: leaves share no common offset range");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, core.size() - 1);
  std::uniform_int_distribution<std::size_t> any(0, rect.node_count() - 1);
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const std::size_t a = core[pick(rng)];
    const std::size_t b = any(rng);
    const Point r = bracket(sys, rect.node(a), rect.node(b));
    const int leaf = rect.leaf_of(b);
    const auto& xs = rect.xi[leaf];
    const double xi = sys.unstable_offset(rect.base, r);
    const double xi_p = rect.xi[rect.leaf_of(a)][a % rect.nodes_per_leaf()];
    // [p', q'] lies on the leaf of q' and on the stable leaf of p'.
    const Eigen::Vector2d c = stable_coordinate(sys, rect, r);
    const double excess = std::max({0.0, xs.front() - xi, xi - xs.back(), std::abs(xi - xi_p),
                                    (c - rect.stable_coords[leaf]).norm()});
    if (excess > tol) worst = std::max(worst, excess);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string quad_to_string(const Quad& q) { return q.str(36, std::ios_base::scientific); }
Quad quad_from_string(const std::string& s) { return Quad(s); }

nlohmann::json qpoint_json(const QPoint& q) {
  return nlohmann::json::array({quad_to_string(q[0]), quad_to_string(q[1]), quad_to_string(q[2])});
}
QPoint qpoint_from(const nlohmann::json& j) {
  return {quad_from_string(j.at(0).get<std::string>()), quad_from_string(j.at(1).get<std::string>()),
          quad_from_string(j.at(2).get<std::string>())};
}
nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v[0], v[1], v[2]}); }
Vec3 vec_from(const nlohmann::json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

}  // namespace

nlohmann::json Rectangle::to_json() const {
  nlohmann::json j;
  j["base"] = qpoint_json(base_q);
  j["eps"] = eps;
  j["h"] = h;
  j["stable_radius"] = stable_radius;
  j["n_back"] = n_back;
  j["mode"] = mode == TransversalMode::EquallySpaced ? "equally-spaced" : "orbit-sampled";
  j["diameter"] = diameter;
  j["quotient_weights"] = quotient_weights;
  nlohmann::json leaves_json = nlohmann::json::array();
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    const LeafSegment& leaf = leaves[k];
    nlohmann::json lj;
    lj["transversal"] = qpoint_json(transversals_q[k]);
    lj["stable_coord"] = {stable_coords[k][0], stable_coords[k][1]};
    lj["nodes"] = nlohmann::json::array();
    lj["tangents"] = nlohmann::json::array();
    for (std::size_t i = 0; i < leaf.size(); ++i) {
      lj["nodes"].push_back(qpoint_json(leaf.qnodes[i]));
      lj["tangents"].push_back(vec_json(leaf.tangents[i]));
    }
    lj["arc"] = leaf.arc;
    lj["xi"] = xi[k];
    lj["dxi"] = dxi[k];
    leaves_json.push_back(std::move(lj));
  }
  j["leaves"] = std::move(leaves_json);
  return j;
}

Rectangle Rectangle::from_json(const nlohmann::json& j) {
  try {
    Rectangle r;
    r.base_q = qpoint_from(j.at("base"));
    r.base = to_double(r.base_q);
    r.eps = j.at("eps").get<double>();
    r.h = j.at("h").get<double>();
    r.stable_radius = j.at("stable_radius").get<double>();
    r.n_back = j.at("n_back").get<int>();
    r.mode = j.at("mode").get<std::string>() == "equally-spaced" ? TransversalMode::EquallySpaced
                                                                   : TransversalMode::OrbitSampled;
    r.diameter = j.at("diameter").get<double>();
    r.quotient_weights = j.at("quotient_weights").get<std::vector<double>>();
    for (const auto& lj : j.at("leaves")) {
      r.transversals_q.push_back(qpoint_from(lj.at("transversal")));
      r.transversals.push_back(to_double(r.transversals_q.back()));
      r.stable_coords.emplace_back(lj.at("stable_coord").at(0).get<double>(),
                                   lj.at("stable_coord").at(1).get<double>());
      LeafSegment leaf;
      leaf.base_q = r.transversals_q.back();
      leaf.base = r.transversals.back();
      leaf.eps = r.eps;
      leaf.h = r.h;
      leaf.n_back = r.n_back;
      for (const auto& nj : lj.at("nodes")) {
        leaf.qnodes.push_back(qpoint_from(nj));
        leaf.nodes.push_back(to_double(leaf.qnodes.back()));
      }
      for (const auto& tj : lj.at("tangents")) leaf.tangents.push_back(vec_from(tj));
      leaf.arc = lj.at("arc").get<std::vector<double>>();
      r.xi.push_back(lj.at("xi").get<std::vector<double>>());
      r.dxi.push_back(lj.at("dxi").get<std::vector<double>>());
      r.leaves.push_back(std::move(leaf));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed rectangle document: ") + e.what());
  }
}

}  // namespace leafheat
