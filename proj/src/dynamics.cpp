#include "leafheat/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/constants/constants.hpp>

namespace leafheat {

namespace {

template <class R>
R two_pi() {
  return boost::math::constants::two_pi<R>();
}

template <class R>
R pi_r() {
  return boost::math::constants::pi<R>();
}

template <class R>
R wrap_unit(R v) {
  using std::floor;
  return v - floor(v);
}

template <class R>
R wrap_angle(R v) {
  using std::floor;
  const R tp = two_pi<R>();
  R w = v - tp * floor(v / tp);
  if (w >= tp) w -= tp;
  return w;
}

double wrap_centered_unit(double v) { return v - std::round(v); }

double wrap_centered_angle(double v) {
  constexpr double tp = 2.0 * std::numbers::pi;
  return v - tp * std::round(v / tp);
}

}  // namespace

// ---------------------------------------------------------------------------
// Toral automorphism

ToralAutomorphism::ToralAutomorphism(const Eigen::Matrix2i& matrix) : A(matrix) {
  const int det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
  if (std::abs(det) != 1) {
    throw InvalidArgument("toral automorphism needs |det A| = 1");
  }
  const double tr = A(0, 0) + A(1, 1);
  const double disc = tr * tr - 4.0 * det;
  if (disc <= 0.0) {
    throw InvalidArgument("toral automorphism has non-real eigenvalues (not hyperbolic)");
  }
  const double l1 = 0.5 * (tr + std::sqrt(disc));
  const double l2 = 0.5 * (tr - std::sqrt(disc));
  lambda_u = std::abs(l1) > std::abs(l2) ? l1 : l2;
  lambda_s = std::abs(l1) > std::abs(l2) ? l2 : l1;
  if (std::abs(std::abs(lambda_u) - 1.0) < 1e-12 || std::abs(std::abs(lambda_s) - 1.0) < 1e-12) {
    throw InvalidArgument("toral automorphism has an eigenvalue of modulus 1");
  }
  A_inv << A(1, 1) * det, -A(0, 1) * det, -A(1, 0) * det, A(0, 0) * det;

  auto eigvec = [&](double lam) {
    Eigen::Vector2d v(A(0, 1), lam - A(0, 0));
    if (v.norm() < 1e-12) v = Eigen::Vector2d(lam - A(1, 1), A(1, 0));
    v.normalize();
    if (v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0)) v = -v;
    return v;
  };
  v_u = eigvec(lambda_u);
  v_s = eigvec(lambda_s);
  Eigen::Matrix2d basis;
  basis.col(0) = v_u;
  basis.col(1) = v_s;
  const Eigen::Matrix2d dual = basis.inverse();
  w_u = dual.row(0).transpose();
  w_s = dual.row(1).transpose();
}

template <class R>
std::array<R, 3> ToralAutomorphism::forward(const std::array<R, 3>& x) const {
  const R a = R(A(0, 0)) * x[0] + R(A(0, 1)) * x[1];
  const R b = R(A(1, 0)) * x[0] + R(A(1, 1)) * x[1];
  return {wrap_unit(a), wrap_unit(b), R(0)};
}

template <class R>
std::array<R, 3> ToralAutomorphism::backward(const std::array<R, 3>& x) const {
  const R a = R(A_inv(0, 0)) * x[0] + R(A_inv(0, 1)) * x[1];
  const R b = R(A_inv(1, 0)) * x[0] + R(A_inv(1, 1)) * x[1];
  return {wrap_unit(a), wrap_unit(b), R(0)};
}

Mat3 ToralAutomorphism::differential(const Point&) const {
  Mat3 d = Mat3::Zero();
  d.topLeftCorner<2, 2>() = A.cast<double>();
  return d;
}

// ---------------------------------------------------------------------------
// Solenoid

Solenoid::Solenoid(double r_, double alpha_, double beta_) : r(r_), alpha(alpha_), beta(beta_) {
  if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("solenoid needs 0 < r < 1");
  const double bound = std::min(r, 1.0 - r);
  if (!(alpha > 0.0 && alpha < bound && beta > 0.0 && beta < bound)) {
    throw InvalidArgument("solenoid needs 0 < alpha, beta < min(r, 1 - r)");
  }
}

template <class R>
std::array<R, 3> Solenoid::forward(const std::array<R, 3>& x) const {
  using std::cos;
  using std::sin;
  return {R(alpha) * x[0] + R(r) * cos(x[2]), R(beta) * x[1] + R(r) * sin(x[2]),
          wrap_angle(R(2) * x[2])};
}

template <class R>
std::array<R, 3> Solenoid::backward(const std::array<R, 3>& x) const {
  using std::cos;
  using std::sin;
  const R half = wrap_angle(x[2]) / R(2);
  std::array<R, 3> best{};
  R best_norm = R(-1);
  for (int branch = 0; branch < 2; ++branch) {
    const R th = branch == 0 ? half : half + pi_r<R>();
    const R px = (x[0] - R(r) * cos(th)) / R(alpha);
    const R py = (x[1] - R(r) * sin(th)) / R(beta);
    const R n2 = px * px + py * py;
    if (best_norm < R(0) || n2 < best_norm) {
      best_norm = n2;
      best = {px, py, th};
    }
  }
  return best;
}

Mat3 Solenoid::differential(const Point& x) const {
  Mat3 d;
  d << alpha, 0.0, -r * std::sin(x[2]), 0.0, beta, r * std::cos(x[2]), 0.0, 0.0, 2.0;
  return d;
}

double Solenoid::max_leaf_slope() const {
  const double ux = 0.5 * r / (1.0 - 0.5 * alpha);
  const double uy = 0.5 * r / (1.0 - 0.5 * beta);
  return std::hypot(ux, uy);
}

// ---------------------------------------------------------------------------
// DA map

template <class R>
R CutoffProfile::value(R s) const {
  const R half = R(0.5 * r0);
  if (s <= half) return R(1);
  if (s >= R(r0)) return R(0);
  const R u = (s - half) / half;
  return R(1) - R(3) * u * u + R(2) * u * u * u;
}

template <class R>
R CutoffProfile::derivative(R s) const {
  const R half = R(0.5 * r0);
  if (s <= half || s >= R(r0)) return R(0);
  const R u = (s - half) / half;
  return (R(-6) * u + R(6) * u * u) / half;
}

DAMap::DAMap(const ToralAutomorphism& base_, double r0, double tau_, int flow_steps_)
    : base(base_), bump{r0}, tau(tau_), flow_steps(flow_steps_) {
  if (!(r0 > 0.0 && r0 < 0.5)) throw InvalidArgument("DA map needs 0 < r0 < 0.5");
  if (!(tau > 0.0)) throw InvalidArgument("DA map needs tau > 0");
  if (std::exp(tau) * std::abs(base.lambda_s) <= 1.0) {
    throw InvalidArgument("DA map needs e^tau * lambda_s > 1");
  }
  if (flow_steps < 8) throw InvalidArgument("DA map needs at least 8 flow steps");
}

namespace {

// Vector field g(a1, m) = m h(|(a1, m)|) of the α₂-equation and its partials.
template <class R>
struct FlowField {
  const CutoffProfile& h;

  R g(R a1, R m) const {
    using std::sqrt;
    return m * h.value(sqrt(a1 * a1 + m * m));
  }
  // (∂g/∂m, ∂g/∂a1)
  std::pair<R, R> partials(R a1, R m) const {
    using std::sqrt;
    const R rho = sqrt(a1 * a1 + m * m);
    const R hv = h.value(rho);
    const R hd = h.derivative(rho);
    if (rho == R(0)) return {hv, R(0)};
    return {hv + m * hd * m / rho, m * hd * a1 / rho};
  }
};

template <class R>
R newton_tolerance() {
  return R(64) * std::numeric_limits<R>::epsilon();
}

// One implicit-midpoint step y1 = y0 + dt g(a1, (y0 + y1)/2), solved for the
// unknown end; `forward` selects whether y0 (true) or y1 (false) is given.
template <class R>
R midpoint_step(const FlowField<R>& field, R a1, R known, R dt, bool forward) {
  using std::abs;
  const R sign = forward ? R(1) : R(-1);
  R y = known + sign * dt * field.g(a1, known);
  for (int it = 0; it < 60; ++it) {
    const R mid = R(0.5) * (known + y);
    const R res = y - known - sign * dt * field.g(a1, mid);
    const R deriv = R(1) - sign * dt * field.partials(a1, mid).first * R(0.5);
    const R step = res / deriv;
    y -= step;
    if (abs(step) <= newton_tolerance<R>() * (R(1) + abs(y))) break;
  }
  return y;
}

}  // namespace

template <class R>
std::array<R, 3> DAMap::forward(const std::array<R, 3>& x) const {
  using std::round;
  std::array<R, 3> y = base.forward(x);
  const R wx = y[0] - round(y[0]);
  const R wy = y[1] - round(y[1]);
  R a1 = R(base.w_u[0]) * wx + R(base.w_u[1]) * wy;
  R a2 = R(base.w_s[0]) * wx + R(base.w_s[1]) * wy;
  using std::sqrt;
  if (sqrt(a1 * a1 + a2 * a2) >= R(bump.r0)) return y;
  const FlowField<R> field{bump};
  const R dt = R(tau) / R(flow_steps);
  for (int k = 0; k < flow_steps; ++k) a2 = midpoint_step(field, a1, a2, dt, true);
  const R nx = R(base.v_u[0]) * a1 + R(base.v_s[0]) * a2;
  const R ny = R(base.v_u[1]) * a1 + R(base.v_s[1]) * a2;
  return {wrap_unit(nx), wrap_unit(ny), R(0)};
}

template <class R>
std::array<R, 3> DAMap::backward(const std::array<R, 3>& x) const {
  using std::round;
  using std::sqrt;
  const R wx = x[0] - round(x[0]);
  const R wy = x[1] - round(x[1]);
  R a1 = R(base.w_u[0]) * wx + R(base.w_u[1]) * wy;
  R a2 = R(base.w_s[0]) * wx + R(base.w_s[1]) * wy;
  std::array<R, 3> pre = x;
  if (sqrt(a1 * a1 + a2 * a2) < R(bump.r0)) {
    const FlowField<R> field{bump};
    const R dt = R(tau) / R(flow_steps);
    for (int k = 0; k < flow_steps; ++k) a2 = midpoint_step(field, a1, a2, dt, false);
    const R nx = R(base.v_u[0]) * a1 + R(base.v_s[0]) * a2;
    const R ny = R(base.v_u[1]) * a1 + R(base.v_s[1]) * a2;
    pre = {wrap_unit(nx), wrap_unit(ny), R(0)};
  }
  return base.backward(pre);
}

Mat3 DAMap::differential(const Point& x) const {
  const Mat3 dA = base.differential(x);
  const auto y = base.forward(std::array<double, 3>{x[0], x[1], 0.0});
  const double wx = y[0] - std::round(y[0]);
  const double wy = y[1] - std::round(y[1]);
  const double a1 = base.w_u.dot(Eigen::Vector2d(wx, wy));
  double a2 = base.w_s.dot(Eigen::Vector2d(wx, wy));
  if (std::hypot(a1, a2) >= bump.r0) return dA;

  const FlowField<double> field{bump};
  const double dt = tau / flow_steps;
  // Jacobian of (a1, a2) ↦ (a1, φ(a1, a2)).
  Eigen::Matrix2d jac = Eigen::Matrix2d::Identity();
  for (int k = 0; k < flow_steps; ++k) {
    const double next = midpoint_step(field, a1, a2, dt, true);
    const auto [gy, ga] = field.partials(a1, 0.5 * (a2 + next));
    const double denom = 1.0 - 0.5 * dt * gy;
    Eigen::Matrix2d step;
    step << 1.0, 0.0, dt * ga / denom, (1.0 + 0.5 * dt * gy) / denom;
    jac = step * jac;
    a2 = next;
  }
  Eigen::Matrix2d basis;
  basis.col(0) = base.v_u;
  basis.col(1) = base.v_s;
  Eigen::Matrix2d dual;
  dual.row(0) = base.w_u.transpose();
  dual.row(1) = base.w_s.transpose();
  Mat3 d = Mat3::Zero();
  d.topLeftCorner<2, 2>() = basis * jac * dual * dA.topLeftCorner<2, 2>();
  return d;
}

// ---------------------------------------------------------------------------
// HyperbolicSystem

HyperbolicSystem::HyperbolicSystem(std::string name, Variant impl, Hyperbolicity hyp,
                                   LocalScales scales)
    : name_(std::move(name)), impl_(std::move(impl)), hyp_(hyp), scales_(scales) {}

HyperbolicSystem HyperbolicSystem::cat_map() {
  Eigen::Matrix2i A;
  A << 2, 1, 1, 1;
  return toral(A);
}

HyperbolicSystem HyperbolicSystem::toral(const Eigen::Matrix2i& A) {
  ToralAutomorphism t(A);
  const Hyperbolicity hyp{1.0, 1.0 / std::abs(t.lambda_u)};
  return HyperbolicSystem("toral", std::move(t), hyp, LocalScales{0.2, 0.25});
}

HyperbolicSystem HyperbolicSystem::solenoid(double r, double alpha, double beta) {
  Solenoid s(r, alpha, beta);
  const double slope = s.max_leaf_slope();
  const Hyperbolicity hyp{std::sqrt(1.0 + slope * slope), std::max({0.5, alpha, beta})};
  return HyperbolicSystem("solenoid", s, hyp, LocalScales{0.3, 0.3});
}

HyperbolicSystem HyperbolicSystem::da_map(double r0, std::optional<double> tau) {
  const ToralAutomorphism cat = std::get<ToralAutomorphism>(cat_map().impl_);
  const double t = tau.value_or(std::log(1.1 / std::abs(cat.lambda_s)));
  DAMap d(cat, r0, t);
  const Hyperbolicity hyp{2.0, 1.0 / std::abs(cat.lambda_u)};
  return HyperbolicSystem("da", std::move(d), hyp, LocalScales{0.2, 0.25});
}

namespace {

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw InvalidArgument("unknown key '" + key + "' in " + where);
    }
  }
}

}  // namespace

HyperbolicSystem HyperbolicSystem::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("type")) {
    throw InvalidArgument("system descriptor needs a 'type'");
  }
  try {
    const std::string type = j.at("type").get<std::string>();
    HyperbolicSystem sys = [&] {
      if (type == "cat") {
        reject_unknown_keys(j, {"type", "delta", "eps"}, "system");
        return cat_map();
      }
      if (type == "toral") {
        reject_unknown_keys(j, {"type", "matrix", "delta", "eps"}, "system");
        const auto m = j.at("matrix").get<std::vector<std::vector<int>>>();
        if (m.size() != 2 || m[0].size() != 2 || m[1].size() != 2) {
          throw InvalidArgument("toral matrix must be 2x2");
        }
        Eigen::Matrix2i A;
        A << m[0][0], m[0][1], m[1][0], m[1][1];
        return toral(A);
      }
      if (type == "solenoid") {
        reject_unknown_keys(j, {"type", "r", "alpha", "beta", "delta", "eps"}, "system");
        return solenoid(j.value("r", 0.5), j.value("alpha", 0.4), j.value("beta", 0.3));
      }
      if (type == "da") {
        reject_unknown_keys(j, {"type", "r0", "tau", "delta", "eps"}, "system");
        std::optional<double> tau;
        if (j.contains("tau")) tau = j.at("tau").get<double>();
        return da_map(j.value("r0", 0.2), tau);
      }
      throw InvalidArgument("unknown system type '" + type + "'");
    }();
    if (j.contains("delta")) sys.scales_.delta = j.at("delta").get<double>();
    if (j.contains("eps")) sys.scales_.eps = j.at("eps").get<double>();
    if (!(sys.scales_.delta > 0.0 && sys.scales_.eps > 0.0)) {
      throw InvalidArgument("system delta and eps must be positive");
    }
    return sys;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed system descriptor: ") + e.what());
  }
}

nlohmann::json HyperbolicSystem::to_json() const {
  nlohmann::json j;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ToralAutomorphism>) {
          Eigen::Matrix2i cat;
          cat << 2, 1, 1, 1;
          if (s.A == cat) {
            j["type"] = "cat";
          } else {
            j["type"] = "toral";
            j["matrix"] = {{s.A(0, 0), s.A(0, 1)}, {s.A(1, 0), s.A(1, 1)}};
          }
        } else if constexpr (std::is_same_v<T, Solenoid>) {
          j["type"] = "solenoid";
          j["r"] = s.r;
          j["alpha"] = s.alpha;
          j["beta"] = s.beta;
        } else {
          j["type"] = "da";
          j["r0"] = s.bump.r0;
          j["tau"] = s.tau;
        }
      },
      impl_);
  j["delta"] = scales_.delta;
  j["eps"] = scales_.eps;
  return j;
}

SystemKind HyperbolicSystem::kind() const {
  switch (impl_.index()) {
    case 0:
      return SystemKind::ToralAutomorphism;
    case 1:
      return SystemKind::Solenoid;
    default:
      return SystemKind::DAMap;
  }
}

int HyperbolicSystem::phase_dim() const { return kind() == SystemKind::Solenoid ? 3 : 2; }

std::optional<double> HyperbolicSystem::conformal_constant() const {
  switch (kind()) {
    case SystemKind::ToralAutomorphism:
      return std::abs(std::get<ToralAutomorphism>(impl_).lambda_u);
    case SystemKind::Solenoid:
      return 2.0;
    case SystemKind::DAMap:
      return std::nullopt;
  }
  return std::nullopt;
}

Point HyperbolicSystem::apply(const Point& x) const {
  const std::array<double, 3> in{x[0], x[1], x[2]};
  const auto out = std::visit([&](const auto& s) { return s.forward(in); }, impl_);
  return {out[0], out[1], out[2]};
}

QPoint HyperbolicSystem::apply(const QPoint& x) const {
  return std::visit([&](const auto& s) { return s.forward(x); }, impl_);
}

Point HyperbolicSystem::apply_inverse(const Point& x) const {
  const std::array<double, 3> in{x[0], x[1], x[2]};
  const auto out = std::visit([&](const auto& s) { return s.backward(in); }, impl_);
  return {out[0], out[1], out[2]};
}

QPoint HyperbolicSystem::apply_inverse(const QPoint& x) const {
  return std::visit([&](const auto& s) { return s.backward(x); }, impl_);
}

Mat3 HyperbolicSystem::differential(const Point& x) const {
  return std::visit([&](const auto& s) { return s.differential(x); }, impl_);
}

Point HyperbolicSystem::wrap(const Point& x) const {
  if (kind() == SystemKind::Solenoid) return {x[0], x[1], wrap_angle(x[2])};
  return {wrap_unit(x[0]), wrap_unit(x[1]), 0.0};
}

QPoint HyperbolicSystem::wrap(const QPoint& x) const {
  if (kind() == SystemKind::Solenoid) return {x[0], x[1], wrap_angle(x[2])};
  return {wrap_unit(x[0]), wrap_unit(x[1]), Quad(0)};
}

Vec3 HyperbolicSystem::displacement(const Point& from, const Point& to) const {
  const Vec3 d = to - from;
  if (kind() == SystemKind::Solenoid) return {d[0], d[1], wrap_centered_angle(d[2])};
  return {wrap_centered_unit(d[0]), wrap_centered_unit(d[1]), 0.0};
}

double HyperbolicSystem::distance(const Point& p, const Point& q) const {
  return displacement(p, q).norm();
}

Point HyperbolicSystem::translate(const Point& x, const Vec3& v) const { return wrap(Point(x + v)); }

QPoint HyperbolicSystem::translate(const QPoint& x, const Vec3& v, Quad scale) const {
  return wrap(QPoint{x[0] + scale * Quad(v[0]), x[1] + scale * Quad(v[1]),
                     x[2] + scale * Quad(v[2])});
}

Vec3 HyperbolicSystem::orientation_reference() const {
  switch (kind()) {
    case SystemKind::Solenoid:
      return {0.0, 0.0, 1.0};
    case SystemKind::ToralAutomorphism: {
      const auto& t = std::get<ToralAutomorphism>(impl_);
      return {t.v_u[0], t.v_u[1], 0.0};
    }
    case SystemKind::DAMap: {
      const auto& t = std::get<DAMap>(impl_).base;
      return {t.v_u[0], t.v_u[1], 0.0};
    }
  }
  return Vec3::UnitX();
}

namespace {

const ToralAutomorphism& linear_part(const HyperbolicSystem::Variant& v) {
  if (const auto* t = std::get_if<ToralAutomorphism>(&v)) return *t;
  return std::get<DAMap>(v).base;
}

}  // namespace

double HyperbolicSystem::unstable_offset(const Point& p, const Point& q) const {
  const Vec3 d = displacement(p, q);
  if (kind() == SystemKind::Solenoid) return d[2];
  return linear_part(impl_).w_u.dot(d.head<2>());
}

Vec3 HyperbolicSystem::unstable_offset_gradient(const Point&) const {
  if (kind() == SystemKind::Solenoid) return Vec3::UnitZ();
  const auto& w = linear_part(impl_).w_u;
  return {w[0], w[1], 0.0};
}

Eigen::Vector2d HyperbolicSystem::stable_offset(const Point& p, const Point& z) const {
  const Vec3 d = displacement(p, z);
  if (kind() == SystemKind::Solenoid) return d.head<2>();
  return {linear_part(impl_).w_s.dot(d.head<2>()), 0.0};
}

Point HyperbolicSystem::sample_trapping_region(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (kind() == SystemKind::Solenoid) {
    const double rad = std::sqrt(unit(rng));
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    return {rad * std::cos(phi), rad * std::sin(phi), 2.0 * std::numbers::pi * unit(rng)};
  }
  const double a = unit(rng);
  const double b = unit(rng);
  return {a, b, 0.0};
}

bool HyperbolicSystem::in_trapping_region(const Point& x, double slack) const {
  if (!x.allFinite()) return false;
  if (kind() == SystemKind::Solenoid) return x.head<2>().norm() <= 1.0 + slack;
  return true;
}

// ---------------------------------------------------------------------------
// Unstable directions and Jacobians

namespace {

std::vector<TangentVector> seed_candidates(const HyperbolicSystem& sys) {
  if (sys.phase_dim() == 2) {
    return {Vec3(0.8, 0.6, 0.0), Vec3(1.0, 0.0, 0.0), Vec3(0.0, 1.0, 0.0)};
  }
  return {Vec3(0.3, -0.2, 0.9), Vec3(0.0, 0.0, 1.0), Vec3(1.0, 0.0, 0.0), Vec3(0.0, 1.0, 0.0)};
}

// Pushes `seed` forward through differentials at points[depth], …, points[1];
// returns false when the total growth shows the seed was (numerically) stable.
bool push_seed(const HyperbolicSystem& sys, const std::vector<Point>& points, Vec3 seed,
               Vec3& out) {
  const int depth = static_cast<int>(points.size()) - 1;
  if (seed.norm() == 0.0) return false;
  Vec3 v = seed.normalized();
  double log_growth = 0.0;
  for (int k = depth; k >= 1; --k) {
    v = sys.differential(points[k]) * v;
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) return false;
    log_growth += std::log(n);
    v /= n;
  }
  const auto& hyp = sys.hyperbolicity();
  const double expected = 0.5 * depth * std::log(1.0 / hyp.lambda) - std::log(hyp.C);
  if (depth > 0 && log_growth < expected) return false;
  if (v.dot(sys.orientation_reference()) < 0.0) v = -v;
  out = v;
  return true;
}

TangentVector direction_from_orbit(const HyperbolicSystem& sys, const std::vector<Point>& points,
                                   const TangentVector* seed) {
  Vec3 out;
  if (seed != nullptr && push_seed(sys, points, *seed, out)) return out;
  for (const Vec3& s : seed_candidates(sys)) {
    if (push_seed(sys, points, s, out)) return out;
  }
  throw NumericalError("unstable direction: every seed collapsed onto the stable space");
}

std::vector<Point> backward_points(const HyperbolicSystem& sys, const Point& x, int depth) {
  std::vector<Point> pts;
  pts.reserve(depth + 1);
  pts.push_back(x);
  for (int k = 1; k <= depth; ++k) pts.push_back(sys.apply_inverse(pts.back()));
  return pts;
}

}  // namespace

TangentVector unstable_direction(const HyperbolicSystem& sys, const Point& x, int depth) {
  if (depth < 1) throw InvalidArgument("unstable_direction needs depth >= 1");
  return direction_from_orbit(sys, backward_points(sys, x, depth), nullptr);
}

TangentVector unstable_direction(const HyperbolicSystem& sys, const Point& x, int depth,
                                 const TangentVector& seed) {
  if (depth < 1) throw InvalidArgument("unstable_direction needs depth >= 1");
  return direction_from_orbit(sys, backward_points(sys, x, depth), &seed);
}

double unstable_jacobian(const HyperbolicSystem& sys, const Point& x, int depth) {
  return (sys.differential(x) * unstable_direction(sys, x, depth)).norm();
}

double lyapunov_exponent(const HyperbolicSystem& sys, const Point& x, long N, int depth) {
  if (N < 1) throw InvalidArgument("lyapunov_exponent needs N >= 1");
  Vec3 e = unstable_direction(sys, x, depth);
  Point p = x;
  double sum = 0.0;
  for (long k = 0; k < N; ++k) {
    const Vec3 w = sys.differential(p) * e;
    const double n = w.norm();
    sum += std::log(n);
    e = w / n;
    p = sys.apply(p);
  }
  return sum / static_cast<double>(N);
}

std::vector<QPoint> backward_orbit(const HyperbolicSystem& sys, const QPoint& x, int depth) {
  std::vector<QPoint> orbit;
  orbit.reserve(depth + 1);
  orbit.push_back(x);
  for (int k = 1; k <= depth; ++k) orbit.push_back(sys.apply_inverse(orbit.back()));
  return orbit;
}

BackwardFrame backward_frame(const HyperbolicSystem& sys, const QPoint& x, int depth, int extra) {
  if (depth < 0 || extra < 1) throw InvalidArgument("backward_frame needs depth >= 0, extra >= 1");
  const auto orbit = backward_orbit(sys, x, depth + extra);
  std::vector<Point> pts;
  pts.reserve(orbit.size());
  for (const auto& q : orbit) pts.push_back(to_double(q));

  BackwardFrame frame;
  frame.points.assign(pts.begin(), pts.begin() + depth + 1);
  frame.directions.resize(depth + 1);
  frame.log_jacobians.resize(depth + 1);

  // Deepest direction first, then transport forward along the stored orbit.
  const std::vector<Point> tail(pts.begin() + depth, pts.end());
  Vec3 e = direction_from_orbit(sys, tail, nullptr);
  for (int j = depth; j >= 0; --j) {
    frame.directions[j] = e;
    const Vec3 w = sys.differential(pts[j]) * e;
    const double n = w.norm();
    frame.log_jacobians[j] = std::log(n);
    e = w / n;
    if (e.dot(sys.orientation_reference()) < 0.0) e = -e;
  }
  return frame;
}

Point attractor_point(const HyperbolicSystem& sys, std::uint64_t seed, int burn_in) {
  std::mt19937_64 rng(seed);
  Point p = sys.sample_trapping_region(rng);
  for (int k = 0; k < burn_in; ++k) p = sys.apply(p);
  return p;
}

QPoint attractor_point_q(const HyperbolicSystem& sys, std::uint64_t seed, int burn_in,
                         int quad_steps) {
  QPoint q = to_quad(attractor_point(sys, seed, burn_in));
  for (int k = 0; k < quad_steps; ++k) q = sys.apply(q);
  return q;
}

template std::array<double, 3> ToralAutomorphism::forward(const std::array<double, 3>&) const;
template std::array<Quad, 3> ToralAutomorphism::forward(const std::array<Quad, 3>&) const;
template std::array<double, 3> Solenoid::forward(const std::array<double, 3>&) const;
template std::array<Quad, 3> Solenoid::forward(const std::array<Quad, 3>&) const;
template std::array<double, 3> DAMap::forward(const std::array<double, 3>&) const;
template std::array<Quad, 3> DAMap::forward(const std::array<Quad, 3>&) const;
template std::array<double, 3> ToralAutomorphism::backward(const std::array<double, 3>&) const;
template std::array<Quad, 3> ToralAutomorphism::backward(const std::array<Quad, 3>&) const;
template std::array<double, 3> Solenoid::backward(const std::array<double, 3>&) const;
template std::array<Quad, 3> Solenoid::backward(const std::array<Quad, 3>&) const;
template std::array<double, 3> DAMap::backward(const std::array<double, 3>&) const;
template std::array<Quad, 3> DAMap::backward(const std::array<Quad, 3>&) const;

}  // namespace leafheat
