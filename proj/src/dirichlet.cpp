#include "leafheat/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "leafheat/parallel.hpp"

namespace leafheat {

namespace {

void check_size(const NodeFunction& u, std::size_t n, const char* what) {
  if (u.size() != n) throw InvalidArgument(std::string(what) + ": node function has wrong size");
}

}  // namespace

// ---------------------------------------------------------------------------
// Form and measure

double DiscreteForm::bilinear(const NodeFunction& u, const NodeFunction& v) const {
  check_size(u, node_count, "energy");
  check_size(v, node_count, "energy");
  double e = 0.0;
  for (const LeafBlock& b : blocks) {
    for (int i = 0; i + 1 < b.size; ++i) {
      const std::size_t k = b.offset + i;
      e += b.conductance[i] * (u[k + 1] - u[k]) * (v[k + 1] - v[k]);
    }
  }
  return e;
}

double DiscreteForm::energy(const NodeFunction& u) const { return bilinear(u, u); }

NodeFunction DiscreteForm::stiffness_apply(const NodeFunction& u) const {
  check_size(u, node_count, "stiffness_apply");
  NodeFunction out(node_count, 0.0);
  for (const LeafBlock& b : blocks) {
    for (int i = 0; i + 1 < b.size; ++i) {
      const std::size_t k = b.offset + i;
      const double flux = b.conductance[i] * (u[k] - u[k + 1]);
      out[k] += flux;
      out[k + 1] -= flux;
    }
  }
  return out;
}

Eigen::SparseMatrix<double> DiscreteForm::stiffness() const {
  std::vector<Eigen::Triplet<double>> trips;
  for (const LeafBlock& b : blocks) {
    for (int i = 0; i + 1 < b.size; ++i) {
      const int k = static_cast<int>(b.offset) + i;
      const double c = b.conductance[i];
      trips.emplace_back(k, k, c);
      trips.emplace_back(k + 1, k + 1, c);
      trips.emplace_back(k, k + 1, -c);
      trips.emplace_back(k + 1, k, -c);
    }
  }
  Eigen::SparseMatrix<double> A(node_count, node_count);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

int DiscreteForm::block_of(std::size_t node) const {
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    if (node >= blocks[j].offset && node < blocks[j].offset + blocks[j].size) {
      return static_cast<int>(j);
    }
  }
  throw InvalidArgument("node index out of range");
}

double DiscreteForm::arc(std::size_t node) const {
  const LeafBlock& b = blocks[block_of(node)];
  const double i = static_cast<double>(node - b.offset);
  return (i - 0.5 * (b.size - 1)) * h;
}

double DiscreteMeasure::total() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }

double DiscreteMeasure::integral(const NodeFunction& u) const {
  check_size(u, mass.size(), "integral");
  double s = 0.0;
  for (std::size_t i = 0; i < mass.size(); ++i) s += mass[i] * u[i];
  return s;
}

double DiscreteMeasure::inner(const NodeFunction& u, const NodeFunction& v) const {
  check_size(u, mass.size(), "inner");
  check_size(v, mass.size(), "inner");
  double s = 0.0;
  for (std::size_t i = 0; i < mass.size(); ++i) s += mass[i] * u[i] * v[i];
  return s;
}

double DiscreteMeasure::variance(const NodeFunction& u) const {
  const double tot = total();
  const double mean = integral(u) / tot;
  double s = 0.0;
  for (std::size_t i = 0; i < mass.size(); ++i) s += mass[i] * (u[i] - mean) * (u[i] - mean);
  return s / tot;
}

std::vector<double> trapezoid_weights(int size) {
  std::vector<double> w(size, 1.0);
  if (size >= 2) {
    w.front() = 0.5;
    w.back() = 0.5;
  }
  return w;
}

Assembly assemble(const std::vector<double>& weights,
                  const std::vector<std::vector<double>>& densities, double h) {
  if (weights.size() != densities.size() || weights.empty()) {
    throw InvalidArgument("assemble: missing density table for some leaf");
  }
  if (!(h > 0.0)) throw InvalidArgument("assemble: h must be positive");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw InvalidArgument("assemble: every leaf needs a positive quotient weight");
    wsum += w;
  }
  Assembly out;
  out.form.h = h;
  std::size_t offset = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const auto& rho = densities[j];
    if (rho.size() < 2) throw InvalidArgument("assemble: leaf needs at least two nodes");
    const double w = weights[j] / wsum;
    const auto tau = trapezoid_weights(static_cast<int>(rho.size()));
    LeafBlock b;
    b.offset = offset;
    b.size = static_cast<int>(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) {
      if (!(rho[i] > 0.0)) throw InvalidArgument("assemble: densities must be positive");
      out.measure.mass.push_back(w * rho[i] * h * tau[i]);
      if (i + 1 < rho.size()) b.conductance.push_back(w * 0.5 * (rho[i] + rho[i + 1]) / h);
    }
    offset += rho.size();
    out.form.blocks.push_back(std::move(b));
  }
  out.form.node_count = offset;
  return out;
}

Assembly assemble(const Rectangle& rect, const SRBTable& table) {
  if (table.leaves.size() != rect.leaves.size() ||
      table.weights.size() != rect.leaves.size()) {
    throw InvalidArgument("assemble: SRB table does not cover every leaf of the rectangle");
  }
  std::vector<std::vector<double>> dens;
  for (std::size_t j = 0; j < table.leaves.size(); ++j) {
    if (table.leaves[j].normalized.size() != rect.leaves[j].size()) {
      throw InvalidArgument("assemble: SRB table does not match the leaf grid");
    }
    dens.push_back(table.leaves[j].normalized);
  }
  return assemble(table.weights, dens, rect.h);
}

Assembly assemble_uniform(int leaves, double eps, double h) {
  const int m = half_node_count(eps, h);
  const std::vector<double> rho(2 * m + 1, 1.0 / (2.0 * m * h));
  return assemble(std::vector<double>(leaves, 1.0), std::vector<std::vector<double>>(leaves, rho),
                  h);
}

DiscreteForm reweighted_form(const DiscreteForm& form, const NodeFunction& node_weights) {
  check_size(node_weights, form.node_count, "reweighted_form");
  DiscreteForm out = form;
  for (LeafBlock& b : out.blocks) {
    for (int i = 0; i + 1 < b.size; ++i) {
      const std::size_t k = b.offset + i;
      b.conductance[i] *= 0.5 * (node_weights[k] + node_weights[k + 1]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Laplacian and derivatives

Eigen::SparseMatrix<double> laplacian(const DiscreteForm& form, const DiscreteMeasure& measure) {
  check_size(measure.mass, form.node_count, "laplacian");
  Eigen::SparseMatrix<double> L = form.stiffness();
  for (int k = 0; k < L.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(L, k); it; ++it) {
      it.valueRef() = -it.value() / measure.mass[it.row()];
    }
  }
  return L;
}

NodeFunction laplacian_apply(const DiscreteForm& form, const DiscreteMeasure& measure,
                             const NodeFunction& u) {
  NodeFunction a = form.stiffness_apply(u);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = -a[i] / measure.mass[i];
  return a;
}

NodeFunction leafwise_gradient(const DiscreteForm& form, const NodeFunction& u) {
  check_size(u, form.node_count, "leafwise_gradient");
  NodeFunction g(u.size(), 0.0);
  const double h = form.h;
  for (const LeafBlock& b : form.blocks) {
    if (b.size < 3) throw InvalidArgument("leafwise_gradient: leaf with fewer than 3 nodes");
    const std::size_t o = b.offset;
    const std::size_t n = static_cast<std::size_t>(b.size) - 1;
    g[o] = (-3.0 * u[o] + 4.0 * u[o + 1] - u[o + 2]) / (2.0 * h);
    for (std::size_t i = 1; i < n; ++i) g[o + i] = (u[o + i + 1] - u[o + i - 1]) / (2.0 * h);
    g[o + n] = (3.0 * u[o + n] - 4.0 * u[o + n - 1] + u[o + n - 2]) / (2.0 * h);
  }
  return g;
}

NodeFunction carre_du_champ(const DiscreteForm& form, const NodeFunction& u) {
  NodeFunction g = leafwise_gradient(form, u);
  for (double& v : g) v *= v;
  return g;
}

// ---------------------------------------------------------------------------
// Distance, indicators, superharmonicity

double intrinsic_distance(const DiscreteForm& form, const NodeSet& A, const NodeSet& B) {
  if (A.empty() || B.empty()) throw InvalidArgument("intrinsic_distance: empty node set");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < form.blocks.size(); ++j) {
    const LeafBlock& b = form.blocks[j];
    auto in_block = [&](std::size_t k) { return k >= b.offset && k < b.offset + b.size; };
    std::vector<std::size_t> a_idx;
    std::vector<std::size_t> b_idx;
    for (std::size_t k : A) {
      if (k >= form.node_count) throw InvalidArgument("intrinsic_distance: node out of range");
      if (in_block(k)) a_idx.push_back(k);
    }
    for (std::size_t k : B) {
      if (k >= form.node_count) throw InvalidArgument("intrinsic_distance: node out of range");
      if (in_block(k)) b_idx.push_back(k);
    }
    if (a_idx.empty() || b_idx.empty()) continue;
    std::sort(b_idx.begin(), b_idx.end());
    for (std::size_t k : a_idx) {
      auto it = std::lower_bound(b_idx.begin(), b_idx.end(), k);
      if (it != b_idx.end()) best = std::min(best, static_cast<double>(*it - k) * form.h);
      if (it != b_idx.begin()) best = std::min(best, static_cast<double>(k - *(it - 1)) * form.h);
    }
  }
  return best;
}

NodeFunction zero_energy_indicator(const DiscreteForm& form, const std::vector<int>& leaf_subset) {
  if (leaf_subset.empty()) throw InvalidArgument("zero_energy_indicator: empty leaf subset");
  std::set<int> seen;
  NodeFunction u(form.node_count, 0.0);
  for (int j : leaf_subset) {
    if (j < 0 || j >= static_cast<int>(form.blocks.size())) {
      throw InvalidArgument("zero_energy_indicator: leaf index out of range");
    }
    if (!seen.insert(j).second) throw InvalidArgument("zero_energy_indicator: duplicate leaf");
    const LeafBlock& b = form.blocks[j];
    std::fill(u.begin() + b.offset, u.begin() + b.offset + b.size, 1.0);
  }
  return u;
}

NodeFunction set_indicator(std::size_t node_count, const NodeSet& set) {
  NodeFunction u(node_count, 0.0);
  for (std::size_t k : set) {
    if (k >= node_count) throw InvalidArgument("set_indicator: node out of range");
    u[k] = 1.0;
  }
  return u;
}

NodeSet interior_nodes(const DiscreteForm& form, const NodeSet& O) {
  std::vector<char> in(form.node_count, 0);
  for (std::size_t k : O) {
    if (k >= form.node_count) throw InvalidArgument("node set: index out of range");
    in[k] = 1;
  }
  NodeSet out;
  for (const LeafBlock& b : form.blocks) {
    for (int i = 0; i < b.size; ++i) {
      const std::size_t k = b.offset + i;
      if (!in[k]) continue;
      const bool left = i == 0 || in[k - 1];
      const bool right = i + 1 == b.size || in[k + 1];
      if (left && right) out.push_back(k);
    }
  }
  return out;
}

double min_superharmonic_pairing(const DiscreteForm& form, const NodeFunction& phi,
                                 const NodeSet& O) {
  const NodeFunction a = form.stiffness_apply(phi);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k : interior_nodes(form, O)) worst = std::min(worst, a[k]);
  return worst;
}

bool superharmonic_test(const DiscreteForm& form, const NodeFunction& phi, const NodeSet& O,
                        double tol) {
  double scale = 0.0;
  for (const LeafBlock& b : form.blocks) {
    for (double c : b.conductance) scale = std::max(scale, c);
  }
  double amp = 0.0;
  for (double v : phi) amp = std::max(amp, std::abs(v));
  const double floor = -tol * std::max(1.0, scale * amp);
  const NodeSet inner = interior_nodes(form, O);
  if (inner.empty()) return true;
  return min_superharmonic_pairing(form, phi, O) >= floor;
}

// ---------------------------------------------------------------------------
// Pullback and quasi-invariance

NodeFunction pullback(const HyperbolicSystem& sys, const Rectangle& source,
                      const Rectangle& target, const NodeFunction& phi, int n) {
  if (n < 0) throw InvalidArgument("pullback needs n >= 0");
  check_size(phi, target.node_count(), "pullback");
  NodeFunction out(source.node_count(), 0.0);
  const int per = target.nodes_per_leaf();
  for (std::size_t k = 0; k < source.node_count(); ++k) {
    QPoint z = source.leaves[source.leaf_of(k)].qnodes[k % source.nodes_per_leaf()];
    for (int i = 0; i < n; ++i) z = sys.apply(z);
    const Point zd = to_double(z);
    const auto loc = locate(sys, target, zd);
    if (!loc) {
      throw InvalidArgument("pullback: image of node " + std::to_string(k) +
                            " is not covered by the target rectangle");
    }
    const auto& arc = target.leaves[loc->leaf].arc;
    int i = static_cast<int>(std::floor((loc->s - arc.front()) / target.h));
    i = std::clamp(i, 0, per - 2);
    const double t = std::clamp((loc->s - arc[i]) / target.h, 0.0, 1.0);
    const std::size_t base = target.node_index(loc->leaf, i);
    out[k] = (1.0 - t) * phi[base] + t * phi[base + 1];
  }
  return out;
}

NodeFunction pullback(const HyperbolicSystem& sys, const Rectangle& rect, const NodeFunction& phi,
                      int n) {
  return pullback(sys, rect, rect, phi, n);
}

NodeFunction evaluate_composed(const HyperbolicSystem& sys, const Rectangle& rect,
                               const PhaseFunction& phi, int n) {
  NodeFunction out(rect.node_count());
  for (std::size_t k = 0; k < rect.node_count(); ++k) {
    QPoint z = rect.leaves[rect.leaf_of(k)].qnodes[k % rect.nodes_per_leaf()];
    for (int i = 0; i < n; ++i) z = sys.apply(z);
    out[k] = phi.value(to_double(z));
  }
  return out;
}

ExpansionRange expansion_range(const HyperbolicSystem& sys, const Rectangle& rect, int samples,
                               std::uint64_t seed) {
  ExpansionRange r{std::numeric_limits<double>::infinity(), 0.0};
  auto take = [&](const Point& x) {
    const double J = unstable_jacobian(sys, x);
    r.a_min = std::min(r.a_min, J);
    r.a_max = std::max(r.a_max, J);
  };
  Point x = attractor_point(sys, seed);
  for (int k = 0; k < samples; ++k) {
    take(x);
    x = sys.apply(x);
  }
  for (std::size_t k = 0; k < rect.node_count(); ++k) take(rect.node(k));
  return r;
}

QuasiInvarianceReport quasi_invariance_report(const HyperbolicSystem& sys, const Rectangle& rect,
                                              const Assembly& assembly, const PhaseFunction& phi,
                                              int n, const ExpansionRange& range) {
  if (!sys.conformal_constant()) {
    throw InvalidArgument("quasi_invariance_report: system is not u-conformal");
  }
  if (n < 0) throw InvalidArgument("quasi_invariance_report needs n >= 0");
  check_size(assembly.measure.mass, rect.node_count(), "quasi_invariance_report");
  QuasiInvarianceReport rep;
  rep.n = n;
  rep.a_min = range.a_min;
  rep.a_max = range.a_max;
  rep.energy_pullback = assembly.form.energy(evaluate_composed(sys, rect, phi, n));

  std::vector<double> image(rect.node_count());
  std::vector<double> weighted(rect.node_count());
  parallel_for(rect.node_count(), [&](std::size_t k) {
    QPoint z = rect.leaves[rect.leaf_of(k)].qnodes[k % rect.nodes_per_leaf()];
    Vec3 e = unstable_direction(sys, to_double(z));
    double growth = 1.0;
    for (int i = 0; i < n; ++i) {
      const Vec3 w = sys.differential(to_double(z)) * e;
      growth *= w.norm();
      e = w.normalized();
      z = sys.apply(z);
    }
    const Point zd = to_double(z);
    const double du = phi.gradient(zd).dot(unstable_direction(sys, zd));
    image[k] = assembly.measure.mass[k] * du * du;
    weighted[k] = image[k] * growth * growth;
  });
  rep.energy_image = std::accumulate(image.begin(), image.end(), 0.0);
  rep.energy_weighted = std::accumulate(weighted.begin(), weighted.end(), 0.0);
  rep.ratio = rep.energy_pullback / rep.energy_image;
  rep.lower = std::pow(range.a_min, 2 * n) * rep.energy_image;
  rep.upper = std::pow(range.a_max, 2 * n) * rep.energy_image;
  const double a = *sys.conformal_constant();
  if (range.a_max - range.a_min <= 1e-9 * a) rep.conformal = a;
  return rep;
}

NodeFunction pulled_back_weights(const HyperbolicSystem& sys, const Rectangle& rect, int n) {
  if (n < 0) throw InvalidArgument("pulled_back_weights needs n >= 0");
  NodeFunction w(rect.node_count(), 1.0);
  if (n == 0) return w;
  parallel_for(rect.node_count(), [&](std::size_t k) {
    const QPoint& y = rect.leaves[rect.leaf_of(k)].qnodes[k % rect.nodes_per_leaf()];
    const BackwardFrame frame = backward_frame(sys, y, n);
    double s = 0.0;
    for (int j = 1; j <= n; ++j) s += frame.log_jacobians[j];
    w[k] = std::exp(2.0 * s);
  });
  return w;
}

}  // namespace leafheat
