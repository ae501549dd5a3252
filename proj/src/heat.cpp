#include "leafheat/heat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "leafheat/parallel.hpp"

namespace leafheat {

namespace {

void check_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("heat: t must be finite and >= 0");
}

BlockSpectrum block_spectrum(const LeafBlock& b, const std::vector<double>& mass) {
  const int n = b.size;
  BlockSpectrum out;
  out.offset = b.offset;
  Eigen::VectorXd sq(n);
  for (int i = 0; i < n; ++i) sq[i] = std::sqrt(mass[b.offset + i]);
  if (n == 1) {
    out.theta = Eigen::VectorXd::Zero(1);
    out.psi = Eigen::MatrixXd::Constant(1, 1, 1.0 / sq[0]);
    return out;
  }
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int i = 0; i + 1 < n; ++i) {
    const double c = b.conductance[i];
    diag[i] += c;
    diag[i + 1] += c;
    sub[i] = -c / (sq[i] * sq[i + 1]);
  }
  for (int i = 0; i < n; ++i) diag[i] /= sq[i] * sq[i];

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericalError("heat: tridiagonal eigensolver failed");
  Eigen::MatrixXd V = es.eigenvectors();
  out.theta = es.eigenvalues();

  // Ground state is known exactly; the rest are re-orthogonalized against it.
  const Eigen::VectorXd v0 = sq / sq.norm();
  out.theta[0] = 0.0;
  V.col(0) = v0;
  for (int k = 1; k < n; ++k) {
    V.col(k) -= V.col(k).dot(v0) * v0;
    V.col(k).normalize();
    out.theta[k] = std::max(out.theta[k], 0.0);
  }
  out.psi = sq.cwiseInverse().asDiagonal() * V;
  return out;
}

}  // namespace

HeatOperator::HeatOperator(const DiscreteForm& form, const DiscreteMeasure& measure)
    : mass_(measure.mass) {
  if (mass_.size() != form.node_count) throw InvalidArgument("heat: form and measure sizes differ");
  for (double m : mass_) {
    if (!(m > 0.0)) throw InvalidArgument("heat: masses must be positive");
  }
  blocks_.resize(form.blocks.size());
  parallel_for(form.blocks.size(),
               [&](std::size_t j) { blocks_[j] = block_spectrum(form.blocks[j], mass_); });
}

NodeFunction HeatOperator::apply(double t, const NodeFunction& u) const {
  check_time(t);
  if (u.size() != mass_.size()) throw InvalidArgument("heat: node function has wrong size");
  if (t == 0.0) return u;
  NodeFunction out(u.size());
  for (const BlockSpectrum& b : blocks_) {
    const int n = static_cast<int>(b.theta.size());
    Eigen::VectorXd mu(n);
    for (int i = 0; i < n; ++i) mu[i] = mass_[b.offset + i] * u[b.offset + i];
    Eigen::VectorXd c = b.psi.transpose() * mu;
    for (int k = 0; k < n; ++k) c[k] *= std::exp(-b.theta[k] * t);
    const Eigen::VectorXd v = b.psi * c;
    for (int i = 0; i < n; ++i) out[b.offset + i] = v[i];
  }
  return out;
}

double HeatOperator::heat_defect(double t, const NodeFunction& u) const {
  check_time(t);
  if (t == 0.0) throw InvalidArgument("heat_defect needs t > 0");
  if (u.size() != mass_.size()) throw InvalidArgument("heat: node function has wrong size");
  double s = 0.0;
  for (const BlockSpectrum& b : blocks_) {
    const int n = static_cast<int>(b.theta.size());
    Eigen::VectorXd mu(n);
    for (int i = 0; i < n; ++i) mu[i] = mass_[b.offset + i] * u[b.offset + i];
    const Eigen::VectorXd c = b.psi.transpose() * mu;
    for (int k = 0; k < n; ++k) s += -std::expm1(-b.theta[k] * t) / t * c[k] * c[k];
  }
  return s;
}

Eigen::MatrixXd HeatOperator::matrix(double t) const {
  check_time(t);
  const int N = static_cast<int>(mass_.size());
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(N, N);
  for (const BlockSpectrum& b : blocks_) {
    const int n = static_cast<int>(b.theta.size());
    const int o = static_cast<int>(b.offset);
    if (t == 0.0) {
      P.block(o, o, n, n).setIdentity();
      continue;
    }
    Eigen::VectorXd e(n);
    for (int k = 0; k < n; ++k) e[k] = std::exp(-b.theta[k] * t);
    Eigen::VectorXd m(n);
    for (int i = 0; i < n; ++i) m[i] = mass_[b.offset + i];
    P.block(o, o, n, n) = b.psi * e.asDiagonal() * b.psi.transpose() * m.asDiagonal();
  }
  return P;
}

NodeFunction HeatOperator::row_law(double t, std::size_t x) const {
  check_time(t);
  if (x >= mass_.size()) throw InvalidArgument("row_law: node out of range");
  NodeFunction law(mass_.size(), 0.0);
  if (t == 0.0) {
    law[x] = 1.0;
    return law;
  }
  for (const BlockSpectrum& b : blocks_) {
    const int n = static_cast<int>(b.theta.size());
    if (x < b.offset || x >= b.offset + n) continue;
    const int r = static_cast<int>(x - b.offset);
    Eigen::VectorXd c(n);
    for (int k = 0; k < n; ++k) c[k] = std::exp(-b.theta[k] * t) * b.psi(r, k);
    const Eigen::VectorXd v = b.psi * c;
    for (int i = 0; i < n; ++i) law[b.offset + i] = v[i] * mass_[b.offset + i];
  }
  return law;
}

std::vector<double> HeatOperator::eigenvalues() const {
  std::vector<double> out;
  for (const BlockSpectrum& b : blocks_) {
    for (int k = 0; k < b.theta.size(); ++k) out.push_back(b.theta[k]);
  }
  return out;
}

NodeFunction heat(const HeatOperator& hop, double t, const NodeFunction& u) {
  return hop.apply(t, u);
}

VaradhanTable varadhan_check(const DiscreteForm& form, const HeatOperator& hop,
                             const DiscreteMeasure& measure, const NodeSet& A, const NodeSet& B,
                             const std::vector<double>& t_list) {
  VaradhanTable tab;
  tab.distance = intrinsic_distance(form, A, B);
  const NodeFunction ia = set_indicator(form.node_count, A);
  const NodeFunction ib = set_indicator(form.node_count, B);
  tab.mass_a = measure.integral(ia);
  tab.mass_b = measure.integral(ib);
  const double d2 = tab.distance * tab.distance;
  const double scale = std::sqrt(tab.mass_a * tab.mass_b);
  for (double t : t_list) {
    if (!(t > 0.0)) throw InvalidArgument("varadhan_check: times must be positive");
    VaradhanRow row;
    row.t = t;
    row.integral = measure.inner(ia, hop.apply(t, ib));
    row.t_log = row.integral > 0.0 ? t * std::log(row.integral)
                                   : -std::numeric_limits<double>::infinity();
    if (std::isinf(tab.distance)) {
      row.gaffney_ratio = row.integral == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
      row.davies_ratio = row.gaffney_ratio;
    } else {
      row.gaffney_ratio = row.integral / (scale * std::exp(-d2 / (2.0 * t)));
      row.davies_ratio = row.integral / (scale * std::exp(-d2 / (4.0 * t)));
    }
    tab.rows.push_back(row);
  }
  return tab;
}

// ---------------------------------------------------------------------------
// Dirichlet domains

DirichletDomain::Piece DirichletDomain::solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& m,
                                              std::vector<int> local) {
  Piece p;
  p.local = std::move(local);
  const Eigen::VectorXd isq = m.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd S = isq.asDiagonal() * A * isq.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw NumericalError("dirichlet_domain: eigensolver failed");
  p.theta = es.eigenvalues().cwiseMax(0.0);
  p.psi = isq.asDiagonal() * es.eigenvectors();
  return p;
}

DirichletDomain::DirichletDomain(const DiscreteForm& form, const DiscreteMeasure& measure,
                                 const NodeSet& O)
    : n_(form.node_count) {
  if (O.empty()) throw InvalidArgument("dirichlet_domain: empty node set");
  nodes_ = O;
  std::sort(nodes_.begin(), nodes_.end());
  nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
  if (nodes_.back() >= n_) throw InvalidArgument("dirichlet_domain: node out of range");
  if (interior_nodes(form, nodes_).empty()) {
    throw InvalidArgument("dirichlet_domain: node set has empty interior");
  }
  const int k = static_cast<int>(nodes_.size());
  mass_.resize(k);
  for (int i = 0; i < k; ++i) mass_[i] = measure.mass[nodes_[i]];

  const Eigen::SparseMatrix<double> A = form.stiffness();
  Eigen::MatrixXd AO = Eigen::MatrixXd::Zero(k, k);
  std::vector<int> pos(n_, -1);
  for (int i = 0; i < k; ++i) pos[nodes_[i]] = i;
  for (int c = 0; c < A.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, c); it; ++it) {
      const int r = pos[it.row()];
      const int s = pos[it.col()];
      if (r >= 0 && s >= 0) AO(r, s) = it.value();
    }
  }

  std::vector<int> all(k);
  for (int i = 0; i < k; ++i) all[i] = i;
  global_.push_back(solve(AO, mass_, all));
  global_theta_ = global_.front().theta;

  std::vector<std::vector<int>> by_leaf(form.blocks.size());
  for (int i = 0; i < k; ++i) by_leaf[form.block_of(nodes_[i])].push_back(i);
  for (auto& idx : by_leaf) {
    if (idx.empty()) continue;
    const int n = static_cast<int>(idx.size());
    Eigen::MatrixXd Al(n, n);
    Eigen::VectorXd ml(n);
    for (int a = 0; a < n; ++a) {
      ml[a] = mass_[idx[a]];
      for (int b = 0; b < n; ++b) Al(a, b) = AO(idx[a], idx[b]);
    }
    leafwise_.push_back(solve(Al, ml, idx));
  }
}

Eigen::MatrixXd DirichletDomain::piece_matrix(const std::vector<Piece>& pieces, double t) const {
  check_time(t);
  const int k = static_cast<int>(nodes_.size());
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(k, k);
  for (const Piece& p : pieces) {
    const int n = static_cast<int>(p.local.size());
    Eigen::VectorXd e(n);
    Eigen::VectorXd m(n);
    for (int a = 0; a < n; ++a) {
      e[a] = t == 0.0 ? 1.0 : std::exp(-p.theta[a] * t);
      m[a] = mass_[p.local[a]];
    }
    const Eigen::MatrixXd Pl = p.psi * e.asDiagonal() * p.psi.transpose() * m.asDiagonal();
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) P(p.local[a], p.local[b]) = Pl(a, b);
    }
  }
  return P;
}

Eigen::MatrixXd DirichletDomain::global_matrix(double t) const { return piece_matrix(global_, t); }

Eigen::MatrixXd DirichletDomain::leafwise_matrix(double t) const {
  return piece_matrix(leafwise_, t);
}

namespace {

NodeFunction apply_restricted(const Eigen::MatrixXd& P, const NodeSet& nodes, std::size_t n,
                              const NodeFunction& u) {
  if (u.size() != n) throw InvalidArgument("dirichlet_domain: node function has wrong size");
  Eigen::VectorXd v(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) v[i] = u[nodes[i]];
  const Eigen::VectorXd w = P * v;
  NodeFunction out(n, 0.0);
  for (std::size_t i = 0; i < nodes.size(); ++i) out[nodes[i]] = w[i];
  return out;
}

}  // namespace

NodeFunction DirichletDomain::heat_global(double t, const NodeFunction& u) const {
  return apply_restricted(global_matrix(t), nodes_, n_, u);
}

NodeFunction DirichletDomain::heat_leafwise(double t, const NodeFunction& u) const {
  return apply_restricted(leafwise_matrix(t), nodes_, n_, u);
}

DirichletDomain dirichlet_domain(const DiscreteForm& form, const DiscreteMeasure& measure,
                                 const NodeSet& O) {
  return DirichletDomain(form, measure, O);
}

}  // namespace leafheat
