#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "leafheat/dirichlet.hpp"

namespace leafheat {

/// Eigenpairs of A ψ = θ M ψ on one leaf block; columns of psi are M-orthonormal.
struct BlockSpectrum {
  std::size_t offset = 0;
  Eigen::VectorXd theta;
  Eigen::MatrixXd psi;
};

class HeatOperator {
 public:
  HeatOperator(const DiscreteForm& form, const DiscreteMeasure& measure);

  /// P_t u = Σ_k e^{−θ_k t} ⟨u, ψ_k⟩_M ψ_k.
  NodeFunction apply(double t, const NodeFunction& u) const;
  /// t⁻¹ ⟨u − P_t u, u⟩_M.
  double heat_defect(double t, const NodeFunction& u) const;
  /// Dense matrix of P_t.
  Eigen::MatrixXd matrix(double t) const;
  /// Row x of P_t: the law at time t of the walk started at x.
  NodeFunction row_law(double t, std::size_t x) const;

  const std::vector<BlockSpectrum>& blocks() const { return blocks_; }
  std::vector<double> eigenvalues() const;
  std::size_t size() const { return mass_.size(); }
  const std::vector<double>& mass() const { return mass_; }

 private:
  std::vector<BlockSpectrum> blocks_;
  std::vector<double> mass_;
};

NodeFunction heat(const HeatOperator& hop, double t, const NodeFunction& u);

struct VaradhanRow {
  double t = 0.0;
  double integral = 0.0;       // ∫_A P_t 1_B dμ
  double t_log = 0.0;          // t log(integral)
  double gaffney_ratio = 0.0;  // integral / (√(μA μB) e^{−d²/(2t)})
  double davies_ratio = 0.0;   // integral / (√(μA μB) e^{−d²/(4t)})
};

struct VaradhanTable {
  double distance = 0.0;
  double mass_a = 0.0;
  double mass_b = 0.0;
  std::vector<VaradhanRow> rows;
};

/// Short-time table for node sets A, B. With d = +∞ every integral must vanish.
VaradhanTable varadhan_check(const DiscreteForm& form, const HeatOperator& hop,
                             const DiscreteMeasure& measure, const NodeSet& A, const NodeSet& B,
                             const std::vector<double>& t_list);

/// Semigroups killed outside O: the global principal-submatrix restriction and
/// the leaf-by-leaf one. Functions are full node vectors; values off O are
/// ignored on input and zero on output.
class DirichletDomain {
 public:
  DirichletDomain(const DiscreteForm& form, const DiscreteMeasure& measure, const NodeSet& O);

  const NodeSet& nodes() const { return nodes_; }
  std::size_t node_count() const { return n_; }
  NodeFunction heat_global(double t, const NodeFunction& u) const;
  NodeFunction heat_leafwise(double t, const NodeFunction& u) const;
  /// Dense |O| × |O| matrices in the order of nodes().
  Eigen::MatrixXd global_matrix(double t) const;
  Eigen::MatrixXd leafwise_matrix(double t) const;
  /// Bottom Dirichlet eigenvalues of the global restriction, ascending.
  const Eigen::VectorXd& global_eigenvalues() const { return global_theta_; }

 private:
  struct Piece {
    std::vector<int> local;  // positions in nodes_
    Eigen::VectorXd theta;
    Eigen::MatrixXd psi;  // M-orthonormal on the piece
  };
  static Piece solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& m, std::vector<int> local);
  Eigen::MatrixXd piece_matrix(const std::vector<Piece>& pieces, double t) const;

  std::size_t n_ = 0;
  NodeSet nodes_;
  Eigen::VectorXd mass_;
  std::vector<Piece> global_;
  std::vector<Piece> leafwise_;
  Eigen::VectorXd global_theta_;
};

DirichletDomain dirichlet_domain(const DiscreteForm& form, const DiscreteMeasure& measure,
                                 const NodeSet& O);

}  // namespace leafheat
