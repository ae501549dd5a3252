#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "leafheat/srb.hpp"

namespace leafheat {

using NodeFunction = std::vector<double>;
using NodeSet = std::vector<std::size_t>;

/// One leaf: nodes [offset, offset + size) joined by `size − 1` edges.
struct LeafBlock {
  std::size_t offset = 0;
  int size = 0;
  std::vector<double> conductance;
};

/// E(φ) = Σ_blocks Σ_edges c (φ_{i+1} − φ_i)²; no edges between leaves.
struct DiscreteForm {
  double h = 0.0;
  std::vector<LeafBlock> blocks;
  std::size_t node_count = 0;

  double energy(const NodeFunction& u) const;
  double bilinear(const NodeFunction& u, const NodeFunction& v) const;
  /// (A u)_i, the stiffness matrix applied to u.
  NodeFunction stiffness_apply(const NodeFunction& u) const;
  Eigen::SparseMatrix<double> stiffness() const;
  int block_of(std::size_t node) const;
  /// Arc-length coordinate of a node within its leaf, centred on the leaf.
  double arc(std::size_t node) const;
};

struct DiscreteMeasure {
  std::vector<double> mass;

  double total() const;
  double integral(const NodeFunction& u) const;
  double inner(const NodeFunction& u, const NodeFunction& v) const;
  double variance(const NodeFunction& u) const;
};

struct Assembly {
  DiscreteForm form;
  DiscreteMeasure measure;
};

/// Trapezoid node weights (½ at the leaf ends).
std::vector<double> trapezoid_weights(int size);

/// m = ŵ ϱ h τ_i, c = ŵ (ϱ_i + ϱ_{i+1}) / (2h). Weights are normalized to sum 1.
Assembly assemble(const std::vector<double>& weights,
                  const std::vector<std::vector<double>>& densities, double h);
Assembly assemble(const Rectangle& rect, const SRBTable& table);
/// Constant-density leaves of half-length eps (density 1/(2 eps)), equal weights.
Assembly assemble_uniform(int leaves, double eps, double h);

/// Multiplies every edge conductance by the mean of the endpoint weights.
DiscreteForm reweighted_form(const DiscreteForm& form, const NodeFunction& node_weights);

/// L = −M⁻¹A as a sparse matrix.
Eigen::SparseMatrix<double> laplacian(const DiscreteForm& form, const DiscreteMeasure& measure);
NodeFunction laplacian_apply(const DiscreteForm& form, const DiscreteMeasure& measure,
                             const NodeFunction& u);

/// Leafwise derivative: central differences inside, second-order one-sided at the ends.
NodeFunction leafwise_gradient(const DiscreteForm& form, const NodeFunction& u);
NodeFunction carre_du_champ(const DiscreteForm& form, const NodeFunction& u);

/// Intrinsic distance between node sets; +∞ when no leaf meets both.
double intrinsic_distance(const DiscreteForm& form, const NodeSet& A, const NodeSet& B);

/// Indicator of a union of whole leaves.
NodeFunction zero_energy_indicator(const DiscreteForm& form, const std::vector<int>& leaf_subset);
NodeFunction set_indicator(std::size_t node_count, const NodeSet& set);

/// Nodes of O whose within-leaf neighbours all lie in O.
NodeSet interior_nodes(const DiscreteForm& form, const NodeSet& O);
/// min over interior nodes i of O of E(φ, e_i).
double min_superharmonic_pairing(const DiscreteForm& form, const NodeFunction& phi,
                                 const NodeSet& O);
bool superharmonic_test(const DiscreteForm& form, const NodeFunction& phi, const NodeSet& O,
                        double tol = 1e-12);

/// φ ∘ fⁿ on the nodes of `source`, with φ given on the nodes of `target`.
NodeFunction pullback(const HyperbolicSystem& sys, const Rectangle& source,
                      const Rectangle& target, const NodeFunction& phi, int n);
NodeFunction pullback(const HyperbolicSystem& sys, const Rectangle& rect, const NodeFunction& phi,
                      int n);

/// Smooth function on phase space with its ambient gradient.
struct PhaseFunction {
  std::string name;
  std::function<double(const Point&)> value;
  std::function<Vec3(const Point&)> gradient;
};

/// Values φ(fⁿ(y)) at every node, orbits taken in extended precision.
NodeFunction evaluate_composed(const HyperbolicSystem& sys, const Rectangle& rect,
                               const PhaseFunction& phi, int n);

/// Pointwise unstable expansion range over attractor samples and the nodes.
struct ExpansionRange {
  double a_min = 0.0;
  double a_max = 0.0;
};
ExpansionRange expansion_range(const HyperbolicSystem& sys, const Rectangle& rect, int samples,
                               std::uint64_t seed);

struct QuasiInvarianceReport {
  int n = 0;
  double energy_pullback = 0.0;  // E(φ∘fⁿ) on the rectangle
  double energy_weighted = 0.0;  // Σ m (∂_u φ)²(fⁿ y) (Jⁿ(y))²
  double energy_image = 0.0;     // Σ m (∂_u φ)²(fⁿ y)
  double ratio = 0.0;            // energy_pullback / energy_image
  double a_min = 0.0;
  double a_max = 0.0;
  double lower = 0.0;  // a_min^{2n} energy_image
  double upper = 0.0;  // a_max^{2n} energy_image
  std::optional<double> conformal;
};

QuasiInvarianceReport quasi_invariance_report(const HyperbolicSystem& sys, const Rectangle& rect,
                                              const Assembly& assembly, const PhaseFunction& phi,
                                              int n, const ExpansionRange& range);

/// Node weights Π_{k=1}^{n} J^u(f^{-k} y)² of the n-th pulled-back form.
NodeFunction pulled_back_weights(const HyperbolicSystem& sys, const Rectangle& rect, int n);

}  // namespace leafheat
