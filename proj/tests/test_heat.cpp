#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "leafheat/heat.hpp"
#include "oracles.hpp"

using namespace leafheat;

namespace {

Assembly random_density_assembly(int leaves, double eps, double h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  const int n = 2 * half_node_count(eps, h) + 1;
  std::vector<double> w(leaves);
  std::vector<std::vector<double>> rho(leaves, std::vector<double>(n));
  for (int j = 0; j < leaves; ++j) {
    w[j] = u(rng);
    for (double& r : rho[j]) r = u(rng);
  }
  return assemble(w, rho, h);
}

NodeFunction random_function(std::size_t n, std::mt19937_64& rng, double lo = 0.0,
                             double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  NodeFunction v(n);
  for (double& x : v) x = u(rng);
  return v;
}

double max_abs_diff(const NodeFunction& a, const NodeFunction& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

class HeatAxioms : public ::testing::Test {
 protected:
  Assembly a = random_density_assembly(3, 0.25, 0.25 / 32, 11);
  HeatOperator hop{a.form, a.measure};
};

TEST_F(HeatAxioms, Spectrum) {
  for (const BlockSpectrum& b : hop.blocks()) {
    EXPECT_EQ(b.theta[0], 0.0);
    const Eigen::VectorXd psi0 = b.psi.col(0);
    EXPECT_LT((psi0.array() - psi0[0]).abs().maxCoeff(), 1e-12 * std::abs(psi0[0]));
    for (int k = 0; k < b.theta.size(); ++k) EXPECT_GE(b.theta[k], -1e-12);
    Eigen::VectorXd m(b.theta.size());
    for (int i = 0; i < m.size(); ++i) m[i] = a.measure.mass[b.offset + i];
    const Eigen::MatrixXd G = b.psi.transpose() * m.asDiagonal() * b.psi;
    EXPECT_LT((G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST_F(HeatAxioms, MarkovConservativeInvariantSymmetric) {
  std::mt19937_64 rng(3);
  const std::size_t N = a.form.node_count;
  Eigen::VectorXd m(N);
  for (std::size_t i = 0; i < N; ++i) m[i] = a.measure.mass[i];
  for (double t : {0.01, 0.1, 1.0}) {
    const NodeFunction u = random_function(N, rng);
    const NodeFunction v = random_function(N, rng);
    const NodeFunction pu = hop.apply(t, u);
    for (double x : pu) {
      EXPECT_GE(x, -1e-12);
      EXPECT_LE(x, 1.0 + 1e-12);
    }
    for (double x : hop.apply(t, NodeFunction(N, 1.0))) EXPECT_NEAR(x, 1.0, 1e-12);
    EXPECT_NEAR(a.measure.integral(pu), a.measure.integral(u), 1e-12);
    EXPECT_NEAR(a.measure.inner(pu, v), a.measure.inner(u, hop.apply(t, v)), 1e-12);
    const Eigen::MatrixXd P = hop.matrix(t);
    const Eigen::MatrixXd MP = m.asDiagonal() * P;
    EXPECT_LT((MP - MP.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST_F(HeatAxioms, SemigroupLawAndLimits) {
  std::mt19937_64 rng(4);
  const NodeFunction u = random_function(a.form.node_count, rng);
  EXPECT_EQ(hop.apply(0.0, u), u);
  std::uniform_real_distribution<double> tt(0.001, 0.5);
  for (int k = 0; k < 5; ++k) {
    const double s = tt(rng);
    const double t = tt(rng);
    EXPECT_LT(max_abs_diff(hop.apply(s, hop.apply(t, u)), hop.apply(s + t, u)), 1e-12);
  }
  // long time: per-leaf μ-average
  const NodeFunction far = hop.apply(1e4, u);
  for (const LeafBlock& b : a.form.blocks) {
    double mu = 0.0;
    double mass = 0.0;
    for (int i = 0; i < b.size; ++i) {
      mu += a.measure.mass[b.offset + i] * u[b.offset + i];
      mass += a.measure.mass[b.offset + i];
    }
    for (int i = 0; i < b.size; ++i) EXPECT_NEAR(far[b.offset + i], mu / mass, 1e-12);
  }
  EXPECT_THROW(hop.apply(-1.0, u), InvalidArgument);
}

TEST_F(HeatAxioms, VariationalIdentity) {
  std::mt19937_64 rng(6);
  const NodeFunction phi = random_function(a.form.node_count, rng, -1.0, 1.0);
  const double E = a.form.energy(phi);
  double prev = 0.0;
  for (int k = 0; k <= 16; ++k) {
    const double d = hop.heat_defect(std::pow(10.0, -k), phi);
    EXPECT_GE(d, prev * (1 - 1e-12));
    prev = d;
  }
  EXPECT_NEAR(prev / E, 1.0, 1e-10);
}

TEST_F(HeatAxioms, RowLawSumsToOne) {
  const NodeFunction law = hop.row_law(0.05, 40);
  double s = 0.0;
  for (std::size_t k = 0; k < law.size(); ++k) {
    s += law[k];
    if (a.form.block_of(k) != a.form.block_of(40)) {
      EXPECT_EQ(law[k], 0.0);
    }
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Heat, ConstantDensityLeafMatchesImageSumKernel) {
  // exact Neumann integrals on [−1/2, 1/2] for A = [−1/2, −1/5], B = [1/5, 1/2] (cosine series)
  const double frozen[4][2] = {{0.008, 2.69342125002624e-05},
                               {0.016, 7.88528603753327e-04},
                               {0.032, 6.14187215500665e-03},
                               {0.064, 2.31339707790272e-02}};
  for (const auto& [t, v] : frozen) {
    EXPECT_NEAR(oracle::neumann_box(0.5, -0.5, -0.2, 0.2, 0.5, t) / v, 1.0, 1e-10) << "t = " << t;
  }
  const double h = 1.0 / 400;
  const Assembly a = assemble_uniform(1, 0.5, h);
  const HeatOperator hop(a.form, a.measure);
  NodeSet A;
  NodeSet B;
  for (std::size_t k = 0; k < a.form.node_count; ++k) {
    if (a.form.arc(k) <= -0.2 + 1e-12) A.push_back(k);
    if (a.form.arc(k) >= 0.2 - 1e-12) B.push_back(k);
  }
  // the node sets carry the cells [−1/2, −1/5 + h/2] and [1/5 − h/2, 1/2]
  for (double t : {0.008, 0.016, 0.032, 0.064}) {
    const double exact = oracle::neumann_box(0.5, -0.5, -0.2 + h / 2, 0.2 - h / 2, 0.5, t);
    const auto tab = varadhan_check(a.form, hop, a.measure, A, B, {t});
    EXPECT_NEAR(tab.rows[0].integral / exact, 1.0, 0.02) << "t = " << t;
  }
}

TEST(Heat, VaradhanTableAndBlocking) {
  const Assembly a = assemble_uniform(2, 0.5, 1.0 / 400);
  const HeatOperator hop(a.form, a.measure);
  NodeSet A;
  NodeSet B;
  for (std::size_t k = 0; k < 401; ++k) {
    if (a.form.arc(k) <= -0.2 + 1e-12) A.push_back(k);
    if (a.form.arc(k) >= 0.2 - 1e-12) B.push_back(k);
  }
  const auto tab = varadhan_check(a.form, hop, a.measure, A, B, {0.008, 0.064});
  EXPECT_NEAR(tab.distance, 0.4, 1e-12);
  EXPECT_LT(tab.rows[0].t_log, 0.0);
  NodeSet other;
  for (std::size_t k = 401; k < 802; ++k) other.push_back(k);
  const auto blocked = varadhan_check(a.form, hop, a.measure, A, other, {0.01, 0.1, 1.0});
  EXPECT_TRUE(std::isinf(blocked.distance));
  for (const auto& r : blocked.rows) EXPECT_EQ(r.integral, 0.0);
}

TEST(DirichletDomain, WholeSpaceIsNeumann) {
  const Assembly a = random_density_assembly(2, 0.25, 0.25 / 16, 5);
  const HeatOperator hop(a.form, a.measure);
  NodeSet all(a.form.node_count);
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  const DirichletDomain dom(a.form, a.measure, all);
  for (double t : {0.01, 0.1}) {
    EXPECT_LT((dom.global_matrix(t) - hop.matrix(t)).cwiseAbs().maxCoeff(), 1e-11);
    EXPECT_LT((dom.leafwise_matrix(t) - hop.matrix(t)).cwiseAbs().maxCoeff(), 1e-11);
  }
}

TEST(DirichletDomain, SineSeriesOnOneLeaf) {
  // 131-node leaf, O = nodes 1..128: pure Dirichlet problem on N = 128 nodes
  const double h = 0.5 / 65;
  const Assembly a = assemble({1.0}, {std::vector<double>(131, 1.0)}, h);
  NodeSet O;
  for (std::size_t k = 1; k <= 128; ++k) O.push_back(k);
  const DirichletDomain dom(a.form, a.measure, O);
  for (double t : {10 * h * h, 100 * h * h, 1000 * h * h}) {
    const Eigen::MatrixXd G = dom.global_matrix(t);
    const Eigen::MatrixXd L = dom.leafwise_matrix(t);
    double err = 0.0;
    for (int i = 0; i < 128; ++i) {
      for (int j = 0; j < 128; ++j) {
        err = std::max(err, std::abs(G(i, j) - oracle::sine_series(128, h, t, i, j)));
      }
    }
    EXPECT_LT(err, 1e-8) << "t = " << t;
    EXPECT_LT((G - L).cwiseAbs().maxCoeff(), 1e-12);
    const Eigen::VectorXd rows = G.rowwise().sum();
    EXPECT_LE(rows.maxCoeff(), 1.0 + 1e-12);
    EXPECT_LT(rows[0], rows[64]);
  }
}

TEST(DirichletDomain, DominationAndErrors) {
  const Assembly a = random_density_assembly(3, 0.25, 0.25 / 16, 7);
  NodeSet O;
  for (std::size_t k = 3; k < 20; ++k) O.push_back(k);
  for (std::size_t k = 40; k < 90; ++k) O.push_back(k);
  const DirichletDomain dom(a.form, a.measure, O);
  for (double t : {0.001, 0.01, 0.1}) {
    const Eigen::MatrixXd D = dom.global_matrix(t) - dom.leafwise_matrix(t);
    EXPECT_LE(D.maxCoeff(), 1e-12);
    EXPECT_GE(dom.global_matrix(t).minCoeff(), -1e-12);
  }
  std::mt19937_64 rng(1);
  const NodeFunction u = random_function(a.form.node_count, rng);
  const NodeFunction g = dom.heat_global(0.01, u);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_THROW(DirichletDomain(a.form, a.measure, {}), InvalidArgument);
  EXPECT_THROW(DirichletDomain(a.form, a.measure, {5, 7, 9}), InvalidArgument);
}
