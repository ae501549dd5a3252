#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "leafheat/srb.hpp"

using namespace leafheat;

namespace {

/// g = ‖(u_x, u_y, 1)‖ at orbit[k], from the slope recursion run forward
/// from the deepest point of a backward orbit (orbit[j] = f^{-j} x).
double solenoid_g(const std::vector<QPoint>& orbit, int k, const Solenoid& s) {
  double ux = 0.0;
  double uy = 0.0;
  for (int j = static_cast<int>(orbit.size()) - 1; j > k; --j) {
    const double th = static_cast<double>(orbit[j][2]);
    ux = (s.alpha * ux - s.r * std::sin(th)) / 2.0;
    uy = (s.beta * uy + s.r * std::cos(th)) / 2.0;
  }
  return std::sqrt(1.0 + ux * ux + uy * uy);
}

Rectangle cat_rect(int J) {
  RectangleSpec rs;
  rs.eps = 0.25;
  rs.h = 0.25 / 32;
  rs.J = J;
  rs.stable_radius = 0.1;
  rs.base = Point(0.1, 0.2, 0.0);
  return build_rectangle(HyperbolicSystem::cat_map(), rs);
}

}  // namespace

TEST(Trapezoid, ExactOnLinear) {
  EXPECT_DOUBLE_EQ(trapezoid({0.0, 1.0, 2.0, 3.0}, 0.5), 2.25);
  EXPECT_THROW(trapezoid({4.0}, 1.0), InvalidArgument);
}

TEST(FitHolder, RecoversPowerLaw) {
  std::vector<double> d;
  std::vector<double> delta;
  for (int k = 1; k <= 40; ++k) {
    d.push_back(1e-3 * k);
    delta.push_back(0.7 * std::pow(1e-3 * k, 0.5));
  }
  const HolderFit fit = fit_holder(d, delta);
  EXPECT_NEAR(fit.alpha, 0.5, 1e-10);
  EXPECT_NEAR(fit.L, 1.5 * 0.7, 1e-9);
}

TEST(FitHolder, ConstantJacobianAndCap) {
  const HolderFit zero = fit_holder({0.1, 0.2}, {0.0, 1e-15});
  EXPECT_EQ(zero.L, 0.0);
  EXPECT_EQ(zero.alpha, 1.0);
  std::vector<double> d = {0.01, 0.02, 0.04};
  std::vector<double> delta = {1e-4, 4e-4, 1.6e-3};  // slope 2 is capped at 1
  EXPECT_EQ(fit_holder(d, delta).alpha, 1.0);
}

TEST(Distortion, BoundDecreasesAndOrderMeetsTolerance) {
  DistortionConstants dc;
  dc.L = 1.0;
  dc.alpha = 0.8;
  dc.C = 1.2;
  dc.lambda = 0.5;
  dc.diameter = 0.6;
  dc.K0 = 1.3;
  for (int n = 1; n < 30; ++n) EXPECT_LT(truncation_bound(dc, n + 1), truncation_bound(dc, n));
  const int n = default_order(dc, 1e-6);
  EXPECT_LE(truncation_bound(dc, n), 1e-6);
  EXPECT_GT(truncation_bound(dc, n - 1), 1e-6);
}

TEST(SRBDensity, CatIsIdenticallyOne) {
  const auto cat = HyperbolicSystem::cat_map();
  const LeafSegment leaf = trace_leaf(cat, Point(0.3, 0.1, 0.0), 0.25, 0.25 / 32);
  const HolderFit fit = estimate_holder(cat, sample_holder_pairs(cat, 200, 0.2, 1));
  EXPECT_EQ(fit.L, 0.0);
  const DistortionConstants dc = distortion_constants(cat, fit, 0.5);
  EXPECT_EQ(dc.K0, 1.0);
  for (int n : {1, 5, 20}) {
    const SRBLeafDensity d = srb_density(cat, leaf, n, dc);
    for (double v : d.raw) EXPECT_NEAR(v, 1.0, 1e-12);
    EXPECT_NEAR(trapezoid(d.normalized, leaf.h), 1.0, 1e-12);
  }
}

TEST(SRBDensity, SolenoidMatchesTelescopedOracle) {
  const auto sol = HyperbolicSystem::solenoid();
  const auto& s = std::get<Solenoid>(sol.variant());
  const QPoint x = attractor_point_q(sol, 3);
  const LeafSegment leaf = trace_leaf(sol, x, 0.3, 0.3 / 16);
  DistortionConstants dc;
  for (int n : {8, 16}) {
    const SRBLeafDensity d = srb_density(sol, leaf, n, dc);
    const auto base_orbit = backward_orbit(sol, leaf.base_q, n + 60);
    const double gb = solenoid_g(base_orbit, 0, s);
    const double gbn = solenoid_g(base_orbit, n, s);
    for (std::size_t i = 0; i < leaf.size(); i += 4) {
      const auto orbit = backward_orbit(sol, leaf.qnodes[i], n + 60);
      const double expect = gb / gbn * solenoid_g(orbit, n, s) / solenoid_g(orbit, 0, s);
      EXPECT_NEAR(d.raw[i], expect, 1e-12) << "node " << i << " n " << n;
    }
  }
}

TEST(SRBDensity, SolenoidWithinDistortionBound) {
  const auto sol = HyperbolicSystem::solenoid();
  const HolderFit fit = estimate_holder(sol, sample_holder_pairs(sol, 500, 0.3, 1));
  EXPECT_GT(fit.L, 0.0);
  EXPECT_LE(fit.alpha, 1.0);
  const DistortionConstants dc = distortion_constants(sol, fit, 0.6);
  EXPECT_GT(dc.K0, 1.0);
  const LeafSegment leaf = trace_leaf(sol, attractor_point_q(sol, 9), 0.3, 0.3 / 16);
  const SRBLeafDensity d = srb_density(sol, leaf, 15, dc);
  for (double v : d.raw) {
    EXPECT_LE(v, dc.K0);
    EXPECT_GE(v, 1.0 / dc.K0);
  }
}

TEST(QuotientWeights, CatNearlyUniform) {
  const auto cat = HyperbolicSystem::cat_map();
  const Rectangle rect = cat_rect(8);
  const QuotientEstimate q = estimate_quotient_weights(cat, rect, 1000, 100000, 7);
  EXPECT_EQ(q.hits, 100000);
  double total = 0.0;
  for (std::size_t j = 0; j < q.weights.size(); ++j) {
    total += q.weights[j];
    const double sigma = std::sqrt(0.125 * 0.875 / 1e5);
    EXPECT_NEAR(q.weights[j], 0.125, 4 * sigma);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  const QuotientEstimate again = estimate_quotient_weights(cat, rect, 1000, 100000, 7);
  EXPECT_EQ(again.counts, q.counts);
}

TEST(Disintegration, RejectsOutsideSamples) {
  const auto cat = HyperbolicSystem::cat_map();
  const Rectangle rect = cat_rect(4);
  EXPECT_THROW(disintegrate(cat, {Point(0.6, 0.7, 0.0)}, rect), InvalidArgument);
  const Disintegration d = disintegrate(cat, {rect.node(3), rect.node(70)}, rect);
  EXPECT_EQ(d.total, 2);
}

TEST(ContentHash, Fnv1a) {
  EXPECT_EQ(content_hash(nlohmann::json{{"a", 1}}), "9c3e82dd6fcae8b1");
}

TEST(SRBCache, HitReproducesTable) {
  const auto cat = HyperbolicSystem::cat_map();
  const Rectangle rect = cat_rect(4);
  SRBSpec spec;
  spec.n_samples = 20000;
  spec.holder_pairs = 100;
  const auto dir = std::filesystem::temp_directory_path() / "leafheat-test-cache";
  std::filesystem::remove_all(dir);
  bool hit = true;
  const SRBTable cold = cached_srb_table(cat, rect, spec, dir.string(), &hit);
  EXPECT_FALSE(hit);
  const SRBTable warm = cached_srb_table(cat, rect, spec, dir.string(), &hit);
  EXPECT_TRUE(hit);
  EXPECT_EQ(cold.to_json(), warm.to_json());
  EXPECT_EQ(cold.to_json(), compute_srb_table(cat, rect, spec).to_json());
  spec.seed = 2;
  EXPECT_NE(srb_cache_key(cat, rect, spec), cold.key);
  std::filesystem::remove_all(dir);
}
