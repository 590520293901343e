#include "support.hpp"

#include "gradflow/flow.hpp"

#include <gtest/gtest.h>

using namespace gradflow;
using namespace gradflow::testing;

TEST(BalancedInit, ScalarSquareRoot) {
  const WeightSetting w = balanced_factorization(Mat::Constant(1, 1, 0.04), {1, 1, 1});
  EXPECT_NEAR(w[0](0, 0), 0.2, 1e-15);
  EXPECT_NEAR(w[1](0, 0), 0.2, 1e-15);
  EXPECT_NEAR(end_to_end(w)(0, 0), 0.04, 1e-15);
  EXPECT_EQ(unbalancedness(w), 0.0);
}

TEST(BalancedInit, ZeroTargetGivesZeroLayers) {
  BalancedInitConfig cfg;
  cfg.dims = {3, 2, 2, 1};
  cfg.target = Mat::Zero(1, 3);
  EXPECT_EQ(random_balanced_init(cfg).norm(), 0.0);
}

TEST(BalancedInit, ReconstructsRandomTarget) {
  Rng rng(1);
  Mat a = gaussian(1, 4, rng);
  a *= 0.1 / a.norm();
  BalancedInitConfig cfg;
  cfg.dims = {4, 3, 3, 1};
  cfg.target = a;
  const WeightSetting w = random_balanced_init(cfg);
  EXPECT_LT((end_to_end(w) - a).norm(), 1e-12);
  EXPECT_LT(unbalancedness(w), 1e-12);
}

TEST(BalancedInit, SampledNormWithinRadius) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    BalancedInitConfig cfg;
    cfg.dims = {3, 2, 4, 2};
    cfg.seed = seed;
    cfg.radius = 0.2;
    const Mat a = sample_end_to_end(cfg);
    EXPECT_GT(a.norm(), 0.0);
    EXPECT_LE(a.norm(), 0.2 + 1e-15);
    Eigen::JacobiSVD<Mat> svd(a);
    EXPECT_LE((svd.singularValues().array() > 1e-12).count(), 2);
    const WeightSetting w = random_balanced_init(cfg);
    EXPECT_LT(unbalancedness(w), 1e-10);
    EXPECT_LT((end_to_end(w) - a).norm(), 1e-10);
  }
}

TEST(BalancedInit, SameSeedSameDraw) {
  BalancedInitConfig cfg;
  cfg.dims = {3, 3, 2};
  cfg.seed = 42;
  EXPECT_EQ(sample_end_to_end(cfg), sample_end_to_end(cfg));
}

TEST(BalancedInit, RejectsBadConfig) {
  BalancedInitConfig cfg;
  cfg.dims = {3, 0, 2};
  EXPECT_THROW(random_balanced_init(cfg), ShapeError);
}

TEST(Unbalancedness, ScalarPair) {
  const WeightSetting w({Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 2.0)});
  EXPECT_DOUBLE_EQ(unbalancedness(w), 3.0);
  EXPECT_EQ(unbalancedness(WeightSetting({Mat::Constant(2, 2, 1.0)})), 0.0);
}

TEST(Unbalancedness, InvariantUnderHiddenRotation) {
  Rng rng(2);
  WeightSetting w = gaussian_weights({3, 4, 2}, rng);
  const double before = unbalancedness(w);
  const Mat q = Eigen::HouseholderQR<Mat>(gaussian(4, 4, rng)).householderQ();
  w[0] = q * w[0];
  w[1] = w[1] * q.transpose();
  EXPECT_NEAR(unbalancedness(w), before, 1e-12 * before);
}

TEST(BalanceNearest, ScalarPair) {
  const WeightSetting w({Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 4.0)});
  const BalanceResult r = balance_nearest(w);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.theta[0](0, 0), 2.0, 1e-14);
  EXPECT_NEAR(r.theta[1](0, 0), 2.0, 1e-14);
  EXPECT_NEAR(end_to_end(r.theta)(0, 0), 4.0, 1e-14);
}

TEST(BalanceNearest, BalancedInputIsAFixedPoint) {
  BalancedInitConfig cfg;
  cfg.dims = {3, 3, 3, 2};
  cfg.seed = 5;
  const WeightSetting w = random_balanced_init(cfg);
  const BalanceResult r = balance_nearest(w);
  EXPECT_LT((r.theta - w).norm(), 1e-12);
}

TEST(BalanceNearest, MonotoneAndWithinDistanceBound) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const int n = 2 + i % 3;
    Dims d(n + 1, 3);
    d.back() = 2;
    BalancedInitConfig cfg;
    cfg.dims = d;
    cfg.seed = 100 + i;
    const WeightSetting w = random_balanced_init(cfg) + gaussian_weights(d, rng, 1e-5);
    const double eps_hat = unbalancedness(w);
    ASSERT_LE(eps_hat, 1e-4);
    const BalanceResult r = balance_nearest(w, 50, 1e-8);
    ASSERT_TRUE(r.converged);
    for (size_t k = 1; k < r.history.size(); ++k) EXPECT_LE(r.history[k], r.history[k - 1] * (1 + 1e-12));
    EXPECT_LE((w - r.theta).norm(), std::pow(double(n), 1.5) * std::sqrt(eps_hat));
    EXPECT_LT((end_to_end(r.theta) - end_to_end(w)).norm(), 1e-10);
  }
}

TEST(BalanceNearest, ReportsResidualWhenBudgetRunsOut) {
  Rng rng(4);
  const WeightSetting w = gaussian_weights({4, 4, 4, 4, 1}, rng, 2.0);
  const BalanceResult r = balance_nearest(w, 1, 1e-14);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.sweeps, 1);
  EXPECT_GT(r.residual, 1e-14);
}

TEST(Conservation, DefectsConstantAlongFlow) {
  Rng rng(5);
  const Dims d{3, 3, 2, 2};
  const WeightSetting w = gaussian_weights(d, rng, 0.5);
  const DataMoments m(gaussian(2, 3, rng));
  const auto d0 = balance_defects(w);
  const double tol = 1e-10;
  const Trajectory tr = gf_integrate(w.flatten(), 10.0, tol, [&](const Vec& f) {
    return gradient(WeightSetting::unflatten(f, d), m).flatten();
  });
  for (const Vec& s : tr.states) {
    const auto dt = balance_defects(WeightSetting::unflatten(s, d));
    for (size_t j = 0; j < dt.size(); ++j) EXPECT_LE((dt[j] - d0[j]).cwiseAbs().maxCoeff(), 10 * tol);
  }
}
