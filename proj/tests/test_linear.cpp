#include "support.hpp"

#include "gradflow/data.hpp"
#include "gradflow/flow.hpp"

#include <gtest/gtest.h>

using namespace gradflow;
using namespace gradflow::testing;

namespace {

WeightSetting scalar_net(std::initializer_list<double> ws) {
  std::vector<Mat> l;
  for (double w : ws) l.push_back(Mat::Constant(1, 1, w));
  return WeightSetting(std::move(l));
}

DataMoments scalar_target(double v) { return DataMoments(Mat::Constant(1, 1, v)); }

}  // namespace

TEST(EndToEnd, IdentityLayers) {
  const WeightSetting w({Mat::Identity(3, 3), Mat::Identity(3, 3), Mat::Identity(3, 3)});
  EXPECT_EQ(end_to_end(w), Mat::Identity(3, 3));
}

TEST(EndToEnd, ScalarProduct) { EXPECT_DOUBLE_EQ(end_to_end(scalar_net({2, 3}))(0, 0), 6.0); }

TEST(EndToEnd, MatchesNaiveChain) {
  Rng rng(3);
  const WeightSetting w = gaussian_weights({2, 3, 3, 1}, rng);
  Mat naive = Mat::Zero(1, 2);
  for (int o = 0; o < 1; ++o)
    for (int i = 0; i < 2; ++i)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) naive(o, i) += w[2](o, b) * w[1](b, a) * w[0](a, i);
  EXPECT_LT((end_to_end(w) - naive).norm(), 1e-14);
  EXPECT_LT((partial_product(w, 2, 1) - w[1] * w[0]).norm(), 1e-14);
  EXPECT_EQ(partial_product(w, 1, 2), Mat::Identity(3, 3));
}

TEST(Loss, GlobalMinimumGivesOffset) {
  Rng rng(4);
  const Mat lam = gaussian(1, 2, rng);
  const DataMoments m(lam, 0.25);
  WeightSetting w = WeightSetting::zeros({2, 1, 1});
  w[0] = lam;
  w[1](0, 0) = 1.0;
  EXPECT_NEAR(loss(w, m), 0.25, 1e-15);
  EXPECT_LT(gradient(w, m).norm(), 1e-15);
}

TEST(Loss, ZeroWeightsUnitTarget) {
  Mat lam(1, 2);
  lam << 0.6, 0.8;
  EXPECT_NEAR(loss(WeightSetting::zeros({2, 2, 1}), DataMoments(lam)), 0.5, 1e-15);
}

TEST(Loss, ClosedFormMatchesPerSampleSum) {
  SyntheticSpec spec;
  spec.samples = 5;
  spec.input_dim = 3;
  spec.output_dim = 2;
  spec.seed = 9;
  const LabeledSet s = synthetic_data(spec);
  const DataMoments m = DataMoments::from_data(s.inputs, s.targets);
  Rng rng(5);
  const WeightSetting w = gaussian_weights({3, 4, 2}, rng);
  double direct = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    direct += 0.5 * (end_to_end(w) * s.inputs.col(i) - s.targets.col(i)).squaredNorm();
  EXPECT_NEAR(loss(w, m), direct / s.size(), 1e-12);
}

TEST(Gradient, DepthOneIsResidual) {
  Rng rng(6);
  const Mat lam = gaussian(2, 3, rng);
  const WeightSetting w({gaussian(2, 3, rng)});
  EXPECT_LT((gradient(w, DataMoments(lam))[0] - (w[0] - lam)).norm(), 1e-15);
}

TEST(Gradient, MatchesCentralDifferences) {
  Rng rng(7);
  const Dims d{2, 2, 2, 1};
  const WeightSetting w = gaussian_weights(d, rng);
  const DataMoments m(gaussian(1, 2, rng));
  const Vec g = gradient(w, m).flatten();
  const Vec x = w.flatten();
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec p = x, q = x;
    p[i] += h;
    q[i] -= h;
    const double fd = (loss(WeightSetting::unflatten(p, d), m) - loss(WeightSetting::unflatten(q, d), m)) / (2 * h);
    EXPECT_LT(rel_err(fd, g[i], 1e-3), 1e-6) << "component " << i;
  }
}

TEST(HessianForm, ZeroDirection) {
  Rng rng(8);
  const WeightSetting w = gaussian_weights({2, 3, 1}, rng);
  EXPECT_EQ(hessian_qform(w, WeightSetting::zeros({2, 3, 1}), DataMoments(gaussian(1, 2, rng))), 0.0);
}

TEST(HessianForm, DepthOneIsSquaredNorm) {
  Rng rng(9);
  const WeightSetting w({gaussian(2, 2, rng)}), d({gaussian(2, 2, rng)});
  EXPECT_NEAR(hessian_qform(w, d, DataMoments(gaussian(2, 2, rng))), d.squared_norm(), 1e-14);
}

TEST(HessianForm, AllOnesScalarChain) {
  const WeightSetting w = scalar_net({1, 1, 1});
  const DataMoments m = scalar_target(2.0);
  Rng rng(10);
  for (int k = 0; k < 5; ++k) {
    const WeightSetting d = gaussian_weights({1, 1, 1, 1}, rng);
    const double want = d.squared_norm();
    EXPECT_NEAR(hessian_qform(w, d, m), want, 1e-13 * want);
    const double fd = second_directional_fd([&](const WeightSetting& x) { return loss(x, m); }, w, d);
    EXPECT_NEAR(fd, want, 1e-6 * want);
  }
  const Mat h = hessian_dense(w, m);
  EXPECT_LT((h - Mat::Identity(3, 3)).norm(), 1e-13);
  EXPECT_NEAR(min_eigenvalue(h), 1.0, 1e-13);
}

TEST(HessianDense, DepthOneIsIdentityAndSymmetric) {
  Rng rng(11);
  const WeightSetting w({gaussian(2, 3, rng)});
  EXPECT_LT((hessian_dense(w, DataMoments(gaussian(2, 3, rng))) - Mat::Identity(6, 6)).norm(), 1e-13);
  const WeightSetting v = gaussian_weights({3, 3, 2, 2}, rng);
  const Mat h = hessian_dense(v, DataMoments(gaussian(2, 3, rng)));
  EXPECT_LT((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(HessianDense, RespectsSizeCap) {
  EXPECT_THROW(hessian_dense(WeightSetting::zeros({10, 10, 10}), DataMoments(Mat::Zero(10, 10)), 100), SizeError);
}

TEST(Spectral, Norms) {
  Mat a(2, 2);
  a << 3, 0, 0, -4;
  EXPECT_NEAR(spectral_norm(a), 4.0, 1e-14);
  EXPECT_NEAR(nuclear_norm(a), 7.0, 1e-14);
  EXPECT_NEAR(min_eigenvalue(a), -4.0, 1e-14);
  EXPECT_DOUBLE_EQ(max_product_of({1, 3, 2}, 2), 6.0);
  EXPECT_DOUBLE_EQ(max_product_of({0.5, 0.25}, 0), 1.0);
}

TEST(MinEigBound, ZeroAtGlobalMinimum) {
  const WeightSetting w = scalar_net({2, 1, 1});
  EXPECT_EQ(min_eig_lower_bound(w, scalar_target(2.0)), 0.0);
}

TEST(MinEigBound, BelowSpectrumOnRandomSettings) {
  Rng rng(12);
  const Dims d{3, 3, 3, 1};
  for (int k = 0; k < 100; ++k) {
    const WeightSetting w = gaussian_weights(d, rng);
    const DataMoments m(gaussian(1, 3, rng));
    const double lmin = min_eigenvalue(hessian_dense(w, m));
    EXPECT_LE(min_eig_lower_bound(w, m), lmin + 1e-10 * std::max(1.0, std::abs(lmin)));
  }
}

TEST(GfMinEigBound, GlobalMinimumLeavesCurvatureTerm) {
  const WeightSetting w = scalar_net({2, 1, 1});
  // grad phi = 0 kills both terms, c carries the gradient factor
  EXPECT_EQ(gf_min_eig_lower_bound(w, scalar_target(2.0), 1.0 / 6.0), 0.0);
}

TEST(GfMinEigBound, SmallEpsApproachesFirstTerm) {
  Rng rng(13);
  const WeightSetting w = gaussian_weights({2, 2, 2, 1}, rng, 0.3);
  const DataMoments m(gaussian(1, 2, rng));
  const double g = (end_to_end(w) - m.lambda_yx).norm();
  const double first = -2.0 * std::sqrt(1.0) * g * std::pow(spectral_norm(end_to_end(w)), 1.0 / 3.0);
  EXPECT_NEAR(gf_min_eig_lower_bound(w, m, 1e-30), first, 1e-9);
  EXPECT_LT(gf_min_eig_lower_bound(w, m, 1.0 / 6.0), first);
}

TEST(GfMinEigBound, RejectsEpsOutOfRange) {
  const WeightSetting w = scalar_net({1, 1, 1});
  EXPECT_THROW(gf_min_eig_lower_bound(w, scalar_target(1.0), 0.2), DomainError);
  EXPECT_THROW(gf_min_eig_lower_bound(w, scalar_target(1.0), 0.0), DomainError);
}

TEST(GfMinEigBound, HoldsAlongBalancedFlow) {
  const Dims d{2, 2, 2, 1};
  Mat lam(1, 2);
  lam << 0.6, 0.8;
  const DataMoments m(lam);
  const double eps = 1.0 / 6.0;
  BalancedInitConfig cfg;
  cfg.dims = d;
  cfg.seed = 2;
  Mat a = sample_end_to_end(cfg);
  a *= std::pow(0.9 * eps / balanced_factorization(a, d).norm(), 3);
  const WeightSetting th = balanced_factorization(a, d);
  ASSERT_LE(th.norm(), eps);
  const Trajectory tr = gf_integrate(th.flatten(), 40.0, 1e-10, [&](const Vec& f) {
    return gradient(WeightSetting::unflatten(f, d), m).flatten();
  });
  for (double t : linspace(0.0, 40.0, 10)) {
    const WeightSetting w = WeightSetting::unflatten(tr.at(t), d);
    const double lmin = min_eigenvalue(hessian_dense(w, m));
    EXPECT_LE(gf_min_eig_lower_bound(w, m, eps), lmin + 1e-12) << "t = " << t;
  }
}

TEST(NegativeCurvature, ScalarWitnesses) {
  const DataMoments m = scalar_target(1.0);
  for (double c : {1.0, 10.0}) {
    const CurvatureWitness w = construct_negative_curvature(c, {1, 1, 1, 1}, m);
    EXPECT_LT(rel_err(hessian_qform(w.theta, w.delta, m), -c * w.delta.squared_norm()), 1e-10);
    EXPECT_EQ(w.theta[0].norm(), 0.0);
    EXPECT_EQ(w.theta[1].norm(), 0.0);
  }
}

TEST(NegativeCurvature, Preconditions) {
  EXPECT_THROW(construct_negative_curvature(1.0, {1, 1, 1}, scalar_target(1.0)), PreconditionError);
  EXPECT_THROW(construct_negative_curvature(1.0, {1, 1, 1, 1}, scalar_target(0.0)), PreconditionError);
}
