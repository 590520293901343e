#include "support.hpp"

#include "gradflow/data.hpp"
#include "gradflow/flow.hpp"

#include <gtest/gtest.h>

using namespace gradflow;
using namespace gradflow::testing;

namespace {

LabeledSet small_set(Eigen::Index n, Eigen::Index d_in, Eigen::Index d_out, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.samples = n;
  spec.input_dim = d_in;
  spec.output_dim = d_out;
  spec.seed = seed;
  return synthetic_data(spec);
}

LabeledSet one_sample(double x, double y) {
  LabeledSet s;
  s.inputs = Mat::Constant(1, 1, x);
  s.targets = Mat::Constant(1, 1, y);
  return s;
}

}  // namespace

TEST(Forward, LinearCollapsesToEndToEnd) {
  Rng rng(1);
  const WeightSetting w = gaussian_weights({3, 4, 2}, rng);
  const Vec x = gaussian(3, 1, rng);
  EXPECT_LT((forward(w, x, Activation::linear()) - end_to_end(w) * x).norm(), 1e-14);
}

TEST(Forward, ReluOnNonnegativeDataIsLinear) {
  Rng rng(2);
  WeightSetting w = gaussian_weights({3, 4, 2}, rng);
  for (auto& l : w.layers) l = l.cwiseAbs();
  const Vec x = gaussian(3, 1, rng).cwiseAbs();
  EXPECT_LT((forward(w, x, Activation::relu()) - end_to_end(w) * x).norm(), 1e-14);
}

TEST(Forward, MatchesLayerLoop) {
  Rng rng(3);
  const WeightSetting w = gaussian_weights({3, 4, 2}, rng);
  const Vec x = gaussian(3, 1, rng);
  Vec h = w[0] * x;
  for (Eigen::Index i = 0; i < h.size(); ++i) h[i] = std::max(h[i], 0.0);
  EXPECT_LT((forward(w, x, Activation::relu()) - w[1] * h).norm(), 1e-14);
  const Mat batch = forward_batch(w, x.replicate(1, 3), Activation::relu());
  EXPECT_LT((batch.col(2) - w[1] * h).norm(), 1e-14);
}

TEST(Pattern, LinearSlopesAreAlpha) {
  Rng rng(4);
  const LabeledSet s = small_set(6, 2, 1, 4);
  const WeightSetting w = gaussian_weights({2, 3, 3, 1}, rng);
  const ActivationPattern p = activation_pattern(w, s, Activation::linear());
  EXPECT_EQ(p.slopes(1, 0), Vec::Ones(3));
  const SampleLoss l = SampleLoss::square(s);
  EXPECT_NEAR(linearized_loss(w, s, p, l), empirical_loss(w, s, Activation::linear(), l), 1e-14);
}

TEST(Pattern, SignReadOff) {
  const WeightSetting w({Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 1.0)});
  const LabeledSet s = one_sample(-2.0, 0.0);
  const ActivationPattern p = activation_pattern(w, s, Activation::relu());
  EXPECT_EQ(p.slopes(1, 0)[0], 0.0);
  EXPECT_EQ(forward(w, s.inputs.col(0), Activation::relu())[0], 0.0);
}

TEST(Pattern, ExactZeroIsABoundary) {
  const WeightSetting w({Mat::Constant(1, 1, 0.0), Mat::Constant(1, 1, 1.0)});
  EXPECT_THROW(activation_pattern(w, one_sample(1.0, 0.0), Activation::relu()), BoundaryError);
}

TEST(Pattern, LinearizedLossMatchesForward) {
  Rng rng(5);
  const LabeledSet s = small_set(10, 3, 2, 5);
  const WeightSetting w = gaussian_weights({3, 4, 3, 2}, rng);
  const SampleLoss l = SampleLoss::square(s);
  const ActivationPattern p = activation_pattern(w, s, Activation::relu());
  EXPECT_NEAR(linearized_loss(w, s, p, l), empirical_loss(w, s, Activation::relu(), l), 1e-13);
}

TEST(RegionHessian, LinearMatchesMoments) {
  Rng rng(6);
  const LabeledSet s = small_set(40, 3, 1, 6);
  const DataMoments m = DataMoments::from_data(s.inputs, s.targets);
  const WeightSetting w = gaussian_weights({3, 2, 2, 1}, rng), d = gaussian_weights({3, 2, 2, 1}, rng);
  const SampleLoss l = SampleLoss::square(s);
  const ActivationPattern p = activation_pattern(w, s, Activation::linear());
  EXPECT_LT(rel_err(region_hessian_qform(w, d, s, p, l), hessian_qform(w, d, m)), 1e-10);
  EXPECT_EQ(region_hessian_qform(w, WeightSetting::zeros({3, 2, 2, 1}), s, p, l), 0.0);
}

TEST(RegionHessian, MatchesFiniteDifferencesInsideRegion) {
  Rng rng(7);
  const LabeledSet s = small_set(5, 2, 1, 7);
  const SampleLoss l = SampleLoss::square(s);
  const Activation act = Activation::relu();
  const WeightSetting w = gaussian_weights({2, 3, 1}, rng), d = unit_direction({2, 3, 1}, rng);
  const ActivationPattern p = activation_pattern(w, s, act);
  // a step of 1e-5 keeps every pre-activation sign on this draw
  ASSERT_TRUE(activation_pattern(w + 1e-5 * d, s, act) == p);
  ASSERT_TRUE(activation_pattern(w - 1e-5 * d, s, act) == p);
  auto f = [&](const WeightSetting& x) { return empirical_loss(x, s, act, l); };
  const double h = 1e-5;
  const double fd = (f(w + h * d) - 2.0 * f(w) + f(w - h * d)) / (h * h);
  EXPECT_LT(rel_err(fd, region_hessian_qform(w, d, s, p, l)), 1e-4);
}

TEST(RegionBound, ZeroCases) {
  Rng rng(8);
  const WeightSetting w = gaussian_weights({2, 2, 2, 1}, rng);
  LabeledSet s = small_set(4, 2, 1, 8);
  const Activation act = Activation::relu();
  LabeledSet fit = s;
  fit.targets = forward_batch(w, s.inputs, act);
  const ActivationPattern p = activation_pattern(w, fit, act);
  EXPECT_NEAR(region_min_eig_lower_bound(w, fit, p, SampleLoss::square(fit)), 0.0, 1e-14);
  EXPECT_NEAR(gf_region_min_eig_lower_bound(w, fit, p, SampleLoss::square(fit), 1e-3), 0.0, 1e-14);
}

TEST(RegionBound, BelowRegionSpectrum) {
  Rng rng(9);
  const Dims d{2, 2, 2, 1};
  const Activation act = Activation::relu();
  int tested = 0;
  for (int k = 0; k < 200 && tested < 20; ++k) {
    const LabeledSet s = small_set(8, 2, 1, 100 + k);
    const SampleLoss l = SampleLoss::square(s);
    const WeightSetting w = gaussian_weights(d, rng);
    ActivationPattern p;
    try {
      p = activation_pattern(w, s, act);
    } catch (const BoundaryError&) {
      continue;  // a dead hidden layer leaves exact zeros above it
    }
    ++tested;
    const double lmin = min_eigenvalue(region_hessian_dense(w, s, p, l));
    EXPECT_LE(region_min_eig_lower_bound(w, s, p, l), lmin + 1e-10 * std::max(1.0, std::abs(lmin)));
  }
  EXPECT_EQ(tested, 20);
}

TEST(RescalingFamily, ScalarNetGoesNegative) {
  const LabeledSet s = one_sample(1.0, 1.0);
  const SampleLoss l = SampleLoss::square(s);
  const Activation act = Activation::relu();
  const RescalingFamily fam = construct_negative_curvature_nonlinear({1, 1, 1, 1}, s, act, l);
  std::vector<double> q;
  const ActivationPattern p0 = activation_pattern(fam.at(1.0), s, act);
  for (double a : {1.0, 10.0, 100.0}) {
    const WeightSetting w = fam.at(a);
    const ActivationPattern p = activation_pattern(w, s, act);
    EXPECT_TRUE(p == p0);
    q.push_back(region_hessian_qform(w, fam.delta, s, p, l));
  }
  EXPECT_LT(q[1], q[0]);
  EXPECT_LT(q[0], 0.0);
  // qform / a settles to a negative constant
  const double s1 = q[1] / 10.0, s2 = q[2] / 100.0;
  EXPECT_LT(s2, 0.0);
  EXPECT_LT(std::abs(s2 - s1), 0.05 * std::abs(s2));
}

TEST(NormGaps, Values) {
  const WeightSetting w({Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 2.0)});
  EXPECT_EQ(layer_norm_gaps(w), std::vector<double>{3.0});
  BalancedInitConfig cfg;
  cfg.dims = {3, 3, 3};
  cfg.seed = 1;
  for (double g : layer_norm_gaps(random_balanced_init(cfg))) EXPECT_LT(g, 1e-14);
}

TEST(NormGaps, ConstantAlongReluFlow) {
  Rng rng(10);
  const Dims d{3, 4, 3, 2};
  const LabeledSet s = small_set(3, 3, 2, 11);
  const SampleLoss l = SampleLoss::square(s);
  const Activation act = Activation::relu();
  const WeightSetting w = gaussian_weights(d, rng);
  const auto g0 = layer_norm_differences(w);
  const Trajectory tr = gf_integrate(w.flatten(), 5.0, 1e-11, [&](const Vec& f) {
    return empirical_gradient(WeightSetting::unflatten(f, d), s, act, l).flatten();
  });
  ASSERT_GE(tr.horizon(), 5.0);
  for (const Vec& st : tr.states) {
    const auto g = layer_norm_differences(WeightSetting::unflatten(st, d));
    for (size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(g[j], g0[j], 1e-6);
  }
}

TEST(SampleLosses, CrossEntropyGradient) {
  LabeledSet s;
  s.inputs = Mat::Zero(1, 1);
  s.classes = {1};
  const SampleLoss l = SampleLoss::cross_entropy(s);
  Vec p(3);
  p << 0.2, -0.1, 0.4;
  const Vec g = l.grad(p, 0);
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    Vec a = p, b = p;
    a[i] += h;
    b[i] -= h;
    EXPECT_NEAR((l.value(a, 0) - l.value(b, 0)) / (2 * h), g[i], 1e-8);
  }
  EXPECT_NEAR(g.sum(), 0.0, 1e-15);
}
