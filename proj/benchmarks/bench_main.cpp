#include "gradflow/flow.hpp"
#include "gradflow/homogeneous.hpp"
#include "gradflow/linear.hpp"
#include "gradflow/ode.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace gradflow;

namespace {

WeightSetting random_weights(const Dims& dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.5);
  WeightSetting w = WeightSetting::zeros(dims);
  for (Mat& m : w.layers) m = m.unaryExpr([&](double) { return g(rng); });
  return w;
}

Dims square_dims(int depth, int width) { return Dims(depth + 1, width); }

}  // namespace

// Hessian quadratic form of a deep linear net; arg0 = width, arg1 = depth.
static void BM_HessianQform(benchmark::State& state) {
  const Dims d = square_dims(static_cast<int>(state.range(1)), static_cast<int>(state.range(0)));
  const WeightSetting theta = random_weights(d, 1), delta = random_weights(d, 2);
  const DataMoments m(random_weights({d.front(), d.back()}, 3)[0]);
  for (auto _ : state) benchmark::DoNotOptimize(hessian_qform(theta, delta, m));
}
BENCHMARK(BM_HessianQform)->ArgsProduct({{4, 16, 64}, {2, 3, 5}});

static void BM_HessianDense(benchmark::State& state) {
  const Dims d = square_dims(3, static_cast<int>(state.range(0)));
  const WeightSetting theta = random_weights(d, 1);
  const DataMoments m(random_weights({d.front(), d.back()}, 3)[0]);
  for (auto _ : state) benchmark::DoNotOptimize(hessian_dense(theta, m));
  state.counters["params"] = static_cast<double>(theta.size());
}
BENCHMARK(BM_HessianDense)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_GradientFlow(benchmark::State& state) {
  const Dims d = square_dims(3, static_cast<int>(state.range(0)));
  const DataMoments m(random_weights({d.front(), d.back()}, 3)[0]);
  const Vec start = random_weights(d, 1).flatten() * 0.1;
  auto grad = [&](const Vec& x) { return gradient(WeightSetting::unflatten(x, d), m).flatten(); };
  long steps = 0;
  for (auto _ : state) {
    const Trajectory tr = gf_integrate(start, 10.0, 1e-8, grad);
    steps += tr.accepted;
  }
  state.counters["steps"] = benchmark::Counter(static_cast<double>(steps), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_GradientFlow)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_GradientDescentStep(benchmark::State& state) {
  const Dims d = square_dims(3, static_cast<int>(state.range(0)));
  const DataMoments m(random_weights({d.front(), d.back()}, 3)[0]);
  WeightSetting theta = random_weights(d, 1);
  for (auto _ : state) {
    theta -= 1e-3 * gradient(theta, m);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_GradientDescentStep)->Arg(4)->Arg(16)->Arg(64);

static void BM_EmpiricalGradientRelu(benchmark::State& state) {
  const Dims d{16, 8, 8, 4};
  const Eigen::Index n = state.range(0);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  LabeledSet s;
  s.inputs = Mat::NullaryExpr(16, n, [&] { return g(rng); });
  s.targets = Mat::NullaryExpr(4, n, [&] { return g(rng); });
  const SampleLoss l = SampleLoss::square(s);
  const WeightSetting theta = random_weights(d, 1);
  for (auto _ : state) benchmark::DoNotOptimize(empirical_gradient(theta, s, Activation::relu(), l));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_EmpiricalGradientRelu)->Arg(200)->Arg(1000);

BENCHMARK_MAIN();
