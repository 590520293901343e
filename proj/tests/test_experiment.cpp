#include "support.hpp"

#include "gradflow/experiment.hpp"
#include "gradflow/flow.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace gradflow;
using namespace gradflow::testing;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.dims = {4, 3, 3, 1};
  cfg.synthetic.input_dim = 4;
  cfg.synthetic.output_dim = 1;
  cfg.synthetic.samples = 200;
  cfg.iterations = 2000;
  return cfg;
}

std::vector<std::string> lines_of(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(Refinement, UnitFactorHasNoDrift) {
  ExperimentConfig cfg = small_config();
  cfg.iterations = 200;
  cfg.refinements = {1};
  const ExperimentResult res = stepsize_refinement_experiment(cfg);
  ASSERT_EQ(res.runs.size(), 1u);
  EXPECT_EQ(res.runs[0].drift_ratio, 0.0);
  ASSERT_EQ(res.runs[0].rows.size(), 201u);
  for (const RunRow& row : res.runs[0].rows) {
    EXPECT_EQ(row.dist_weights, 0.0);
    EXPECT_EQ(row.loss_base, row.loss_r);
  }
}

TEST(Refinement, ReferenceExampleDriftGrowsWithRefinement) {
  const ExperimentResult res = stepsize_refinement_experiment(small_config());
  ASSERT_EQ(res.runs.size(), 4u);
  for (const RunRecord& run : res.runs) EXPECT_FALSE(run.aborted);
  // drift_ratio(2) > drift_ratio(20) is false: finer steps move further from the eta0 run
  EXPECT_FALSE(res.runs[0].drift_ratio > res.runs[3].drift_ratio);
  for (size_t i = 1; i < res.runs.size(); ++i) EXPECT_GT(res.runs[i].drift_ratio, res.runs[i - 1].drift_ratio);
}

TEST(Refinement, DriftSandwichedByFlowGap) {
  const ExperimentConfig cfg = small_config();
  const ExperimentResult res = stepsize_refinement_experiment(cfg);
  const SampleLoss l = SampleLoss::square(res.data);
  const Trajectory flow = gf_integrate(res.init.flatten(), cfg.iterations * cfg.eta0, 1e-11, [&](const Vec& x) {
    return empirical_gradient(WeightSetting::unflatten(x, cfg.dims), res.data, cfg.activation, l).flatten();
  });
  // eta0 run against the flow on the grid k eta0
  Vec theta = res.init.flatten();
  double gap = 0.0;
  for (long k = 0; k <= cfg.iterations; ++k) {
    gap = std::max(gap, (theta - flow.at(k * cfg.eta0)).norm());
    theta -= cfg.eta0 *
             empirical_gradient(WeightSetting::unflatten(theta, cfg.dims), res.data, cfg.activation, l).flatten();
  }
  for (const RunRecord& run : res.runs) {
    double drift = 0.0;
    for (const RunRow& row : run.rows) drift = std::max(drift, row.dist_weights);
    // ||theta^{eta0} - theta^{eta0/r}|| ~ (1 - 1/r) ||theta^{eta0} - theta(t)|| to first order in eta0
    EXPECT_LE(drift, 1.01 * gap) << "r = " << run.r;
    EXPECT_GE(drift, 0.95 * (1.0 - 1.0 / run.r) * gap) << "r = " << run.r;
  }
}

TEST(Refinement, WritesCsvPerFactor) {
  ExperimentConfig cfg = small_config();
  cfg.iterations = 50;
  cfg.refinements = {2, 5};
  const auto dir = std::filesystem::temp_directory_path() / "gradflow_experiment_csv";
  std::filesystem::remove_all(dir);
  cfg.output_dir = dir.string();
  const ExperimentResult res = stepsize_refinement_experiment(cfg);
  for (const RunRecord& run : res.runs) {
    ASSERT_FALSE(run.csv_path.empty());
    const auto lines = lines_of(run.csv_path);
    ASSERT_EQ(lines.size(), 52u);
    EXPECT_EQ(lines[0], "t,loss_base,loss_r,dist_weights,dist_from_init");
    EXPECT_EQ(lines[1].substr(0, 2), "0,");
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "refine_r2.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "refine_r5.csv"));
  std::filesystem::remove_all(dir);
}

TEST(Refinement, AbortRowOnNonFiniteLoss) {
  ExperimentConfig cfg = small_config();
  cfg.eta0 = 50.0;
  cfg.iterations = 200;
  cfg.refinements = {2};
  const ExperimentResult res = stepsize_refinement_experiment(cfg);
  const RunRecord& run = res.runs.front();
  ASSERT_TRUE(run.aborted);
  EXPECT_FALSE(run.abort_reason.empty());
  const auto path = (std::filesystem::temp_directory_path() / "gradflow_abort.csv").string();
  write_csv(run, path);
  const auto lines = lines_of(path);
  EXPECT_EQ(lines.front(), kCsvHeader);
  EXPECT_EQ(lines.back(), "# aborted: " + run.abort_reason);
  EXPECT_EQ(lines.size(), run.rows.size() + 2);
  std::filesystem::remove(path);
}

TEST(Refinement, ValidatesConfig) {
  ExperimentConfig cfg = small_config();
  cfg.refinements = {0};
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg = small_config();
  cfg.refinements = {};
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg = small_config();
  cfg.eta0 = 0.0;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg = small_config();
  cfg.iterations = 1'000'000;
  cfg.refinements = {1000};
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg = small_config();
  cfg.synthetic.input_dim = 5;
  EXPECT_THROW(cfg.validate(), ShapeError);
  cfg = small_config();
  cfg.data = DataKind::idx;
  EXPECT_THROW(cfg.validate(), DomainError);
}

TEST(Refinement, DeterministicAcrossThreadCounts) {
  ExperimentConfig cfg = small_config();
  cfg.iterations = 100;
  const ExperimentResult a = stepsize_refinement_experiment(cfg);
  setenv("GRADFLOW_THREADS", "1", 1);
  EXPECT_EQ(worker_count(), 1u);
  const ExperimentResult b = stepsize_refinement_experiment(cfg);
  unsetenv("GRADFLOW_THREADS");
  for (size_t i = 0; i < a.runs.size(); ++i) EXPECT_EQ(a.runs[i].drift_ratio, b.runs[i].drift_ratio);
}
