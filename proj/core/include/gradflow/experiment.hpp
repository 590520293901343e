#pragma once

#include "gradflow/data.hpp"
#include "gradflow/homogeneous.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gradflow {

enum class LossKind { square, cross_entropy };
enum class InitKind { balanced, xavier };
enum class DataKind { synthetic, idx };

struct ExperimentConfig {
  Dims dims{4, 3, 3, 1};
  Activation activation = Activation::linear();
  LossKind loss = LossKind::square;

  InitKind init = InitKind::balanced;
  double init_radius = 0.2;
  std::uint64_t init_seed = 0;

  DataKind data = DataKind::synthetic;
  SyntheticSpec synthetic;
  std::string idx_images, idx_labels;
  std::size_t idx_subset = 1000;
  std::uint64_t idx_seed = 0;

  double eta0 = 0.001;
  std::vector<int> refinements{2, 5, 10, 20};
  long iterations = 2000;
  long budget_cap = 100'000'000;  // iterations * max r
  std::string output_dir;         // empty: no files

  void validate() const;
};

struct RunRow {
  double t = 0.0;
  double loss_base = 0.0;
  double loss_r = 0.0;
  double dist_weights = 0.0;    // ||theta^{eta0}_k - theta^{eta0/r}_{rk}||
  double dist_from_init = 0.0;  // ||theta^{eta0}_k - theta_0||
};

struct RunRecord {
  int r = 1;
  std::vector<RunRow> rows;
  bool aborted = false;
  std::string abort_reason;
  double drift_ratio = 0.0;  // max_k dist_weights / max_k dist_from_init
  std::string csv_path;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;  // in refinement order
  WeightSetting init;
  LabeledSet data;
};

inline constexpr const char* kCsvHeader = "t,loss_base,loss_r,dist_weights,dist_from_init";

LabeledSet make_dataset(const ExperimentConfig& cfg);
WeightSetting make_init(const ExperimentConfig& cfg);

// Worker count: GRADFLOW_THREADS if set and positive, else hardware concurrency.
unsigned worker_count();

// Baseline run at eta0 and one run per r at eta0 / r from the same initialization; rows on the grid k eta0.
ExperimentResult stepsize_refinement_experiment(const ExperimentConfig& cfg);

void write_csv(const RunRecord& run, const std::string& path);

}  // namespace gradflow
