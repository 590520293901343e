#include "gradflow/experiment.hpp"

#include "gradflow/balance.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <thread>

namespace gradflow {

void ExperimentConfig::validate() const {
  validate_dims(dims);
  if (!(eta0 > 0.0)) throw DomainError("eta0 must be positive");
  if (iterations < 1) throw DomainError("iteration budget must be positive");
  if (refinements.empty()) throw DomainError("refinement list is empty");
  int max_r = 0;
  for (int r : refinements) {
    if (r < 1) throw DomainError("refinement factors must be positive integers");
    max_r = std::max(max_r, r);
  }
  if (static_cast<double>(iterations) * max_r > static_cast<double>(budget_cap))
    throw DomainError("iterations * max(r) = " + std::to_string(iterations * max_r) + " exceeds the cap " +
                      std::to_string(budget_cap));
  if (data == DataKind::synthetic && synthetic.input_dim != dims.front())
    throw ShapeError("synthetic input dimension does not match dims[0]");
  if (data == DataKind::synthetic && synthetic.output_dim != dims.back())
    throw ShapeError("synthetic output dimension does not match dims[n]");
  if (data == DataKind::idx && (idx_images.empty() || idx_labels.empty()))
    throw DomainError("idx data needs image and label paths");
}

LabeledSet make_dataset(const ExperimentConfig& cfg) {
  if (cfg.data == DataKind::synthetic) return synthetic_data(cfg.synthetic);
  LabeledSet s = load_idx(cfg.idx_images, cfg.idx_labels, cfg.idx_subset, cfg.idx_seed,
                          static_cast<int>(cfg.dims.back()));
  if (s.inputs.rows() != cfg.dims.front())
    throw ShapeError("IDX images have " + std::to_string(s.inputs.rows()) + " pixels, dims[0] is " +
                     std::to_string(cfg.dims.front()));
  return s;
}

WeightSetting make_init(const ExperimentConfig& cfg) {
  if (cfg.init == InitKind::xavier) return xavier_uniform(cfg.dims, cfg.init_seed);
  BalancedInitConfig b;
  b.dims = cfg.dims;
  b.radius = cfg.init_radius;
  b.seed = cfg.init_seed;
  return random_balanced_init(b);
}

unsigned worker_count() {
  if (const char* env = std::getenv("GRADFLOW_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

SampleLoss make_loss(const ExperimentConfig& cfg, const LabeledSet& s) {
  return cfg.loss == LossKind::square ? SampleLoss::square(s) : SampleLoss::cross_entropy(s);
}

struct Baseline {
  std::vector<WeightSetting> states;
  std::vector<double> losses;
  bool aborted = false;
  std::string reason;
};

Baseline run_baseline(const ExperimentConfig& cfg, const WeightSetting& init, const LabeledSet& s,
                      const SampleLoss& l) {
  Baseline b;
  WeightSetting theta = init;
  for (long k = 0; k <= cfg.iterations; ++k) {
    const double f = empirical_loss(theta, s, cfg.activation, l);
    if (!std::isfinite(f)) {
      b.aborted = true;
      b.reason = "non-finite baseline loss at iterate " + std::to_string(k);
      break;
    }
    b.states.push_back(theta);
    b.losses.push_back(f);
    if (k < cfg.iterations) theta -= cfg.eta0 * empirical_gradient(theta, s, cfg.activation, l);
  }
  return b;
}

RunRecord run_refined(const ExperimentConfig& cfg, int r, const Baseline& base, const LabeledSet& s,
                      const SampleLoss& l) {
  RunRecord rec;
  rec.r = r;
  const double eta = cfg.eta0 / r;
  WeightSetting theta = base.states.front();
  const long rows = static_cast<long>(base.states.size());
  double max_gap = 0.0, max_travel = 0.0;
  for (long k = 0; k < rows; ++k) {
    const double f = empirical_loss(theta, s, cfg.activation, l);
    if (!std::isfinite(f)) {
      rec.aborted = true;
      rec.abort_reason = "non-finite loss at iterate " + std::to_string(k * r) + " of the eta0/" +
                         std::to_string(r) + " run";
      break;
    }
    RunRow row;
    row.t = static_cast<double>(k) * cfg.eta0;
    row.loss_base = base.losses[k];
    row.loss_r = f;
    row.dist_weights = (base.states[k] - theta).norm();
    row.dist_from_init = (base.states[k] - base.states.front()).norm();
    max_gap = std::max(max_gap, row.dist_weights);
    max_travel = std::max(max_travel, row.dist_from_init);
    rec.rows.push_back(row);
    if (k + 1 < rows)
      for (int i = 0; i < r; ++i) theta -= eta * empirical_gradient(theta, s, cfg.activation, l);
  }
  if (!rec.aborted && base.aborted) {
    rec.aborted = true;
    rec.abort_reason = base.reason;
  }
  rec.drift_ratio = max_travel > 0.0 ? max_gap / max_travel : 0.0;
  return rec;
}

}  // namespace

void write_csv(const RunRecord& run, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << kCsvHeader << '\n' << std::setprecision(17);
  for (const RunRow& row : run.rows)
    out << row.t << ',' << row.loss_base << ',' << row.loss_r << ',' << row.dist_weights << ','
        << row.dist_from_init << '\n';
  if (run.aborted) out << "# aborted: " << run.abort_reason << '\n';
  out.flush();
}

ExperimentResult stepsize_refinement_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult res;
  res.data = make_dataset(cfg);
  res.init = make_init(cfg);
  const SampleLoss l = make_loss(cfg, res.data);
  const Baseline base = run_baseline(cfg, res.init, res.data, l);

  if (!cfg.output_dir.empty()) std::filesystem::create_directories(cfg.output_dir);

  res.runs.resize(cfg.refinements.size());
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (size_t i = next++; i < cfg.refinements.size(); i = next++) {
      try {
        RunRecord rec = run_refined(cfg, cfg.refinements[i], base, res.data, l);
        if (!cfg.output_dir.empty()) {
          rec.csv_path = (std::filesystem::path(cfg.output_dir) / ("refine_r" + std::to_string(rec.r) + ".csv")).string();
          write_csv(rec, rec.csv_path);
        }
        res.runs[i] = std::move(rec);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n = std::min<unsigned>(worker_count(), static_cast<unsigned>(cfg.refinements.size()));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return res;
}

}  // namespace gradflow
