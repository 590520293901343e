#include "cli.hpp"

#include "gradflow/balance.hpp"
#include "gradflow/bounds.hpp"
#include "gradflow/flow.hpp"
#include "gradflow/worstcase.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace gradflow::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

const char* version() { return GRADFLOW_VERSION; }

namespace {

void allow_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
T required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + " is missing '" + key + "'");
  return field<T>(j, key, T{});
}

Activation parse_activation(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "linear") return Activation::linear();
    if (s == "relu") return Activation::relu();
    throw ConfigError("unknown activation '" + s + "'");
  }
  if (j.is_object() && j.contains("leaky")) {
    allow_keys(j, {"leaky"}, "activation");
    return Activation::leaky(field<double>(j, "leaky", 0.01));
  }
  throw ConfigError("activation must be \"linear\", \"relu\" or {\"leaky\": slope}");
}

// dims, activation, loss, init, data
void parse_model(const json& j, ExperimentConfig& cfg) {
  cfg.dims = required<Dims>(j, "dims", "config");
  if (j.contains("activation")) cfg.activation = parse_activation(j.at("activation"));
  const auto loss = field<std::string>(j, "loss", "square");
  if (loss == "square")
    cfg.loss = LossKind::square;
  else if (loss == "cross_entropy")
    cfg.loss = LossKind::cross_entropy;
  else
    throw ConfigError("loss must be square or cross_entropy");

  const json init = j.value("init", json::object());
  allow_keys(init, {"kind", "radius", "seed"}, "init");
  const auto ik = field<std::string>(init, "kind", "balanced");
  if (ik == "balanced")
    cfg.init = InitKind::balanced;
  else if (ik == "xavier")
    cfg.init = InitKind::xavier;
  else
    throw ConfigError("init.kind must be balanced or xavier");
  cfg.init_radius = field<double>(init, "radius", 0.2);
  cfg.init_seed = field<std::uint64_t>(init, "seed", 0);

  const json data = j.value("data", json::object());
  allow_keys(data, {"kind", "samples", "seed", "whiten", "noise", "images", "labels", "subset"}, "data");
  const auto dk = field<std::string>(data, "kind", "synthetic");
  if (dk == "synthetic") {
    cfg.data = DataKind::synthetic;
    cfg.synthetic.samples = field<Eigen::Index>(data, "samples", 200);
    cfg.synthetic.seed = field<std::uint64_t>(data, "seed", 0);
    cfg.synthetic.whiten = field<bool>(data, "whiten", true);
    cfg.synthetic.noise = field<double>(data, "noise", 0.0);
    if (!cfg.dims.empty()) {
      cfg.synthetic.input_dim = cfg.dims.front();
      cfg.synthetic.output_dim = cfg.dims.back();
    }
  } else if (dk == "idx") {
    cfg.data = DataKind::idx;
    cfg.idx_images = required<std::string>(data, "images", "data");
    cfg.idx_labels = required<std::string>(data, "labels", "data");
    cfg.idx_subset = field<std::size_t>(data, "subset", 1000);
    cfg.idx_seed = field<std::uint64_t>(data, "seed", 0);
  } else {
    throw ConfigError("data.kind must be synthetic or idx");
  }
}

template <class F>
auto as_config_error(F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
}

json seeds_of(const ExperimentConfig& cfg) {
  json s;
  s["init"] = cfg.init_seed;
  s["data"] = cfg.data == DataKind::synthetic ? cfg.synthetic.seed : cfg.idx_seed;
  return s;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

struct Outputs {
  fs::path dir;
  std::vector<std::string> files;

  fs::path file(const std::string& name) {
    files.push_back(name);
    return dir / name;
  }
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << text;
}

void write_manifest(Outputs& o, const std::string& command, const json& config, const json& seed,
                    const json& summary) {
  json m;
  m["tool"] = "gradflow";
  m["version"] = version();
  m["command"] = command;
  m["config"] = config;
  m["seed"] = seed;
  m["outputs"] = o.files;
  m["summary"] = summary;
  m["timestamp"] = timestamp();
  write_text(o.dir / "manifest.json", m.dump(2) + "\n");
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Runs f(i) for i in [0, n) on up to worker_count() threads.
template <class F>
void parallel_for(size_t n, F&& f) {
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto work = [&] {
    for (size_t i = next++; i < n; i = next++) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned threads = std::min<unsigned>(worker_count(), static_cast<unsigned>(std::max<size_t>(n, 1)));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---- certify

json certify_preset(const std::string& name) {
  if (name == "flow-desk") return {{"kind", "flow"}, {"n", 3}, {"nu", 0.0}, {"w_norm", 0.1}, {"eps_bar", 0.5}};
  if (name == "gd-desk") return {{"kind", "gd"}, {"n", 3}, {"nu", 0.0}, {"w_norm", 0.1}, {"eps_tilde", 0.1}};
  if (name == "unbalanced-desk")
    return {{"kind", "unbalanced"}, {"n", 3}, {"nu", 0.0}, {"w_norm", 0.1}, {"eps_tilde", 0.1}};
  throw ConfigError("unknown certify preset '" + name + "' (flow-desk, gd-desk, unbalanced-desk)");
}

// Array-valued fields expand into a Cartesian sweep.
std::vector<json> expand_sweep(const json& item) {
  std::vector<json> out{json::object()};
  for (auto it = item.begin(); it != item.end(); ++it) {
    std::vector<json> next;
    const json values = it.value().is_array() ? it.value() : json::array({it.value()});
    if (values.empty()) throw ConfigError("sweep over '" + it.key() + "' has no values");
    for (const json& base : out)
      for (const json& v : values) {
        json e = base;
        e[it.key()] = v;
        next.push_back(std::move(e));
      }
    out = std::move(next);
  }
  return out;
}

Certificate certify_one(const json& c) {
  const auto kind = required<std::string>(c, "kind", "certificate");
  const int n = required<int>(c, "n", "certificate");
  const double w = required<double>(c, "w_norm", "certificate");
  const double nu = required<double>(c, "nu", "certificate");
  if (kind == "flow") {
    allow_keys(c, {"kind", "n", "w_norm", "nu", "eps_bar", "eps", "t"}, "flow certificate");
    const double eps_bar = required<double>(c, "eps_bar", "flow certificate");
    const double eps = field<double>(c, "eps", 1.0 / (2.0 * n));
    if (c.contains("t")) return lnn_flow_certificate(w, nu, n, eps_bar, eps, field<double>(c, "t", 0.0));
    const double t_bar = lnn_flow_certificate(w, nu, n, eps_bar, eps, 0.0).output("t_bar");
    return lnn_flow_certificate(w, nu, n, eps_bar, eps, t_bar);
  }
  const double eps_tilde = required<double>(c, "eps_tilde", kind + " certificate");
  std::optional<double> eta;
  if (c.contains("eta")) eta = field<double>(c, "eta", 0.0);
  if (kind == "gd") {
    allow_keys(c, {"kind", "n", "w_norm", "nu", "eps_tilde", "eta"}, "gd certificate");
    return gd_translation(w, nu, n, eps_tilde, eta);
  }
  if (kind == "unbalanced") {
    allow_keys(c, {"kind", "n", "w_norm", "nu", "eps_tilde", "eta"}, "unbalanced certificate");
    return unbalanced_translation(w, nu, n, eps_tilde, eta);
  }
  throw ConfigError("certificate kind must be flow, gd or unbalanced");
}

int run_certify(const json& config, Outputs& o, std::ostream& out) {
  std::vector<json> items;
  if (config.contains("certificates")) {
    allow_keys(config, {"certificates"}, "config");
    for (const json& c : config.at("certificates")) items.push_back(c);
  } else {
    items.push_back(config);
  }
  std::vector<json> expanded;
  for (const json& it : items) {
    if (!it.is_object()) throw ConfigError("each certificate must be a JSON object");
    for (json& e : expand_sweep(it)) expanded.push_back(std::move(e));
  }
  std::vector<Certificate> certs;
  for (const json& c : expanded) certs.push_back(as_config_error([&] { return certify_one(c); }));

  json docs = json::array();
  for (const Certificate& c : certs) docs.push_back(json::parse(c.to_json()));
  write_text(o.file("certificates.json"), docs.dump(2) + "\n");
  out << docs.dump(2) << "\n";

  json summary;
  summary["count"] = certs.size();
  write_manifest(o, "certify", config, nullptr, summary);
  return 0;
}

// ---- flow and gd on a configured network

struct Problem {
  ExperimentConfig cfg;
  LabeledSet data;
  WeightSetting init;
  SampleLoss loss;
};

Problem make_problem(const json& config, std::initializer_list<const char*> extra, const std::string& command) {
  std::vector<const char*> keys{"dims", "activation", "loss", "init", "data"};
  keys.insert(keys.end(), extra.begin(), extra.end());
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = config.begin(); it != config.end(); ++it)
    if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }) == keys.end())
      throw ConfigError("unknown key '" + it.key() + "' in " + command + " config");
  Problem p;
  parse_model(config, p.cfg);
  as_config_error([&] {
    validate_dims(p.cfg.dims);
    if (p.cfg.data == DataKind::synthetic && p.cfg.synthetic.samples < 1) throw DomainError("samples must be positive");
    return 0;
  });
  p.data = make_dataset(p.cfg);
  p.init = make_init(p.cfg);
  p.loss = p.cfg.loss == LossKind::square ? SampleLoss::square(p.data) : SampleLoss::cross_entropy(p.data);
  return p;
}

GradientFn gradient_of(const Problem& p) {
  return [&p](const Vec& flat) {
    return empirical_gradient(WeightSetting::unflatten(flat, p.cfg.dims), p.data, p.cfg.activation, p.loss).flatten();
  };
}

double loss_at(const Problem& p, const Vec& flat) {
  return empirical_loss(WeightSetting::unflatten(flat, p.cfg.dims), p.data, p.cfg.activation, p.loss);
}

int run_flow(const json& config, Outputs& o, std::ostream& out) {
  const Problem p = make_problem(config, {"horizon", "tol", "samples"}, "flow");
  const double horizon = required<double>(config, "horizon", "flow config");
  const double tol = field<double>(config, "tol", 1e-7);
  const int samples = field<int>(config, "samples", 101);
  if (samples < 2) throw ConfigError("samples must be at least 2");
  as_config_error([&] {
    if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
    if (!(tol >= 1e-13 && tol <= 1e-3)) throw DomainError("tol must lie in [1e-13, 1e-3]");
    return 0;
  });

  const Trajectory tr = gf_integrate(p.init.flatten(), horizon, tol, gradient_of(p));
  std::ofstream csv(o.file("flow.csv"));
  csv << "t,loss,weight_norm\n" << std::setprecision(17);
  for (int i = 0; i < samples; ++i) {
    const double t = horizon * i / (samples - 1);
    const Vec th = tr.at(t);
    csv << t << ',' << loss_at(p, th) << ',' << th.norm() << '\n';
  }
  json summary;
  summary["accepted_steps"] = tr.accepted;
  summary["rejected_steps"] = tr.rejected;
  summary["final_loss"] = number(loss_at(p, tr.states.back()));
  out << summary.dump(2) << "\n";
  write_manifest(o, "flow", config, seeds_of(p.cfg), summary);
  return 0;
}

int run_gd(const json& config, Outputs& o, std::ostream& out) {
  const Problem p = make_problem(config, {"eta", "iterations", "every"}, "gd");
  const double eta = required<double>(config, "eta", "gd config");
  const long iterations = required<long>(config, "iterations", "gd config");
  const long every = field<long>(config, "every", 1);
  if (!(eta > 0.0) || iterations < 0 || every < 1) throw ConfigError("need eta > 0, iterations >= 0, every >= 1");

  std::ofstream csv(o.file("gd.csv"));
  csv << "t,loss,weight_norm\n" << std::setprecision(17);
  double last_loss = 0.0;
  gd_iterate(p.init.flatten(), eta, iterations, gradient_of(p), [&](long k, const Vec& th) {
    if (k % every == 0 || k == iterations) {
      last_loss = loss_at(p, th);
      csv << static_cast<double>(k) * eta << ',' << last_loss << ',' << th.norm() << '\n';
    }
    return true;
  });
  json summary;
  summary["iterations"] = iterations;
  summary["final_loss"] = number(last_loss);
  out << summary.dump(2) << "\n";
  write_manifest(o, "gd", config, seeds_of(p.cfg), summary);
  return 0;
}

// ---- worstcase

int run_worstcase(const json& config, Outputs& o, std::ostream& out) {
  allow_keys(config, {"a", "b", "eps", "d", "start", "t_tilde", "etas"}, "worstcase config");
  const WorstPreset preset = desk_preset();
  const WorstParams params = as_config_error([&] {
    return WorstParams(field<double>(config, "a", preset.params.a), field<double>(config, "b", preset.params.b),
                       field<double>(config, "eps", preset.params.eps), field<int>(config, "d", preset.params.d));
  });
  Vec start = preset.start;
  if (config.contains("start")) {
    const auto s = field<std::vector<double>>(config, "start", {});
    start = Eigen::Map<const Vec>(s.data(), static_cast<Eigen::Index>(s.size()));
  } else if (params.d > 3) {
    start.conservativeResize(params.d);
    start.tail(params.d - 3).setZero();
  }
  const TildeInterval iv = as_config_error([&] { return admissible_t_tilde(start, params); });
  const double t_tilde = field<double>(config, "t_tilde", iv.mid());
  const double threshold = divergence_threshold(params, t_tilde);
  std::vector<double> etas = field<std::vector<double>>(config, "etas", {});
  if (etas.empty()) etas = {threshold, 2.0 * threshold, 10.0 * threshold};

  std::vector<DivergenceReport> reports(etas.size());
  parallel_for(etas.size(), [&](size_t i) {
    reports[i] = as_config_error([&] { return divergence_experiment(start, params, t_tilde, etas[i]); });
  });

  json runs = json::array();
  for (size_t i = 0; i < reports.size(); ++i) {
    const DivergenceReport& r = reports[i];
    const std::string name = "worst_eta" + std::to_string(i) + ".csv";
    std::ofstream csv(o.file(name));
    csv << "k,t,gap\n" << std::setprecision(17);
    for (const auto& s : r.isotropic) csv << s.k << ',' << s.t << ',' << s.gap << '\n';
    runs.push_back({{"eta", r.eta},
                    {"min_distance", number(r.min_distance)},
                    {"argmin_k", r.argmin_k},
                    {"iterations", r.iterations},
                    {"exceeds_eps", r.min_distance > params.eps},
                    {"coord3_diverged", r.coord3_diverged},
                    {"growth_exponent", number(r.growth_exponent)},
                    {"cross_track_exponent", number(r.cross_track_exponent)},
                    {"csv", name}});
  }
  json summary;
  summary["t_tilde"] = t_tilde;
  summary["t_tilde_interval"] = {iv.lo, iv.hi};
  summary["threshold_eta"] = threshold;
  summary["rho"] = params.rho();
  summary["runs"] = runs;
  write_text(o.file("worstcase.json"), summary.dump(2) + "\n");
  out << summary.dump(2) << "\n";
  write_manifest(o, "worstcase", config, nullptr, summary);
  return 0;
}

// ---- experiment

int run_experiment(const json& config, Outputs& o, std::ostream& out) {
  ExperimentConfig cfg = experiment_config(config);
  cfg.output_dir = o.dir.string();
  const ExperimentResult res = stepsize_refinement_experiment(cfg);
  json summary = json::array();
  bool aborted = false;
  for (const RunRecord& r : res.runs) {
    o.files.push_back(fs::path(r.csv_path).filename().string());
    summary.push_back({{"r", r.r},
                       {"rows", r.rows.size()},
                       {"drift_ratio", number(r.drift_ratio)},
                       {"aborted", r.aborted},
                       {"csv", fs::path(r.csv_path).filename().string()}});
    aborted = aborted || r.aborted;
  }
  out << summary.dump(2) << "\n";
  write_manifest(o, "experiment", config, seeds_of(cfg), summary);
  if (aborted) throw std::runtime_error("run aborted on a non-finite loss; partial CSV written");
  return 0;
}

// ---- balance

json layers_json(const WeightSetting& w) {
  json out = json::array();
  for (const Mat& m : w.layers) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(row);
    }
    out.push_back(rows);
  }
  return out;
}

int run_balance(const json& config, Outputs& o, std::ostream& out) {
  allow_keys(config, {"dims", "radius", "seed", "mode", "perturbation", "sweeps", "tol"}, "balance config");
  BalancedInitConfig b;
  b.dims = required<Dims>(config, "dims", "balance config");
  b.radius = field<double>(config, "radius", 0.2);
  b.seed = field<std::uint64_t>(config, "seed", 0);
  const auto mode = field<std::string>(config, "mode", "init");
  if (mode != "init" && mode != "repair") throw ConfigError("mode must be init or repair");
  const WeightSetting init = as_config_error([&] { return random_balanced_init(b); });

  json summary;
  WeightSetting result = init;
  if (mode == "repair") {
    const double sigma = field<double>(config, "perturbation", 1e-3);
    WeightSetting noisy = init;
    std::mt19937_64 rng(b.seed + 1);
    std::normal_distribution<double> g(0.0, sigma);
    for (Mat& m : noisy.layers) m = m.unaryExpr([&](double v) { return v + g(rng); });
    const BalanceResult br = balance_nearest(noisy, field<int>(config, "sweeps", 50), field<double>(config, "tol", 1e-8));
    result = br.theta;
    summary["input_unbalancedness"] = unbalancedness(noisy);
    summary["sweeps"] = br.sweeps;
    summary["converged"] = br.converged;
    summary["distance_moved"] = (br.theta - noisy).norm();
  }
  summary["unbalancedness"] = unbalancedness(result);
  summary["end_to_end_norm"] = end_to_end(result).norm();
  json doc = summary;
  doc["layers"] = layers_json(result);
  write_text(o.file("balance.json"), doc.dump(2) + "\n");
  out << summary.dump(2) << "\n";
  json seed;
  seed["init"] = b.seed;
  write_manifest(o, "balance", config, seed, summary);
  return 0;
}

void report_error(std::ostream& err, const char* kind, const std::string& command, const std::exception& e) {
  json j;
  j["error"] = kind;
  j["command"] = command;
  j["message"] = e.what();
  err << j.dump() << "\n";
}

}  // namespace

json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

ExperimentConfig experiment_config(const json& j) {
  allow_keys(j, {"dims", "activation", "loss", "init", "data", "eta0", "refinements", "iterations", "budget_cap",
                 "output_dir"},
             "experiment config");
  ExperimentConfig cfg;
  parse_model(j, cfg);
  cfg.eta0 = field<double>(j, "eta0", cfg.eta0);
  cfg.refinements = field<std::vector<int>>(j, "refinements", cfg.refinements);
  cfg.iterations = field<long>(j, "iterations", cfg.iterations);
  cfg.budget_cap = field<long>(j, "budget_cap", cfg.budget_cap);
  cfg.output_dir = field<std::string>(j, "output_dir", "");
  as_config_error([&] {
    cfg.validate();
    return 0;
  });
  return cfg;
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"gradflow: gradient descent versus gradient flow toolkit", "gradflow"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    std::string config, preset, out = "gradflow_out";
  };
  const char* names[] = {"certify", "flow", "gd", "worstcase", "experiment", "balance"};
  const char* help[] = {"evaluate step-size and time certificates (sweeps over array-valued fields)",
                        "integrate gradient flow and dump the trajectory",
                        "run gradient descent and dump the iterates",
                        "divergence experiment on the worst-case landscape",
                        "step-size refinement experiment",
                        "balanced initialization and rebalancing"};
  std::vector<Sub> subs(6);
  for (int i = 0; i < 6; ++i) {
    subs[i].app = app.add_subcommand(names[i], help[i]);
    subs[i].app->add_option("-c,--config", subs[i].config, "JSON config file");
    subs[i].app->add_option("-o,--out", subs[i].out, "output directory")->capture_default_str();
    if (i == 0 || i == 3) subs[i].app->add_option("--preset", subs[i].preset, "built-in configuration");
  }

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  for (int i = 0; i < 6; ++i) {
    if (!subs[i].app->parsed()) continue;
    const Sub& s = subs[i];
    const std::string command = names[i];
    try {
      json config;
      if (!s.config.empty() && !s.preset.empty()) throw ConfigError("give either --config or --preset");
      if (!s.preset.empty()) {
        if (command == "certify")
          config = certify_preset(s.preset);
        else if (s.preset == "desk")
          config = json::object();
        else
          throw ConfigError("unknown worstcase preset '" + s.preset + "' (desk)");
      } else if (!s.config.empty()) {
        config = read_config(s.config);
      } else {
        throw ConfigError(command + " needs --config" + (i == 0 || i == 3 ? " or --preset" : ""));
      }
      Outputs o{fs::path(s.out), {}};
      fs::create_directories(o.dir);
      switch (i) {
        case 0: return run_certify(config, o, out);
        case 1: return run_flow(config, o, out);
        case 2: return run_gd(config, o, out);
        case 3: return run_worstcase(config, o, out);
        case 4: return run_experiment(config, o, out);
        default: return run_balance(config, o, out);
      }
    } catch (const ConfigError& e) {
      report_error(err, "config", command, e);
      return 2;
    } catch (const std::exception& e) {
      report_error(err, "runtime", command, e);
      return 1;
    }
  }
  return 2;
}

}  // namespace gradflow::cli
