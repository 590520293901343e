#include "gradflow/data.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

namespace gradflow {

Whitening whiten(const Mat& inputs) {
  if (inputs.cols() == 0) throw DegenerateDataError("no samples to whiten");
  const Mat cov = inputs * inputs.transpose() / static_cast<double>(inputs.cols());
  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  const Vec ev = es.eigenvalues();
  const double cutoff = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> null;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] <= cutoff) null.push_back(i);
  if (!null.empty()) {
    Mat dirs(cov.rows(), null.size());
    for (size_t k = 0; k < null.size(); ++k) dirs.col(k) = es.eigenvectors().col(null[k]);
    throw RankError("input covariance is singular: " + std::to_string(null.size()) + " null direction(s)", dirs);
  }
  Whitening w;
  w.transform = es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  w.inputs = w.transform * inputs;
  return w;
}

LabelScaling normalize_labels(const Mat& targets, const Mat& inputs) {
  if (targets.cols() != inputs.cols()) throw ShapeError("targets and inputs differ in sample count");
  const double norm = (targets * inputs.transpose() / static_cast<double>(inputs.cols())).norm();
  if (!(norm > 0.0)) throw DegenerateDataError("Lambda_yx = 0: labels carry no linear signal");
  return {targets / norm, 1.0 / norm};
}

namespace {

std::vector<unsigned char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t at, const std::string& what) {
  if (b.size() < at + 4) throw ParseError(what + ": truncated header", b.size());
  return (std::uint32_t(b[at]) << 24) | (std::uint32_t(b[at + 1]) << 16) | (std::uint32_t(b[at + 2]) << 8) |
         std::uint32_t(b[at + 3]);
}

}  // namespace

LabeledSet load_idx(const std::string& images_path, const std::string& labels_path, std::size_t subset,
                    std::uint64_t seed, int classes) {
  const auto img = slurp(images_path);
  const auto lab = slurp(labels_path);

  const std::uint32_t img_magic = be32(img, 0, images_path);
  if (img_magic != 0x00000803u) throw ParseError(images_path + ": bad image magic", 0);
  const std::uint32_t count = be32(img, 4, images_path);
  const std::uint32_t rows = be32(img, 8, images_path);
  const std::uint32_t cols = be32(img, 12, images_path);
  const std::size_t pixels = std::size_t(rows) * cols;
  if (img.size() < 16 + std::size_t(count) * pixels)
    throw ParseError(images_path + ": truncated pixel data, expected " + std::to_string(16 + count * pixels) +
                         " bytes",
                     img.size());

  if (be32(lab, 0, labels_path) != 0x00000801u) throw ParseError(labels_path + ": bad label magic", 0);
  const std::uint32_t lcount = be32(lab, 4, labels_path);
  if (lcount != count)
    throw ParseError(labels_path + ": label count " + std::to_string(lcount) + " does not match image count " +
                         std::to_string(count),
                     4);
  if (lab.size() < 8 + std::size_t(count)) throw ParseError(labels_path + ": truncated label data", lab.size());
  if (count == 0) throw DegenerateDataError("IDX files hold no items");
  if (subset == 0 || subset > count)
    throw DomainError("subset size " + std::to_string(subset) + " not in [1, " + std::to_string(count) + "]");

  Mat all(pixels, count);
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t p = 0; p < pixels; ++p) all(p, i) = static_cast<double>(img[16 + i * pixels + p]);
  const double mean = all.mean();
  all.array() -= mean;
  const double sd = std::sqrt(all.squaredNorm() / static_cast<double>(all.size()));
  if (!(sd > 0.0)) throw DegenerateDataError("all pixels are equal");
  all /= sd;

  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(subset);
  std::sort(idx.begin(), idx.end());

  LabeledSet s;
  s.inputs.resize(pixels, subset);
  s.targets = Mat::Zero(classes, subset);
  s.classes.resize(subset);
  for (std::size_t k = 0; k < subset; ++k) {
    const int c = lab[8 + idx[k]];
    if (c >= classes) throw ParseError(labels_path + ": label " + std::to_string(c) + " out of range", 8 + idx[k]);
    s.inputs.col(k) = all.col(idx[k]);
    s.targets(c, k) = 1.0;
    s.classes[k] = c;
  }
  return s;
}

LabeledSet synthetic_data(const SyntheticSpec& spec) {
  if (spec.samples < 1 || spec.input_dim < 1 || spec.output_dim < 1) throw DomainError("synthetic sizes must be positive");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> g;
  Mat x(spec.input_dim, spec.samples);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = g(rng);
  Mat teacher(spec.output_dim, spec.input_dim);
  for (Eigen::Index j = 0; j < teacher.cols(); ++j)
    for (Eigen::Index i = 0; i < teacher.rows(); ++i) teacher(i, j) = g(rng);

  LabeledSet s;
  s.inputs = spec.whiten ? whiten(x).inputs : x;
  s.targets = teacher * s.inputs;
  if (spec.noise > 0.0)
    for (Eigen::Index j = 0; j < s.targets.cols(); ++j)
      for (Eigen::Index i = 0; i < s.targets.rows(); ++i) s.targets(i, j) += spec.noise * g(rng);
  if (spec.whiten) s.targets = normalize_labels(s.targets, s.inputs).targets;
  s.classes.resize(spec.samples);
  for (Eigen::Index j = 0; j < spec.samples; ++j) {
    Eigen::Index c = 0;
    s.targets.col(j).maxCoeff(&c);
    s.classes[j] = static_cast<int>(c);
  }
  return s;
}

WeightSetting xavier_uniform(const Dims& dims, std::uint64_t seed) {
  WeightSetting w = WeightSetting::zeros(dims);
  std::mt19937_64 rng(seed);
  for (auto& layer : w.layers) {
    const double lim = std::sqrt(6.0 / static_cast<double>(layer.rows() + layer.cols()));
    std::uniform_real_distribution<double> u(-lim, lim);
    for (Eigen::Index j = 0; j < layer.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.rows(); ++i) layer(i, j) = u(rng);
  }
  return w;
}

}  // namespace gradflow
