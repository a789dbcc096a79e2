#include "floatnorm/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "floatnorm/error.hpp"
#include "floatnorm/sampling.hpp"

namespace floatnorm {

AdamOptimizer::AdamOptimizer(const MlpNetwork& net, AdamConfig config)
    : config_(config), m_(Gradients::zeros_like(net)), v_(Gradients::zeros_like(net)) {}

void AdamOptimizer::step(MlpNetwork& net, const Gradients& grads, double lr) {
  if (grads.weights.size() != net.layers.size()) throw invalid_input("gradient buffers do not match the network");
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    if (net.layers[k].frozen) continue;
    if (!grads.weights[k].allFinite() || !grads.biases[k].allFinite())
      throw Error(ErrorKind::kTraining, "non-finite gradient in layer " + std::to_string(k));
  }
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double eps = config_.epsilon;
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    auto& layer = net.layers[k];
    if (layer.frozen) continue;
    update(layer.weights, grads.weights[k], m_.weights[k], v_.weights[k]);
    update(layer.bias, grads.biases[k], m_.biases[k], v_.biases[k]);
  }
}

ReduceLrOnPlateau::ReduceLrOnPlateau(double initial_lr, double factor, std::size_t patience, double min_delta)
    : lr_(initial_lr),
      factor_(factor),
      patience_(patience),
      min_delta_(min_delta),
      best_(std::numeric_limits<double>::infinity()) {
  if (!(factor > 0.0 && factor < 1.0)) throw invalid_input("plateau factor must lie in (0, 1)");
  if (patience < 1) throw invalid_input("plateau patience must be at least 1");
}

bool ReduceLrOnPlateau::step(double metric) {
  if (metric < best_ * (1.0 - min_delta_)) {
    best_ = metric;
    bad_epochs_ = 0;
    return false;
  }
  if (++bad_epochs_ < patience_) return false;
  lr_ *= factor_;
  bad_epochs_ = 0;
  ++reductions_;
  return true;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw invalid_input("batch_size must be at least 1");
  if (max_epochs < 1) throw invalid_input("max_epochs must be at least 1");
  if (!(initial_lr > 0.0)) throw invalid_input("initial_lr must be positive");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw invalid_input("plateau_factor must lie in (0, 1)");
  if (plateau_patience < 1) throw invalid_input("plateau_patience must be at least 1");
  if (!(plateau_min_delta >= 0.0)) throw invalid_input("plateau_min_delta must be non-negative");
  if (!(min_lr > 0.0)) throw invalid_input("min_lr must be positive");
  if (early_stop_patience < 1) throw invalid_input("early_stop_patience must be at least 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw invalid_input("validation_fraction must lie in (0, 1)");
}

RegressionProblem::RegressionProblem(Eigen::MatrixXd inputs, Eigen::MatrixXd targets)
    : inputs_(std::move(inputs)), targets_(std::move(targets)) {
  if (inputs_.cols() != targets_.cols()) throw invalid_input("inputs and targets disagree on the sample count");
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(static_cast<Eigen::Index>(idx[j]));
  return out;
}

double RegressionProblem::accumulate(const MlpNetwork& net, std::span<const std::size_t> batch, Gradients& grads) {
  const Eigen::MatrixXd x = gather_columns(inputs_, batch);
  const Eigen::MatrixXd y = gather_columns(targets_, batch);
  ForwardCache cache;
  const Eigen::MatrixXd out = forward_batch(net, x, &cache);
  const Eigen::MatrixXd diff = out - y;
  const double scale = 1.0 / static_cast<double>(diff.size());
  backward_batch(net, cache, (2.0 * scale) * diff, &grads);
  return diff.squaredNorm() * scale;
}

double RegressionProblem::evaluate(const MlpNetwork& net, std::span<const std::size_t> indices) const {
  constexpr std::size_t kChunk = 4096;
  double sum = 0.0;
  for (std::size_t start = 0; start < indices.size(); start += kChunk) {
    const auto chunk = indices.subspan(start, std::min(kChunk, indices.size() - start));
    const Eigen::MatrixXd out = forward_batch(net, gather_columns(inputs_, chunk));
    sum += (out - gather_columns(targets_, chunk)).squaredNorm();
  }
  return sum / static_cast<double>(indices.size() * static_cast<std::size_t>(targets_.rows()));
}

Split split_indices(std::size_t n, double validation_fraction, std::uint64_t seed) {
  if (n < 2) throw Error(ErrorKind::kTraining, "need at least two samples to split train/validation");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = make_rng(seed, 0x5e1ec7);
  std::shuffle(perm.begin(), perm.end(), rng);
  auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  Split s;
  s.train.assign(perm.begin(), perm.end() - static_cast<std::ptrdiff_t>(n_val));
  s.validation.assign(perm.end() - static_cast<std::ptrdiff_t>(n_val), perm.end());
  return s;
}

TrainReport train(MlpNetwork& net, TrainingProblem& problem, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  if (problem.size() == 0) throw Error(ErrorKind::kTraining, "empty dataset");
  Split split = split_indices(problem.size(), config.validation_fraction, config.seed);

  AdamOptimizer adam(net);
  ReduceLrOnPlateau plateau(config.initial_lr, config.plateau_factor, config.plateau_patience,
                            config.plateau_min_delta);
  Gradients grads = Gradients::zeros_like(net);

  TrainReport report;
  report.best_validation_mse = std::numeric_limits<double>::infinity();
  std::vector<DenseLayer> best_layers = net.layers;
  double stop_best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  report.stop_reason = "max_epochs";

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double lr = plateau.learning_rate();
    Rng rng = make_rng(config.seed, epoch);
    std::shuffle(split.train.begin(), split.train.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < split.train.size(); start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, split.train.size() - start);
      const std::span<const std::size_t> batch(split.train.data() + start, len);
      grads.set_zero();
      const double loss = problem.accumulate(net, batch, grads);
      if (!std::isfinite(loss))
        throw Error(ErrorKind::kTraining, "non-finite training loss at epoch " + std::to_string(epoch));
      adam.step(net, grads, lr);
      loss_sum += loss * static_cast<double>(len);
    }
    const double val = problem.evaluate(net, split.validation);
    if (!std::isfinite(val))
      throw Error(ErrorKind::kTraining, "non-finite validation loss at epoch " + std::to_string(epoch));

    EpochRecord rec{epoch, loss_sum / static_cast<double>(split.train.size()), val, lr};
    report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (val < report.best_validation_mse) {
      report.best_validation_mse = val;
      report.best_epoch = epoch;
      best_layers = net.layers;
    }
    if (val < stop_best * (1.0 - config.plateau_min_delta)) {
      stop_best = val;
      stale = 0;
    } else if (++stale >= config.early_stop_patience) {
      report.stop_reason = "early_stop";
      break;
    }
    if (plateau.step(val) && plateau.learning_rate() < config.min_lr) {
      report.stop_reason = "min_lr";
      break;
    }
  }
  net.layers = std::move(best_layers);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace floatnorm
