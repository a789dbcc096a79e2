#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "floatnorm/mlp.hpp"

namespace floatnorm {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments. Frozen layers are skipped entirely.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const MlpNetwork& net, AdamConfig config = {});

  /// Throws ErrorKind::kTraining on a non-finite gradient, before touching any weight.
  void step(MlpNetwork& net, const Gradients& grads, double lr);
  std::size_t steps() const { return t_; }

 private:
  AdamConfig config_;
  Gradients m_;
  Gradients v_;
  std::size_t t_ = 0;
};

/// Halves (by `factor`) the learning rate after `patience` epochs without a
/// relative improvement larger than `min_delta`.
class ReduceLrOnPlateau {
 public:
  ReduceLrOnPlateau(double initial_lr, double factor, std::size_t patience, double min_delta);

  /// Feeds one epoch's metric; returns true when the rate was just reduced.
  bool step(double metric);
  double learning_rate() const { return lr_; }
  std::size_t reductions() const { return reductions_; }

 private:
  double lr_;
  double factor_;
  std::size_t patience_;
  double min_delta_;
  double best_;
  std::size_t bad_epochs_ = 0;
  std::size_t reductions_ = 0;
};

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t max_epochs = 200;
  double initial_lr = 1e-3;
  double plateau_factor = 0.5;
  std::size_t plateau_patience = 10;
  double plateau_min_delta = 1e-3;  // relative
  double min_lr = 1e-6;
  std::size_t early_stop_patience = 40;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_mse = 0.0;
  double validation_mse = 0.0;
  double learning_rate = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_validation_mse = 0.0;
  double wall_seconds = 0.0;
  std::string stop_reason;
};

/// A loss over an indexable sample set. `accumulate` adds the gradient of the
/// batch-mean loss into `grads` and returns that mean.
class TrainingProblem {
 public:
  virtual ~TrainingProblem() = default;
  virtual std::size_t size() const = 0;
  virtual double accumulate(const MlpNetwork& net, std::span<const std::size_t> batch, Gradients& grads) = 0;
  virtual double evaluate(const MlpNetwork& net, std::span<const std::size_t> indices) const = 0;
};

/// Plain MSE regression from columns of `inputs` to columns of `targets`.
class RegressionProblem final : public TrainingProblem {
 public:
  RegressionProblem(Eigen::MatrixXd inputs, Eigen::MatrixXd targets);

  std::size_t size() const override { return static_cast<std::size_t>(inputs_.cols()); }
  double accumulate(const MlpNetwork& net, std::span<const std::size_t> batch, Gradients& grads) override;
  double evaluate(const MlpNetwork& net, std::span<const std::size_t> indices) const override;

 private:
  Eigen::MatrixXd inputs_;
  Eigen::MatrixXd targets_;
};

/// Deterministic train/validation split: a seeded permutation whose tail of
/// size round(fraction * n) (at least 1) becomes the validation set.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};
Split split_indices(std::size_t n, double validation_fraction, std::uint64_t seed);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Minibatch Adam with reduce-on-plateau and early stopping; `net` ends up
/// holding the best-validation weights.
TrainReport train(MlpNetwork& net, TrainingProblem& problem, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Gathers the listed columns.
Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, std::span<const std::size_t> idx);

}  // namespace floatnorm
