#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace floatnorm {

enum class Activation { kRelu, kLinear, kSigmoid };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view text);

/// Column-major storage: weights is (fan_out x fan_in), which is the same
/// memory layout as a row-major (fan_in x fan_out) matrix.
struct DenseLayer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
  Activation activation = Activation::kRelu;
  bool frozen = false;

  std::size_t fan_in() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t fan_out() const { return static_cast<std::size_t>(weights.rows()); }
};

inline constexpr int kModelSchemaVersion = 1;

struct NetworkMetadata {
  int schema_version = kModelSchemaVersion;
  std::string stage;   // "cgg" | "id" | "" for generic nets
  std::string scheme;  // "fixed" | "custom" | ""
  std::vector<std::string> parameter_order;
  std::map<std::string, double> scaling_constants;

  friend bool operator==(const NetworkMetadata&, const NetworkMetadata&) = default;
};

struct MlpNetwork {
  std::vector<DenseLayer> layers;
  NetworkMetadata metadata;

  std::vector<std::size_t> dims() const;
  std::size_t input_size() const { return layers.empty() ? 0 : layers.front().fan_in(); }
  std::size_t output_size() const { return layers.empty() ? 0 : layers.back().fan_out(); }
  Activation output_activation() const { return layers.back().activation; }

  void freeze();
  void unfreeze();
  bool is_frozen() const;
};

/// He-normal weights for ReLU layers, uniform with variance 1/fan_in for the
/// output layer, zero biases. Deterministic per seed.
MlpNetwork init_network(std::span<const std::size_t> dims, Activation hidden, Activation output,
                        std::uint64_t seed);

/// Pre-activations and activations per layer; activations[0] is the input batch.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> activations;
};

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static Gradients zeros_like(const MlpNetwork& net);
  void set_zero();
  bool all_finite() const;
};

/// Batched forward pass; columns of `input` are samples.
Eigen::MatrixXd forward_batch(const MlpNetwork& net, const Eigen::MatrixXd& input, ForwardCache* cache = nullptr);

/// Reverse-mode pass. Accumulates parameter gradients into `grads` when non-null
/// (frozen nets pass nullptr) and returns d(loss)/d(input).
Eigen::MatrixXd backward_batch(const MlpNetwork& net, const ForwardCache& cache, const Eigen::MatrixXd& output_grad,
                               Gradients* grads);

struct ForwardResult {
  std::vector<double> output;
  ForwardCache cache;
};

struct BackwardResult {
  Gradients gradients;
  std::vector<double> input_gradient;
};

ForwardResult forward_pass(const MlpNetwork& net, std::span<const double> input);
BackwardResult backward_pass(const MlpNetwork& net, const ForwardCache& cache, std::span<const double> output_gradient);

/// Inference on a single input vector.
std::vector<double> predict(const MlpNetwork& net, std::span<const double> input);

/// Largest relative disagreement between backward_pass and central differences
/// over `n_probes` random weight, bias and input coordinates.
double gradient_check(const MlpNetwork& net, std::size_t n_probes, double h, std::uint64_t seed = 0);

/// Order-sensitive hash of every weight and bias bit pattern.
std::string weights_hash(const MlpNetwork& net);

}  // namespace floatnorm
