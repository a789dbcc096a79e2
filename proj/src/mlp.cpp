#include "floatnorm/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "floatnorm/error.hpp"
#include "floatnorm/io_util.hpp"
#include "floatnorm/sampling.hpp"

namespace floatnorm {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kLinear: return "linear";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "?";
}

Activation parse_activation(std::string_view text) {
  if (text == "relu") return Activation::kRelu;
  if (text == "linear") return Activation::kLinear;
  if (text == "sigmoid") return Activation::kSigmoid;
  throw parse_error("unknown activation '" + std::string(text) + "'");
}

std::vector<std::size_t> MlpNetwork::dims() const {
  std::vector<std::size_t> d;
  if (layers.empty()) return d;
  d.push_back(layers.front().fan_in());
  for (const auto& l : layers) d.push_back(l.fan_out());
  return d;
}

void MlpNetwork::freeze() {
  for (auto& l : layers) l.frozen = true;
}

void MlpNetwork::unfreeze() {
  for (auto& l : layers) l.frozen = false;
}

bool MlpNetwork::is_frozen() const {
  return !layers.empty() && std::all_of(layers.begin(), layers.end(), [](const DenseLayer& l) { return l.frozen; });
}

MlpNetwork init_network(std::span<const std::size_t> dims, Activation hidden, Activation output, std::uint64_t seed) {
  if (dims.size() < 2) throw invalid_input("a network needs at least input and output dimensions");
  for (std::size_t d : dims)
    if (d == 0) throw invalid_input("layer dimensions must be positive");
  Rng rng = make_rng(seed, 0);
  MlpNetwork net;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const bool last = i + 2 == dims.size();
    DenseLayer layer;
    layer.activation = last ? output : hidden;
    const auto fan_in = static_cast<Eigen::Index>(dims[i]);
    const auto fan_out = static_cast<Eigen::Index>(dims[i + 1]);
    layer.weights.resize(fan_out, fan_in);
    layer.bias = Eigen::VectorXd::Zero(fan_out);
    if (layer.activation == Activation::kRelu) {
      std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
      for (Eigen::Index c = 0; c < fan_in; ++c)
        for (Eigen::Index r = 0; r < fan_out; ++r) layer.weights(r, c) = normal(rng);
    } else {
      const double limit = std::sqrt(3.0 / static_cast<double>(fan_in));
      for (Eigen::Index c = 0; c < fan_in; ++c)
        for (Eigen::Index r = 0; r < fan_out; ++r) layer.weights(r, c) = uniform(rng, -limit, limit);
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Gradients Gradients::zeros_like(const MlpNetwork& net) {
  Gradients g;
  for (const auto& l : net.layers) {
    g.weights.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }
  return g;
}

void Gradients::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

bool Gradients::all_finite() const {
  for (const auto& w : weights)
    if (!w.allFinite()) return false;
  for (const auto& b : biases)
    if (!b.allFinite()) return false;
  return true;
}

namespace {

void apply_activation(Activation a, const Eigen::MatrixXd& pre, Eigen::MatrixXd& out) {
  switch (a) {
    case Activation::kRelu: out = pre.cwiseMax(0.0); break;
    case Activation::kLinear: out = pre; break;
    case Activation::kSigmoid:
      // Split form keeps exp() from overflowing for large |x|; the clamp keeps
      // outputs inside (0, 1) where the double result would round to an endpoint.
      out = pre.unaryExpr([](double x) {
        constexpr double lo = std::numeric_limits<double>::min();
        constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
        if (x >= 0.0) return std::min(1.0 / (1.0 + std::exp(-x)), hi);
        const double e = std::exp(x);
        return std::max(e / (1.0 + e), lo);
      });
      break;
  }
}

// d(activation)/d(pre) applied elementwise to the incoming gradient.
void activation_backward(Activation a, const Eigen::MatrixXd& pre, const Eigen::MatrixXd& act, Eigen::MatrixXd& grad) {
  switch (a) {
    case Activation::kRelu: grad = grad.cwiseProduct((pre.array() > 0.0).cast<double>().matrix()); break;
    case Activation::kLinear: break;
    case Activation::kSigmoid: grad = grad.cwiseProduct((act.array() * (1.0 - act.array())).matrix()); break;
  }
}

}  // namespace

Eigen::MatrixXd forward_batch(const MlpNetwork& net, const Eigen::MatrixXd& input, ForwardCache* cache) {
  if (net.layers.empty()) throw invalid_input("network has no layers");
  if (static_cast<std::size_t>(input.rows()) != net.input_size())
    throw invalid_input("input has " + std::to_string(input.rows()) + " features, network expects " +
                        std::to_string(net.input_size()));
  if (cache) {
    cache->pre.resize(net.layers.size());
    cache->activations.resize(net.layers.size() + 1);
    cache->activations[0] = input;
  }
  Eigen::MatrixXd a = input;
  Eigen::MatrixXd z;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    z.noalias() = l.weights * a;
    z.colwise() += l.bias;
    apply_activation(l.activation, z, a);
    if (cache) {
      cache->pre[i] = z;
      cache->activations[i + 1] = a;
    }
  }
  return a;
}

Eigen::MatrixXd backward_batch(const MlpNetwork& net, const ForwardCache& cache, const Eigen::MatrixXd& output_grad,
                               Gradients* grads) {
  if (cache.pre.size() != net.layers.size() || cache.activations.size() != net.layers.size() + 1)
    throw invalid_input("forward cache does not match the network");
  if (static_cast<std::size_t>(output_grad.rows()) != net.output_size() ||
      output_grad.cols() != cache.activations[0].cols())
    throw invalid_input("output gradient shape does not match the forward cache");
  if (grads && grads->weights.size() != net.layers.size()) throw invalid_input("gradient buffers do not match the network");

  Eigen::MatrixXd delta = output_grad;
  for (std::size_t k = net.layers.size(); k-- > 0;) {
    const auto& l = net.layers[k];
    if (cache.pre[k].rows() != l.weights.rows()) throw invalid_input("forward cache does not match the network");
    activation_backward(l.activation, cache.pre[k], cache.activations[k + 1], delta);
    if (grads) {
      grads->weights[k].noalias() += delta * cache.activations[k].transpose();
      grads->biases[k] += delta.rowwise().sum();
    }
    Eigen::MatrixXd prev = l.weights.transpose() * delta;
    delta = std::move(prev);
  }
  return delta;
}

ForwardResult forward_pass(const MlpNetwork& net, std::span<const double> input) {
  Eigen::MatrixXd x = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
  ForwardResult r;
  Eigen::MatrixXd y = forward_batch(net, x, &r.cache);
  r.output.assign(y.data(), y.data() + y.size());
  return r;
}

BackwardResult backward_pass(const MlpNetwork& net, const ForwardCache& cache, std::span<const double> output_gradient) {
  Eigen::MatrixXd g =
      Eigen::Map<const Eigen::VectorXd>(output_gradient.data(), static_cast<Eigen::Index>(output_gradient.size()));
  BackwardResult r;
  r.gradients = Gradients::zeros_like(net);
  Eigen::MatrixXd dx = backward_batch(net, cache, g, &r.gradients);
  r.input_gradient.assign(dx.data(), dx.data() + dx.size());
  return r;
}

std::vector<double> predict(const MlpNetwork& net, std::span<const double> input) {
  Eigen::MatrixXd x = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
  Eigen::MatrixXd y = forward_batch(net, x);
  return {y.data(), y.data() + y.size()};
}

double gradient_check(const MlpNetwork& net, std::size_t n_probes, double h, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x9c4a);
  std::vector<double> x(net.input_size());
  std::vector<double> r(net.output_size());
  for (auto& v : x) v = uniform(rng, -1.0, 1.0);
  for (auto& v : r) v = uniform(rng, -1.0, 1.0);

  // Scalar probe loss L = r . f(x); its output gradient is r. Extended
  // precision keeps the reduction out of the finite-difference noise.
  auto loss = [&](const MlpNetwork& n, std::span<const double> in) {
    const auto y = predict(n, in);
    long double s = 0.0L;
    for (std::size_t i = 0; i < y.size(); ++i) s += static_cast<long double>(r[i]) * y[i];
    return s;
  };
  const auto fwd = forward_pass(net, x);
  const auto back = backward_pass(net, fwd.cache, r);

  std::size_t n_weights = 0;
  for (const auto& l : net.layers) n_weights += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  const std::size_t n_coords = n_weights + x.size();

  MlpNetwork probe = net;
  std::vector<double> xin = x;
  double worst = 0.0;
  for (std::size_t p = 0; p < n_probes; ++p) {
    std::size_t c = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(n_coords));
    c = std::min(c, n_coords - 1);
    double analytic = 0.0;
    double numeric = 0.0;
    if (c >= n_weights) {
      const std::size_t j = c - n_weights;
      const double keep = xin[j];
      xin[j] = keep + h;
      const double hi = xin[j];
      const long double up = loss(probe, xin);
      xin[j] = keep - h;
      const double lo = xin[j];
      const long double down = loss(probe, xin);
      xin[j] = keep;
      analytic = back.input_gradient[j];
      numeric = static_cast<double>((up - down) / (hi - lo));
    } else {
      std::size_t k = 0;
      while (c >= static_cast<std::size_t>(probe.layers[k].weights.size() + probe.layers[k].bias.size())) {
        c -= static_cast<std::size_t>(probe.layers[k].weights.size() + probe.layers[k].bias.size());
        ++k;
      }
      auto& layer = probe.layers[k];
      const bool is_weight = c < static_cast<std::size_t>(layer.weights.size());
      double& slot = is_weight ? layer.weights.data()[c] : layer.bias.data()[c - layer.weights.size()];
      analytic = is_weight ? back.gradients.weights[k].data()[c]
                           : back.gradients.biases[k].data()[c - back.gradients.weights[k].size()];
      const double keep = slot;
      slot = keep + h;
      const double hi = slot;
      const long double up = loss(probe, xin);
      slot = keep - h;
      const double lo = slot;
      const long double down = loss(probe, xin);
      slot = keep;
      // Divide by the step actually taken, not the nominal 2h.
      numeric = static_cast<double>((up - down) / (hi - lo));
    }
    // Absolute floor keeps near-zero gradients from dominating through roundoff.
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  }
  return worst;
}

std::string weights_hash(const MlpNetwork& net) {
  std::string bytes;
  for (const auto& l : net.layers) {
    bytes.append(reinterpret_cast<const char*>(l.weights.data()), sizeof(double) * static_cast<std::size_t>(l.weights.size()));
    bytes.append(reinterpret_cast<const char*>(l.bias.data()), sizeof(double) * static_cast<std::size_t>(l.bias.size()));
  }
  return content_hash(bytes);
}

}  // namespace floatnorm
