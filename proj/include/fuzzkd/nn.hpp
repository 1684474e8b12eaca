// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fuzzkd/matrix.hpp"
#include "fuzzkd/rng.hpp"

#include <json.hpp>

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace fuzzkd::nn {

enum class NetKind { mlp, micro_cnn };

std::string_view to_string(NetKind k);
NetKind net_kind_from_string(std::string_view name);

/// Student/teacher architecture.
///
/// mlp: input -> [dense + relu]* -> dense -> logits.
/// micro_cnn: HxWxC image -> depthwise 3x3 (x depth_multiplier) + relu ->
/// pointwise 1x1 + relu -> global average pool -> [dense + relu]* -> dense.
struct NetworkSpec {
  NetKind kind = NetKind::mlp;
  std::size_t input_dim = 0;
  std::size_t classes = 0;
  std::vector<std::size_t> hidden;

  std::size_t image_width = 0;
  std::size_t image_height = 0;
  std::size_t image_channels = 1;
  std::size_t depth_multiplier = 1;
  std::size_t pointwise_channels = 8;

  void validate() const;
  std::size_t parameter_count() const;
  std::string describe() const;

  bool operator==(const NetworkSpec &) const = default;
};

void to_json(nlohmann::json &j, const NetworkSpec &s);
void from_json(const nlohmann::json &j, NetworkSpec &s);

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  bool operator==(const Tensor &) const = default;
};

class Network {
public:
  /// Activations recorded by a forward pass for use by backward().
  struct Cache {
    Matrix input;
    // micro_cnn only: per-sample depthwise/pointwise post-relu maps.
    std::vector<std::vector<double>> dw_out;
    std::vector<std::vector<double>> pw_out;
    // Inputs to each dense layer (post-relu of the previous one).
    std::vector<Matrix> dense_in;
    std::vector<Matrix> dense_pre; // pre-activation of each dense layer
  };

  /// Zero-initialized network.
  explicit Network(NetworkSpec spec);

  /// He-normal weights, zero biases.
  void init(Rng &rng);

  const NetworkSpec &spec() const { return spec_; }
  std::vector<Tensor> &parameters() { return params_; }
  const std::vector<Tensor> &parameters() const { return params_; }
  Tensor &parameter(std::string_view name);
  std::size_t parameter_count() const;

  Matrix forward(const Matrix &batch) const;
  Matrix forward(const Matrix &batch, Cache &cache) const;

  /// Reverse-mode gradients of sum_i <grad_logits_i, logits_i> w.r.t. every
  /// parameter, in the same order and shapes as parameters().
  std::vector<Tensor> backward(const Cache &cache,
                               const Matrix &grad_logits) const;

  /// Rounds every parameter to the nearest 32-bit float.
  void round_to_f32();

private:
  std::size_t dense_count() const;
  std::size_t dense_offset() const { return spec_.kind == NetKind::micro_cnn ? 4 : 0; }
  Matrix conv_features(const Matrix &batch, Cache *cache) const;

  NetworkSpec spec_;
  std::vector<Tensor> params_;
};

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(std::string_view name);

class Optimizer {
public:
  Optimizer(OptimizerKind kind, double learning_rate, double beta1 = 0.9,
            double beta2 = 0.999, double eps = 1e-8);

  void step(std::vector<Tensor> &params, const std::vector<Tensor> &grads);

private:
  OptimizerKind kind_;
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

} // namespace fuzzkd::nn
