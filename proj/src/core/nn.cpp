// SPDX-License-Identifier: Apache-2.0
#include "fuzzkd/nn.hpp"

#include "fuzzkd/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fuzzkd::nn {

std::string_view to_string(NetKind k) {
  return k == NetKind::mlp ? "mlp" : "micro_cnn";
}

NetKind net_kind_from_string(std::string_view name) {
  if (name == "mlp")
    return NetKind::mlp;
  if (name == "micro_cnn")
    return NetKind::micro_cnn;
  throw_invalid("unknown network kind '" + std::string(name) + "'");
}

void NetworkSpec::validate() const {
  if (classes < 2)
    throw_invalid("network needs at least 2 output classes");
  if (input_dim == 0)
    throw_invalid("network input dimension must be positive");
  for (std::size_t h : hidden)
    if (h == 0)
      throw_invalid("hidden layer widths must be positive");
  if (kind == NetKind::mlp) {
    if (hidden.empty())
      throw_invalid("mlp needs at least one hidden layer");
    return;
  }
  if (image_width == 0 || image_height == 0 || image_channels == 0)
    throw_invalid("micro_cnn needs image dimensions");
  if (image_width * image_height * image_channels != input_dim)
    throw_invalid("micro_cnn image dimensions do not match input_dim");
  if (depth_multiplier == 0 || pointwise_channels == 0)
    throw_invalid("micro_cnn block widths must be positive");
}

std::size_t NetworkSpec::parameter_count() const {
  std::size_t n = 0;
  std::size_t in = input_dim;
  if (kind == NetKind::micro_cnn) {
    const std::size_t m = image_channels * depth_multiplier;
    n += m * 9 + m + pointwise_channels * m + pointwise_channels;
    in = pointwise_channels;
  }
  for (std::size_t h : hidden) {
    n += h * in + h;
    in = h;
  }
  return n + classes * in + classes;
}

std::string NetworkSpec::describe() const {
  std::ostringstream os;
  os << to_string(kind) << ' ' << input_dim;
  if (kind == NetKind::micro_cnn)
    os << "-ds(" << depth_multiplier << "x," << pointwise_channels << ")";
  for (std::size_t h : hidden)
    os << '-' << h;
  os << '-' << classes;
  return os.str();
}

void to_json(nlohmann::json &j, const NetworkSpec &s) {
  j = nlohmann::json{{"kind", std::string(to_string(s.kind))},
                     {"input_dim", s.input_dim},
                     {"classes", s.classes},
                     {"hidden", s.hidden}};
  if (s.kind == NetKind::micro_cnn) {
    j["image_width"] = s.image_width;
    j["image_height"] = s.image_height;
    j["image_channels"] = s.image_channels;
    j["depth_multiplier"] = s.depth_multiplier;
    j["pointwise_channels"] = s.pointwise_channels;
  }
}

void from_json(const nlohmann::json &j, NetworkSpec &s) {
  s = NetworkSpec{};
  s.kind = net_kind_from_string(j.at("kind").get<std::string>());
  s.input_dim = j.at("input_dim").get<std::size_t>();
  s.classes = j.at("classes").get<std::size_t>();
  s.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  if (s.kind == NetKind::micro_cnn) {
    s.image_width = j.at("image_width").get<std::size_t>();
    s.image_height = j.at("image_height").get<std::size_t>();
    s.image_channels = j.at("image_channels").get<std::size_t>();
    s.depth_multiplier = j.at("depth_multiplier").get<std::size_t>();
    s.pointwise_channels = j.at("pointwise_channels").get<std::size_t>();
  }
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  std::size_t in = spec_.input_dim;
  if (spec_.kind == NetKind::micro_cnn) {
    const std::size_t m = spec_.image_channels * spec_.depth_multiplier;
    const std::size_t p = spec_.pointwise_channels;
    params_.push_back({"dw.weight", {m, 3, 3}, std::vector<double>(m * 9)});
    params_.push_back({"dw.bias", {m}, std::vector<double>(m)});
    params_.push_back({"pw.weight", {p, m}, std::vector<double>(p * m)});
    params_.push_back({"pw.bias", {p}, std::vector<double>(p)});
    in = p;
  }
  std::vector<std::size_t> widths = spec_.hidden;
  widths.push_back(spec_.classes);
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::string prefix = "dense" + std::to_string(i);
    params_.push_back(
        {prefix + ".weight", {widths[i], in}, std::vector<double>(widths[i] * in)});
    params_.push_back({prefix + ".bias", {widths[i]}, std::vector<double>(widths[i])});
    in = widths[i];
  }
}

void Network::init(Rng &rng) {
  for (Tensor &t : params_) {
    if (t.shape.size() == 1) {
      std::fill(t.values.begin(), t.values.end(), 0.0);
      continue;
    }
    std::size_t fan_in = 1;
    for (std::size_t d = 1; d < t.shape.size(); ++d)
      fan_in *= t.shape[d];
    const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double &v : t.values)
      v = sd * rng.normal();
  }
}

Tensor &Network::parameter(std::string_view name) {
  for (Tensor &t : params_)
    if (t.name == name)
      return t;
  throw_invalid("no parameter named '" + std::string(name) + "'");
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor &t : params_)
    n += t.values.size();
  return n;
}

std::size_t Network::dense_count() const { return spec_.hidden.size() + 1; }

void Network::round_to_f32() {
  for (Tensor &t : params_)
    for (double &v : t.values)
      v = static_cast<double>(static_cast<float>(v));
}

Matrix Network::conv_features(const Matrix &batch, Cache *cache) const {
  const std::size_t w = spec_.image_width, h = spec_.image_height;
  const std::size_t c = spec_.image_channels;
  const std::size_t mult = spec_.depth_multiplier;
  const std::size_t m = c * mult;
  const std::size_t p = spec_.pointwise_channels;
  const auto &dw = params_[0].values;
  const auto &dwb = params_[1].values;
  const auto &pw = params_[2].values;
  const auto &pwb = params_[3].values;
  const double inv_area = 1.0 / static_cast<double>(w * h);

  Matrix pooled(batch.rows(), p);
  if (cache) {
    cache->dw_out.assign(batch.rows(), {});
    cache->pw_out.assign(batch.rows(), {});
  }
  std::vector<double> a1(w * h * m);
  std::vector<double> a2(w * h * p);
  for (std::size_t n = 0; n < batch.rows(); ++n) {
    const auto in = batch.row(n);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        for (std::size_t o = 0; o < m; ++o) {
          const std::size_t ch = o / mult;
          double s = dwb[o];
          for (std::size_t ky = 0; ky < 3; ++ky) {
            const long yy = static_cast<long>(y + ky) - 1;
            if (yy < 0 || yy >= static_cast<long>(h))
              continue;
            for (std::size_t kx = 0; kx < 3; ++kx) {
              const long xx = static_cast<long>(x + kx) - 1;
              if (xx < 0 || xx >= static_cast<long>(w))
                continue;
              s += dw[o * 9 + ky * 3 + kx] *
                   in[(static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)) * c + ch];
            }
          }
          a1[(y * w + x) * m + o] = std::max(s, 0.0);
        }
    auto out = pooled.row(n);
    for (std::size_t pix = 0; pix < w * h; ++pix)
      for (std::size_t q = 0; q < p; ++q) {
        double s = pwb[q];
        for (std::size_t o = 0; o < m; ++o)
          s += pw[q * m + o] * a1[pix * m + o];
        s = std::max(s, 0.0);
        a2[pix * p + q] = s;
        out[q] += s * inv_area;
      }
    if (cache) {
      cache->dw_out[n] = a1;
      cache->pw_out[n] = a2;
    }
  }
  return pooled;
}

Matrix Network::forward(const Matrix &batch, Cache &cache) const {
  if (batch.cols() != spec_.input_dim)
    throw_domain("input has " + std::to_string(batch.cols()) +
                 " features, network expects " +
                 std::to_string(spec_.input_dim));
  cache.input = batch;
  cache.dense_in.clear();
  cache.dense_pre.clear();
  Matrix act = spec_.kind == NetKind::micro_cnn ? conv_features(batch, &cache)
                                                : batch;
  const std::size_t layers = dense_count();
  for (std::size_t l = 0; l < layers; ++l) {
    const Tensor &wt = params_[dense_offset() + 2 * l];
    const Tensor &bt = params_[dense_offset() + 2 * l + 1];
    const std::size_t out_dim = wt.shape[0];
    const std::size_t in_dim = wt.shape[1];
    Matrix pre(act.rows(), out_dim);
    for (std::size_t n = 0; n < act.rows(); ++n) {
      const auto x = act.row(n);
      for (std::size_t o = 0; o < out_dim; ++o) {
        double s = bt.values[o];
        const double *wrow = wt.values.data() + o * in_dim;
        for (std::size_t i = 0; i < in_dim; ++i)
          s += wrow[i] * x[i];
        pre(n, o) = s;
      }
    }
    cache.dense_in.push_back(std::move(act));
    cache.dense_pre.push_back(pre);
    if (l + 1 < layers)
      for (double &v : pre.data())
        v = std::max(v, 0.0);
    act = std::move(pre);
  }
  return act;
}

Matrix Network::forward(const Matrix &batch) const {
  Cache cache;
  return forward(batch, cache);
}

std::vector<Tensor> Network::backward(const Cache &cache,
                                      const Matrix &grad_logits) const {
  std::vector<Tensor> grads = params_;
  for (Tensor &g : grads)
    std::fill(g.values.begin(), g.values.end(), 0.0);
  const std::size_t layers = dense_count();
  if (cache.dense_in.size() != layers)
    throw_invalid("backward called without a recorded forward pass");
  if (grad_logits.rows() != cache.input.rows() ||
      grad_logits.cols() != spec_.classes)
    throw_domain("loss gradient shape does not match the forward batch");

  Matrix delta = grad_logits;
  for (std::size_t l = layers; l-- > 0;) {
    const Tensor &wt = params_[dense_offset() + 2 * l];
    Tensor &gw = grads[dense_offset() + 2 * l];
    Tensor &gb = grads[dense_offset() + 2 * l + 1];
    const Matrix &in = cache.dense_in[l];
    const std::size_t out_dim = wt.shape[0];
    const std::size_t in_dim = wt.shape[1];
    Matrix din(in.rows(), in_dim);
    for (std::size_t n = 0; n < in.rows(); ++n) {
      const auto x = in.row(n);
      auto dx = din.row(n);
      for (std::size_t o = 0; o < out_dim; ++o) {
        const double d = delta(n, o);
        if (d == 0.0)
          continue;
        gb.values[o] += d;
        double *gwrow = gw.values.data() + o * in_dim;
        const double *wrow = wt.values.data() + o * in_dim;
        for (std::size_t i = 0; i < in_dim; ++i) {
          gwrow[i] += d * x[i];
          dx[i] += d * wrow[i];
        }
      }
    }
    if (l > 0) {
      const Matrix &prev_pre = cache.dense_pre[l - 1];
      for (std::size_t i = 0; i < din.size(); ++i)
        if (prev_pre.data()[i] <= 0.0)
          din.data()[i] = 0.0;
    }
    delta = std::move(din);
  }

  if (spec_.kind != NetKind::micro_cnn)
    return grads;

  // delta is now d loss / d pooled features.
  const std::size_t w = spec_.image_width, h = spec_.image_height;
  const std::size_t c = spec_.image_channels;
  const std::size_t mult = spec_.depth_multiplier;
  const std::size_t m = c * mult;
  const std::size_t p = spec_.pointwise_channels;
  const auto &pw = params_[2].values;
  auto &gdw = grads[0].values;
  auto &gdwb = grads[1].values;
  auto &gpw = grads[2].values;
  auto &gpwb = grads[3].values;
  const double inv_area = 1.0 / static_cast<double>(w * h);
  std::vector<double> d1(w * h * m);
  for (std::size_t n = 0; n < cache.input.rows(); ++n) {
    const auto in = cache.input.row(n);
    const auto &a1 = cache.dw_out[n];
    const auto &a2 = cache.pw_out[n];
    std::fill(d1.begin(), d1.end(), 0.0);
    for (std::size_t pix = 0; pix < w * h; ++pix)
      for (std::size_t q = 0; q < p; ++q) {
        if (a2[pix * p + q] <= 0.0)
          continue;
        const double d = delta(n, q) * inv_area;
        gpwb[q] += d;
        for (std::size_t o = 0; o < m; ++o) {
          gpw[q * m + o] += d * a1[pix * m + o];
          d1[pix * m + o] += d * pw[q * m + o];
        }
      }
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        for (std::size_t o = 0; o < m; ++o) {
          const std::size_t idx = (y * w + x) * m + o;
          if (a1[idx] <= 0.0)
            continue;
          const double d = d1[idx];
          const std::size_t ch = o / mult;
          gdwb[o] += d;
          for (std::size_t ky = 0; ky < 3; ++ky) {
            const long yy = static_cast<long>(y + ky) - 1;
            if (yy < 0 || yy >= static_cast<long>(h))
              continue;
            for (std::size_t kx = 0; kx < 3; ++kx) {
              const long xx = static_cast<long>(x + kx) - 1;
              if (xx < 0 || xx >= static_cast<long>(w))
                continue;
              gdw[o * 9 + ky * 3 + kx] +=
                  d * in[(static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)) * c + ch];
            }
          }
        }
  }
  return grads;
}

std::string_view to_string(OptimizerKind k) {
  return k == OptimizerKind::adam ? "adam" : "sgd";
}

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "adam")
    return OptimizerKind::adam;
  if (name == "sgd")
    return OptimizerKind::sgd;
  throw_invalid("unknown optimizer '" + std::string(name) + "'");
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, double beta1,
                     double beta2, double eps)
    : kind_(kind), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (!(learning_rate > 0.0))
    throw_invalid("learning rate must be positive");
}

void Optimizer::step(std::vector<Tensor> &params,
                     const std::vector<Tensor> &grads) {
  if (params.size() != grads.size())
    throw_invalid("optimizer step: parameter/gradient count mismatch");
  if (kind_ == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i)
      for (std::size_t j = 0; j < params[i].values.size(); ++j)
        params[i].values[j] -= lr_ * grads[i].values[j];
    return;
  }
  if (m_.empty()) {
    for (const Tensor &p : params) {
      m_.emplace_back(p.values.size(), 0.0);
      v_.emplace_back(p.values.size(), 0.0);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t j = 0; j < params[i].values.size(); ++j) {
      const double g = grads[i].values[j];
      double &m = m_[i][j];
      double &v = v_[i][j];
      m = beta1_ * m + (1.0 - beta1_) * g;
      v = beta2_ * v + (1.0 - beta2_) * g * g;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      params[i].values[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
}

} // namespace fuzzkd::nn
