// SPDX-License-Identifier: Apache-2.0
#include "fuzzkd/checkpoint.hpp"
#include "fuzzkd/error.hpp"
#include "fuzzkd/nn.hpp"

#include <doctest.h>

#include "oracles.hpp"

#include <cstring>
#include <filesystem>

using namespace fuzzkd;
using namespace fuzzkd::nn;

namespace {

NetworkSpec mlp(std::size_t in, std::vector<std::size_t> hidden, std::size_t k) {
  NetworkSpec s;
  s.input_dim = in;
  s.hidden = std::move(hidden);
  s.classes = k;
  return s;
}

NetworkSpec cnn() {
  NetworkSpec s;
  s.kind = NetKind::micro_cnn;
  s.image_width = 5;
  s.image_height = 4;
  s.image_channels = 2;
  s.input_dim = 5 * 4 * 2;
  s.depth_multiplier = 2;
  s.pointwise_channels = 3;
  s.hidden = {6};
  s.classes = 3;
  return s;
}

Matrix random_matrix(Rng &rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (auto &v : m.data())
    v = rng.uniform(-1, 1);
  return m;
}

// Scalar objective sum_i <g_i, logits_i> as a function of every parameter.
void check_backward(Network net, Rng &rng, double tol) {
  const Matrix x = random_matrix(rng, 4, net.spec().input_dim);
  const Matrix g = random_matrix(rng, 4, net.spec().classes);
  Network::Cache cache;
  net.forward(x, cache);
  const auto grads = net.backward(cache, g);
  REQUIRE(grads.size() == net.parameters().size());
  for (std::size_t t = 0; t < grads.size(); ++t) {
    CHECK(grads[t].shape == net.parameters()[t].shape);
    const auto f = [&](const std::vector<double> &v) {
      Network copy = net;
      copy.parameters()[t].values = v;
      const Matrix out = copy.forward(x);
      double s = 0;
      for (std::size_t i = 0; i < out.data().size(); ++i)
        s += out.data()[i] * g.data()[i];
      return s;
    };
    const auto fd = oracle::fd_gradient(f, net.parameters()[t].values, 1e-6);
    INFO(net.parameters()[t].name);
    CHECK(oracle::rel_error(grads[t].values, fd) < tol);
  }
}

} // namespace

TEST_CASE("spec validation and parameter counts") {
  CHECK(mlp(2, {16}, 3).parameter_count() == 2 * 16 + 16 + 16 * 3 + 3);
  CHECK_THROWS_AS(mlp(2, {}, 3).validate(), Error);
  CHECK_THROWS_AS(mlp(2, {0}, 3).validate(), Error);
  CHECK_THROWS_AS(mlp(0, {4}, 3).validate(), Error);
  CHECK_THROWS_AS(mlp(2, {4}, 1).validate(), Error);
  auto bad = cnn();
  bad.input_dim = 7;
  CHECK_THROWS_AS(bad.validate(), Error);
  const auto c = cnn();
  CHECK(Network(c).parameter_count() == c.parameter_count());
  nlohmann::json j = c;
  CHECK(j.get<NetworkSpec>() == c);
  CHECK(net_kind_from_string(to_string(NetKind::micro_cnn)) == NetKind::micro_cnn);
}

TEST_CASE("zero network gives zero logits") {
  const Network net(mlp(3, {5, 4}, 3));
  Rng rng(1);
  const Matrix out = net.forward(random_matrix(rng, 6, 3));
  for (double v : out.data())
    CHECK(v == 0.0);
  const Network c(cnn());
  const Matrix cout_ = c.forward(random_matrix(rng, 2, c.spec().input_dim));
  for (double v : cout_.data())
    CHECK(v == 0.0);
}

TEST_CASE("forward rejects mismatched inputs") {
  const Network net(mlp(3, {5}, 3));
  CHECK_THROWS_AS(net.forward(Matrix(2, 4)), Error);
}

TEST_CASE("final layer is linear in its weight rows") {
  Rng rng(2);
  Network net(mlp(3, {6}, 4));
  net.init(rng);
  auto &b = net.parameter("dense1.bias");
  std::fill(b.values.begin(), b.values.end(), 0.0);
  const Matrix x = random_matrix(rng, 5, 3);
  const Matrix before = net.forward(x);
  auto &w = net.parameter("dense1.weight");
  for (std::size_t j = 0; j < 6; ++j)
    w.values[2 * 6 + j] *= 2;
  const Matrix after = net.forward(x);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t k = 0; k < 4; ++k)
      CHECK(after(i, k) == doctest::Approx(k == 2 ? 2 * before(i, k) : before(i, k)));
}

TEST_CASE("backward matches finite differences") {
  Rng rng(3);
  Network net(mlp(2, {16}, 3));
  net.init(rng);
  for (auto &t : net.parameters())
    for (auto &v : t.values)
      v += rng.uniform(-0.1, 0.1); // non-zero biases exercise every path
  check_backward(net, rng, 1e-5);

  Network deep(mlp(4, {7, 5}, 3));
  deep.init(rng);
  check_backward(deep, rng, 1e-5);

  Network c(cnn());
  c.init(rng);
  for (auto &t : c.parameters())
    for (auto &v : t.values)
      v += rng.uniform(-0.1, 0.1);
  check_backward(c, rng, 1e-5);
}

TEST_CASE("backward: zero upstream gradient and tied samples") {
  Rng rng(4);
  Network net(mlp(3, {8}, 3));
  net.init(rng);
  Matrix x = random_matrix(rng, 1, 3);
  Network::Cache cache;
  net.forward(x, cache);
  for (const auto &t : net.backward(cache, Matrix(1, 3)))
    for (double v : t.values)
      CHECK(v == 0.0);

  const Matrix g1 = random_matrix(rng, 1, 3);
  const auto one = net.backward(cache, g1);
  Matrix x2(2, 3), g2(2, 3);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 3; ++c) {
      x2(r, c) = x(0, c);
      g2(r, c) = g1(0, c);
    }
  Network::Cache cache2;
  net.forward(x2, cache2);
  const auto two = net.backward(cache2, g2);
  for (std::size_t t = 0; t < one.size(); ++t)
    for (std::size_t i = 0; i < one[t].values.size(); ++i)
      CHECK(two[t].values[i] == doctest::Approx(2 * one[t].values[i]));
}

TEST_CASE("init is seeded") {
  Rng a(9), b(9);
  Network n1(cnn()), n2(cnn());
  n1.init(a);
  n2.init(b);
  CHECK(n1.parameters() == n2.parameters());
  for (const auto &t : n1.parameters())
    if (t.name.find("bias") != std::string::npos)
      for (double v : t.values)
        CHECK(v == 0.0);
}

TEST_CASE("optimizers") {
  Network net(mlp(1, {1}, 2));
  for (auto &t : net.parameters())
    std::fill(t.values.begin(), t.values.end(), 1.0);
  auto grads = net.parameters();
  for (auto &t : grads)
    std::fill(t.values.begin(), t.values.end(), 0.5);
  Network sgd = net;
  Optimizer(OptimizerKind::sgd, 0.1).step(sgd.parameters(), grads);
  for (const auto &t : sgd.parameters())
    for (double v : t.values)
      CHECK(v == doctest::Approx(0.95));
  // Adam's first bias-corrected step has magnitude ~lr regardless of scale
  Network adam = net;
  Optimizer opt(OptimizerKind::adam, 0.01);
  opt.step(adam.parameters(), grads);
  for (const auto &t : adam.parameters())
    for (double v : t.values)
      CHECK(v == doctest::Approx(1.0 - 0.01 * 0.5 / (0.5 + 1e-8)));
  CHECK(optimizer_from_string("adam") == OptimizerKind::adam);
  CHECK_THROWS_AS(optimizer_from_string("lbfgs"), Error);
}

TEST_CASE("checkpoint round trip is exact at 32-bit") {
  Rng rng(5);
  for (const auto &spec : {mlp(2, {16}, 3), cnn()}) {
    Network net(spec);
    net.init(rng);
    net.round_to_f32();
    const auto ck = make_checkpoint(net, {{"epoch", 3}});
    const auto bytes = encode_checkpoint(ck);
    CHECK(std::memcmp(bytes.data(), "FKDM", 4) == 0);
    const auto back = decode_checkpoint(bytes);
    CHECK(back == ck);
    const Network restored = network_from_checkpoint(back);
    CHECK(restored.spec() == spec);
    const Matrix x = random_matrix(rng, 7, spec.input_dim);
    CHECK(restored.forward(x).data() == net.forward(x).data());
    CHECK(nlohmann::json::parse(back.metadata).at("epoch") == 3);
  }
  const auto dir = std::filesystem::temp_directory_path() / "fuzzkd_ckpt_test";
  Network net(mlp(2, {4}, 3));
  net.init(rng);
  const auto ck = make_checkpoint(net);
  save_checkpoint(dir / "m.fkdm", ck);
  CHECK(load_checkpoint(dir / "m.fkdm") == ck);
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint corruption is rejected") {
  Rng rng(6);
  Network net(mlp(2, {4}, 3));
  net.init(rng);
  const auto ck = make_checkpoint(net);
  auto bytes = encode_checkpoint(ck);

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad_magic), Error);

  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK_THROWS_AS(decode_checkpoint(bad_version), Error);

  for (std::size_t cut : {std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    std::vector<unsigned char> t(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    CHECK_THROWS_AS(decode_checkpoint(t), Error);
  }
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(trailing), Error);

  auto missing = ck;
  missing.tensors.erase(missing.tensors.begin() + 1);
  try {
    network_from_checkpoint(missing);
    FAIL("missing tensor accepted");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("dense0.bias") != std::string::npos);
  }

  auto reshaped = ck;
  reshaped.tensors[0].dims = {2, 4};
  CHECK_THROWS_AS(network_from_checkpoint(reshaped), Error);

  auto no_meta = ck;
  no_meta.metadata = "{}";
  CHECK_THROWS_AS(network_from_checkpoint(no_meta), Error);
}
