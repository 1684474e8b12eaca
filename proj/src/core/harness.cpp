// SPDX-License-Identifier: Apache-2.0
#include "fuzzkd/harness.hpp"

#include "fuzzkd/error.hpp"
#include "fuzzkd/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fuzzkd::harness {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0))
    throw_invalid("learning rate must be positive");
  if (batch_size == 0)
    throw_invalid("batch size must be positive");
  distill.validate();
}

std::vector<double> synthetic_logits(std::size_t classes, int target,
                                     double confidence) {
  const double k = static_cast<double>(classes);
  if (!(confidence >= 1.0 / k - 1e-12 && confidence <= 1.0))
    throw_domain("synthetic teacher confidence must lie in [1/K, 1]");
  const double rest = (1.0 - confidence) / (k - 1.0);
  std::vector<double> z(classes, std::log(std::max(rest, loss::kProbFloor)));
  z.at(static_cast<std::size_t>(target)) =
      std::log(std::max(confidence, loss::kProbFloor));
  return z;
}

TeacherOracle TeacherOracle::from_network(nn::Network net) {
  TeacherOracle t;
  t.mode_ = Mode::trained_network;
  t.classes_ = net.spec().classes;
  t.net_ = std::move(net);
  return t;
}

TeacherOracle TeacherOracle::synthetic(std::size_t classes, double confidence) {
  TeacherOracle t;
  t.mode_ = Mode::synthetic;
  t.classes_ = classes;
  t.confidence_ = confidence;
  synthetic_logits(classes, 0, confidence); // range check
  return t;
}

TeacherOracle
TeacherOracle::synthetic_regions(std::size_t classes,
                                 std::vector<TeacherRegion> regions) {
  if (regions.empty())
    throw_invalid("synthetic teacher needs at least one region");
  for (const auto &r : regions) {
    if (r.target_class < 0 || static_cast<std::size_t>(r.target_class) >= classes)
      throw_invalid("teacher region targets an unknown class");
    synthetic_logits(classes, r.target_class, r.confidence);
  }
  TeacherOracle t;
  t.mode_ = Mode::synthetic;
  t.classes_ = classes;
  t.regions_ = std::move(regions);
  return t;
}

Matrix TeacherOracle::logits(const Matrix &inputs,
                             std::span<const int> labels) const {
  if (net_)
    return net_->forward(inputs);
  Matrix out(inputs.rows(), classes_);
  for (std::size_t i = 0; i < inputs.rows(); ++i) {
    int target = 0;
    double conf = confidence_;
    if (regions_.empty()) {
      target = labels[i];
    } else {
      double best = std::numeric_limits<double>::infinity();
      const auto x = inputs.row(i);
      for (const auto &r : regions_) {
        if (r.centroid.size() != x.size())
          throw_domain("teacher region centroid has the wrong dimension");
        double d = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j)
          d += (x[j] - r.centroid[j]) * (x[j] - r.centroid[j]);
        if (d < best) {
          best = d;
          target = r.target_class;
          conf = r.confidence;
        }
      }
    }
    const auto z = synthetic_logits(classes_, target, conf);
    std::copy(z.begin(), z.end(), out.row(i).begin());
  }
  return out;
}

loss::LossBreakdown train_step(nn::Network &net, nn::Optimizer &opt,
                               const Matrix &inputs,
                               std::span<const int> labels,
                               const Matrix &teacher_logits,
                               const loss::DistillConfig &cfg,
                               const fuzzy::FuzzyEngine &engine,
                               std::span<const double> weight_override) {
  nn::Network::Cache cache;
  const Matrix logits = net.forward(inputs, cache);
  loss::LossBreakdown lb;
  Matrix grad;
  if (!weight_override.empty()) {
    lb = loss::kd_loss_weighted(logits, teacher_logits, labels, cfg,
                                weight_override);
    grad = loss::gradients_weighted(logits, teacher_logits, labels, cfg,
                                    weight_override);
  } else if (cfg.weight_mode == loss::WeightMode::fixed) {
    lb = loss::kd_loss_static(logits, teacher_logits, labels, cfg);
    grad = loss::loss_gradients(logits, teacher_logits, labels, cfg, engine);
  } else {
    const auto w = loss::teacher_weights(teacher_logits, cfg, engine);
    lb = loss::kd_loss_weighted(logits, teacher_logits, labels, cfg, w);
    grad = loss::gradients_weighted(logits, teacher_logits, labels, cfg, w);
  }
  if (!std::isfinite(lb.total))
    return lb; // caller reports divergence with context
  const auto grads = net.backward(cache, grad);
  opt.step(net.parameters(), grads);
  return lb;
}

void to_json(nlohmann::json &j, const EpochRecord &r) {
  j = nlohmann::json{{"epoch", r.epoch},
                     {"train_loss", r.train_loss},
                     {"val_loss", r.val_loss},
                     {"train_accuracy", r.train_accuracy},
                     {"val_accuracy", r.val_accuracy},
                     {"mean_fuzzy_weight", r.mean_fuzzy_weight},
                     {"weight_histogram", r.weight_histogram}};
}

std::vector<int> predict(const nn::Network &net, const Matrix &inputs) {
  const Matrix logits = net.forward(inputs);
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double accuracy(const nn::Network &net, const Matrix &inputs,
                std::span<const int> labels) {
  if (labels.empty())
    return 0.0;
  const auto pred = predict(net, inputs);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    hit += pred[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

namespace {

Matrix gather_rows(const Matrix &m, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto src = m.row(idx[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

std::vector<int> gather_labels(std::span<const int> labels,
                               std::span<const std::size_t> idx) {
  std::vector<int> out(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r)
    out[r] = labels[idx[r]];
  return out;
}

} // namespace

TrainResult train_distill(const TeacherOracle &teacher,
                          const nn::NetworkSpec &student_spec,
                          const data::Dataset &dataset,
                          const data::IndexSplit &split,
                          const TrainConfig &cfg,
                          const fuzzy::FuzzyEngine &engine) {
  cfg.validate();
  dataset.validate();
  if (split.train.empty())
    throw_invalid("training split is empty");
  if (student_spec.input_dim != dataset.features.cols() ||
      student_spec.classes != dataset.classes)
    throw_invalid("student spec does not match the dataset shape");

  nn::Network net(student_spec);
  Rng init_rng(substream_seed(cfg.seed, "init"));
  net.init(init_rng);
  nn::Optimizer opt(cfg.optimizer, cfg.learning_rate);
  Rng shuffle_rng(substream_seed(cfg.seed, "shuffle"));

  const Matrix teacher_all = teacher.logits(dataset.features, dataset.labels);
  const Matrix x_train = gather_rows(dataset.features, split.train);
  const auto y_train = gather_labels(dataset.labels, split.train);
  const bool has_val = !split.valid.empty();
  const Matrix x_val = gather_rows(dataset.features, split.valid);
  const auto y_val = gather_labels(dataset.labels, split.valid);
  const Matrix t_val = gather_rows(teacher_all, split.valid);

  TrainResult result{nn::make_checkpoint(net, {{"epoch", 0}}), 0, net, {}, {}};
  double best_val = -1.0;

  std::vector<std::size_t> order = split.train;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    double weight_sum = 0.0;
    std::size_t weight_n = 0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Matrix xb = gather_rows(dataset.features, idx);
      const auto yb = gather_labels(dataset.labels, idx);
      const Matrix tb = gather_rows(teacher_all, idx);
      const auto lb = train_step(net, opt, xb, yb, tb, cfg.distill, engine);
      if (!std::isfinite(lb.total))
        throw Error(ErrorCode::diverged,
                    "non-finite loss at epoch " + std::to_string(epoch) +
                        ", batch " + std::to_string(batch_no));
      loss_sum += lb.total * static_cast<double>(idx.size());
      for (double w : lb.per_sample_weights) {
        weight_sum += w;
        ++weight_n;
        const auto bin = std::min(kWeightBins - 1,
                                  static_cast<std::size_t>(w * kWeightBins));
        ++rec.weight_histogram[bin];
        result.logged_weights.push_back(w);
      }
    }
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.mean_fuzzy_weight = weight_n ? weight_sum / static_cast<double>(weight_n) : 0.0;
    rec.train_accuracy = accuracy(net, x_train, y_train);
    if (has_val) {
      rec.val_accuracy = accuracy(net, x_val, y_val);
      rec.val_loss =
          loss::kd_loss(net.forward(x_val), t_val, y_val, cfg.distill, engine)
              .total;
    }
    const double score = has_val ? rec.val_accuracy : rec.train_accuracy;
    logger().info("epoch {}: train_loss={:.6f} val_acc={:.4f} mean_w={:.4f}",
                  epoch, rec.train_loss, rec.val_accuracy,
                  rec.mean_fuzzy_weight);
    if (score > best_val) {
      best_val = score;
      result.best = nn::make_checkpoint(net, {{"epoch", epoch}});
      result.best_epoch = epoch;
    }
    result.history.push_back(rec);
  }
  result.final_network = std::move(net);
  return result;
}

nn::Network train_teacher(const nn::NetworkSpec &spec,
                          const data::Dataset &dataset,
                          std::span<const std::size_t> train_idx,
                          const TrainConfig &cfg) {
  cfg.validate();
  nn::Network net(spec);
  Rng init_rng(substream_seed(cfg.seed, "teacher-init"));
  net.init(init_rng);
  nn::Optimizer opt(cfg.optimizer, cfg.learning_rate);
  Rng shuffle_rng(substream_seed(cfg.seed, "teacher-shuffle"));
  loss::DistillConfig ce_only;
  ce_only.weight_mode = loss::WeightMode::fixed;
  ce_only.fixed_weight = 1.0;
  std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      const Matrix xb = gather_rows(dataset.features, idx);
      const auto yb = gather_labels(dataset.labels, idx);
      const Matrix zeros(idx.size(), spec.classes);
      const auto lb = train_step(net, opt, xb, yb, zeros, ce_only, {});
      if (!std::isfinite(lb.total))
        throw Error(ErrorCode::diverged,
                    "teacher loss diverged at epoch " + std::to_string(epoch));
    }
  }
  return net;
}

double quick_fitness_spec(const nn::NetworkSpec &spec, std::size_t params_max,
                          const QuickFitnessContext &ctx) {
  if (!ctx.dataset)
    throw_invalid("quick fitness needs a dataset");
  if (params_max == 0)
    throw_invalid("params_max must be positive");
  TrainConfig cfg = ctx.train;
  cfg.epochs = ctx.budget_epochs;
  const TeacherOracle fallback =
      TeacherOracle::synthetic(ctx.dataset->classes, 1.0);
  const TeacherOracle &teacher = ctx.teacher ? *ctx.teacher : fallback;
  if (!ctx.teacher) {
    cfg.distill.weight_mode = loss::WeightMode::fixed;
    cfg.distill.fixed_weight = 1.0;
  }
  const TrainResult tr =
      train_distill(teacher, spec, *ctx.dataset, ctx.split, cfg, ctx.engine);
  const auto &idx = ctx.split.valid.empty() ? ctx.split.train : ctx.split.valid;
  const Matrix x = gather_rows(ctx.dataset->features, idx);
  const auto y = gather_labels(ctx.dataset->labels, idx);
  const double acc = accuracy(tr.final_network, x, y);
  return acc - ctx.penalty * static_cast<double>(spec.parameter_count()) /
                   static_cast<double>(params_max);
}

std::vector<nn::NetworkSpec> candidate_pool(const data::Dataset &dataset) {
  std::vector<nn::NetworkSpec> pool;
  const auto mlp = [&](std::vector<std::size_t> hidden) {
    nn::NetworkSpec s;
    s.kind = nn::NetKind::mlp;
    s.input_dim = dataset.features.cols();
    s.classes = dataset.classes;
    s.hidden = std::move(hidden);
    pool.push_back(s);
  };
  const bool images = dataset.image_width > 0 && dataset.image_height > 0;
  if (!images) {
    for (std::size_t w : {2, 4, 8, 16, 32, 64, 128})
      mlp({w});
    for (std::size_t w : {8, 16, 32, 64, 128})
      mlp({w, w});
    return pool;
  }
  for (std::size_t w : {8, 16, 32})
    mlp({w});
  for (std::size_t w : {8, 16, 32})
    mlp({w, w});
  for (std::size_t mult : {1, 2})
    for (std::size_t pw : {4, 8, 16}) {
      nn::NetworkSpec s;
      s.kind = nn::NetKind::micro_cnn;
      s.input_dim = dataset.features.cols();
      s.classes = dataset.classes;
      s.image_width = dataset.image_width;
      s.image_height = dataset.image_height;
      s.image_channels = dataset.image_channels;
      s.depth_multiplier = mult;
      s.pointwise_channels = pw;
      s.hidden = {16};
      pool.push_back(s);
    }
  return pool;
}

ga::GenomeSpec model_genome(std::size_t pool_size) {
  if (pool_size == 0)
    throw_invalid("candidate pool is empty");
  return ga::GenomeSpec{{{0, static_cast<int>(pool_size) - 1},
                         {0, static_cast<int>(kLearningRateChoices.size()) - 1},
                         {0, static_cast<int>(kBatchChoices.size()) - 1}}};
}

std::optional<double> quick_fitness(const std::vector<int> &genome,
                                    const std::vector<nn::NetworkSpec> &pool,
                                    const QuickFitnessContext &ctx) {
  if (!model_genome(pool.size()).contains(genome))
    return std::nullopt;
  std::size_t params_max = 0;
  for (const auto &s : pool)
    params_max = std::max(params_max, s.parameter_count());
  QuickFitnessContext local = ctx;
  local.train.learning_rate = kLearningRateChoices[static_cast<std::size_t>(genome[1])];
  local.train.batch_size = kBatchChoices[static_cast<std::size_t>(genome[2])];
  return quick_fitness_spec(pool[static_cast<std::size_t>(genome[0])],
                            params_max, local);
}

} // namespace fuzzkd::harness
