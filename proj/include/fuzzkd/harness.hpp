// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fuzzkd/checkpoint.hpp"
#include "fuzzkd/dataset.hpp"
#include "fuzzkd/fuzzy.hpp"
#include "fuzzkd/ga.hpp"
#include "fuzzkd/losses.hpp"
#include "fuzzkd/nn.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace fuzzkd::harness {

struct TrainConfig {
  std::size_t epochs = 30;
  double learning_rate = 0.001;
  std::size_t batch_size = 64;
  nn::OptimizerKind optimizer = nn::OptimizerKind::adam;
  std::uint64_t seed = 0;
  loss::DistillConfig distill{};

  void validate() const;
};

/// Region of input space with a fixed teacher verdict.
struct TeacherRegion {
  std::vector<double> centroid;
  int target_class = 0;
  double confidence = 1.0;
};

/// Source of teacher logits: a trained network, or a synthetic oracle that
/// emits `confidence` on a target class and spreads the rest evenly. The
/// synthetic target is the nearest region's class, or the sample's own label
/// when no regions are configured.
class TeacherOracle {
public:
  enum class Mode { trained_network, synthetic };

  static TeacherOracle from_network(nn::Network net);
  static TeacherOracle synthetic(std::size_t classes, double confidence);
  static TeacherOracle synthetic_regions(std::size_t classes,
                                         std::vector<TeacherRegion> regions);

  Mode mode() const { return mode_; }
  Matrix logits(const Matrix &inputs, std::span<const int> labels) const;

private:
  TeacherOracle() = default;

  Mode mode_ = Mode::synthetic;
  std::optional<nn::Network> net_;
  std::size_t classes_ = 0;
  double confidence_ = 1.0;
  std::vector<TeacherRegion> regions_;
};

/// Logits for a distribution putting `confidence` on `target`.
std::vector<double> synthetic_logits(std::size_t classes, int target,
                                     double confidence);

/// One optimizer update on a batch. When `weight_override` is non-empty the
/// fuzzy-form loss uses those per-sample weights instead of the engine's.
loss::LossBreakdown train_step(nn::Network &net, nn::Optimizer &opt,
                               const Matrix &inputs,
                               std::span<const int> labels,
                               const Matrix &teacher_logits,
                               const loss::DistillConfig &cfg,
                               const fuzzy::FuzzyEngine &engine,
                               std::span<const double> weight_override = {});

inline constexpr std::size_t kWeightBins = 10;

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double mean_fuzzy_weight = 0.0;
  std::array<std::size_t, kWeightBins> weight_histogram{};
};

void to_json(nlohmann::json &j, const EpochRecord &r);

struct TrainResult {
  nn::Checkpoint best;      // best validation accuracy
  std::size_t best_epoch = 0;
  nn::Network final_network;
  std::vector<EpochRecord> history;
  std::vector<double> logged_weights; // every per-sample weight used
};

/// Distills `teacher` into a fresh student. Data is split by `split`; the
/// test indices are not touched. Throws ErrorCode::diverged on a non-finite
/// loss, naming epoch and batch.
TrainResult train_distill(const TeacherOracle &teacher,
                          const nn::NetworkSpec &student_spec,
                          const data::Dataset &dataset,
                          const data::IndexSplit &split,
                          const TrainConfig &cfg,
                          const fuzzy::FuzzyEngine &engine = {});

/// Plain cross-entropy training of a teacher network.
nn::Network train_teacher(const nn::NetworkSpec &spec,
                          const data::Dataset &dataset,
                          std::span<const std::size_t> train_idx,
                          const TrainConfig &cfg);

std::vector<int> predict(const nn::Network &net, const Matrix &inputs);
double accuracy(const nn::Network &net, const Matrix &inputs,
                std::span<const int> labels);

/// GA fitness proxy: validation accuracy after `budget_epochs` of distillation
/// minus `penalty` * parameter_count / params_max.
struct QuickFitnessContext {
  const data::Dataset *dataset = nullptr;
  data::IndexSplit split;
  const TeacherOracle *teacher = nullptr;
  TrainConfig train;
  fuzzy::FuzzyEngine engine;
  std::size_t budget_epochs = 5;
  double penalty = 0.1;
};

double quick_fitness_spec(const nn::NetworkSpec &spec, std::size_t params_max,
                          const QuickFitnessContext &ctx);

/// Candidate students the GA chooses from; gene 0 indexes this pool.
std::vector<nn::NetworkSpec> candidate_pool(const data::Dataset &dataset);

inline constexpr std::array<double, 3> kLearningRateChoices = {1e-3, 3e-3, 1e-2};
inline constexpr std::array<std::size_t, 3> kBatchChoices = {16, 32, 64};

/// gene 0: pool index; gene 1: learning-rate choice; gene 2: batch choice.
ga::GenomeSpec model_genome(std::size_t pool_size);

/// nullopt when the genome does not decode to a valid student.
std::optional<double> quick_fitness(const std::vector<int> &genome,
                                    const std::vector<nn::NetworkSpec> &pool,
                                    const QuickFitnessContext &ctx);

} // namespace fuzzkd::harness
