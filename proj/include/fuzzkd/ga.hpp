// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fuzzkd/rng.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace fuzzkd::ga {

struct GeneBound {
  int lo = 0;
  int hi = 0; // inclusive
};

struct GenomeSpec {
  std::vector<GeneBound> bounds;

  std::size_t length() const { return bounds.size(); }
  void validate() const;
  bool contains(const std::vector<int> &genes) const;
};

struct Individual {
  std::vector<int> genes;
  std::optional<double> fitness;
  bool valid = true;

  /// Fitness used for ranking; invalid or unevaluated individuals sort last.
  double rank_fitness() const {
    return valid && fitness ? *fitness
                            : -std::numeric_limits<double>::infinity();
  }
};

struct Population {
  std::vector<Individual> members;
  std::size_t evaluations = 0;

  std::size_t size() const { return members.size(); }
  const Individual &best() const;
  double mean_fitness() const; // over valid members
};

struct GAConfig {
  std::size_t population = 30;
  double crossover_rate = 0.9;
  double mutation_rate = 0.02;
  std::size_t elitism = 1;
  std::uint64_t seed = 0;
  std::size_t threads = 1; // concurrent fitness evaluations

  void validate() const;
};

struct StoppingCriteria {
  std::size_t max_generations = 100;
  double delta_f_min = 0.0; // 0 disables the no-improvement test
  double fitness_threshold = std::numeric_limits<double>::infinity();

  void validate() const;
};

/// Returns the fitness of a genome, or nullopt when the genome cannot be
/// evaluated. Exceptions are treated the same as nullopt. Must be callable
/// concurrently when GAConfig::threads > 1.
using FitnessFn = std::function<std::optional<double>(const std::vector<int> &)>;

Population init_population(const GenomeSpec &spec, const GAConfig &cfg,
                           Rng &rng);

/// Evaluates every member; results are written back by index so the outcome
/// does not depend on scheduling.
void evaluate(Population &pop, const FitnessFn &fitness,
              std::size_t threads = 1);

/// Roulette probabilities fitness_i / sum(fitness). Fitness is shifted up
/// when needed so the smallest valid value is 1e-9; invalid members get 0.
std::vector<double> selection_probabilities(const Population &pop);

const Individual &select_parent(const Population &pop, Rng &rng);
/// Same draw with precomputed probabilities.
const Individual &select_parent(const Population &pop,
                                const std::vector<double> &probs, Rng &rng);

/// Single-point crossover at a caller-chosen point q in [1, k-1].
std::pair<Individual, Individual> crossover_at(const Individual &a,
                                               const Individual &b,
                                               std::size_t point);

/// With probability p_c swaps tails at a uniform point, otherwise copies.
std::pair<Individual, Individual> crossover(const Individual &a,
                                            const Individual &b, Rng &rng,
                                            double p_c);

/// Resamples each gene uniformly within its bound with probability p_m.
Individual mutate(const Individual &ind, Rng &rng, double p_m,
                  const GenomeSpec &spec);

struct GenerationStats {
  std::size_t generation = 0;
  double best = 0.0;
  double mean = 0.0;
};

enum class StopReason { max_generations, converged, threshold };

struct RunResult {
  Individual best;
  std::vector<GenerationStats> history;
  StopReason reason = StopReason::max_generations;
  std::size_t evaluations = 0;
};

RunResult run(const GenomeSpec &spec, const GAConfig &cfg,
              const StoppingCriteria &stop, const FitnessFn &fitness);

/// Built-in benchmark fitness functions.
double onemax(const std::vector<int> &genes);
/// Negated squared norm, so the optimum (all zeros) is the maximum.
double sphere(const std::vector<int> &genes);

} // namespace fuzzkd::ga
