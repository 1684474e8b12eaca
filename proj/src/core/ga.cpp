// SPDX-License-Identifier: Apache-2.0
#include "fuzzkd/ga.hpp"

#include "fuzzkd/error.hpp"
#include "fuzzkd/log.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

namespace fuzzkd::ga {

void GenomeSpec::validate() const {
  if (bounds.empty())
    throw_invalid("genome length must be >= 1");
  for (std::size_t i = 0; i < bounds.size(); ++i)
    if (bounds[i].lo > bounds[i].hi)
      throw_invalid("gene " + std::to_string(i) + " has an empty bound");
}

bool GenomeSpec::contains(const std::vector<int> &genes) const {
  if (genes.size() != bounds.size())
    return false;
  for (std::size_t i = 0; i < genes.size(); ++i)
    if (genes[i] < bounds[i].lo || genes[i] > bounds[i].hi)
      return false;
  return true;
}

const Individual &Population::best() const {
  if (members.empty())
    throw_invalid("empty population");
  return *std::max_element(members.begin(), members.end(),
                           [](const Individual &a, const Individual &b) {
                             return a.rank_fitness() < b.rank_fitness();
                           });
}

double Population::mean_fitness() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto &m : members)
    if (m.valid && m.fitness) {
      sum += *m.fitness;
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

void GAConfig::validate() const {
  if (population < 2)
    throw_invalid("population size must be >= 2");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0))
    throw_invalid("crossover rate must lie in [0,1]");
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0))
    throw_invalid("mutation rate must lie in [0,1]");
  if (elitism > population)
    throw_invalid("elitism count exceeds population size");
  if (threads < 1)
    throw_invalid("thread count must be >= 1");
}

void StoppingCriteria::validate() const {
  if (max_generations < 1)
    throw_invalid("max_generations must be >= 1");
  if (!(delta_f_min >= 0.0))
    throw_invalid("delta_f_min must be >= 0");
}

Population init_population(const GenomeSpec &spec, const GAConfig &cfg,
                           Rng &rng) {
  spec.validate();
  cfg.validate();
  Population pop;
  pop.members.resize(cfg.population);
  for (auto &ind : pop.members) {
    ind.genes.resize(spec.length());
    for (std::size_t g = 0; g < spec.length(); ++g)
      ind.genes[g] = static_cast<int>(
          rng.uniform_int(spec.bounds[g].lo, spec.bounds[g].hi));
  }
  return pop;
}

namespace {

void evaluate_one(Individual &ind, const FitnessFn &fitness) {
  std::optional<double> f;
  try {
    f = fitness(ind.genes);
  } catch (const std::exception &e) {
    logger().warn("fitness evaluation failed: {}", e.what());
  }
  if (f && std::isfinite(*f)) {
    ind.fitness = *f;
    ind.valid = true;
  } else {
    ind.fitness = -std::numeric_limits<double>::infinity();
    ind.valid = false;
  }
}

} // namespace

void evaluate(Population &pop, const FitnessFn &fitness, std::size_t threads) {
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < pop.members.size(); ++i)
    if (!pop.members[i].fitness)
      pending.push_back(i);
  pop.evaluations += pending.size();
  if (threads <= 1 || pending.size() <= 1) {
    for (std::size_t i : pending)
      evaluate_one(pop.members[i], fitness);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  const std::size_t n = std::min(threads, pending.size());
  for (std::size_t t = 0; t < n; ++t)
    workers.emplace_back([&] {
      for (std::size_t j = next++; j < pending.size(); j = next++)
        evaluate_one(pop.members[pending[j]], fitness);
    });
}

std::vector<double> selection_probabilities(const Population &pop) {
  double min_valid = std::numeric_limits<double>::infinity();
  for (const auto &m : pop.members) {
    if (!m.fitness)
      throw_invalid("selection requires evaluated individuals");
    if (m.valid)
      min_valid = std::min(min_valid, *m.fitness);
  }
  if (!std::isfinite(min_valid))
    throw_invalid("no valid individuals to select from");
  const double shift = min_valid < 1e-9 ? 1e-9 - min_valid : 0.0;
  std::vector<double> probs(pop.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < pop.size(); ++i)
    if (pop.members[i].valid) {
      probs[i] = *pop.members[i].fitness + shift;
      total += probs[i];
    }
  for (double &p : probs)
    p /= total;
  return probs;
}

const Individual &select_parent(const Population &pop,
                                const std::vector<double> &probs, Rng &rng) {
  const double r = rng.uniform();
  double acc = 0.0;
  std::size_t last_valid = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0)
      continue;
    last_valid = i;
    acc += probs[i];
    if (r < acc)
      return pop.members[i];
  }
  return pop.members[last_valid]; // rounding left r just past the total
}

const Individual &select_parent(const Population &pop, Rng &rng) {
  return select_parent(pop, selection_probabilities(pop), rng);
}

std::pair<Individual, Individual> crossover_at(const Individual &a,
                                               const Individual &b,
                                               std::size_t point) {
  if (a.genes.size() != b.genes.size())
    throw_domain("crossover parents differ in genome length");
  if (point < 1 || point >= a.genes.size())
    throw_domain("crossover point must lie in [1, k-1]");
  Individual c1, c2;
  c1.genes.assign(a.genes.begin(), a.genes.begin() + static_cast<long>(point));
  c1.genes.insert(c1.genes.end(), b.genes.begin() + static_cast<long>(point),
                  b.genes.end());
  c2.genes.assign(b.genes.begin(), b.genes.begin() + static_cast<long>(point));
  c2.genes.insert(c2.genes.end(), a.genes.begin() + static_cast<long>(point),
                  a.genes.end());
  return {std::move(c1), std::move(c2)};
}

std::pair<Individual, Individual> crossover(const Individual &a,
                                            const Individual &b, Rng &rng,
                                            double p_c) {
  if (a.genes.size() != b.genes.size())
    throw_domain("crossover parents differ in genome length");
  const std::size_t k = a.genes.size();
  if (k >= 2 && rng.bernoulli(p_c)) {
    const auto q =
        static_cast<std::size_t>(rng.uniform_int(1, static_cast<long>(k) - 1));
    return crossover_at(a, b, q);
  }
  return {a, b};
}

Individual mutate(const Individual &ind, Rng &rng, double p_m,
                  const GenomeSpec &spec) {
  Individual out = ind;
  bool changed = false;
  for (std::size_t g = 0; g < out.genes.size(); ++g)
    if (rng.bernoulli(p_m)) {
      const int v = static_cast<int>(
          rng.uniform_int(spec.bounds[g].lo, spec.bounds[g].hi));
      changed = changed || v != out.genes[g];
      out.genes[g] = v;
    }
  if (changed) {
    out.fitness.reset();
    out.valid = true;
  }
  return out;
}

RunResult run(const GenomeSpec &spec, const GAConfig &cfg,
              const StoppingCriteria &stop, const FitnessFn &fitness) {
  spec.validate();
  cfg.validate();
  stop.validate();
  Rng rng(cfg.seed);

  Population pop = init_population(spec, cfg, rng);
  evaluate(pop, fitness, cfg.threads);

  RunResult result;
  result.best = pop.best();
  const auto record = [&](std::size_t gen) {
    const Individual &b = pop.best();
    if (b.rank_fitness() > result.best.rank_fitness())
      result.best = b;
    result.history.push_back({gen, b.rank_fitness(), pop.mean_fitness()});
  };
  record(0);

  for (std::size_t gen = 1;; ++gen) {
    const double current = result.history.back().best;
    if (current >= stop.fitness_threshold) {
      result.reason = StopReason::threshold;
      break;
    }
    if (result.history.size() >= 2 &&
        std::abs(current - result.history[result.history.size() - 2].best) <
            stop.delta_f_min) {
      result.reason = StopReason::converged;
      break;
    }
    if (result.history.size() >= stop.max_generations) {
      result.reason = StopReason::max_generations;
      break;
    }

    // Elites first, ranked by fitness with index as tie-break.
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return pop.members[a].rank_fitness() >
                              pop.members[b].rank_fitness();
                     });
    Population next;
    next.evaluations = pop.evaluations;
    for (std::size_t e = 0; e < cfg.elitism; ++e)
      next.members.push_back(pop.members[order[e]]);

    const std::vector<double> probs = selection_probabilities(pop);
    while (next.size() < cfg.population) {
      const Individual &pa = select_parent(pop, probs, rng);
      const Individual &pb = select_parent(pop, probs, rng);
      auto [c1, c2] = spec.length() >= 2
                          ? crossover(pa, pb, rng, cfg.crossover_rate)
                          : std::pair<Individual, Individual>{pa, pb};
      next.members.push_back(mutate(c1, rng, cfg.mutation_rate, spec));
      if (next.size() < cfg.population)
        next.members.push_back(mutate(c2, rng, cfg.mutation_rate, spec));
    }
    pop = std::move(next);
    evaluate(pop, fitness, cfg.threads);
    record(gen);
  }
  result.evaluations = pop.evaluations;
  return result;
}

double onemax(const std::vector<int> &genes) {
  return static_cast<double>(std::count(genes.begin(), genes.end(), 1));
}

double sphere(const std::vector<int> &genes) {
  double s = 0.0;
  for (int g : genes)
    s += static_cast<double>(g) * g;
  return -s;
}

} // namespace fuzzkd::ga
