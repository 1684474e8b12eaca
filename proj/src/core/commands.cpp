// SPDX-License-Identifier: Apache-2.0
#include "fuzzkd/commands.hpp"

#include "fuzzkd/checkpoint.hpp"
#include "fuzzkd/error.hpp"
#include "fuzzkd/image_io.hpp"
#include "fuzzkd/log.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace fuzzkd::commands {

using nlohmann::json;

std::size_t default_jobs() {
  return std::max(1u, std::thread::hardware_concurrency());
}

void write_json(const fs::path &path, const json &doc) {
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw_io("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out)
    throw_io("failed writing " + path.string());
}

namespace {

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <class Fn> void parallel_for(std::size_t n, std::size_t jobs, Fn &&fn) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++)
        fn(i);
    });
}

std::vector<fs::path> image_files(const fs::path &root) {
  if (!fs::is_directory(root))
    throw_invalid("not a directory: " + root.string());
  std::vector<fs::path> out;
  for (const auto &e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && imaging::is_image_file(e.path()))
      out.push_back(fs::relative(e.path(), root));
  std::sort(out.begin(), out.end());
  return out;
}

fs::path png_name(fs::path rel) { return rel.replace_extension(".png"); }

BatchOutcome collect(std::vector<std::string> &errors, std::size_t total) {
  BatchOutcome o;
  for (auto &e : errors)
    if (!e.empty())
      o.failures.push_back(std::move(e));
  o.written = total - o.failures.size();
  return o;
}

std::string_view stop_name(ga::StopReason r) {
  switch (r) {
  case ga::StopReason::threshold:
    return "threshold";
  case ga::StopReason::converged:
    return "converged";
  case ga::StopReason::max_generations:
    break;
  }
  return "max_generations";
}

void append_rows(data::Dataset &into, const data::Dataset &from,
                 std::vector<std::size_t> &idx) {
  const std::size_t base = into.labels.size();
  Matrix grown(base + from.size(), from.features.cols());
  std::copy(into.features.data().begin(), into.features.data().end(),
            grown.data().begin());
  std::copy(from.features.data().begin(), from.features.data().end(),
            grown.data().begin() + static_cast<std::ptrdiff_t>(base * from.features.cols()));
  into.features = std::move(grown);
  into.labels.insert(into.labels.end(), from.labels.begin(), from.labels.end());
  for (std::size_t i = 0; i < from.size(); ++i)
    idx.push_back(base + i);
}

data::DatasetManifest manifest_for(const config::ExperimentConfig &cfg) {
  data::DatasetManifest m;
  if (!cfg.data.manifest.empty()) {
    m = data::load_manifest(cfg.data.manifest);
  } else {
    m = data::split_directory(cfg.data.root, cfg.data.ratios,
                              substream_seed(cfg.seed, "split"));
    if (cfg.data.balance) {
      const auto seed = substream_seed(cfg.seed, "balance");
      m = data::balance(m, data::SplitName::train, seed);
      m = data::balance(m, data::SplitName::valid, seed + 1);
    }
  }
  return m;
}

struct Teacher {
  harness::TeacherOracle oracle;
  std::optional<nn::Network> net;
};

Teacher make_teacher(const config::ExperimentConfig &cfg, const data::Dataset &ds,
                     const data::IndexSplit &split) {
  if (cfg.teacher.kind == "synthetic")
    return {harness::TeacherOracle::synthetic(ds.classes, cfg.teacher.confidence),
            std::nullopt};
  harness::TrainConfig tc = cfg.train;
  tc.epochs = cfg.teacher.epochs;
  tc.learning_rate = cfg.teacher.learning_rate;
  tc.seed = substream_seed(cfg.seed, "teacher");
  auto net = harness::train_teacher(config::make_spec(cfg.teacher.model, ds), ds,
                                    split.train, tc);
  net.round_to_f32();
  return {harness::TeacherOracle::from_network(net), net};
}

double test_accuracy(const nn::Network &net, const data::Dataset &ds,
                     const data::IndexSplit &split) {
  const auto sub = ds.subset(split.test);
  return harness::accuracy(net, sub.features, sub.labels);
}

} // namespace

BatchOutcome enhance(const fs::path &in_dir, const fs::path &out_dir,
                     const config::ImagingSection &img, std::size_t jobs) {
  const auto files = image_files(in_dir);
  if (files.empty())
    throw_invalid("no images found under " + in_dir.string());
  std::vector<std::string> errors(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    const fs::path src = in_dir / files[i];
    try {
      const auto byte = imaging::load_image(src);
      const auto g = imaging::to_byte(
          imaging::gamma_correct(imaging::rescale_unit(byte), img.gamma));
      imaging::save_png(out_dir / "Pix1" / png_name(files[i]), g);
      if (img.histeq)
        imaging::save_png(out_dir / "Pix2" / png_name(files[i]),
                             imaging::hist_equalize(g));
    } catch (const std::exception &e) {
      errors[i] = src.string() + ": " + e.what();
      logger().warn("skipping {}: {}", src.string(), e.what());
    }
  });
  return collect(errors, files.size());
}

BatchOutcome fuse(const fs::path &pix1, const fs::path &pix2,
                  const fs::path &out_dir, int levels, std::size_t side,
                  std::size_t jobs) {
  const auto a = image_files(pix1);
  const auto b = image_files(pix2);
  std::vector<fs::path> only_a, only_b, both;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_a));
  std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_b));
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  if (!only_a.empty() || !only_b.empty()) {
    std::string msg;
    for (const auto &p : only_a)
      msg += (msg.empty() ? "" : "\n") + ("unmatched " + (pix1 / p).string());
    for (const auto &p : only_b)
      msg += (msg.empty() ? "" : "\n") + ("unmatched " + (pix2 / p).string());
    throw_invalid(msg);
  }
  if (both.empty())
    throw_invalid("no images to fuse");
  std::vector<std::string> errors(both.size());
  parallel_for(both.size(), jobs, [&](std::size_t i) {
    try {
      auto x = imaging::load_image(pix1 / both[i]);
      auto y = imaging::load_image(pix2 / both[i]);
      if (x.channels != y.channels)
        throw_invalid("channel counts differ between the two trees");
      x = imaging::resize_bilinear(x, side, side);
      y = imaging::resize_bilinear(y, side, side);
      imaging::save_png(out_dir / png_name(both[i]), imaging::fuse_mean(x, y, levels));
    } catch (const std::exception &e) {
      errors[i] = both[i].string() + ": " + e.what();
      logger().warn("fuse failed for {}: {}", both[i].string(), e.what());
    }
  });
  return collect(errors, both.size());
}

data::Dataset load_dataset(const config::ExperimentConfig &cfg,
                           data::IndexSplit &split) {
  if (cfg.data.source == "blobs") {
    const auto &b = cfg.data.blobs;
    auto ds = data::make_blobs(b.samples, b.classes, b.dims, b.separation,
                               b.stddev, substream_seed(cfg.seed, "data"));
    split = data::stratified_split(ds.labels, ds.classes, cfg.data.ratios,
                                   substream_seed(cfg.seed, "split"));
    return ds;
  }
  const auto m = manifest_for(cfg);
  data::Dataset all;
  split = {};
  all.features = Matrix(0, cfg.data.image_side * cfg.data.image_side);
  for (auto s : {data::SplitName::train, data::SplitName::valid, data::SplitName::test}) {
    const auto part = data::load_split(m, s, cfg.data.image_side);
    all.classes = part.classes;
    all.class_names = part.class_names;
    all.image_width = part.image_width;
    all.image_height = part.image_height;
    all.image_channels = part.image_channels;
    append_rows(all, part,
                s == data::SplitName::train   ? split.train
                : s == data::SplitName::valid ? split.valid
                                              : split.test);
  }
  return all;
}

void train(const config::ExperimentConfig &cfg, const fs::path &out_dir) {
  cfg.validate();
  data::IndexSplit split;
  const auto ds = load_dataset(cfg, split);
  const auto teacher = make_teacher(cfg, ds, split);
  const auto spec = config::make_spec(cfg.student, ds);
  const auto result = harness::train_distill(teacher.oracle, spec, ds, split,
                                             cfg.train, cfg.fuzzy);
  fs::create_directories(out_dir);
  nn::save_checkpoint(out_dir / "student.fkdm", result.best);
  json teacher_info{{"kind", cfg.teacher.kind}};
  if (teacher.net) {
    nn::save_checkpoint(out_dir / "teacher.fkdm", nn::make_checkpoint(*teacher.net));
    teacher_info["test_accuracy"] = test_accuracy(*teacher.net, ds, split);
  }
  const auto best = nn::network_from_checkpoint(result.best);
  json history{{"format", "fuzzkd-history"},
               {"version", 1},
               {"seed", cfg.seed},
               {"student", spec},
               {"weight_mode", loss::to_string(cfg.loss.weight_mode)},
               {"teacher", teacher_info},
               {"best_epoch", result.best_epoch},
               {"test_accuracy", test_accuracy(best, ds, split)},
               {"epochs", result.history}};
  write_json(out_dir / "history.json", history);
}

void select(const config::ExperimentConfig &cfg, const fs::path &out_dir) {
  cfg.validate();
  ga::GenomeSpec genome;
  ga::FitnessFn fitness;
  std::optional<data::Dataset> ds;
  std::optional<Teacher> teacher;
  std::vector<nn::NetworkSpec> pool;
  harness::QuickFitnessContext ctx;
  if (cfg.ga.fitness == "onemax") {
    genome.bounds.assign(cfg.ga.genome_length, {0, 1});
    fitness = [](const std::vector<int> &g) { return std::optional(ga::onemax(g)); };
  } else if (cfg.ga.fitness == "sphere") {
    genome.bounds.assign(cfg.ga.genome_length, {-cfg.ga.sphere_bound, cfg.ga.sphere_bound});
    fitness = [](const std::vector<int> &g) { return std::optional(ga::sphere(g)); };
  } else {
    data::IndexSplit split;
    ds = load_dataset(cfg, split);
    teacher = make_teacher(cfg, *ds, split);
    pool = harness::candidate_pool(*ds);
    genome = harness::model_genome(pool.size());
    ctx.dataset = &*ds;
    ctx.split = split;
    ctx.teacher = &teacher->oracle;
    ctx.train = cfg.train;
    ctx.engine = cfg.fuzzy;
    ctx.budget_epochs = cfg.ga.budget_epochs;
    ctx.penalty = cfg.ga.penalty;
    fitness = [&](const std::vector<int> &g) { return harness::quick_fitness(g, pool, ctx); };
  }
  const auto r = ga::run(genome, cfg.ga.ga, cfg.ga.stop, fitness);

  json best{{"format", "fuzzkd-selection"},
            {"version", 1},
            {"seed", cfg.seed},
            {"fitness_function", cfg.ga.fitness},
            {"genes", r.best.genes},
            {"fitness", r.best.fitness ? json(*r.best.fitness) : json(nullptr)},
            {"generations", r.history.size()},
            {"evaluations", r.evaluations},
            {"stop_reason", stop_name(r.reason)}};
  if (!pool.empty()) {
    const auto &g = r.best.genes;
    best["student"] = pool.at(static_cast<std::size_t>(g.at(0)));
    best["learning_rate"] = harness::kLearningRateChoices.at(static_cast<std::size_t>(g.at(1)));
    best["batch_size"] = harness::kBatchChoices.at(static_cast<std::size_t>(g.at(2)));
  }
  json gens = json::array();
  for (const auto &h : r.history)
    gens.push_back({{"generation", h.generation}, {"best", h.best}, {"mean", h.mean}});
  write_json(out_dir / "best.json", best);
  write_json(out_dir / "ga_history.json",
             json{{"format", "fuzzkd-ga-history"}, {"version", 1}, {"generations", gens}});
}

metrics::MetricsReport evaluate(const config::ExperimentConfig &cfg,
                                const fs::path &checkpoint) {
  cfg.validate();
  const auto net = nn::network_from_checkpoint(nn::load_checkpoint(checkpoint));
  data::IndexSplit split;
  const auto ds = load_dataset(cfg, split);
  if (net.spec().input_dim != ds.features.cols() || net.spec().classes != ds.classes)
    throw_invalid("checkpoint does not match the configured dataset");
  const auto test = ds.subset(split.test);
  if (test.size() == 0)
    throw_invalid("test split is empty");
  const Matrix logits = net.forward(test.features);
  const Matrix probs = loss::softmax_rows(logits, 1.0);
  const auto pred = harness::predict(net, test.features);
  auto report = metrics::summarize(metrics::confusion(test.labels, pred, ds.classes));
  if (!ds.class_names.empty())
    report.class_names = ds.class_names;
  metrics::attach_curves(report, probs.data(), test.labels);
  return report;
}

metrics::MetricsReport evaluate_predictions(const fs::path &csv, std::size_t classes) {
  std::ifstream in(csv);
  if (!in)
    throw_io("cannot read " + csv.string());
  std::vector<int> truth, pred;
  std::vector<std::vector<double>> scores;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');)
      cells.push_back(cell);
    if (cells.size() < 2)
      throw_format(csv.string() + ":" + std::to_string(lineno) + ": expected true,predicted");
    try {
      std::size_t used = 0;
      const int t = std::stoi(cells[0], &used);
      const int p = std::stoi(cells[1]);
      truth.push_back(t);
      pred.push_back(p);
      std::vector<double> row;
      for (std::size_t i = 2; i < cells.size(); ++i)
        row.push_back(std::stod(cells[i]));
      scores.push_back(std::move(row));
    } catch (const std::logic_error &) {
      if (lineno == 1 && truth.empty())
        continue; // header
      throw_format(csv.string() + ":" + std::to_string(lineno) + ": not numeric");
    }
  }
  if (truth.empty())
    throw_invalid("no predictions in " + csv.string());
  if (classes == 0) {
    const int mx = std::max(*std::max_element(truth.begin(), truth.end()),
                            *std::max_element(pred.begin(), pred.end()));
    classes = static_cast<std::size_t>(std::max(mx, 0)) + 1;
  }
  auto report = metrics::summarize(metrics::confusion(truth, pred, classes));
  if (!scores.front().empty()) {
    std::vector<double> flat;
    for (const auto &row : scores) {
      if (row.size() != classes)
        throw_format("score columns must match the class count in every row");
      flat.insert(flat.end(), row.begin(), row.end());
    }
    metrics::attach_curves(report, flat, truth);
  }
  return report;
}

void write_report(const fs::path &path, const metrics::MetricsReport &r) {
  write_json(path, json(r));
}

std::string render_report(const fs::path &report_json) {
  std::ifstream in(report_json);
  if (!in)
    throw_io("cannot read " + report_json.string());
  const json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded())
    throw_format(report_json.string() + " is not valid JSON");
  try {
    return metrics::render(doc.get<metrics::MetricsReport>());
  } catch (const json::exception &e) {
    throw_format(report_json.string() + ": " + e.what());
  }
}

data::DatasetManifest split(const config::ExperimentConfig &cfg,
                            const fs::path &manifest_out) {
  cfg.validate();
  if (cfg.data.root.empty())
    throw_invalid("data.root is required for split");
  config::ExperimentConfig local = cfg;
  local.data.manifest.clear();
  const auto m = manifest_for(local);
  data::save_manifest(manifest_out, m);
  return m;
}

} // namespace fuzzkd::commands
