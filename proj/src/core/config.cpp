// SPDX-License-Identifier: Apache-2.0
#include "fuzzkd/config.hpp"

#include "fuzzkd/error.hpp"

#include <fstream>
#include <functional>

namespace fuzzkd::config {

using nlohmann::json;

namespace {

json model_json(const ModelSection &m) {
  return {{"kind", nn::to_string(m.kind)},
          {"hidden", m.hidden},
          {"depth_multiplier", m.depth_multiplier},
          {"pointwise_channels", m.pointwise_channels}};
}

json rules_json(const fuzzy::RuleTable &t) {
  json out = json::object();
  for (auto c : {fuzzy::Level::low, fuzzy::Level::medium, fuzzy::Level::high}) {
    json row = json::array();
    for (auto u : {fuzzy::Level::low, fuzzy::Level::medium, fuzzy::Level::high})
      row.push_back(fuzzy::to_string(t.at(c, u)));
    out[std::string(fuzzy::to_string(c))] = row;
  }
  return out;
}

void deep_merge(json &base, const json &patch) {
  if (!base.is_object() || !patch.is_object()) {
    base = patch;
    return;
  }
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (base.contains(it.key()))
      deep_merge(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

void unknown_keys(const json &doc, const json &ref, const std::string &prefix,
                  std::vector<std::string> &problems) {
  if (!doc.is_object() || !ref.is_object())
    return;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!ref.contains(it.key()))
      problems.push_back("unknown key '" + key + "'");
    else
      unknown_keys(it.value(), ref.at(it.key()), key, problems);
  }
}

// Reads doc[path] into `out`, recording a problem instead of throwing.
class Reader {
public:
  Reader(const json &doc, std::vector<std::string> &problems)
      : doc_(doc), problems_(problems) {}

  template <class T> void operator()(const std::string &dotted, T &out) {
    try {
      out = node(dotted).get<T>();
    } catch (const json::exception &) {
      problems_.push_back("'" + dotted + "' has the wrong type");
    } catch (const std::exception &e) {
      problems_.push_back("'" + dotted + "': " + e.what());
    }
  }

  // For enum-like strings parsed by `parse`.
  template <class T, class F>
  void parse(const std::string &dotted, T &out, F &&fn) {
    std::string s;
    try {
      s = node(dotted).get<std::string>();
    } catch (const std::exception &) {
      problems_.push_back("'" + dotted + "' must be a string");
      return;
    }
    try {
      out = fn(s);
    } catch (const std::exception &e) {
      problems_.push_back("'" + dotted + "': " + e.what());
    }
  }

  const json &node(const std::string &dotted) const {
    std::string ptr = "/" + dotted;
    for (auto &ch : ptr)
      if (ch == '.')
        ch = '/';
    return doc_.at(json::json_pointer(ptr));
  }

private:
  const json &doc_;
  std::vector<std::string> &problems_;
};

void read_model(Reader &rd, const std::string &prefix, ModelSection &m) {
  rd.parse(prefix + ".kind", m.kind, [](const std::string &s) {
    return nn::net_kind_from_string(s);
  });
  rd(prefix + ".hidden", m.hidden);
  rd(prefix + ".depth_multiplier", m.depth_multiplier);
  rd(prefix + ".pointwise_channels", m.pointwise_channels);
}

template <class Fn>
void check(std::vector<std::string> &problems, const std::string &section, Fn &&fn) {
  try {
    fn();
  } catch (const std::exception &e) {
    problems.push_back(section + ": " + e.what());
  }
}

void model_problems(const ModelSection &m, const std::string &section,
                    std::vector<std::string> &problems) {
  for (std::size_t h : m.hidden)
    if (h == 0)
      problems.push_back(section + ": hidden widths must be positive");
  if (m.depth_multiplier == 0 || m.pointwise_channels == 0)
    problems.push_back(section + ": convolution sizes must be positive");
}

} // namespace

json to_json(const ExperimentConfig &c) {
  const auto &f = c.fuzzy;
  return json{
      {"seed", c.seed},
      {"fuzzy",
       {{"method", fuzzy::to_string(f.method)},
        {"uncertainty_mode", fuzzy::to_string(f.uncertainty_mode)},
        {"normalize", f.normalize},
        {"level_weights",
         {{"low", f.level_weights.w_low},
          {"medium", f.level_weights.w_medium},
          {"high", f.level_weights.w_high}}},
        {"rules", rules_json(f.rules)}}},
      {"loss",
       {{"mode", loss::to_string(c.loss.weight_mode)},
        {"omega", c.loss.fixed_weight},
        {"temperature", c.loss.temperature},
        {"v", c.loss.balance_v}}},
      {"ga",
       {{"population", c.ga.ga.population},
        {"crossover_rate", c.ga.ga.crossover_rate},
        {"mutation_rate", c.ga.ga.mutation_rate},
        {"elitism", c.ga.ga.elitism},
        {"threads", c.ga.ga.threads},
        {"max_generations", c.ga.stop.max_generations},
        {"delta_f_min", c.ga.stop.delta_f_min},
        {"fitness_threshold", std::isfinite(c.ga.stop.fitness_threshold)
                                  ? json(c.ga.stop.fitness_threshold)
                                  : json(nullptr)},
        {"fitness", c.ga.fitness},
        {"genome_length", c.ga.genome_length},
        {"sphere_bound", c.ga.sphere_bound},
        {"budget_epochs", c.ga.budget_epochs},
        {"penalty", c.ga.penalty}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"learning_rate", c.train.learning_rate},
        {"batch_size", c.train.batch_size},
        {"optimizer", nn::to_string(c.train.optimizer)}}},
      {"student", model_json(c.student)},
      {"teacher",
       {{"kind", c.teacher.kind},
        {"model", model_json(c.teacher.model)},
        {"epochs", c.teacher.epochs},
        {"learning_rate", c.teacher.learning_rate},
        {"confidence", c.teacher.confidence}}},
      {"imaging",
       {{"gamma", c.imaging.gamma.gamma},
        {"scale", c.imaging.gamma.scale},
        {"histeq", c.imaging.histeq},
        {"levels", c.imaging.levels},
        {"output_side", c.imaging.output_side}}},
      {"data",
       {{"source", c.data.source},
        {"root", c.data.root},
        {"manifest", c.data.manifest},
        {"ratios",
         {{"train", c.data.ratios.train},
          {"valid", c.data.ratios.valid},
          {"test", c.data.ratios.test}}},
        {"blobs",
         {{"samples", c.data.blobs.samples},
          {"classes", c.data.blobs.classes},
          {"dims", c.data.blobs.dims},
          {"separation", c.data.blobs.separation},
          {"stddev", c.data.blobs.stddev}}},
        {"image_side", c.data.image_side},
        {"balance", c.data.balance}}}};
}

json default_json() { return to_json(ExperimentConfig{}); }

ExperimentConfig from_json(const json &input, std::vector<std::string> &problems) {
  json doc = default_json();
  if (!input.is_object()) {
    problems.push_back("config document must be an object");
    return {};
  }
  unknown_keys(input, doc, "", problems);
  deep_merge(doc, input);

  ExperimentConfig c;
  Reader rd(doc, problems);
  rd("seed", c.seed);

  rd.parse("fuzzy.method", c.fuzzy.method,
           [](const std::string &s) { return fuzzy::method_from_string(s); });
  rd.parse("fuzzy.uncertainty_mode", c.fuzzy.uncertainty_mode, [](const std::string &s) {
    return fuzzy::uncertainty_mode_from_string(s);
  });
  rd("fuzzy.normalize", c.fuzzy.normalize);
  rd("fuzzy.level_weights.low", c.fuzzy.level_weights.w_low);
  rd("fuzzy.level_weights.medium", c.fuzzy.level_weights.w_medium);
  rd("fuzzy.level_weights.high", c.fuzzy.level_weights.w_high);
  for (auto cl : {fuzzy::Level::low, fuzzy::Level::medium, fuzzy::Level::high}) {
    const std::string key = "fuzzy.rules." + std::string(fuzzy::to_string(cl));
    std::vector<std::string> row;
    rd(key, row);
    if (row.size() != 3) {
      problems.push_back("'" + key + "' must list 3 levels (uncertainty low, medium, high)");
      continue;
    }
    const fuzzy::Level ul[3] = {fuzzy::Level::low, fuzzy::Level::medium, fuzzy::Level::high};
    for (std::size_t i = 0; i < 3; ++i) {
      try {
        c.fuzzy.rules.set(cl, ul[i], fuzzy::level_from_string(row[i]));
      } catch (const std::exception &e) {
        problems.push_back("'" + key + "': " + e.what());
      }
    }
  }

  rd.parse("loss.mode", c.loss.weight_mode,
           [](const std::string &s) { return loss::weight_mode_from_string(s); });
  rd("loss.omega", c.loss.fixed_weight);
  rd("loss.temperature", c.loss.temperature);
  rd("loss.v", c.loss.balance_v);

  rd("ga.population", c.ga.ga.population);
  rd("ga.crossover_rate", c.ga.ga.crossover_rate);
  rd("ga.mutation_rate", c.ga.ga.mutation_rate);
  rd("ga.elitism", c.ga.ga.elitism);
  rd("ga.threads", c.ga.ga.threads);
  rd("ga.max_generations", c.ga.stop.max_generations);
  rd("ga.delta_f_min", c.ga.stop.delta_f_min);
  if (rd.node("ga.fitness_threshold").is_null())
    c.ga.stop.fitness_threshold = std::numeric_limits<double>::infinity();
  else
    rd("ga.fitness_threshold", c.ga.stop.fitness_threshold);
  rd("ga.fitness", c.ga.fitness);
  rd("ga.genome_length", c.ga.genome_length);
  rd("ga.sphere_bound", c.ga.sphere_bound);
  rd("ga.budget_epochs", c.ga.budget_epochs);
  rd("ga.penalty", c.ga.penalty);

  rd("train.epochs", c.train.epochs);
  rd("train.learning_rate", c.train.learning_rate);
  rd("train.batch_size", c.train.batch_size);
  rd.parse("train.optimizer", c.train.optimizer,
           [](const std::string &s) { return nn::optimizer_from_string(s); });

  read_model(rd, "student", c.student);
  rd("teacher.kind", c.teacher.kind);
  read_model(rd, "teacher.model", c.teacher.model);
  rd("teacher.epochs", c.teacher.epochs);
  rd("teacher.learning_rate", c.teacher.learning_rate);
  rd("teacher.confidence", c.teacher.confidence);

  rd("imaging.gamma", c.imaging.gamma.gamma);
  rd("imaging.scale", c.imaging.gamma.scale);
  rd("imaging.histeq", c.imaging.histeq);
  rd("imaging.levels", c.imaging.levels);
  rd("imaging.output_side", c.imaging.output_side);

  rd("data.source", c.data.source);
  rd("data.root", c.data.root);
  rd("data.manifest", c.data.manifest);
  rd("data.ratios.train", c.data.ratios.train);
  rd("data.ratios.valid", c.data.ratios.valid);
  rd("data.ratios.test", c.data.ratios.test);
  rd("data.blobs.samples", c.data.blobs.samples);
  rd("data.blobs.classes", c.data.blobs.classes);
  rd("data.blobs.dims", c.data.blobs.dims);
  rd("data.blobs.separation", c.data.blobs.separation);
  rd("data.blobs.stddev", c.data.blobs.stddev);
  rd("data.image_side", c.data.image_side);
  rd("data.balance", c.data.balance);

  // the seed feeds the component seeds through named sub-streams
  c.train.seed = substream_seed(c.seed, "train");
  c.ga.ga.seed = substream_seed(c.seed, "ga");
  c.train.distill = c.loss;
  return c;
}

std::vector<std::string> ExperimentConfig::problems() const {
  std::vector<std::string> p;
  check(p, "fuzzy", [&] { fuzzy.level_weights.validate(); });
  check(p, "loss", [&] { loss.validate(); });
  check(p, "ga", [&] { ga.ga.validate(); });
  check(p, "ga", [&] { ga.stop.validate(); });
  if (ga.fitness != "onemax" && ga.fitness != "sphere" && ga.fitness != "distill")
    p.push_back("ga: fitness must be onemax, sphere or distill");
  if (ga.genome_length == 0)
    p.push_back("ga: genome_length must be positive");
  if (ga.sphere_bound <= 0)
    p.push_back("ga: sphere_bound must be positive");
  if (!(ga.penalty >= 0.0))
    p.push_back("ga: penalty must be non-negative");
  check(p, "train", [&] { train.validate(); });
  model_problems(student, "student", p);
  if (teacher.kind != "network" && teacher.kind != "synthetic")
    p.push_back("teacher: kind must be network or synthetic");
  model_problems(teacher.model, "teacher", p);
  if (!(teacher.learning_rate > 0.0))
    p.push_back("teacher: learning_rate must be positive");
  if (!(teacher.confidence > 0.0 && teacher.confidence <= 1.0))
    p.push_back("teacher: confidence must lie in (0, 1]");
  if (!(imaging.gamma.gamma > 0.0))
    p.push_back("imaging: gamma must be positive");
  if (!(imaging.gamma.scale > 0.0))
    p.push_back("imaging: scale must be positive");
  if (imaging.levels < 1 || imaging.levels > 16)
    p.push_back("imaging: levels must lie in [1, 16]");
  else if (imaging.output_side < (std::size_t{1} << imaging.levels))
    p.push_back("imaging: output_side is too small for the requested levels");
  if (data.source != "blobs" && data.source != "images")
    p.push_back("data: source must be blobs or images");
  if (data.source == "images" && data.root.empty() && data.manifest.empty())
    p.push_back("data: images source needs data.root or data.manifest");
  check(p, "data", [&] { data.ratios.validate(); });
  if (data.blobs.classes < 2)
    p.push_back("data: blobs.classes must be at least 2");
  if (data.blobs.samples < data.blobs.classes)
    p.push_back("data: blobs.samples must be at least blobs.classes");
  if (data.blobs.dims == 0)
    p.push_back("data: blobs.dims must be positive");
  if (!(data.blobs.stddev > 0.0))
    p.push_back("data: blobs.stddev must be positive");
  if (!(data.blobs.separation > 0.0))
    p.push_back("data: blobs.separation must be positive");
  if (data.image_side < 3)
    p.push_back("data: image_side must be at least 3");
  if (student.kind == nn::NetKind::micro_cnn && data.source != "images")
    p.push_back("student: micro_cnn needs an image dataset");
  return p;
}

void ExperimentConfig::validate() const {
  const auto p = problems();
  if (p.empty())
    return;
  std::string msg;
  for (const auto &s : p)
    msg += (msg.empty() ? "" : "\n") + s;
  throw_invalid(msg);
}

void apply_override(json &doc, const std::string &key, const std::string &value) {
  if (key.empty())
    throw_invalid("override key is empty");
  json v = json::parse(value, nullptr, false);
  if (v.is_discarded())
    v = value;
  json *node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty())
      throw_invalid("malformed override key '" + key + "'");
    if (!node->is_object())
      *node = json::object();
    node = &(*node)[part];
    if (dot == std::string::npos)
      break;
    start = dot + 1;
  }
  *node = v;
}

ExperimentConfig load(const std::filesystem::path &file,
                      const std::vector<std::string> &overrides) {
  std::vector<std::string> problems;
  json doc = json::object();
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in)
      throw_invalid("cannot read config file " + file.string());
    doc = json::parse(in, nullptr, false);
    if (doc.is_discarded())
      throw_invalid("config file " + file.string() + " is not valid JSON");
  }
  for (const auto &ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) {
      problems.push_back("override '" + ov + "' is not key=value");
      continue;
    }
    apply_override(doc, ov.substr(0, eq), ov.substr(eq + 1));
  }
  ExperimentConfig cfg = from_json(doc, problems);
  for (auto &p : cfg.problems())
    problems.push_back(std::move(p));
  if (!problems.empty()) {
    std::string msg;
    for (const auto &s : problems)
      msg += (msg.empty() ? "" : "\n") + s;
    throw_invalid(msg);
  }
  return cfg;
}

nn::NetworkSpec make_spec(const ModelSection &m, const data::Dataset &d) {
  nn::NetworkSpec s;
  s.kind = m.kind;
  s.input_dim = d.features.cols();
  s.classes = d.classes;
  s.hidden = m.hidden;
  s.depth_multiplier = m.depth_multiplier;
  s.pointwise_channels = m.pointwise_channels;
  if (m.kind == nn::NetKind::micro_cnn) {
    s.image_width = d.image_width;
    s.image_height = d.image_height;
    s.image_channels = d.image_channels ? d.image_channels : 1;
  }
  s.validate();
  return s;
}

} // namespace fuzzkd::config
