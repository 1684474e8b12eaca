// SPDX-License-Identifier: Apache-2.0
// Command-line front end. Talks to the library only through the C API.
#include "fuzzkd/fuzzkd.h"

#include <CLI11.hpp>

#include <cstdio>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2 };

void print_errors(const std::string &text) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    std::fprintf(stderr, "error: %s\n", line.c_str());
}

int fail(fuzzkd_status st) {
  print_errors(fuzzkd_last_error());
  return st == FUZZKD_ERR_INVALID_ARGUMENT ? kValidation : kRuntime;
}

struct ConfigDeleter {
  void operator()(fuzzkd_config *c) const { fuzzkd_config_destroy(c); }
};
using ConfigPtr = std::unique_ptr<fuzzkd_config, ConfigDeleter>;

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::vector<std::string> flags; // typed flags, applied last so they win
  std::string log_level;
  std::size_t jobs = 0;
};

// Numeric flag forwarded verbatim as a config override.
void flag(CLI::App *app, Common &c, const std::string &name, const std::string &key,
          const std::string &help) {
  app->add_option_function<std::string>(
         name, [&c, key](const std::string &v) { c.flags.push_back(key + "=" + v); }, help)
      ->check(CLI::Number);
}

void quoted_flag(CLI::App *app, Common &c, const std::string &name, const std::string &key,
                 const std::string &help) {
  app->add_option_function<std::string>(
      name,
      [&c, key](const std::string &v) {
        // as a JSON string literal so values like "123" stay strings
        std::string q = "\"";
        for (char ch : v) {
          if (ch == '"' || ch == '\\')
            q += '\\';
          q += ch;
        }
        c.flags.push_back(key + "=" + q + "\"");
      },
      help);
}

int load_config(const Common &c, ConfigPtr &out) {
  std::vector<std::string> all = c.sets;
  all.insert(all.end(), c.flags.begin(), c.flags.end());
  std::vector<const char *> ptrs;
  for (const auto &s : all)
    ptrs.push_back(s.c_str());
  fuzzkd_config *cfg = nullptr;
  const auto st = fuzzkd_config_load(c.config.empty() ? nullptr : c.config.c_str(),
                                     ptrs.data(), ptrs.size(), &cfg);
  if (st != FUZZKD_OK)
    return fail(st);
  out.reset(cfg);
  return kOk;
}

int batch_result(fuzzkd_status st, std::size_t written, char *failures) {
  if (failures) {
    print_errors(failures);
    fuzzkd_string_free(failures);
  }
  if (st != FUZZKD_OK)
    return fail(st);
  std::printf("wrote %zu image(s)\n", written);
  return kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"fuzzy-weighted knowledge distillation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fuzzkd_version());
  Common c;
  app.add_option("-c,--config", c.config, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--set", c.sets, "override a config value: dotted.key=value")
      ->allow_extra_args(false);
  flag(&app, c, "--seed", "seed", "experiment seed");
  app.add_option("--log-level", c.log_level, "trace|debug|info|warn|error|off");
  app.add_option("-j,--jobs", c.jobs, "worker threads for image commands")
      ->check(CLI::PositiveNumber);

  auto *enhance = app.add_subcommand("enhance", "gamma (and histogram) enhancement");
  std::string in_dir, out_dir;
  enhance->add_option("in_dir", in_dir)->required();
  enhance->add_option("out_dir", out_dir)->required();
  flag(enhance, c, "--gamma", "imaging.gamma", "power-law exponent");
  flag(enhance, c, "--scale", "imaging.scale", "power-law scale");
  enhance->add_flag_callback("--histeq", [&c] { c.flags.push_back("imaging.histeq=true"); },
                             "also write histogram-equalized images");

  auto *fuse = app.add_subcommand("fuse", "wavelet mean fusion of two image trees");
  std::string pix1, pix2;
  fuse->add_option("pix1_dir", pix1)->required();
  fuse->add_option("pix2_dir", pix2)->required();
  fuse->add_option("out_dir", out_dir)->required();
  flag(fuse, c, "--levels", "imaging.levels", "decomposition levels");
  flag(fuse, c, "--side", "imaging.output_side", "output width and height");

  auto *train = app.add_subcommand("train", "distill a student network");
  train->add_option("-o,--out", out_dir, "output directory")->required();
  flag(train, c, "--epochs", "train.epochs", "training epochs");
  flag(train, c, "--lr", "train.learning_rate", "learning rate");
  flag(train, c, "--batch", "train.batch_size", "batch size");
  quoted_flag(train, c, "--mode", "loss.mode", "static|fuzzy_mamdani|fuzzy_weighted_sum");

  auto *select = app.add_subcommand("select", "genetic student selection");
  select->add_option("-o,--out", out_dir, "output directory")->required();
  quoted_flag(select, c, "--fitness", "ga.fitness", "onemax|sphere|distill");
  flag(select, c, "--generations", "ga.max_generations", "generation limit");

  auto *evaluate = app.add_subcommand("evaluate", "metrics report for a model or predictions");
  std::string checkpoint, predictions, report_out;
  std::size_t classes = 0;
  auto *ck = evaluate->add_option("--checkpoint", checkpoint, "student checkpoint")
                 ->check(CLI::ExistingFile);
  auto *pr = evaluate->add_option("--predictions", predictions,
                                  "CSV of true,predicted[,scores...]")
                 ->check(CLI::ExistingFile);
  ck->excludes(pr);
  evaluate->add_option("--classes", classes, "class count for --predictions");
  evaluate->add_option("-o,--out", report_out, "report JSON path")->required();

  auto *report = app.add_subcommand("report", "render a report JSON as text");
  std::string report_in;
  report->add_option("report", report_in)->required()->check(CLI::ExistingFile);

  auto *split = app.add_subcommand("split", "split an image tree into a manifest");
  std::string manifest_out;
  quoted_flag(split, c, "--root", "data.root", "class-per-directory image tree");
  split->add_option("-o,--out", manifest_out, "manifest path")->required();
  split->add_flag_callback("--balance", [&c] { c.flags.push_back("data.balance=true"); },
                           "oversample train and valid to equal class counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    print_errors(e.what());
    return kValidation;
  }

  if (!c.log_level.empty()) {
    if (const auto st = fuzzkd_set_log_level(c.log_level.c_str()); st != FUZZKD_OK)
      return fail(st);
  }
  ConfigPtr cfg;
  if (!report->parsed()) {
    if (const int rc = load_config(c, cfg); rc != kOk)
      return rc;
  }
  const std::size_t jobs = c.jobs ? c.jobs : fuzzkd_default_jobs();

  if (enhance->parsed()) {
    std::size_t written = 0;
    char *failures = nullptr;
    const auto st = fuzzkd_cmd_enhance(in_dir.c_str(), out_dir.c_str(), cfg.get(), jobs,
                                       &written, &failures);
    return batch_result(st, written, failures);
  }
  if (fuse->parsed()) {
    std::size_t written = 0;
    char *failures = nullptr;
    const auto st = fuzzkd_cmd_fuse(pix1.c_str(), pix2.c_str(), out_dir.c_str(), cfg.get(),
                                    jobs, &written, &failures);
    const int rc = batch_result(st, written, failures);
    // a partially failed fusion is still a failure
    return rc == kOk && failures ? kRuntime : rc;
  }
  if (train->parsed()) {
    if (const auto st = fuzzkd_cmd_train(cfg.get(), out_dir.c_str()); st != FUZZKD_OK)
      return fail(st);
    return kOk;
  }
  if (select->parsed()) {
    if (const auto st = fuzzkd_cmd_select(cfg.get(), out_dir.c_str()); st != FUZZKD_OK)
      return fail(st);
    return kOk;
  }
  if (evaluate->parsed()) {
    fuzzkd_status st;
    if (!checkpoint.empty())
      st = fuzzkd_cmd_evaluate(cfg.get(), checkpoint.c_str(), report_out.c_str());
    else if (!predictions.empty())
      st = fuzzkd_cmd_evaluate_predictions(predictions.c_str(), classes, report_out.c_str());
    else {
      print_errors("evaluate needs --checkpoint or --predictions");
      return kValidation;
    }
    return st == FUZZKD_OK ? kOk : fail(st);
  }
  if (report->parsed()) {
    char *text = nullptr;
    if (const auto st = fuzzkd_cmd_report(report_in.c_str(), &text); st != FUZZKD_OK)
      return fail(st);
    std::fputs(text, stdout);
    fuzzkd_string_free(text);
    return kOk;
  }
  if (split->parsed()) {
    if (const auto st = fuzzkd_cmd_split(cfg.get(), manifest_out.c_str()); st != FUZZKD_OK)
      return fail(st);
    return kOk;
  }
  return kValidation;
}
