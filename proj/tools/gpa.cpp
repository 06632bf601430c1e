// SPDX-License-Identifier: Apache-2.0
// gpa: command-line driver for corpus handling, priors, training, evaluation,
// ablations and gradient checking.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpa/config.hpp"
#include "gpa/errors.hpp"
#include "gpa/experiments.hpp"
#include "gpa/gradcheck.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw gpa::ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

gpa::Corpus load(const gpa::RunConfig& c) {
  if (c.corpus_path.empty()) throw gpa::ConfigError("no corpus given (use --corpus)");
  return gpa::load_corpus(c.corpus_path, c.train.shape.K, c.max_objects);
}

/// Creates output_dir. Refuses to reuse a non-empty directory unless
/// overwrite is set.
fs::path prepare_output(const gpa::RunConfig& c) {
  const fs::path dir = c.output_dir;
  if (fs::exists(dir) && !fs::is_empty(dir) && !c.overwrite) {
    throw gpa::ConfigError("output_dir '" + dir.string() +
                           "' is not empty (pass --overwrite true to replace its files)");
  }
  fs::create_directories(dir);
  return dir;
}

void emit_table(const fs::path& dir, const std::string& stem,
                const std::vector<gpa::ReportRow>& rows, const std::string& name_column) {
  const std::string table = gpa::rows_to_table(rows, name_column);
  write_text(dir / (stem + ".csv"), gpa::rows_to_csv(rows, name_column));
  write_text(dir / (stem + ".txt"), table);
  std::cout << table;
}

int cmd_synth(const gpa::RunConfig& c) {
  if (c.out.empty()) throw gpa::ConfigError("synth needs --out <file>");
  const auto corpus = gpa::synth_corpus(c.n, c.train.shape.K, c.rule, c.train.seed);
  gpa::write_corpus(c.out, corpus);
  const auto counts = corpus.class_counts();
  std::printf("wrote %zu records (%zu public, %zu private) to %s\n", corpus.size(), counts[0],
              counts[1], c.out.string().c_str());
  return kExitOk;
}

int cmd_validate(const gpa::RunConfig& c) {
  const auto corpus = load(c);
  const auto counts = corpus.class_counts();
  std::printf("ok: %zu records, K=%d, %zu public, %zu private\n", corpus.size(), corpus.K(),
              counts[0], counts[1]);
  return kExitOk;
}

int cmd_splits(const gpa::RunConfig& c) {
  const auto corpus = load(c);
  const auto plan =
      gpa::make_splits(corpus, c.train.n_folds, c.train.test_fraction, c.train.seed);
  const auto dir = prepare_output(c);
  write_text(dir / "splits.json", gpa::split_plan_to_json(plan).dump(1) + "\n");
  std::printf("wrote %s\n", (dir / "splits.json").string().c_str());
  return kExitOk;
}

int cmd_prior(const gpa::RunConfig& c) {
  const auto corpus = load(c);
  const auto prior = gpa::build_prior(c.train.prior_kind, corpus, c.train.seed);
  const auto dir = prepare_output(c);
  const auto path = dir / ("prior_" + gpa::to_string(prior.kind) + ".json");
  write_text(path, gpa::prior_to_json(prior).dump() + "\n");
  std::printf("wrote %s\n", path.string().c_str());
  return kExitOk;
}

int cmd_train(const gpa::RunConfig& c) {
  const auto corpus = load(c);
  const auto result = gpa::run_protocol(corpus, c.train);
  const auto dir = prepare_output(c);
  for (std::size_t f = 0; f < result.training.folds.size(); ++f) {
    const auto& fold = result.training.folds[f];
    gpa::save_checkpoint(dir / ("fold" + std::to_string(f) + "_best.json"), fold.fit.best,
                         gpa::init_seed(c.train.seed, static_cast<int>(f)));
    write_text(dir / ("fold" + std::to_string(f) + "_prior.json"),
               gpa::prior_to_json(fold.prior).dump() + "\n");
  }
  write_text(dir / "train_log.csv", gpa::log_to_csv(result.training.log));
  write_text(dir / "splits.json", gpa::split_plan_to_json(result.training.plan).dump(1) + "\n");
  write_text(dir / "config.json", gpa::run_config_to_json(c).dump(1) + "\n");

  json report = {{"cv", gpa::report_to_json(result.cv)},
                 {"train_accuracy", result.train_accuracy}};
  std::vector<gpa::ReportRow> rows{{"cross-validation", result.cv, result.train_accuracy}};
  if (result.test) {
    report["test"] = gpa::report_to_json(*result.test);
    rows.push_back({"test", *result.test, std::nullopt});
  }
  write_text(dir / "report.json", report.dump(1) + "\n");
  emit_table(dir, "report", rows, "split");
  return kExitOk;
}

int cmd_evaluate(const gpa::RunConfig& c) {
  const auto corpus = load(c);
  if (c.checkpoint.empty() || c.prior_path.empty()) {
    throw gpa::ConfigError("evaluate needs --checkpoint and --prior");
  }
  const auto params = gpa::load_checkpoint(c.checkpoint);
  std::ifstream in(c.prior_path);
  if (!in) throw gpa::ConfigError("cannot open prior '" + c.prior_path.string() + "'");
  json pj;
  try {
    pj = json::parse(in);
  } catch (const json::parse_error& e) {
    throw gpa::DataError(std::string("prior file: ") + e.what());
  }
  const auto prior = gpa::prior_from_json(pj);
  gpa::check_compatible(prior, params);
  if (prior.K != corpus.K()) {
    throw gpa::ConfigError("prior has K=" + std::to_string(prior.K) + " but corpus has K=" +
                           std::to_string(corpus.K()));
  }
  const auto pred = gpa::predict_labels(corpus.records(), prior, params, c.train.features);
  const auto report = gpa::evaluate(pred, gpa::labels_of(corpus.records()));
  const auto dir = prepare_output(c);
  write_text(dir / "eval_report.json", gpa::report_to_json(report).dump(1) + "\n");
  emit_table(dir, "eval_report", {{"evaluation", report, std::nullopt}}, "set");
  return kExitOk;
}

int cmd_ablate_prior(const gpa::RunConfig& c) {
  const auto corpus = load(c);
  const auto rows = gpa::ablate_prior(corpus, c.train, c.baseline_coin);
  emit_table(prepare_output(c), "ablate_prior", rows, "adjacency");
  return kExitOk;
}

int cmd_ablate_features(const gpa::RunConfig& c) {
  const auto corpus = load(c);
  const auto rows = gpa::ablate_features(corpus, c.train);
  emit_table(prepare_output(c), "ablate_features", rows, "features");
  return kExitOk;
}

int cmd_gradcheck(const gpa::RunConfig& c) {
  auto inst = gpa::small_gradcheck_instance(c.train.seed == 0 ? 1 : c.train.seed);
  gpa::GradCheckOptions opts;
  opts.corrupt = c.corrupt_gradient;
  const auto report = gpa::gradcheck(inst.batch, inst.prior, inst.params, {}, opts);
  std::cout << report.summary();
  return report.passed ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-based image privacy classifier"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    std::function<int(const gpa::RunConfig&)> run;
  };
  const std::vector<Command> commands{
      {"synth", "write a synthetic corpus", cmd_synth},
      {"validate", "load and validate a corpus", cmd_validate},
      {"splits", "write the stratified split plan", cmd_splits},
      {"prior", "build an adjacency prior", cmd_prior},
      {"train", "k-fold training with checkpoints, log and report", cmd_train},
      {"evaluate", "evaluate a checkpoint on a corpus", cmd_evaluate},
      {"ablate-prior", "compare adjacency priors", cmd_ablate_prior},
      {"ablate-features", "compare feature subsets", cmd_ablate_features},
      {"gradcheck", "finite-difference check of the analytic gradient", cmd_gradcheck},
  };

  std::string config_file;
  std::map<std::string, std::map<std::string, std::string>> overrides;
  std::map<std::string, CLI::App*> subs;
  for (const auto& cmd : commands) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("--config", config_file, "JSON config file");
    for (const auto& key : gpa::run_config_keys()) {
      sub->add_option_function<std::string>(
          "--" + key, [&overrides, name = std::string(cmd.name), key](const std::string& v) {
            overrides[name][key] = v;
          },
          "override config key '" + key + "'");
    }
    subs[cmd.name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  for (const auto& cmd : commands) {
    if (!subs[cmd.name]->parsed()) continue;
    try {
      const auto cfg = gpa::run_config_from_json(gpa::merge_config(config_file, overrides[cmd.name]));
      if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
      return cmd.run(cfg);
    } catch (const gpa::ConfigError& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return kExitConfig;
    } catch (const gpa::DataError& e) {
      std::fprintf(stderr, "data error: %s\n", e.what());
      return kExitData;
    } catch (const gpa::NumericError& e) {
      std::fprintf(stderr, "numeric error: %s\n", e.what());
      return kExitNumeric;
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return kExitConfig;
    }
  }
  return kExitConfig;
}
