// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gpa/corpus.hpp"
#include "gpa/metrics.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Workspace {
 public:
  explicit Workspace(const std::string& name) : root_(fs::temp_directory_path() / ("gpa_cli_" + name)) {
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  ~Workspace() { fs::remove_all(root_); }
  fs::path operator/(const std::string& p) const { return root_ / p; }

  Run run(const std::string& args) const {
    const auto log = root_ / "stdout.txt";
    const std::string cmd =
        std::string(GPA_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
  }

  // A small corpus and fast training settings shared by the end-to-end cases.
  std::string synth(int n = 36, int K = 5, const std::string& rule = "scene_pair") const {
    const auto path = (root_ / "corpus.jsonl").string();
    REQUIRE(run("synth --n " + std::to_string(n) + " --K " + std::to_string(K) + " --rule " +
                rule + " --seed 5 --out " + path)
                .code == 0);
    return path;
  }

 private:
  fs::path root_;
};

const std::string kFast = " --K 5 --L 2 --h1 16 --epochs 20 --lr 1e-3 --batch_size 16 ";

std::size_t line_count(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("synth and validate") {
  Workspace ws("synth");
  const auto corpus = ws.synth(20, 6);
  const auto loaded = gpa::load_corpus(corpus, 6);
  CHECK(loaded.size() == 20);
  const auto r = ws.run("validate --K 6 --corpus " + corpus);
  CHECK(r.code == 0);
  CHECK(r.out.find("ok: 20 records") != std::string::npos);
  CHECK(ws.run("validate --K 5 --corpus " + corpus).code == 3);  // category out of range
}

TEST_CASE("train writes checkpoints, priors, log and report") {
  Workspace ws("train");
  const auto corpus = ws.synth();
  const auto out = ws / "run";
  const auto r = ws.run("train --corpus " + corpus + kFast + "--output_dir " + out.string());
  REQUIRE(r.code == 0);
  for (int f = 0; f < 3; ++f) {
    CHECK(fs::exists(out / ("fold" + std::to_string(f) + "_best.json")));
    CHECK(fs::exists(out / ("fold" + std::to_string(f) + "_prior.json")));
  }
  for (const char* name : {"train_log.csv", "splits.json", "config.json", "report.json",
                           "report.csv", "report.txt"}) {
    CHECK(fs::exists(out / name));
  }
  CHECK(line_count(slurp(out / "train_log.csv")) == 1 + 3 * 20);

  SUBCASE("identical runs write identical logs") {
    const auto again = ws / "again";
    REQUIRE(ws.run("train --corpus " + corpus + kFast + "--output_dir " + again.string()).code == 0);
    CHECK(slurp(out / "train_log.csv") == slurp(again / "train_log.csv"));
    CHECK(slurp(out / "fold0_best.json") == slurp(again / "fold0_best.json"));
    CHECK(slurp(out / "report.csv") == slurp(again / "report.csv"));
  }
  SUBCASE("an existing output directory is protected") {
    CHECK(ws.run("train --corpus " + corpus + kFast + "--output_dir " + out.string()).code == 2);
    CHECK(ws.run("train --corpus " + corpus + kFast + "--overwrite true --output_dir " +
                 out.string())
              .code == 0);
  }
  SUBCASE("a checkpoint evaluates with its prior") {
    const auto eval = ws / "eval";
    const auto e = ws.run("evaluate --K 5 --corpus " + corpus + " --checkpoint " +
                          (out / "fold0_best.json").string() + " --prior " +
                          (out / "fold0_prior.json").string() + " --output_dir " + eval.string());
    CHECK(e.code == 0);
    CHECK(fs::exists(eval / "eval_report.json"));
    CHECK(ws.run("evaluate --K 6 --corpus " + ws.synth(10, 6) + " --checkpoint " +
                 (out / "fold0_best.json").string() + " --prior " +
                 (out / "fold0_prior.json").string() + " --output_dir " +
                 (ws / "eval6").string())
              .code == 2);
  }
}

TEST_CASE("input errors leave no partial outputs") {
  Workspace ws("errors");
  const auto out = ws / "run";
  CHECK(ws.run("train --corpus " + (ws / "missing.jsonl").string() + kFast + "--output_dir " +
               out.string())
            .code == 2);
  CHECK_FALSE(fs::exists(out));

  const auto bad = ws / "bad.jsonl";
  {
    std::ofstream f(bad);
    f << R"({"id":"a","label":0,"scene_logits":[0.1,0.2],"objects":{"1":1}})" << "\n";
    f << R"({"id":"b","label":7,"scene_logits":[0.1,0.2],"objects":{"1":1}})" << "\n";
  }
  const auto r = ws.run("train --corpus " + bad.string() + kFast + "--output_dir " + out.string());
  CHECK(r.code == 3);
  CHECK(r.out.find("line 2") != std::string::npos);
  CHECK_FALSE(fs::exists(out));

  CHECK(ws.run("train --corpus " + bad.string() + " --no_such_key 1").code == 2);
  CHECK(ws.run("train --corpus " + bad.string() + " --features none").code == 2);
  CHECK(ws.run("").code == 2);
}

TEST_CASE("splits and prior subcommands") {
  Workspace ws("splits");
  const auto corpus = ws.synth(30, 5);
  REQUIRE(ws.run("splits --K 5 --corpus " + corpus + " --test_fraction 0.2 --output_dir " +
                 (ws / "s").string())
              .code == 0);
  const auto plan = gpa::split_plan_from_json(nlohmann::json::parse(slurp(ws / "s/splits.json")));
  CHECK(plan.folds.size() == 3);
  CHECK(plan.test_ids.size() == 6);

  REQUIRE(ws.run("prior --K 5 --corpus " + corpus + " --prior_kind class --output_dir " +
                 (ws / "p").string())
              .code == 0);
  CHECK(fs::exists(ws / "p/prior_class_freq.json"));
}

TEST_CASE("ablation tables") {
  Workspace ws("ablate");
  const auto corpus = ws.synth(36, 5);
  const std::string args = "--corpus " + corpus + kFast.substr(0, kFast.find("--epochs")) +
                           " --epochs 60 --lr 1e-3 --batch_size 16 ";
  REQUIRE(ws.run("ablate-prior " + args + "--output_dir " + (ws / "a").string()).code == 0);
  const auto csv = slurp(ws / "a/ablate_prior.csv");
  CHECK(line_count(csv) == 1 + 6);
  CHECK(csv.find("\nrandom generator,") != std::string::npos);
  CHECK(csv.find("\nco-occurrence,") != std::string::npos);

  REQUIRE(ws.run("ablate-features " + args + "--output_dir " + (ws / "f").string()).code == 0);
  const auto fcsv = slurp(ws / "f/ablate_features.csv");
  CHECK(line_count(fcsv) == 1 + 3);
  CHECK(fcsv.find("\nf_s+f_c,") != std::string::npos);
}

TEST_CASE("gradcheck reports the worst tensor") {
  Workspace ws("gradcheck");
  const auto ok = ws.run("gradcheck");
  CHECK(ok.code == 0);
  CHECK(ok.out.find("PASS") != std::string::npos);
  const auto bad = ws.run("gradcheck --corrupt_gradient true");
  CHECK(bad.code == 4);
  CHECK(bad.out.find("FAIL") != std::string::npos);
  CHECK(bad.out.find("head.g2.bias") != std::string::npos);
}
