#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  if (const char* env = std::getenv("CDSRNP_CLI")) return env;
  return "./tools/cdsrnp";  // build-tree fallback
}

int run(const std::string& args, const fs::path& capture) {
  const std::string cmd = cli_path() + " " + args + " > " + capture.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("usage errors exit with status 2") {
  const auto dir = fresh_dir("cdsrnp_cli_usage");
  CHECK(run("", dir / "noargs.txt") == 2);
  CHECK(run("frobnicate", dir / "badverb.txt") == 2);
  CHECK(run("train --frobnicate", dir / "badflag.txt") == 2);
}

TEST_CASE("runtime failures exit with status 1 and a diagnostic") {
  const auto dir = fresh_dir("cdsrnp_cli_runtime");
  CHECK(run("synth --set not_a_key=3 --out " + (dir / "r1").string(), dir / "badkey.txt") == 1);
  CHECK(slurp(dir / "badkey.txt").find("unknown config key") != std::string::npos);

  CHECK(run("train --out " + (dir / "r2").string(), dir / "noinput.txt") == 1);
  CHECK(slurp(dir / "noinput.txt").find("input") != std::string::npos);
}

TEST_CASE("audit passes on the default tiny configuration") {
  const auto dir = fresh_dir("cdsrnp_cli_audit");
  CHECK(run("audit --seed 1 --out " + (dir / "run").string(), dir / "audit.txt") == 0);
  const auto text = slurp(dir / "audit.txt");
  CHECK(text.find("max relative error") != std::string::npos);
  CHECK(text.find("gradient audit PASSED") != std::string::npos);
  CHECK(fs::exists(dir / "run" / "audit.txt"));
  CHECK(fs::exists(dir / "run" / "resolved.cfg"));
}

TEST_CASE("synth, prepare, train, and eval chain into a metrics report") {
  const auto dir = fresh_dir("cdsrnp_cli_pipeline");
  const std::string small =
      " --set users=220 --set items_a=60 --set items_b=60 --set min_len=10 --set max_len=14"
      " --set embedding_dim=8 --set seq_len=8 --set support_size=4 --set query_size=8"
      " --set epochs=1 --set episodes_per_epoch=4 --set n_negatives_val=10"
      " --set val_max_users=6 --set n_negatives_test=25 --set eval_seeds=2"
      " --set k_u=0.25 --seed 11";

  const auto synth_dir = dir / "synth";
  REQUIRE(run("synth --out " + synth_dir.string() + small, dir / "synth.log") == 0);
  const auto log_file = synth_dir / "interactions.tsv";
  REQUIRE(fs::exists(log_file));
  CHECK(fs::exists(synth_dir / "resolved.cfg"));

  const std::string with_input = small + " --set input=" + log_file.string();
  const auto prep_dir = dir / "prep";
  REQUIRE(run("prepare --out " + prep_dir.string() + with_input, dir / "prepare.log") == 0);
  const auto manifest = slurp(prep_dir / "split_manifest.tsv");
  CHECK(manifest.find("\ttrain") != std::string::npos);
  CHECK(manifest.find("\tvalidation") != std::string::npos);
  CHECK(manifest.find("\ttest") != std::string::npos);
  {
    std::istringstream lines(manifest);
    std::string line;
    while (std::getline(lines, line)) {
      CHECK(std::count(line.begin(), line.end(), '\t') == 3);
    }
  }

  const auto train_dir = dir / "train";
  REQUIRE(run("train --out " + train_dir.string() + with_input, dir / "train.log") == 0);
  REQUIRE(fs::exists(train_dir / "final.ckpt"));
  CHECK(fs::exists(train_dir / "best.ckpt"));
  CHECK(fs::exists(train_dir / "metrics.log"));
  CHECK(slurp(train_dir / "metrics.log").find("\"loss_total\":") != std::string::npos);

  const auto eval_dir = dir / "eval";
  REQUIRE(run("eval --out " + eval_dir.string() + with_input +
                  " --set checkpoint=" + (train_dir / "final.ckpt").string(),
              dir / "eval.log") == 0);
  const auto report = slurp(eval_dir / "report.txt");
  CHECK(report.find("metric=ndcg10") != std::string::npos);
  CHECK(report.find("n_seeds=2") != std::string::npos);
  CHECK(slurp(eval_dir / "random_baseline.txt").find("metric=hr10") != std::string::npos);

  // the resolved config is self-contained for reproduction
  const auto resolved = slurp(eval_dir / "resolved.cfg");
  CHECK(resolved.find("checkpoint=") != std::string::npos);
  CHECK(resolved.find("seed=11") != std::string::npos);
}

TEST_CASE("ablate trains the full model beside each requested variant") {
  const auto dir = fresh_dir("cdsrnp_cli_ablate");
  const auto synth_dir = dir / "synth";
  const std::string small =
      " --set users=200 --set items_a=50 --set items_b=50 --set min_len=10 --set max_len=13"
      " --set embedding_dim=8 --set seq_len=8 --set support_size=4 --set query_size=8"
      " --set epochs=1 --set episodes_per_epoch=3 --set n_negatives_val=10"
      " --set val_max_users=5 --set n_negatives_test=20 --set ablate_seeds=1"
      " --set variants=no_adaptive --seed 13";
  REQUIRE(run("synth --out " + synth_dir.string() + small, dir / "synth.log") == 0);
  const auto ablate_dir = dir / "ablate";
  REQUIRE(run("ablate --out " + ablate_dir.string() + small +
                  " --set input=" + (synth_dir / "interactions.tsv").string(),
              dir / "ablate.log") == 0);
  CHECK(fs::exists(ablate_dir / "ablate_full.txt"));
  CHECK(fs::exists(ablate_dir / "ablate_no_adaptive.txt"));
  const auto text = slurp(dir / "ablate.log");
  CHECK(text.find("full beats no_adaptive") != std::string::npos);
}
