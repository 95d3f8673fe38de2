// Runs the lsld binary end to end and checks files, messages and exit codes.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>

#include <gtest/gtest.h>
#include <json.hpp>

#include "test_util.hpp"

namespace {

namespace fs = std::filesystem;
using lsld::testing::slurp;
using lsld::testing::spit;
using lsld::testing::TempDir;

struct RunResult {
  int code = -1;
  std::string output;  // stdout and stderr interleaved
};

RunResult run(const std::string& args, const fs::path& cwd) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" LSLD_BIN "' " + args + " 2>&1";
  RunResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

const std::string kSmall = "--videos 40 --epochs 3 --lr 1e-2";

TEST(Cli, PipelineEndToEnd) {
  TempDir dir;
  const auto r = run("--seed 3 pipeline --work w " + kSmall, dir.path());
  ASSERT_EQ(r.code, 0) << r.output;
  for (const char* f : {"bank/manifest.json", "denoised.csv", "reweighted.csv", "stats.csv",
                        "model/model.json", "model/loss_trace.csv", "predictions.csv",
                        "report.json", "bank.manifest.json", "denoised.csv.manifest.json",
                        "reweighted.csv.manifest.json", "model/run_manifest.json",
                        "predictions.csv.manifest.json", "report.json.manifest.json"})
    EXPECT_TRUE(fs::exists(dir / "w" / f)) << f;
  const auto report = nlohmann::json::parse(slurp(dir / "w/report.json"));
  EXPECT_TRUE(report.contains("segment_level"));
  const auto manifest = nlohmann::json::parse(slurp(dir / "w/bank.manifest.json"));
  EXPECT_EQ(manifest["subcommand"], "synth");
  EXPECT_EQ(manifest["seeds"]["synth"], 3);
}

TEST(Cli, PipelineIsDeterministic) {
  TempDir a, b;
  ASSERT_EQ(run("--seed 8 pipeline --work w " + kSmall, a.path()).code, 0);
  ASSERT_EQ(run("--seed 8 pipeline --work w " + kSmall, b.path()).code, 0);
  for (const char* f : {"report.json", "model/loss_trace.csv", "model/loss_trace.json", "predictions.csv",
                        "denoised.csv", "reweighted.csv"})
    EXPECT_EQ(slurp(a / "w" / f), slurp(b / "w" / f)) << f;
  EXPECT_EQ(lsld::testing::tree_contents(a / "w/bank"), lsld::testing::tree_contents(b / "w/bank"));
}

TEST(Cli, DryRunPrintsPlanOnly) {
  TempDir dir;
  const auto r = run("pipeline --work w --dry-run", dir.path());
  ASSERT_EQ(r.code, 0) << r.output;
  for (const char* stage : {"synth", "denoise", "reweight", "train", "predict", "eval"})
    EXPECT_NE(r.output.find(stage), std::string::npos) << stage;
  EXPECT_FALSE(fs::exists(dir / "w"));
}

TEST(Cli, CorruptIntermediateNamesStage) {
  TempDir dir;
  ASSERT_EQ(run("--seed 1 pipeline --work w " + kSmall, dir.path()).code, 0);
  spit(dir / "w/reweighted.csv", "filename,modality,t,event,value\nnot_a_video,visual,0,Dog,1\n");
  const auto r = run("--seed 1 pipeline --work w --from train " + kSmall, dir.path());
  EXPECT_EQ(r.code, 3) << r.output;
  EXPECT_NE(r.output.find("stage 'train'"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("run_manifest.json"), std::string::npos) << r.output;
}

TEST(Cli, ResumeReusesEarlierStages) {
  TempDir dir;
  ASSERT_EQ(run("--seed 1 pipeline --work w " + kSmall, dir.path()).code, 0);
  const auto report = slurp(dir / "w/report.json");
  fs::remove(dir / "w/report.json");
  const auto r = run("--seed 1 pipeline --work w --from eval " + kSmall, dir.path());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(slurp(dir / "w/report.json"), report);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  EXPECT_EQ(run("", dir.path()).code, 2);
  EXPECT_EQ(run("synth --out b --bogus-flag", dir.path()).code, 2);
  EXPECT_EQ(run("denoise --bank missing --out d.csv", dir.path()).code, 3);
  ASSERT_EQ(run("synth --out b --videos 8", dir.path()).code, 0);
  ASSERT_EQ(run("denoise --bank b --out d.csv", dir.path()).code, 0);
  const auto bad = run("reweight --bank b --denoised d.csv --out r.csv --alpha 0.3 --beta 0.4",
                       dir.path());
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.output.find("alpha"), std::string::npos) << bad.output;
  EXPECT_EQ(run("gradcheck --tol 0", dir.path()).code, 4);
  EXPECT_EQ(run("gradcheck", dir.path()).code, 0);
}

TEST(Cli, ConfigFileFillsUnsetFlags) {
  TempDir dir;
  spit(dir / "cfg.json", R"({"videos": 12, "synth": {"noise": 0.0}, "seed": 4})");
  ASSERT_EQ(run("--config cfg.json synth --out b --videos 10", dir.path()).code, 0);
  const auto m = nlohmann::json::parse(slurp(dir / "b.manifest.json"));
  EXPECT_EQ(m["settings"]["videos"], "10");  // flag wins over config
  EXPECT_EQ(m["settings"]["noise"], "0");
  EXPECT_EQ(m["seeds"]["synth"], 4);
}

TEST(Cli, EvalRequiresMatchingVideos) {
  TempDir dir;
  ASSERT_EQ(run("synth --out b --videos 8 --noise 0", dir.path()).code, 0);
  ASSERT_EQ(run("denoise --bank b --out d.csv", dir.path()).code, 0);
  const auto r = run("eval --pred d.csv --gt b/annotations.csv --bank b --report r.json --all-videos",
                     dir.path());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto report = nlohmann::json::parse(slurp(dir / "r.json"));
  EXPECT_EQ(report["segment_level"]["type_av"], 1.0) << report.dump();
}

}  // namespace
