// Drives the tsdec binary end to end through its command line.

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "test_support.hpp"
#include "tsdec/checkpoint.hpp"

namespace tsdec {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::TempDir;

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

RunResult run(const std::string& args, const fs::path& work) {
  const fs::path log = work / "cli.log";
  const std::string cmd = "cd '" + work.string() + "' && '" + std::string(TSDEC_CLI_PATH) + "' " + args + " > '" +
                          log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

json corpus_spec() {
  return json::parse(R"({
    "families": [
      {"name": "pre", "period_bands": [[5, 9]], "slope_band": [0, 0.002], "noise_level": 0.1,
       "level_band": [1, 3]},
      {"name": "hold", "role": "holdout", "period_bands": [[11, 13]], "noise_level": 0.1,
       "level_band": [2, 4]}
    ],
    "groups": [
      {"granularity": "daily", "count": 6, "length": 200, "family": "pre"},
      {"granularity": "daily", "count": 3, "length": 200, "family": "hold"}
    ]
  })");
}

json pretrain_config(std::size_t output_patch_len = 8) {
  return {{"seed", 3},
          {"output_dir", "run"},
          {"corpus", json::array({{{"name", "synth"}, {"synthetic", corpus_spec()}, {"seed", 5}, {"role", "pretrain"}}})},
          {"model",
           {{"preset", "desk"},
            {"model_dim", 8},
            {"residual_hidden", 8},
            {"max_positions", 32},
            {"output_patch_len", output_patch_len}}},
          {"train", {{"total_steps", 12}, {"batch_size", 4}, {"eval_every", 5}, {"val_windows", 4}}}};
}

json holdout_dataset() {
  return {{"name", "hold"}, {"synthetic", corpus_spec()}, {"seed", 5}, {"role", "holdout"}};
}

// Pretrains a small model under `work/<dir>` and returns its checkpoint path.
fs::path pretrain_into(const fs::path& work, const std::string& dir, std::size_t output_patch_len = 8) {
  json cfg = pretrain_config(output_patch_len);
  cfg["output_dir"] = dir;
  write_json(work / (dir + ".json"), cfg);
  const RunResult r = run("pretrain " + dir + ".json", work);
  EXPECT_EQ(r.exit_code, 0) << r.output;
  return work / dir / "model.ckpt";
}

TEST(Cli, NoSubcommandIsUsageError) {
  TempDir work("cli");
  EXPECT_EQ(run("", work.path()).exit_code, 2);
  EXPECT_EQ(run("frobnicate", work.path()).exit_code, 2);
  EXPECT_EQ(run("--help", work.path()).exit_code, 0);
}

TEST(Cli, DefaultsPrintsEverySection) {
  TempDir work("cli");
  const RunResult r = run("defaults", work.path());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const json j = json::parse(r.output);
  for (const char* key : {"model.desk", "model.full", "train", "evaluate.task", "ablate.settings"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j.at("model.full").at("output_patch_len"), 128);
}

TEST(Cli, PretrainWritesArtifactsAndIsDeterministic) {
  TempDir work("cli");
  pretrain_into(work.path(), "a");
  pretrain_into(work.path(), "b");
  for (const char* f : {"model.ckpt", "loss.csv", "corpus_manifest.json", "resolved_config.json"}) {
    EXPECT_TRUE(fs::exists(work.path() / "a" / f)) << f;
  }
  const std::string loss = slurp(work.path() / "a" / "loss.csv");
  EXPECT_EQ(std::count(loss.begin(), loss.end(), '\n'), 13);
  EXPECT_EQ(loss, slurp(work.path() / "b" / "loss.csv"));
  const json manifest = json::parse(slurp(work.path() / "a" / "corpus_manifest.json"));
  EXPECT_EQ(manifest.at("series").size(), 6u);
  const json snap = json::parse(slurp(work.path() / "a" / "resolved_config.json"));
  EXPECT_EQ(snap.at("model").at("model_dim"), 8);
  EXPECT_EQ(load_checkpoint(work.path() / "a" / "model.ckpt").config.model_dim, 8u);
}

TEST(Cli, PretrainRejectsUnknownKeyByName) {
  TempDir work("cli");
  json cfg = pretrain_config();
  cfg["train"]["learning_rat"] = 0.1;
  write_json(work.path() / "bad.json", cfg);
  const RunResult r = run("pretrain bad.json", work.path());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("learning_rat"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(work.path() / "run"));
  EXPECT_EQ(run("pretrain missing.json", work.path()).exit_code, 2);
}

TEST(Cli, OutputDirOverrides) {
  TempDir work("cli");
  write_json(work.path() / "p.json", pretrain_config());
  ASSERT_EQ(run("pretrain p.json --output-dir flagged", work.path()).exit_code, 0);
  EXPECT_TRUE(fs::exists(work.path() / "flagged" / "model.ckpt"));
  ASSERT_EQ(run("pretrain p.json", work.path()).exit_code, 0);
  EXPECT_TRUE(fs::exists(work.path() / "run" / "model.ckpt"));
  const fs::path env_dir = work.path() / "from_env";
  ASSERT_EQ(std::system(("cd '" + work.path().string() + "' && TSDEC_OUTPUT_DIR='" + env_dir.string() + "' '" +
                         TSDEC_CLI_PATH + "' pretrain p.json > /dev/null 2>&1")
                            .c_str()),
            0);
  EXPECT_TRUE(fs::exists(env_dir / "model.ckpt"));
}

TEST(Cli, ForecastWritesOneRecordPerInput) {
  TempDir work("cli");
  const fs::path ckpt = pretrain_into(work.path(), "m");
  std::ofstream in(work.path() / "in.jsonl");
  std::vector<double> ctx(40);
  for (std::size_t i = 0; i < ctx.size(); ++i) ctx[i] = 2.0 + std::sin(0.7 * static_cast<double>(i));
  in << json{{"id", "a"}, {"context", ctx}}.dump() << "\n";
  in << json{{"id", "b"}, {"context", {1.0, 2.0}}}.dump() << "\n";  // shorter than p=4
  in << "\n";
  in << json{{"id", "c"}, {"context", ctx}, {"horizon", 5}, {"start", "2020-01-01"}, {"granularity", "daily"}}.dump()
     << "\n";
  in << json{{"id", "d"}, {"context", ctx}}.dump() << "\n";
  in.close();

  const RunResult r = run("forecast --checkpoint m/model.ckpt --input in.jsonl --horizon 24 --output-dir out", work.path());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  std::ifstream out(work.path() / "out" / "forecasts.jsonl");
  std::vector<json> records;
  for (std::string line; std::getline(out, line);) records.push_back(json::parse(line));
  ASSERT_EQ(records.size(), 4u);
  EXPECT_EQ(records[0].at("id"), "a");
  EXPECT_EQ(records[0].at("predictions").size(), 24u);
  EXPECT_EQ(records[1].at("id"), "b");
  EXPECT_TRUE(records[1].contains("error"));
  EXPECT_FALSE(records[1].contains("predictions"));
  EXPECT_EQ(records[2].at("predictions").size(), 5u);
  EXPECT_EQ(records[3].at("predictions"), records[0].at("predictions"));
  EXPECT_TRUE(fs::exists(work.path() / "out" / "resolved_config.json"));
  EXPECT_EQ(ckpt, work.path() / "m" / "model.ckpt");
}

TEST(Cli, CommittedSampleInputs) {
  TempDir work("cli");
  pretrain_into(work.path(), "m");
  const fs::path configs = fs::path(TSDEC_SOURCE_DIR) / "configs";
  RunResult r = run("forecast --checkpoint m/model.ckpt --input '" + (configs / "sample_requests.jsonl").string() +
                        "' --horizon 12 --output-dir out",
                    work.path());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  std::ifstream out(work.path() / "out" / "forecasts.jsonl");
  std::vector<json> records;
  for (std::string line; std::getline(out, line);) records.push_back(json::parse(line));
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0].at("predictions").size(), 48u);
  EXPECT_EQ(records[1].at("predictions").size(), 12u);
  EXPECT_TRUE(records[2].contains("error"));

  r = run("evaluate --checkpoint m/model.ckpt --dataset '" + (configs / "sample_monthly.csv").string() +
              "' --context 96 --horizon 24 --output-dir ev",
          work.path());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("seasonal-naive-12"), std::string::npos) << r.output;
}

TEST(Cli, ForecastRejectsZeroHorizonAndBadCheckpoint) {
  TempDir work("cli");
  std::ofstream(work.path() / "in.jsonl") << R"({"id": "a", "context": [1, 2, 3, 4, 5]})" << "\n";
  const RunResult zero = run("forecast --checkpoint x.ckpt --input in.jsonl --horizon 0", work.path());
  EXPECT_EQ(zero.exit_code, 2);
  EXPECT_FALSE(fs::exists(work.path() / "runs"));
  EXPECT_EQ(run("forecast --checkpoint x.ckpt --input in.jsonl --horizon 3", work.path()).exit_code, 1);
  EXPECT_EQ(run("forecast --input in.jsonl", work.path()).exit_code, 2);
}

TEST(Cli, EvaluateWritesReportsAndBaselineRows) {
  TempDir work("cli");
  pretrain_into(work.path(), "m");
  write_json(work.path() / "eval.json",
             {{"checkpoint", "m/model.ckpt"},
              {"dataset", holdout_dataset()},
              {"output_dir", "ev"},
              {"tasks", json::array({{{"context", 32}, {"horizon", 8}, {"stride", 4}}})}});
  const RunResult r = run("evaluate --config eval.json", work.path());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  for (const char* row : {"model", "repeat-last", "seasonal-naive-7"}) {
    EXPECT_NE(r.output.find(row), std::string::npos) << row;
  }
  const json report = json::parse(slurp(work.path() / "ev" / "hold_c32_h8_model.json"));
  EXPECT_EQ(report.at("series").size(), 3u);
  EXPECT_GT(report.at("pooled").at("windows").get<int>(), 0);
  EXPECT_TRUE(fs::exists(work.path() / "ev" / "hold_c32_h8_repeat-last_windows.csv"));
  EXPECT_TRUE(fs::exists(work.path() / "ev" / "hold_c32_h8_table.txt"));

  // Flags override the config task; rerun output is byte-identical.
  ASSERT_EQ(run("evaluate --config eval.json --context 96 --horizon 24 --stride 8 --output-dir ev2", work.path())
                .exit_code,
            0);
  ASSERT_EQ(run("evaluate --config eval.json --context 96 --horizon 24 --stride 8 --output-dir ev3", work.path())
                .exit_code,
            0);
  EXPECT_EQ(slurp(work.path() / "ev2" / "hold_c96_h24_model_windows.csv"),
            slurp(work.path() / "ev3" / "hold_c96_h24_model_windows.csv"));
}

TEST(Cli, EvaluateFromCsvAndErrors) {
  TempDir work("cli");
  pretrain_into(work.path(), "m");
  std::vector<TimeSeries> series{testing::make_series(testing::sine_values(150, 12.0, 1.0, 5.0), Granularity::kMonthly,
                                                      "x", "2000-01-01T00:00:00")};
  write_csv(work.path() / "d.csv", series);
  const RunResult r =
      run("evaluate --checkpoint m/model.ckpt --dataset d.csv --context 96 --horizon 24 --output-dir e", work.path());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("seasonal-naive-12"), std::string::npos) << r.output;

  EXPECT_EQ(run("evaluate --checkpoint nope.ckpt --dataset d.csv --context 96 --horizon 24", work.path()).exit_code, 1);
  EXPECT_EQ(run("evaluate --dataset d.csv", work.path()).exit_code, 2);
  // Test period (30 points) shorter than the horizon.
  EXPECT_EQ(run("evaluate --checkpoint m/model.ckpt --dataset d.csv --context 8 --horizon 40", work.path()).exit_code,
            1);
}

TEST(Cli, AblateSuites) {
  TempDir work("cli");
  pretrain_into(work.path(), "h8", 8);
  pretrain_into(work.path(), "h16", 16);
  json cfg{{"output_dir", "ab"},
           {"datasets", json::array({holdout_dataset()})},
           {"context_checkpoint", "h8/model.ckpt"},
           {"input_patch_checkpoints",
            json::array({{{"label", "a"}, {"checkpoint", "h8/model.ckpt"}}, {{"label", "b"}, {"checkpoint", "h16/model.ckpt"}}})},
           {"output_patch_checkpoints",
            json::array({{{"label", "small"}, {"checkpoint", "h8/model.ckpt"}},
                         {{"label", "large"}, {"checkpoint", "h16/model.ckpt"}}})},
           {"settings",
            {{"contexts", {16, 32, 64, 100}},
             {"context_horizon", 16},
             {"patch_context", 64},
             {"patch_horizon", 16},
             {"long_context", 64},
             {"long_horizon", 32},
             {"stride", 8}}}};
  write_json(work.path() / "ab.json", cfg);

  RunResult r = run("ablate ab.json --suite context", work.path());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const std::string table = slurp(work.path() / "ab" / "table_context.txt");
  EXPECT_NE(table.find("dataset | "), std::string::npos) << table;
  const std::string csv = slurp(work.path() / "ab" / "table_context.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "dataset,16,32,64,100");
  const std::string curves = slurp(work.path() / "ab" / "context_curves.csv");
  EXPECT_EQ(std::count(curves.begin(), curves.end(), '\n'), 5);

  r = run("ablate ab.json --suite output-patch", work.path());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("h=32 -> 16 rounds, h=128 -> 4 rounds"), std::string::npos) << r.output;
  const std::string out_csv = slurp(work.path() / "ab" / "table_output_patch.csv");
  EXPECT_NE(out_csv.find("rounds,4,2"), std::string::npos) << out_csv;

  r = run("ablate ab.json --suite all --output-dir all", work.path());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(fs::exists(work.path() / "all" / "table_input_patch.txt"));
  EXPECT_EQ(slurp(work.path() / "all" / "table_context.txt"), table);

  r = run("ablate ab.json --suite bogus", work.path());
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("context, input-patch, output-patch, all"), std::string::npos) << r.output;
}

}  // namespace
}  // namespace tsdec
