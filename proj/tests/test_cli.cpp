#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "rotorvib");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = rotorvib::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

json last_line(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  return json::parse(last);
}

class CliChain : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("rotorvib_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "run.json") << R"({"seed": 7, "synth": {"duration_s": 4},
                                          "hyperparameters": {"rf": {"trees": 20}}})";
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::vector<std::string> base() const {
    return {"--config", (dir_ / "run.json").string(), "--out-dir", dir_.string(), "--quiet"};
  }
  Outcome run(std::initializer_list<std::string> extra) const {
    auto args = base();
    args.insert(args.end(), extra);
    return invoke(args);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliChain, SynthExtractTrainEval) {
  const auto synth = run({"synth"});
  ASSERT_EQ(synth.code, 0) << synth.err;
  EXPECT_EQ(last_line(synth.out)["experiments"], 26);

  const auto extract = run({"extract"});
  ASSERT_EQ(extract.code, 0) << extract.err;
  const auto ex = last_line(extract.out);
  EXPECT_EQ(ex["rows"], 104);
  EXPECT_EQ(ex["columns"], 4374);
  EXPECT_TRUE(fs::exists(dir_ / "schema.json"));

  const auto train = run({"train", "--algorithm", "rf"});
  ASSERT_EQ(train.code, 0) << train.err;

  const auto eval = run({"eval", "--report", (dir_ / "eval.json").string()});
  ASSERT_EQ(eval.code, 0) << eval.err;
  const auto result = last_line(eval.out);
  const double acc = result["accuracy"];
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);
  EXPECT_EQ(result["count"], 32);
  EXPECT_EQ(result["accuracy"], last_line(train.out)["test_accuracy"]);
  std::ifstream saved(dir_ / "eval.json");
  EXPECT_EQ(json::parse(saved), result);

  const auto csv = run({"--format", "csv", "eval", "--rows", "all"});
  ASSERT_EQ(csv.code, 0) << csv.err;
  EXPECT_EQ(csv.out.rfind("accuracy,correct,count,fn,fp,model,rows,tn,tp\n", 0), 0u) << csv.out;

  const auto study = run({"study", "importance"});
  ASSERT_EQ(study.code, 0) << study.err;
  EXPECT_TRUE(fs::exists(dir_ / "importance.json"));
}

TEST_F(CliChain, SchemaMismatchIsADataError) {
  ASSERT_EQ(run({"synth"}).code, 0);
  ASSERT_EQ(run({"extract"}).code, 0);
  ASSERT_EQ(run({"train", "--algorithm", "dt"}).code, 0);
  std::ofstream(dir_ / "other.json") << R"({"features": {"segment_length": 64, "hop": 32}})";
  const auto other = invoke({"--config", (dir_ / "other.json").string(), "--quiet", "extract", "--manifest",
                             (dir_ / "corpus" / "manifest.json").string(), "--features",
                             (dir_ / "alt" / "features.csv").string()});
  ASSERT_EQ(other.code, 0) << other.err;
  const auto eval = run({"eval", "--features", (dir_ / "alt" / "features.csv").string()});
  EXPECT_EQ(eval.code, 3);
  const auto err = last_line(eval.err);
  EXPECT_EQ(err["error"], "SchemaMismatch");
  EXPECT_EQ(err["exit_code"], 3);
}

TEST_F(CliChain, RerunWithSameSeedIsIdentical) {
  std::vector<json> results;
  for (int rep = 0; rep < 2; ++rep) {
    ASSERT_EQ(run({"synth"}).code, 0);
    ASSERT_EQ(run({"extract"}).code, 0);
    ASSERT_EQ(run({"train"}).code, 0);
    const auto eval = run({"eval"});
    ASSERT_EQ(eval.code, 0);
    results.push_back(last_line(eval.out));
  }
  EXPECT_EQ(results[0], results[1]);
}

TEST(Cli, ConfigErrorsExitTwo) {
  const auto dir = fs::temp_directory_path() / "rotorvib_cli_config";
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << R"({"sed": 1})";
  const auto bad = invoke({"--config", (dir / "bad.json").string(), "synth"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_EQ(last_line(bad.err)["error"], "ConfigInvalid");

  const auto unknown = invoke({"train", "--algorithm", "xgb"});
  EXPECT_EQ(unknown.code, 2);

  const auto kind = invoke({"--out-dir", dir.string(), "study", "bogus"});
  EXPECT_EQ(kind.code, 2);
  fs::remove_all(dir);
}

TEST(Cli, MissingInputIsADataError) {
  const auto dir = fs::temp_directory_path() / "rotorvib_cli_missing";
  fs::remove_all(dir);
  const auto r = invoke({"--out-dir", dir.string(), "--quiet", "train"});
  EXPECT_EQ(r.code, 3);
  EXPECT_EQ(last_line(r.err)["category"], "data");
}

TEST(Cli, RefusesToOverwriteInputs) {
  const auto dir = fs::temp_directory_path() / "rotorvib_cli_overwrite";
  fs::create_directories(dir);
  const auto r = invoke({"--out-dir", dir.string(), "train", "--features", (dir / "x.csv").string(), "--model",
                         (dir / "x.csv").string()});
  EXPECT_EQ(r.code, 2);
  fs::remove_all(dir);
}
