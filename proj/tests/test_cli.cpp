#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "chartfact/cli.hpp"
#include "chartfact/entail.hpp"
#include "chartfact/wire.hpp"

using namespace chartfact;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "chartfact");
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::vector<json> out;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("chartfact_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) +
             "_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    write_corpus();
    write_dataset();
  }
  void TearDown() override { fs::remove_all(root_); }

  void write_corpus() {
    std::ofstream c(root_ / "corpus.jsonl");
    for (int i = 0; i < 12; ++i) {
      const auto a = std::to_string(10 + i), b = std::to_string(30 + i);
      c << json{{"chart_id", "ch" + std::to_string(i)},
                {"table", "Year\tRate&&&2001\t" + a + "%&&&2002\t" + b + "%"},
                {"sentences", {"The rate rose from " + a + "% in 2001 to " + b + "% in 2002."}}}
               .dump()
        << "\n";
    }
  }

  void write_dataset() {
    std::ofstream d(root_ / "data.jsonl");
    struct Row {
      const char* id;
      const char* model;
      const char* split;
      const char* caption;
      std::vector<std::vector<std::string>> labels;
    };
    const std::vector<Row> rows{
        {"a", "GPT-4V", "LVLM", "The rate rose to 30% in 2002.", {{}}},
        {"b", "Bard", "LVLM", "The rate fell to 30% in 2002.", {{"Trend"}}},
        {"c", "DePlot+GPT-4", "LLM", "It was 20.4% in 2001. It rose.", {{"Value"}, {}}},
        {"d", "MatCha", "FT", "It was 10% in 2001.", {{}}},
        {"e", "UniChart", "FT", "It was 55% in 2001.", {{"Value"}}},
    };
    for (const auto& r : rows) {
      std::vector<std::string> sentences;
      for (const auto& s : segment_sentences(r.caption)) sentences.push_back(s.text);
      d << json{{"id", r.id},
                {"split", r.split},
                {"source_model", r.model},
                {"dataset_origin", "Pew"},
                {"chart",
                 {{"id", std::string("chart-") + r.id},
                  {"image_uri", std::string("img/") + r.id + ".png"},
                  {"title", "Rate"},
                  {"gold_table", "Year\tRate&&&2001\t10%&&&2002\t30%"}}},
                {"caption", r.caption},
                {"sentences", sentences},
                {"annotations", nullptr},
                {"resolved_labels", r.labels}}
               .dump()
        << "\n";
    }
  }

  std::string p(const std::string& name) const { return (root_ / name).string(); }

  fs::path root_;
};

}  // namespace

TEST_F(CliTest, GenNegativesIsDeterministic) {
  const auto r1 = run({"gen-negatives", "--corpus", p("corpus.jsonl"), "--out", p("o1"), "--seed", "3"});
  ASSERT_EQ(r1.code, cli::kOk) << r1.err;
  const auto r2 = run({"gen-negatives", "--corpus", p("corpus.jsonl"), "--out", p("o2"), "--seed", "3",
                       "--concurrency", "1"});
  ASSERT_EQ(r2.code, cli::kOk) << r2.err;
  EXPECT_EQ(slurp(root_ / "o1/negatives.jsonl"), slurp(root_ / "o2/negatives.jsonl"));
  const auto r3 = run({"gen-negatives", "--corpus", p("corpus.jsonl"), "--out", p("o3"), "--seed", "4"});
  EXPECT_NE(slurp(root_ / "o1/negatives.jsonl"), slurp(root_ / "o3/negatives.jsonl"));
  const auto lines = read_jsonl(root_ / "o1/negatives.jsonl");
  EXPECT_GT(lines.size(), 12u);
  EXPECT_TRUE(fs::exists(root_ / "o1/gen-negatives.config"));

  run({"gen-negatives", "--corpus", p("corpus.jsonl"), "--out", p("o4"), "--families", "trend"});
  for (const auto& l : read_jsonl(root_ / "o4/negatives.jsonl"))
    if (l["label"] == "NotEntailment") EXPECT_EQ(l["origin"], "Generated:Trend");
}

TEST_F(CliTest, ScoreWithOracleAndFixtures) {
  const auto r = run({"score", "--dataset", p("data.jsonl"), "--out", p("s")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto scores = read_jsonl(root_ / "s/scores.jsonl");
  ASSERT_EQ(scores.size(), 5u);
  EXPECT_EQ(scores[0]["id"], "a");
  EXPECT_GT(scores[0]["caption_score"].get<double>(), 0.5);
  EXPECT_LT(scores[1]["caption_score"].get<double>(), 0.5);

  // empty fixture directory: every caption fails on the backend
  fs::create_directories(root_ / "fx");
  const auto none = run({"score", "--dataset", p("data.jsonl"), "--out", p("s2"), "--backend",
                         "fixture:" + p("fx")});
  EXPECT_EQ(none.code, cli::kBackend);

  // record one caption's responses: partial success
  EntailRequest req;
  req.image_uri = "img/a.png";
  req.sentence = "The rate rose to 30% in 2002.";
  req.prompt = build_prompt(req.sentence);
  wire::write_fixture(root_ / "fx", wire::kEntailRoute, req.wire_body(),
                      {{"logit_yes", 1.0}, {"logit_no", 0.0}, {"version", "rec"}});
  const auto some = run({"score", "--dataset", p("data.jsonl"), "--out", p("s3"), "--backend",
                         "fixture:" + p("fx")});
  EXPECT_EQ(some.code, cli::kPartial);
  const auto partial = read_jsonl(root_ / "s3/scores.jsonl");
  EXPECT_FALSE(partial[0].contains("error"));
  EXPECT_EQ(partial[1]["error"]["code"], "BackendUnavailable");
  const auto again = run({"score", "--dataset", p("data.jsonl"), "--out", p("s4"), "--backend",
                          "fixture:" + p("fx")});
  EXPECT_EQ(slurp(root_ / "s3/scores.jsonl"), slurp(root_ / "s4/scores.jsonl"));
}

TEST_F(CliTest, DryRunHasNoSideEffects) {
  const auto r = run({"correct", "--dataset", p("data.jsonl"), "--out", p("dry"), "--dry-run"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto plan = json::parse(r.out);
  EXPECT_EQ(plan["command"], "correct");
  EXPECT_EQ(plan["config"]["rectifier-backend"], "oracle");
  EXPECT_EQ(plan["outputs"].size(), 2u);
  EXPECT_FALSE(fs::exists(root_ / "dry"));
}

TEST_F(CliTest, ConfigPrecedence) {
  std::ofstream(root_ / "run.cfg") << "# settings\nseed = 5\nmax-per-sentence=1\n";
  const auto a = run({"gen-negatives", "--corpus", p("corpus.jsonl"), "--out", p("c1"), "--config",
                      p("run.cfg"), "--dry-run"});
  ASSERT_EQ(a.code, cli::kOk) << a.err;
  EXPECT_EQ(json::parse(a.out)["config"]["seed"], "5");
  EXPECT_EQ(json::parse(a.out)["config"]["concurrency"], "4");
  const auto b = run({"gen-negatives", "--corpus", p("corpus.jsonl"), "--out", p("c2"), "--config",
                      p("run.cfg"), "--seed", "9"});
  ASSERT_EQ(b.code, cli::kOk) << b.err;
  const auto written = cli::parse_config_text(slurp(root_ / "c2/gen-negatives.config"));
  EXPECT_EQ(written.at("seed"), "9");
  EXPECT_EQ(written.at("max-per-sentence"), "1");

  std::ofstream(root_ / "bad.cfg") << "colour=blue\n";
  const auto c = run({"gen-negatives", "--corpus", p("corpus.jsonl"), "--out", p("c3"), "--config",
                      p("bad.cfg")});
  EXPECT_EQ(c.code, cli::kValidation);
  const auto err = json::parse(c.err);
  EXPECT_EQ(err["error"]["command"], "gen-negatives");
  EXPECT_EQ(err["error"]["code"], "InvalidArgument");
}

TEST_F(CliTest, ValidationErrors) {
  EXPECT_EQ(run({"score", "--out", p("x")}).code, cli::kValidation);
  EXPECT_EQ(run({"score", "--dataset", p("missing.jsonl"), "--out", p("x")}).code, cli::kValidation);
  EXPECT_EQ(run({"score", "--dataset", p("data.jsonl"), "--out", p("x"), "--seed", "abc"}).code,
            cli::kValidation);
  EXPECT_EQ(run({"nonsense"}).code, cli::kValidation);
  std::ofstream(root_ / "broken.jsonl") << "{\"id\": 1}\n";
  const auto r = run({"stats", "--dataset", p("broken.jsonl"), "--out", p("x")});
  EXPECT_EQ(r.code, cli::kValidation);
  EXPECT_EQ(json::parse(r.err)["error"]["code"], "SchemaViolation");
}

TEST_F(CliTest, CorrectThenEvaluate) {
  ASSERT_EQ(run({"correct", "--dataset", p("data.jsonl"), "--out", p("c")}).code, cli::kOk);
  const auto corr = read_jsonl(root_ / "c/corrections.jsonl");
  ASSERT_EQ(corr.size(), 5u);
  EXPECT_EQ(corr[1]["corrected"], "The rate rose to 30% in 2002.");
  EXPECT_EQ(corr[1]["status"], "Corrected");
  EXPECT_EQ(corr[0]["status"], "Unchanged");

  const auto r = run({"evaluate", "--dataset", p("data.jsonl"), "--corrections",
                      p("c/corrections.jsonl"), "--out", p("e")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto ev = json::parse(slurp(root_ / "e/evaluation.json"));
  ASSERT_TRUE(ev.contains("overall"));
  EXPECT_GT(ev["overall"]["factuality"].get<double>(), ev["overall"]["original_factuality"].get<double>());
}

TEST_F(CliTest, MetaEvalAndStats) {
  ASSERT_EQ(run({"score", "--dataset", p("data.jsonl"), "--out", p("s")}).code, cli::kOk);
  const auto m = run({"meta-eval", "--dataset", p("data.jsonl"), "--scores", p("s/scores.jsonl"),
                      "--out", p("m")});
  ASSERT_EQ(m.code, cli::kOk) << m.err;
  const auto meta = json::parse(slurp(root_ / "m/meta_eval.json"));
  EXPECT_TRUE(meta["overall"]["kendall_tau"].is_number());
  EXPECT_TRUE(meta["overall"]["roc_auc"].is_number());

  std::ofstream(root_ / "mentions.jsonl")
      << json{{"model", "Bard"}, {"dataset", "Pew"}, {"type", "Value"}, {"has_mention", true}, {"non_factual", true}}.dump()
      << "\n"
      << json{{"model", "Bard"}, {"dataset", "Pew"}, {"type", "Value"}, {"has_mention", true}}.dump() << "\n";
  const auto s = run({"stats", "--dataset", p("data.jsonl"), "--mentions", p("mentions.jsonl"), "--out", p("st")});
  ASSERT_EQ(s.code, cli::kOk) << s.err;
  const auto stats = json::parse(slurp(root_ / "st/stats.json"));
  const auto& split = stats["split_stats"];
  EXPECT_EQ(split["LVLM"]["sentences"]["total"], 2);
  EXPECT_EQ(split["LVLM"]["sentences"]["non_factual"], 1);
  EXPECT_EQ(split["FT"]["captions"]["non_factual"], 1);
  EXPECT_EQ(split["total"]["sentences"]["total"], 6);
  EXPECT_EQ(split["total"]["captions"]["non_factual"], 3);
  EXPECT_EQ(stats["mention_error_rates"][0]["rate"], "50.00 (1/2)");
  const auto csv = slurp(root_ / "st/error_distribution.csv");
  EXPECT_NE(csv.find("UniChart,Value,1,1,100.00"), std::string::npos) << csv;
}

TEST_F(CliTest, TableEval) {
  std::ofstream(root_ / "gold.jsonl") << json{{"id", "t"}, {"table", "Year\tA\tB&&&2000\t10\t20&&&2001\t30\t40"}}.dump()
                                      << "\n";
  std::ofstream(root_ / "pred.jsonl") << json{{"id", "t"}, {"table", "Year\tA\tB&&&2000\t10\t20&&&2001\t30\t80"}}.dump()
                                      << "\n";
  const auto r = run({"table-eval", "--predicted", p("pred.jsonl"), "--gold", p("gold.jsonl"), "--out", p("t")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto j = json::parse(slurp(root_ / "t/table_eval.json"));
  EXPECT_NEAR(j["mean_rms_f1"].get<double>(), 0.75, 1e-12);
}
