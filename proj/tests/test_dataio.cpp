#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "chartfact/dataio.hpp"
#include "chartfact/error.hpp"
#include "chartfact/error_stats.hpp"

using namespace chartfact;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json record(const std::string& id, const std::string& model, std::vector<std::vector<std::string>> labels,
            const std::string& split = "") {
  json r;
  r["id"] = id;
  r["split"] = split.empty() ? std::string(data_split_name(*split_for_model(model))) : split;
  r["source_model"] = model;
  r["dataset_origin"] = "VisText";
  r["chart"] = {{"id", "chart-" + id}, {"image_uri", "img/" + id + ".png"}, {"title", "T"},
                {"gold_table", "Year\tRate&&&1990\t10"}};
  std::vector<std::string> sents;
  for (std::size_t i = 0; i < labels.size(); ++i) sents.push_back("Sentence " + std::to_string(i) + ".");
  std::string caption;
  for (const auto& s : sents) caption += (caption.empty() ? "" : " ") + s;
  r["caption"] = caption;
  r["sentences"] = sents;
  r["annotations"] = nullptr;
  r["resolved_labels"] = labels;
  return r;
}

std::string jsonl(const std::vector<json>& records) {
  std::string out;
  for (const auto& r : records) out += r.dump() + "\n";
  return out;
}

std::string violation_message(const std::string& text) {
  try {
    parse_dataset(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SchemaViolation);
    return e.what();
  }
  ADD_FAILURE() << "accepted: " << text;
  return {};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("chartfact_dataio_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(Aggregate, MajorityWithTiesKept) {
  const ErrorSet v{ErrorType::Value}, t{ErrorType::Trend}, none{};
  EXPECT_EQ(aggregate_annotations({v, v, none}), v);
  EXPECT_EQ(aggregate_annotations({v, none, none}), none);
  EXPECT_EQ(aggregate_annotations({v, none}), v);
  EXPECT_EQ(aggregate_annotations({v, t}), (ErrorSet{ErrorType::Value, ErrorType::Trend}));
  EXPECT_EQ(aggregate_annotations({ErrorSet{ErrorType::Value, ErrorType::Trend}, v, t}),
            (ErrorSet{ErrorType::Value, ErrorType::Trend}));
  EXPECT_THROW(aggregate_annotations({v}), Error);
}

TEST(Aggregate, MatchesVoteCounting) {
  std::mt19937 rng(1);
  std::bernoulli_distribution coin(0.35);
  for (int iter = 0; iter < 500; ++iter) {
    const std::size_t n = 2 + iter % 5;
    std::vector<ErrorSet> per(n);
    std::map<ErrorType, std::size_t> votes;
    for (auto& s : per)
      for (auto t : kAllErrorTypes)
        if (coin(rng)) {
          s.insert(t);
          ++votes[t];
        }
    ErrorSet expected;
    for (const auto& [t, c] : votes)
      if (c * 2 >= n) expected.insert(t);
    EXPECT_EQ(aggregate_annotations(per), expected);
  }
}

TEST(Instance, FactualityIgnoresGrammar) {
  const auto data = parse_dataset(jsonl({record("a", "GPT-4V", {{}, {"Grammatical"}, {"Value", "Trend"}, {}})}));
  const auto& inst = data.at(0);
  EXPECT_TRUE(inst.sentence_factual(0));
  EXPECT_TRUE(inst.sentence_factual(1));
  EXPECT_FALSE(inst.sentence_factual(2));
  EXPECT_FALSE(inst.caption_factual());
  EXPECT_DOUBLE_EQ(inst.factual_fraction(), 0.75);
  EXPECT_EQ(inst.split, DataSplit::LVLM);
  EXPECT_EQ(inst.chart.gold_table->title(), "T");
}

TEST(Dataset, SaveLoadIdentity) {
  std::mt19937 rng(2);
  const auto& models = known_models();
  std::vector<json> records;
  for (int i = 0; i < 60; ++i) {
    std::vector<std::vector<std::string>> labels(1 + rng() % 4);
    for (auto& l : labels)
      for (auto t : kAllErrorTypes)
        if (rng() % 5 == 0) l.push_back(std::string(error_type_name(t)));
    records.push_back(record("id" + std::to_string(i), models[rng() % models.size()], labels));
  }
  // one record carries raw annotations instead of resolved labels
  records[0]["annotations"] = json::array();
  for (std::size_t s = 0; s < records[0]["sentences"].size(); ++s)
    records[0]["annotations"].push_back({json::array({"Value"}), json::array(), json::array({"Value"})});
  records[0]["resolved_labels"] = nullptr;

  const auto first = parse_dataset(jsonl(records));
  const auto text = serialize_dataset(first);
  const auto second = parse_dataset(text);
  EXPECT_EQ(serialize_dataset(second), text);
  ASSERT_EQ(second.size(), 60u);
  EXPECT_TRUE(second[0].annotations);
  EXPECT_EQ(second[0].resolved_labels[0], ErrorSet{ErrorType::Value});

  const auto dir = scratch("roundtrip");
  save_dataset(dir / "d.jsonl", first);
  EXPECT_EQ(serialize_dataset(load_dataset(dir / "d.jsonl")), text);
  fs::remove_all(dir);
}

TEST(Dataset, SchemaViolationsNameLineAndField) {
  const auto good = record("ok", "Bard", {{}});
  auto msg = violation_message(jsonl({good, [] {
                                       auto r = record("x", "Bard", {{}});
                                       r.erase("dataset_origin");
                                       return r;
                                     }()}));
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("dataset_origin"), std::string::npos) << msg;

  msg = violation_message(jsonl({record("x", "Bard", {{}}, "FT")}));
  EXPECT_NE(msg.find("split"), std::string::npos) << msg;

  msg = violation_message(jsonl({record("x", "Bard", {{"Colour"}})}));
  EXPECT_NE(msg.find("resolved_labels[0]"), std::string::npos) << msg;

  msg = violation_message(jsonl({record("x", "Bard", {{}, {}}), record("x", "Bard", {{}})}));
  EXPECT_NE(msg.find("duplicate"), std::string::npos) << msg;

  auto mismatch = record("x", "Bard", {{}, {}});
  mismatch["resolved_labels"] = json::array({json::array()});
  msg = violation_message(jsonl({mismatch}));
  EXPECT_NE(msg.find("resolved_labels"), std::string::npos) << msg;

  auto disagree = record("x", "Bard", {{"Trend"}});
  disagree["annotations"] = json::array({json::array({json::array(), json::array()})});
  msg = violation_message(jsonl({disagree}));
  EXPECT_NE(msg.find("disagrees"), std::string::npos) << msg;

  auto bad_table = record("x", "Bard", {{}});
  bad_table["chart"]["gold_table"] = "a\tb&&&1";
  msg = violation_message(jsonl({bad_table}));
  EXPECT_NE(msg.find("chart.gold_table"), std::string::npos) << msg;

  msg = violation_message("{not json}\n");
  EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;

  msg = violation_message(jsonl({record("x", "Gemini", {{}}, "LVLM")}));
  EXPECT_NE(msg.find("Gemini"), std::string::npos) << msg;
}

TEST(Models, SplitAssignment) {
  EXPECT_EQ(split_for_model("GPT-4V"), DataSplit::LVLM);
  EXPECT_EQ(split_for_model("Bard"), DataSplit::LVLM);
  EXPECT_EQ(split_for_model("DePlot+GPT-4"), DataSplit::LLM);
  for (const auto* m : {"ChartT5", "UniChart", "MatCha"}) EXPECT_EQ(split_for_model(m), DataSplit::FT);
  EXPECT_FALSE(split_for_model("gpt4"));
  EXPECT_EQ(known_models().size(), 6u);
}

TEST(SplitStats, CountsMatchManualTally) {
  std::vector<json> recs{record("a", "GPT-4V", {{}, {"Value"}}), record("b", "Bard", {{"Grammatical"}}),
                         record("c", "DePlot+GPT-4", {{"Trend"}, {"Label"}, {}}),
                         record("d", "MatCha", {{}})};
  const auto s = split_stats(parse_dataset(jsonl(recs)));
  EXPECT_EQ(s.at(DataSplit::LVLM), (SplitRow{{2, 1}, {1, 1}}));
  EXPECT_EQ(s.at(DataSplit::LLM), (SplitRow{{1, 2}, {0, 1}}));
  EXPECT_EQ(s.at(DataSplit::FT), (SplitRow{{1, 0}, {1, 0}}));
  EXPECT_EQ(s.total, (SplitRow{{4, 3}, {2, 2}}));
}

TEST(Import, ReleasedLayouts) {
  const auto dir = scratch("import");
  // list container with loose spellings and a separate file per split
  json lvlm = json::array();
  lvlm.push_back({{"_id", 7},
                  {"model", "gpt-4v"},
                  {"dataset", "pew"},
                  {"image_path", "pew/7.png"},
                  {"table", json::array({json::array({"Year", "Share"}), json::array({"2010", "40%"})})},
                  {"sentences", json::array({"Share rose.", " It hit 40%. "})},
                  {"labels", json::array({json::array({"trend error"}), json::array()})}});
  std::ofstream(dir / "LVLM.json") << lvlm.dump();
  // JSONL with annotator-level labels
  json rec{{"caption_id", "u1"},
           {"captioner", "UniChart"},
           {"source", "vistext"},
           {"caption", "It fell. Then 5."},
           {"annotator_labels", json::array({json::array({json::array({"Value"}), json::array({"value_error"}), json::array()}),
                                             json::array({json::array(), json::array(), json::array()})})}};
  std::ofstream(dir / "ft.jsonl") << rec.dump() << "\n";

  auto data = import_released(dir);
  std::sort(data.begin(), data.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  ASSERT_EQ(data.size(), 2u);
  EXPECT_EQ(data[0].id, "7");
  EXPECT_EQ(data[0].source_model, "GPT-4V");
  EXPECT_EQ(data[0].dataset_origin, DatasetOrigin::Pew);
  EXPECT_EQ(data[0].chart.image_uri, "pew/7.png");
  EXPECT_EQ(serialize_linearized(*data[0].chart.gold_table), "Year\tShare&&&2010\t40%");
  EXPECT_EQ(data[0].caption.sentences[1].text, "It hit 40%.");
  EXPECT_EQ(data[0].resolved_labels[0], ErrorSet{ErrorType::Trend});
  EXPECT_EQ(data[1].split, DataSplit::FT);
  EXPECT_EQ(data[1].resolved_labels[0], ErrorSet{ErrorType::Value});
  EXPECT_TRUE(data[1].resolved_labels[1].empty());
  // the result is valid native data
  EXPECT_EQ(parse_dataset(serialize_dataset(data)).size(), 2u);
  fs::remove_all(dir);
}

TEST(Import, KeyedContainerAndErrors) {
  const json keyed{{"data", json::array({{{"id", "m1"},
                                          {"model_name", "MatCha"},
                                          {"origin", "VisText"},
                                          {"generated_caption", "It rose."},
                                          {"error_types", json::array({json::array()})}}})}};
  EXPECT_EQ(import_released_record(keyed["data"][0]).source_model, "MatCha");
  try {
    import_released_record({{"id", "z"}, {"model", "Nope"}, {"dataset", "Pew"}, {"caption", "x"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SchemaViolation);
    EXPECT_NE(std::string(e.what()).find("Nope"), std::string::npos);
  }
  const auto dir = scratch("keyed");
  std::ofstream(dir / "all.json") << keyed.dump();
  EXPECT_EQ(import_released(dir / "all.json").size(), 1u);
  fs::remove_all(dir);
}

TEST(ErrorRates, GroupedCounts) {
  std::vector<json> recs{record("a", "GPT-4V", {{}, {"Value"}}), record("b", "GPT-4V", {{"Value", "Trend"}}),
                         record("c", "MatCha", {{"Grammatical"}, {}})};
  const auto report = error_rates(parse_dataset(jsonl(recs)));
  ASSERT_EQ(report.by_model.size(), 2u);
  const auto& g = report.by_model[0];
  EXPECT_EQ(g.group, "GPT-4V");
  EXPECT_EQ(g.sentences, 3u);
  EXPECT_EQ(g.non_factual_sentences, 2u);
  EXPECT_NEAR(g.type_rate(ErrorType::Value), 200.0 / 3.0, 1e-9);
  EXPECT_NEAR(g.type_rate(ErrorType::Trend), 100.0 / 3.0, 1e-9);
  EXPECT_DOUBLE_EQ(g.factual_caption_rate(), 0.0);
  const auto& m = report.by_model[1];
  EXPECT_EQ(m.group, "MatCha");
  EXPECT_DOUBLE_EQ(m.type_rate(ErrorType::Grammatical), 50.0);
  EXPECT_DOUBLE_EQ(m.factual_caption_rate(), 100.0);
  EXPECT_EQ(report.overall.captions, 3u);
  EXPECT_NEAR(report.overall.non_factual_caption_rate(), 200.0 / 3.0, 1e-9);
  EXPECT_EQ(report.by_split.size(), 2u);
  EXPECT_TRUE(to_json(report).contains("by_model"));
}

TEST(MentionRate, NumeratorOverDenominator) {
  std::vector<MentionRecord> recs;
  for (int i = 0; i < 6; ++i) recs.push_back({"Bard", DatasetOrigin::Pew, ErrorType::Value, true, i < 2});
  recs.push_back({"Bard", DatasetOrigin::Pew, ErrorType::Value, false, true});
  recs.push_back({"Bard", DatasetOrigin::VisText, ErrorType::Trend, false, false});
  recs.push_back({"ChartT5", DatasetOrigin::Pew, ErrorType::Value, true, true});
  const auto rates = mention_error_rate(recs);
  ASSERT_EQ(rates.size(), 3u);
  EXPECT_EQ(rates[0].model, "Bard");
  EXPECT_EQ(rates[0].origin, DatasetOrigin::VisText);
  EXPECT_EQ(rates[0].formatted, "N/A (0/0)");
  EXPECT_EQ(rates[1].formatted, "33.33 (2/6)");
  EXPECT_EQ(rates[2].formatted, "100.00 (1/1)");
}
