#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>

#include "chartfact/entail.hpp"
#include "chartfact/error.hpp"

using namespace chartfact;
namespace fs = std::filesystem;

namespace {

const TrendLexicon& lex() { return TrendLexicon::defaults(); }

bool entailed(const Table& t, std::string_view s) {
  const auto l = oracle_logits(t, s, lex());
  return l.yes > l.no;
}

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("chartfact_entail_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

class CountingBackend final : public EntailmentBackend {
 public:
  EntailmentLogits score(const EntailRequest& r) override {
    ++calls;
    if (r.sentence.find("boom") != std::string::npos) throw std::runtime_error("backend down");
    // more words, lower score; keeps per-sentence results distinguishable
    const double words = static_cast<double>(std::count(r.sentence.begin(), r.sentence.end(), ' '));
    return {1.0 - words, 0.0};
  }
  std::string id() const override { return "counting"; }
  std::atomic<int> calls{0};
};

}  // namespace

TEST(SentenceScore, SoftmaxOfYes) {
  EXPECT_DOUBLE_EQ(sentence_score({0.0, 0.0}), 0.5);
  EXPECT_NEAR(sentence_score({std::log(3.0), 0.0}), 0.75, 1e-12);
  EXPECT_NEAR(sentence_score({0.0, std::log(3.0)}), 0.25, 1e-12);
  // no overflow at large magnitudes
  EXPECT_DOUBLE_EQ(sentence_score({1000.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(sentence_score({-1000.0, 1000.0}), 0.0);
  EXPECT_NEAR(sentence_score({1000.0, 1000.0 + std::log(3.0)}), 0.25, 1e-12);
}

TEST(SentenceScore, ShiftInvariantAndBounded) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> d(-50, 50);
  for (int i = 0; i < 500; ++i) {
    const double y = d(rng), n = d(rng), c = d(rng);
    const double s = sentence_score({y, n});
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    EXPECT_NEAR(sentence_score({y + c, n + c}), s, 1e-9);
    EXPECT_NEAR(sentence_score({n, y}), 1.0 - s, 1e-12);
  }
}

TEST(CaptionScore, MinimumPooling) {
  EXPECT_DOUBLE_EQ(caption_score({0.9, 0.2, 0.7}), 0.2);
  EXPECT_DOUBLE_EQ(caption_score({0.4}), 0.4);
  try {
    caption_score({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyCaption);
  }
}

TEST(Prompt, Verbatim) {
  EXPECT_EQ(build_prompt("Sales rose."), "Does the image entail this statement: \"Sales rose.\"?");
}

TEST(Oracle, SupportedAndUnsupportedNumbers) {
  const auto t = parse_linearized("Year\tRate&&&1990\t26.7%&&&2014\t27.0%");
  EXPECT_TRUE(entailed(t, "Turnout was 26.7% in 1990."));
  EXPECT_TRUE(entailed(t, "By 2014 it was 27%."));
  EXPECT_FALSE(entailed(t, "Turnout was 20.4% in 1990."));
  EXPECT_FALSE(entailed(t, "It reached 27.0% in 2015."));
  const auto l = oracle_logits(t, "It was 99.", lex());
  EXPECT_DOUBLE_EQ(l.yes, -kOracleLogit);
  EXPECT_DOUBLE_EQ(l.no, kOracleLogit);
}

TEST(Oracle, YearsInHeadersCountAsKnown) {
  const auto t = parse_linearized("Group\t2014 share&&&Adults\t40");
  EXPECT_TRUE(entailed(t, "In 2014, adults were at 40."));
}

TEST(Oracle, TrendAgainstSingleValueColumn) {
  const auto up = parse_linearized("Year\tRate&&&1990\t10&&&2000\t20");
  EXPECT_TRUE(entailed(up, "The rate rose."));
  EXPECT_FALSE(entailed(up, "The rate fell."));
  const auto down = parse_linearized("Year\tRate&&&1990\t20&&&2000\t10");
  EXPECT_TRUE(entailed(down, "The rate declined."));
  EXPECT_FALSE(entailed(down, "The rate increased."));
  const auto flat = parse_linearized("Year\tRate&&&1990\t10&&&2000\t10");
  EXPECT_FALSE(entailed(flat, "The rate rose."));
  EXPECT_FALSE(entailed(flat, "The rate fell."));
  // two value columns: no single direction to check
  const auto two = parse_linearized("Year\tA\tB&&&1990\t10\t1&&&2000\t20\t2");
  EXPECT_TRUE(entailed(two, "A fell."));
  // a single row has no direction either
  EXPECT_TRUE(entailed(parse_linearized("Year\tRate&&&1990\t10"), "It fell."));
}

TEST(Oracle, PositivesOfGeneratedCorpusAreEntailed) {
  const auto t = parse_linearized("Year\tRate&&&2001\t12%&&&2002\t30%&&&2003\t41%");
  for (const auto& s : {"The rate rose from 12% in 2001 to 30% in 2002.", "It climbed to 41% by 2003."})
    EXPECT_TRUE(entailed(t, s)) << s;
}

TEST(ParseResponse, LogitsAndAnswers) {
  const auto l = parse_entail_response({{"logit_yes", 1.5}, {"logit_no", -0.5}, {"version", "x"}});
  EXPECT_DOUBLE_EQ(l.yes, 1.5);
  EXPECT_DOUBLE_EQ(l.no, -0.5);
  const auto yes = parse_entail_response({{"answer", " Yes "}});
  EXPECT_DOUBLE_EQ(yes.yes, kBinaryAnswerLogit);
  EXPECT_DOUBLE_EQ(yes.no, -kBinaryAnswerLogit);
  const auto no = parse_entail_response({{"answer", "no"}});
  EXPECT_DOUBLE_EQ(no.yes, -kBinaryAnswerLogit);
  for (const auto& bad : {nlohmann::json{{"answer", "maybe"}}, nlohmann::json{{"logit_yes", 1}},
                          nlohmann::json{{"logit_yes", "a"}, {"logit_no", 1}}, nlohmann::json::object()}) {
    try {
      parse_entail_response(bad);
      ADD_FAILURE() << bad.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::BackendUnavailable);
    }
  }
}

TEST(Request, WireBodyPrefersImage) {
  EntailRequest r;
  r.table = parse_linearized("a\tb&&&1\t2");
  r.prompt = "p";
  EXPECT_EQ(r.wire_body(), (nlohmann::json{{"table_linearized", "a\tb&&&1\t2"}, {"prompt", "p"}}));
  r.image_uri = "img.png";
  EXPECT_EQ(r.wire_body(), (nlohmann::json{{"image_uri", "img.png"}, {"prompt", "p"}}));
}

TEST(Fixture, ReplaysRecordedResponse) {
  const auto dir = scratch_dir("fixture");
  EntailRequest r;
  r.image_uri = "charts/1.png";
  r.sentence = "It rose.";
  r.prompt = build_prompt(r.sentence);
  wire::write_fixture(dir, wire::kEntailRoute, r.wire_body(),
                      {{"logit_yes", 0.0}, {"logit_no", std::log(3.0)}, {"version", "rec"}});
  FixtureEntailmentBackend backend(dir);
  EXPECT_NEAR(sentence_score(backend.score(r)), 0.25, 1e-12);
  r.prompt = build_prompt("It fell.");
  EXPECT_THROW(backend.score(r), Error);
  fs::remove_all(dir);
}

TEST(Caching, SecondCallIsAHit) {
  auto inner = std::make_shared<CountingBackend>();
  CachingBackend cache(inner);
  EntailRequest r;
  r.image_uri = "x";
  r.sentence = "a b";
  r.prompt = build_prompt(r.sentence);
  const auto first = cache.score(r);
  const auto second = cache.score(r);
  EXPECT_DOUBLE_EQ(first.yes, second.yes);
  EXPECT_EQ(inner->calls.load(), 1);
  EXPECT_EQ(cache.hits(), 1u);
  EXPECT_EQ(cache.misses(), 1u);
  EXPECT_EQ(cache.id(), "counting");
}

TEST(Selector, BuildsBackends) {
  EXPECT_EQ(make_entailment_backend("oracle")->id(), "oracle");
  EXPECT_EQ(make_entailment_backend("fixture:/tmp/x")->id(), "fixture:/tmp/x");
  EXPECT_EQ(make_entailment_backend("remote:http://127.0.0.1:9")->id(), "remote:http://127.0.0.1:9");
  EXPECT_THROW(make_entailment_backend("gpt"), Error);
}

TEST(ScoreCaption, PerSentenceThenMin) {
  CountingBackend backend;
  ChartRef chart{"c1", "img.png", std::nullopt};
  const auto caption = Caption::from_sentences({"One.", "Two words.", "Now three words."});
  for (std::size_t width : {1u, 2u, 8u}) {
    const auto report = score_caption(chart, caption, backend, ScoreOptions{width});
    ASSERT_EQ(report.per_sentence.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(report.per_sentence[i].first, i);
      const double words = static_cast<double>(i);
      EXPECT_NEAR(report.per_sentence[i].second, sentence_score({1.0 - words, 0.0}), 1e-12);
    }
    EXPECT_NEAR(report.caption_score, report.per_sentence[2].second, 1e-12);
    EXPECT_EQ(report.backend_id, "counting");
  }
  const auto j = to_json(score_caption(chart, caption, backend));
  EXPECT_EQ(j["per_sentence"].size(), 3u);
  EXPECT_TRUE(j.contains("caption_score"));
}

TEST(ScoreCaption, FailuresCarryTheSentenceIndex) {
  CountingBackend backend;
  const auto caption = Caption::from_sentences({"Fine.", "Goes boom.", "Fine too."});
  try {
    score_caption({"c", "i", std::nullopt}, caption, backend, ScoreOptions{1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BackendUnavailable);
    EXPECT_EQ(e.index(), 1u);
  }
  try {
    score_caption({"c", "i", std::nullopt}, Caption::from_sentences({}), backend);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyCaption);
  }
}
