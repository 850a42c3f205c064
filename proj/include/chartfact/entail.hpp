#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartfact/table.hpp"
#include "chartfact/textseg.hpp"
#include "chartfact/wire.hpp"

namespace chartfact {

struct EntailmentLogits {
  double yes = 0.0;
  double no = 0.0;
};

// Pseudo-logits used for backends that only answer yes or no.
inline constexpr double kBinaryAnswerLogit = 10.0;

// Oracle constants.
inline constexpr double kOracleLogit = 2.0;
inline constexpr double kOracleRelativeTolerance = 1e-9;

// `Does the image entail this statement: "SENTENCE"?` with the sentence
// substituted verbatim.
std::string build_prompt(std::string_view sentence);

// exp(yes) / (exp(yes) + exp(no)), evaluated after subtracting the larger logit.
double sentence_score(const EntailmentLogits& logits);

// Minimum of the per-sentence scores; throws Errc::EmptyCaption on an empty list.
double caption_score(const std::vector<double>& per_sentence_scores);

struct EntailRequest {
  std::string chart_id;
  std::optional<std::string> image_uri;
  std::optional<Table> table;
  std::string sentence;
  std::string prompt;

  // Wire envelope: image_uri when known, otherwise the linearized table.
  nlohmann::json wire_body() const;
};

class EntailmentBackend {
 public:
  virtual ~EntailmentBackend() = default;
  virtual EntailmentLogits score(const EntailRequest& request) = 0;
  virtual std::string id() const = 0;
  // Serial backends are never called from more than one thread at a time.
  virtual bool serial() const { return false; }
};

// Deterministic table-grounded judge. Scores (+2, -2) unless the sentence
// states a number absent from the table (and from year-like header tokens),
// or a trend term contradicts the direction of the table's single value
// column, in which case it scores (-2, +2).
EntailmentLogits oracle_logits(const Table& table, std::string_view sentence,
                               const TrendLexicon& lexicon);

class OracleBackend final : public EntailmentBackend {
 public:
  explicit OracleBackend(TrendLexicon lexicon = TrendLexicon::defaults())
      : lexicon_(std::move(lexicon)) {}
  EntailmentLogits score(const EntailRequest& request) override;
  std::string id() const override { return "oracle"; }

 private:
  TrendLexicon lexicon_;
};

// Replays responses recorded under <dir>/entail/<content hash>.json.
class FixtureEntailmentBackend final : public EntailmentBackend {
 public:
  explicit FixtureEntailmentBackend(std::filesystem::path dir) : dir_(std::move(dir)) {}
  EntailmentLogits score(const EntailRequest& request) override;
  std::string id() const override { return "fixture:" + dir_.string(); }

 private:
  std::filesystem::path dir_;
};

class RemoteEntailmentBackend final : public EntailmentBackend {
 public:
  explicit RemoteEntailmentBackend(std::string base_url, wire::ClientOptions options = {})
      : client_(std::move(base_url), options) {}
  EntailmentLogits score(const EntailRequest& request) override;
  std::string id() const override { return "remote:" + client_.base_url(); }

 private:
  wire::Client client_;
};

// Parses an entail response envelope: {logit_yes, logit_no} or a bare
// {answer: "yes"|"no"} mapped to +/-kBinaryAnswerLogit.
EntailmentLogits parse_entail_response(const nlohmann::json& response);

// Memoizes another backend by request content hash.
class CachingBackend final : public EntailmentBackend {
 public:
  explicit CachingBackend(std::shared_ptr<EntailmentBackend> inner) : inner_(std::move(inner)) {}
  EntailmentLogits score(const EntailRequest& request) override;
  std::string id() const override { return inner_->id(); }
  bool serial() const override { return inner_->serial(); }

  std::size_t hits() const;
  std::size_t misses() const;

 private:
  std::shared_ptr<EntailmentBackend> inner_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, EntailmentLogits> cache_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

// Selector strings: "oracle", "fixture:<dir>", "remote:<base-url>".
// The result is wrapped in a CachingBackend.
std::shared_ptr<EntailmentBackend> make_entailment_backend(
    std::string_view selector, const TrendLexicon& lexicon = TrendLexicon::defaults());

struct FactualityReport {
  std::vector<std::pair<std::size_t, double>> per_sentence;
  double caption_score = 0.0;
  std::string backend_id;
};

struct ScoreOptions {
  std::size_t max_concurrency = 4;
};

// Queries the backend once per sentence, then min-pools. Backend failures
// surface as Errc::BackendUnavailable carrying the sentence index.
FactualityReport score_caption(const ChartRef& chart, const Caption& caption,
                               EntailmentBackend& backend, const ScoreOptions& options = {});

nlohmann::ordered_json to_json(const FactualityReport& report);

}  // namespace chartfact
