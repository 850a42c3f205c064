#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartfact/table.hpp"
#include "chartfact/textseg.hpp"
#include "chartfact/wire.hpp"

namespace chartfact {

struct TitledTable {
  std::string title;
  Table table;
};

// Stage 1: chart image -> (title, table).
class Chart2TableBackend {
 public:
  virtual ~Chart2TableBackend() = default;
  virtual TitledTable convert(const ChartRef& chart) = 0;
  virtual std::string id() const = 0;
};

// Uses the chart's gold table (and its title, when set) instead of a model.
class GoldTableBackend final : public Chart2TableBackend {
 public:
  TitledTable convert(const ChartRef& chart) override;
  std::string id() const override { return "gold"; }
};

class FixtureChart2TableBackend final : public Chart2TableBackend {
 public:
  explicit FixtureChart2TableBackend(std::filesystem::path dir) : dir_(std::move(dir)) {}
  TitledTable convert(const ChartRef& chart) override;
  std::string id() const override { return "fixture:" + dir_.string(); }

 private:
  std::filesystem::path dir_;
};

class RemoteChart2TableBackend final : public Chart2TableBackend {
 public:
  explicit RemoteChart2TableBackend(std::string base_url, wire::ClientOptions options = {})
      : client_(std::move(base_url), options) {}
  TitledTable convert(const ChartRef& chart) override;
  std::string id() const override { return "remote:" + client_.base_url(); }

 private:
  wire::Client client_;
};

nlohmann::json chart2table_request_body(const ChartRef& chart);
TitledTable parse_chart2table_response(const nlohmann::json& response);

// Selectors: "gold", "fixture:<dir>", "remote:<base-url>".
std::unique_ptr<Chart2TableBackend> make_chart2table_backend(std::string_view selector);

struct RectifyRequest {
  std::string title;
  Table table;
  std::string caption;
  std::string template_id;
  std::string prompt;  // rendered locally; kept for audit logs

  nlohmann::json wire_body() const;
};

// Stage 2: returns the model's raw text.
class RectifierBackend {
 public:
  virtual ~RectifierBackend() = default;
  virtual std::string rectify(const RectifyRequest& request) = 0;
  virtual std::string id() const = 0;
};

// Deterministic table-grounded rectifier. Numbers missing from the table
// are replaced when the sentence pins down one (row, value column) cell;
// trend terms that contradict a single value column are flipped.
class TableRectifier final : public RectifierBackend {
 public:
  explicit TableRectifier(TrendLexicon lexicon = TrendLexicon::defaults())
      : lexicon_(std::move(lexicon)) {}
  std::string rectify(const RectifyRequest& request) override;
  std::string id() const override { return "oracle"; }

 private:
  TrendLexicon lexicon_;
};

class FixtureRectifierBackend final : public RectifierBackend {
 public:
  explicit FixtureRectifierBackend(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::string rectify(const RectifyRequest& request) override;
  std::string id() const override { return "fixture:" + dir_.string(); }

 private:
  std::filesystem::path dir_;
};

class RemoteRectifierBackend final : public RectifierBackend {
 public:
  explicit RemoteRectifierBackend(std::string base_url, wire::ClientOptions options = {})
      : client_(std::move(base_url), options) {}
  std::string rectify(const RectifyRequest& request) override;
  std::string id() const override { return "remote:" + client_.base_url(); }

 private:
  wire::Client client_;
};

// Selectors: "oracle", "fixture:<dir>", "remote:<base-url>".
std::unique_ptr<RectifierBackend> make_rectifier_backend(
    std::string_view selector, const TrendLexicon& lexicon = TrendLexicon::defaults());

inline constexpr std::string_view kCorrectedMarker = "CORRECTED CAPTION:";
inline constexpr std::string_view kNoErrorsLine = "NO ERRORS";

std::string_view default_rectification_template();

// "default" for the built-in template, otherwise "sha256:" + 16 hex digits.
std::string template_id(std::string_view template_text);

// Substitutes {TITLE}, {TABLE} (linearized) and {CAPTION}.
std::string render_rectification_prompt(std::string_view title, const Table& table,
                                        std::string_view caption,
                                        std::string_view template_text =
                                            default_rectification_template());

struct RectifierOutput {
  std::string explanation;
  std::string corrected;
  bool declared_no_errors = false;
};

// Splits at the last marker. Throws Errc::MissingMarker when the marker is
// absent or nothing follows it.
RectifierOutput parse_rectifier_response(std::string_view raw);

enum class CorrectionStatus { Corrected, Unchanged, ParseFallback };

std::string_view status_name(CorrectionStatus s) noexcept;

struct CorrectionResult {
  Caption original;
  std::string corrected;
  std::string explanation;
  std::size_t edit_distance = 0;
  std::string title;
  std::optional<Table> table_used;
  CorrectionStatus status = CorrectionStatus::Unchanged;
};

struct CorrectionOptions {
  std::string template_text{default_rectification_template()};
  // corrections editing more than this fraction of the caption's characters
  // are downgraded to Unchanged
  std::optional<double> max_edit_ratio;
};

// Throws Errc::EmptyCaption for an empty caption and
// Errc::BackendUnavailable when either stage fails. A response without the
// marker yields ParseFallback with the original caption.
CorrectionResult correct_caption(const ChartRef& chart, const Caption& caption,
                                 Chart2TableBackend& c2t, RectifierBackend& rectifier,
                                 const CorrectionOptions& options = {});

struct CorrectionJob {
  std::string id;
  ChartRef chart;
  Caption caption;
};

struct BatchOutcome {
  std::string id;
  std::optional<CorrectionResult> result;
  std::string error_code;  // empty on success
  std::string error_message;
};

// Runs every job, at most `concurrency_limit` at a time; outcomes come back
// in input order and a failing job never stops the others.
std::vector<BatchOutcome> batch_correct(const std::vector<CorrectionJob>& jobs,
                                        Chart2TableBackend& c2t, RectifierBackend& rectifier,
                                        std::size_t concurrency_limit,
                                        const CorrectionOptions& options = {});

nlohmann::ordered_json to_json(const BatchOutcome& outcome);

}  // namespace chartfact
