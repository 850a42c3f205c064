#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartfact/table.hpp"
#include "chartfact/textseg.hpp"

namespace chartfact {

enum class ErrorType { Value, Label, Trend, Magnitude, OutOfContext, Nonsense, Grammatical };

inline constexpr std::array<ErrorType, 7> kAllErrorTypes{
    ErrorType::Value,        ErrorType::Label,    ErrorType::Trend,      ErrorType::Magnitude,
    ErrorType::OutOfContext, ErrorType::Nonsense, ErrorType::Grammatical};

std::string_view error_type_name(ErrorType t) noexcept;
// Exact spelling only ("Value", "OutOfContext", ...).
std::optional<ErrorType> parse_error_type(std::string_view name) noexcept;

// Grammatical errors are not factual errors.
constexpr bool is_factual_error(ErrorType t) noexcept { return t != ErrorType::Grammatical; }

using ErrorSet = std::set<ErrorType>;

bool has_factual_error(const ErrorSet& labels) noexcept;

enum class DataSplit { LVLM, LLM, FT };
inline constexpr std::array<DataSplit, 3> kAllSplits{DataSplit::LVLM, DataSplit::LLM, DataSplit::FT};

std::string_view data_split_name(DataSplit s) noexcept;
std::optional<DataSplit> parse_data_split(std::string_view name) noexcept;

enum class DatasetOrigin { VisText, Pew };

std::string_view origin_name(DatasetOrigin o) noexcept;
std::optional<DatasetOrigin> parse_origin(std::string_view name) noexcept;

// The six captioners, spelled as stored: GPT-4V, Bard, DePlot+GPT-4,
// ChartT5, UniChart, MatCha.
const std::vector<std::string>& known_models();
std::optional<DataSplit> split_for_model(std::string_view model) noexcept;

struct ChocolateInstance {
  std::string id;
  DataSplit split = DataSplit::LVLM;
  std::string source_model;
  DatasetOrigin dataset_origin = DatasetOrigin::VisText;
  ChartRef chart;
  std::optional<std::string> chart_title;
  Caption caption;
  // annotations[sentence][annotator]; absent when only resolved labels exist
  std::optional<std::vector<std::vector<ErrorSet>>> annotations;
  std::vector<ErrorSet> resolved_labels;

  bool sentence_factual(std::size_t i) const { return !has_factual_error(resolved_labels.at(i)); }
  bool caption_factual() const;
  // Fraction of factual sentences, the human score used for correlation.
  double factual_fraction() const;
};

// A type is kept when at least half of the annotators marked it (strict
// majority, with exact ties kept). Throws Errc::InvalidArgument for fewer
// than two annotators.
ErrorSet aggregate_annotations(const std::vector<ErrorSet>& per_annotator);

// One JSON record per line. Errors are Errc::SchemaViolation naming the
// line, instance id and field path.
std::vector<ChocolateInstance> load_dataset(const std::filesystem::path& path);
std::vector<ChocolateInstance> parse_dataset(std::string_view jsonl);
void save_dataset(const std::filesystem::path& path, const std::vector<ChocolateInstance>& data);
std::string serialize_dataset(const std::vector<ChocolateInstance>& data);

ChocolateInstance instance_from_json(const nlohmann::json& record);
nlohmann::ordered_json to_json(const ChocolateInstance& instance);

// Converts the publicly released layout (a JSON/JSONL file, or a directory
// of them) into instances. Key names and enum spellings are matched
// loosely; see README for the accepted variants.
std::vector<ChocolateInstance> import_released(const std::filesystem::path& path);
ChocolateInstance import_released_record(const nlohmann::json& record,
                                         std::optional<DataSplit> split_hint = std::nullopt);

struct FactualCounts {
  std::size_t factual = 0;
  std::size_t non_factual = 0;
  std::size_t total() const noexcept { return factual + non_factual; }
  friend bool operator==(const FactualCounts&, const FactualCounts&) = default;
};

struct SplitRow {
  FactualCounts sentences;
  FactualCounts captions;
  friend bool operator==(const SplitRow&, const SplitRow&) = default;
};

struct SplitStats {
  std::array<SplitRow, 3> per_split{};  // indexed by DataSplit
  SplitRow total;

  const SplitRow& at(DataSplit s) const { return per_split[static_cast<std::size_t>(s)]; }
};

SplitStats split_stats(const std::vector<ChocolateInstance>& instances);

}  // namespace chartfact
