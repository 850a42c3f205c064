#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartfact/dataio.hpp"

namespace chartfact {

// Sentence-level error counts for one group of captions (a captioner, a
// split, or everything).
struct GroupErrorRates {
  std::string group;
  std::size_t sentences = 0;
  std::size_t non_factual_sentences = 0;
  std::size_t captions = 0;
  std::size_t factual_captions = 0;
  std::array<std::size_t, kAllErrorTypes.size()> sentences_with_type{};

  // percentages; 0 for an empty group
  double type_rate(ErrorType t) const;
  double factual_caption_rate() const;
  double non_factual_caption_rate() const;
};

struct ErrorRateReport {
  std::vector<GroupErrorRates> by_model;  // in known_models() order, empty groups skipped
  std::vector<GroupErrorRates> by_split;
  GroupErrorRates overall;
};

ErrorRateReport error_rates(const std::vector<ChocolateInstance>& instances);

nlohmann::ordered_json to_json(const GroupErrorRates& g);
nlohmann::ordered_json to_json(const ErrorRateReport& r);

// One sentence's judgement for one mention type.
struct MentionRecord {
  std::string model;
  DatasetOrigin origin = DatasetOrigin::VisText;
  ErrorType type = ErrorType::Value;
  bool has_mention = false;
  bool non_factual = false;  // ignored without a mention
};

struct MentionRate {
  std::string model;
  DatasetOrigin origin = DatasetOrigin::VisText;
  ErrorType type = ErrorType::Value;
  std::size_t numerator = 0;    // sentences with a non-factual mention
  std::size_t denominator = 0;  // sentences with a mention
  std::string formatted;        // "33.33 (2/6)"
};

// Sorted by (model, origin, type).
std::vector<MentionRate> mention_error_rate(const std::vector<MentionRecord>& records);

}  // namespace chartfact
