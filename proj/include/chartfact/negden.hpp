#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartfact/rng.hpp"
#include "chartfact/table.hpp"
#include "chartfact/textseg.hpp"

namespace chartfact {

enum class NegativeFamily { ValueLabel, Trend, OutOfContext };

std::string_view family_name(NegativeFamily f) noexcept;
std::optional<NegativeFamily> parse_family(std::string_view name) noexcept;

struct CellRef {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const CellRef&, const CellRef&) = default;
};

struct ValueLabelProvenance {
  Span span;  // in the positive sentence
  CellRef old_cell;
  CellRef new_cell;
  std::string old_text;  // sentence text at span
  std::string new_text;  // text substituted for it
};

struct TrendProvenance {
  Span span;
  std::string old_term;
  std::string new_term;
};

struct OutOfContextProvenance {
  std::string source_chart_id;
  std::size_t source_sentence_index = 0;
};

struct NegativeSample {
  std::string chart_id;
  std::string positive;
  std::string negative;
  NegativeFamily family = NegativeFamily::ValueLabel;
  std::variant<ValueLabelProvenance, TrendProvenance, OutOfContextProvenance> provenance;
};

// Value/label errors: each mention of a table cell is swapped for a
// different cell of the same column. At most `max_per_sentence` mentions
// are perturbed, picked uniformly without replacement.
std::vector<NegativeSample> gen_value_label_negatives(const Table& table,
                                                      const std::string& positive,
                                                      std::uint64_t rng_seed,
                                                      std::size_t max_per_sentence,
                                                      const std::string& chart_id = {});
std::vector<NegativeSample> gen_value_label_negatives(const Table& table,
                                                      const std::string& positive, Rng& rng,
                                                      std::size_t max_per_sentence,
                                                      const std::string& chart_id = {});

// Trend errors: one sample per matched trend term, replaced by its antonym.
std::vector<NegativeSample> gen_trend_negatives(const std::string& positive,
                                                const TrendLexicon& lexicon,
                                                const std::string& chart_id = {});

enum class PositiveOrigin { Caption, QA };

struct CorpusEntry {
  ChartRef chart;
  std::vector<std::string> sentences;
  PositiveOrigin origin = PositiveOrigin::Caption;
};

using Corpus = std::vector<CorpusEntry>;

// Out-of-context error: a positive sentence of a uniformly chosen other
// chart, paired with `chart_id`. Sentences identical to `positive` are never
// chosen; returns nullopt when no other sentence exists. Throws
// Errc::InsufficientCorpus when the corpus has fewer than two chart ids.
std::optional<NegativeSample> gen_ooc_negative(const std::string& chart_id,
                                               const std::string& positive, const Corpus& corpus,
                                               std::uint64_t rng_seed);

enum class Label { Entailment, NotEntailment };
enum class Split { Train, Dev, Test };

std::string_view split_name(Split s) noexcept;

struct EntailmentInstance {
  std::string chart_id;
  std::string sentence;
  Label label = Label::Entailment;
  PositiveOrigin positive_origin = PositiveOrigin::Caption;  // for positives
  std::optional<NegativeSample> negative;                    // set for generated negatives
  Split split = Split::Train;

  std::string origin_name() const;
};

struct GenerationConfig {
  bool value_label = true;
  bool trend = true;
  bool out_of_context = true;
  std::size_t max_per_sentence = 2;
  std::array<double, 3> split_ratio{522.0, 36.0, 37.0};  // train : dev : test
  std::size_t threads = 1;
};

// Positives plus the three negative families, split by chart id. Each chart
// draws from its own stream seeded with derive_seed(rng_seed, chart_id).
std::vector<EntailmentInstance> generate_all(const Corpus& corpus, const TrendLexicon& lexicon,
                                             std::uint64_t rng_seed,
                                             const GenerationConfig& config = {});

nlohmann::ordered_json to_json(const EntailmentInstance& instance);

}  // namespace chartfact
