#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "chartfact/table.hpp"

namespace chartfact {

struct Sentence {
  std::string text;
  std::size_t index = 0;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Caption {
  std::string raw;
  std::vector<Sentence> sentences;

  static Caption from_text(std::string raw);
  static Caption from_sentences(const std::vector<std::string>& sentences);
};

// Splits on '.', '!' or '?' when followed by whitespace and an uppercase
// letter (or by end of text). Decimal points, listed abbreviations and
// ellipses never end a sentence.
std::vector<Sentence> segment_sentences(std::string_view raw_caption);

enum class Polarity { Up, Down };

inline Polarity opposite(Polarity p) noexcept { return p == Polarity::Up ? Polarity::Down : Polarity::Up; }

// Inflection slot of a matched trend word; antonym substitution keeps the slot.
enum class Inflection { Base, ThirdPerson, Past, PastParticiple, Gerund };

struct TrendPair {
  std::string up;    // left column of the lexicon file
  std::string down;  // right column
};

// Antonym pairs of lowercase trend terms. The left term of a pair names
// the increasing direction.
class TrendLexicon {
 public:
  TrendLexicon() = default;
  // Throws Errc::DuplicateTerm when a term appears in more than one pair.
  explicit TrendLexicon(std::vector<TrendPair> pairs);

  static const TrendLexicon& defaults();
  static TrendLexicon parse(std::string_view file_contents);
  static TrendLexicon load(const std::filesystem::path& path);

  const std::vector<TrendPair>& pairs() const noexcept { return pairs_; }
  const std::string& term(std::size_t pair_id, Polarity p) const {
    return p == Polarity::Up ? pairs_.at(pair_id).up : pairs_.at(pair_id).down;
  }

 private:
  std::vector<TrendPair> pairs_;
};

// Surface form of `term` in the given inflection slot ("rise", Past -> "rose").
std::string inflect(std::string_view term, Inflection slot);

struct TableCellSource {
  std::size_t row = 0;
  std::size_t col = 0;
  // how the sentence text relates to the cell: its raw text, or a
  // rendering of its number (bare, or with digit grouping)
  enum class Form { Raw, Number, GroupedNumber } form = Form::Raw;

  friend bool operator==(const TableCellSource&, const TableCellSource&) = default;
};

struct TrendTermSource {
  std::size_t pair_id = 0;
  Polarity polarity = Polarity::Up;
  Inflection inflection = Inflection::Base;

  friend bool operator==(const TrendTermSource&, const TrendTermSource&) = default;
};

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive, byte offsets
  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct MentionMatch {
  Span span;
  std::string matched_text;
  std::variant<TableCellSource, TrendTermSource> source;
};

// Data cells whose text (or, for numeric cells, number rendering) appears
// in the sentence at token boundaries. Matches contained in a longer match
// are dropped; among equal spans the first cell in row-major order wins.
// Results are ordered by span.
std::vector<MentionMatch> find_value_mentions(std::string_view sentence, const Table& table);

// Case-insensitive whole-word lexicon matches with inflections; spans are
// disjoint and ordered.
std::vector<MentionMatch> find_trend_terms(std::string_view sentence, const TrendLexicon& lexicon);

struct NumberToken {
  Span span;  // covers sign, currency, digits, '%' and a trailing scale word
  CellNumber number;
};

// Numbers written in running text ("20.4%", "$1.2 billion", "1,234").
// Digits glued to letters ("Q3", "1990s") are not numbers; the second half
// of a range such as "1986-2014" is read as positive.
std::vector<NumberToken> find_numbers(std::string_view sentence);

// Replacement text for a trend match: the antonym in the same inflection
// slot, with the matched word's capitalization pattern applied.
std::string antonym_for(const MentionMatch& match, const TrendLexicon& lexicon);

}  // namespace chartfact
