#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chartfact/table.hpp"

namespace chartfact {

// Unit-cost edit distance over Unicode scalar values of UTF-8 input.
std::size_t levenshtein(std::string_view a, std::string_view b);
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);

// levenshtein / max length, 0 for two empty strings.
double normalized_levenshtein(std::string_view a, std::string_view b);

struct RankedPairSeries {
  std::vector<double> metric_scores;
  std::vector<double> human_scores;
};

// Pair counts behind tau-b.
struct KendallCounts {
  std::int64_t concordant = 0;
  std::int64_t discordant = 0;
  std::int64_t tied_x_only = 0;
  std::int64_t tied_y_only = 0;
  std::int64_t tied_both = 0;
};

// O(n log n) pair counting (sort + merge-sort inversion count).
KendallCounts kendall_counts(std::span<const double> x, std::span<const double> y);

// Tau-b: (C - D) / sqrt((C + D + Tx)(C + D + Ty)). Returns nullopt when one
// denominator factor is zero; throws Errc::DegenerateSeries when both are
// (every pair tied in both series) and Errc::InvalidArgument for mismatched
// or too-short input.
std::optional<double> kendall_tau(const RankedPairSeries& series);

// Tau-b from precomputed counts; same contract as kendall_tau.
std::optional<double> tau_b_from_counts(const KendallCounts& counts);

// Probability that a random positive outranks a random negative, ties
// counted as one half. Throws Errc::SingleClass when a class is missing.
double roc_auc(std::span<const double> scores, std::span<const bool> labels);
double roc_auc(const std::vector<double>& scores, const std::vector<bool>& labels);

// Table entry used by rms_f1: (row header, column header, value).
struct TableEntry {
  std::string row_header;
  std::string column_header;
  Cell value;
};

// Column 0 supplies row headers; every other cell becomes an entry. A
// single-column table yields entries with an empty row header.
std::vector<TableEntry> table_entries(const Table& table);

// (1 - NL(r c, r' c')) * value term, where the value term is
// 1 - min(1, |v - v'| / |v'|) for a numeric gold value and string equality
// otherwise.
double entry_similarity(const TableEntry& predicted, const TableEntry& gold);

// Maximum-weight one-to-one assignment (Hungarian method). Returns the
// column assigned to each row, or -1.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights);

// Harmonic mean of precision (matched similarity / |pred|) and recall
// (matched similarity / |gold|) under the optimal assignment.
double rms_f1(const Table& predicted, const Table& gold);

// counts[item][category]; every row must sum to the same n >= 2.
class AnnotationMatrix {
 public:
  explicit AnnotationMatrix(std::vector<std::vector<std::uint32_t>> counts);

  std::size_t items() const noexcept { return counts_.size(); }
  std::size_t categories() const noexcept { return categories_; }
  std::uint32_t raters() const noexcept { return raters_; }
  const std::vector<std::vector<std::uint32_t>>& counts() const noexcept { return counts_; }

 private:
  std::vector<std::vector<std::uint32_t>> counts_;
  std::size_t categories_ = 0;
  std::uint32_t raters_ = 0;
};

// Throws Errc::DegenerateAgreement when expected agreement is 1.
double fleiss_kappa(const AnnotationMatrix& matrix);

// Percentage (0-100) of items whose modal category holds a strict majority.
double majority_agreement(const AnnotationMatrix& matrix);

// "92.31 (12/13)", or "N/A (0/0)" with an empty denominator.
std::string format_rate(std::size_t numerator, std::size_t denominator);

}  // namespace chartfact
