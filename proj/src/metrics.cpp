#include "chartfact/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "chartfact/error.hpp"
#include "text_util.hpp"

namespace chartfact {

// ---------------------------------------------------------------------------
// Levenshtein

namespace {

// Hyyro's bit-vector formulation of Myers' algorithm; pattern length <= 64.
std::size_t levenshtein_bitvector(std::u32string_view pattern, std::u32string_view text) {
  const std::size_t m = pattern.size();
  std::unordered_map<char32_t, std::uint64_t> peq;
  for (std::size_t i = 0; i < m; ++i) peq[pattern[i]] |= std::uint64_t{1} << i;

  const std::uint64_t last = std::uint64_t{1} << (m - 1);
  std::uint64_t pv = ~std::uint64_t{0};
  std::uint64_t mv = 0;
  std::size_t score = m;
  for (char32_t c : text) {
    const auto it = peq.find(c);
    const std::uint64_t eq = it == peq.end() ? 0 : it->second;
    const std::uint64_t xv = eq | mv;
    const std::uint64_t xh = (((eq & pv) + pv) ^ pv) | eq;
    std::uint64_t ph = mv | ~(xh | pv);
    std::uint64_t mh = pv & xh;
    if (ph & last) ++score;
    if (mh & last) --score;
    ph = (ph << 1) | 1;
    mh <<= 1;
    pv = mh | ~(xv | ph);
    mv = ph & xv;
  }
  return score;
}

std::size_t levenshtein_rows(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  if (a.empty()) return b.size();
  if (a.size() <= 64) return levenshtein_bitvector(a, b);
  return levenshtein_rows(a, b);
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(std::u32string_view(text::decode_utf8(a)),
                     std::u32string_view(text::decode_utf8(b)));
}

double normalized_levenshtein(std::string_view a, std::string_view b) {
  const auto ua = text::decode_utf8(a);
  const auto ub = text::decode_utf8(b);
  const std::size_t longest = std::max(ua.size(), ub.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(levenshtein(ua, ub)) / static_cast<double>(longest);
}

// ---------------------------------------------------------------------------
// Kendall tau-b

namespace {

std::int64_t pairs_of(std::int64_t t) { return t * (t - 1) / 2; }

// Sorts v in place, returning the number of inversions removed.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                         std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
            buf.begin() + static_cast<std::ptrdiff_t>(hi), v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

KendallCounts kendall_counts(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(Errc::InvalidArgument, "kendall_tau: series lengths differ");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
      throw Error(Errc::InvalidArgument, "kendall_tau: non-finite value", i);

  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });

  std::int64_t tied_x = 0, tied_xy = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    tied_x += pairs_of(static_cast<std::int64_t>(j - i));
    for (std::size_t a = i; a < j;) {
      std::size_t b = a;
      while (b < j && y[order[b]] == y[order[a]]) ++b;
      tied_xy += pairs_of(static_cast<std::int64_t>(b - a));
      a = b;
    }
    i = j;
  }

  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const std::int64_t discordant = merge_count(ys, buf, 0, n);

  std::int64_t tied_y = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && ys[j] == ys[i]) ++j;
    tied_y += pairs_of(static_cast<std::int64_t>(j - i));
    i = j;
  }

  KendallCounts c;
  c.discordant = discordant;
  c.tied_both = tied_xy;
  c.tied_x_only = tied_x - tied_xy;
  c.tied_y_only = tied_y - tied_xy;
  c.concordant = pairs_of(static_cast<std::int64_t>(n)) - tied_x - tied_y + tied_xy - discordant;
  return c;
}

std::optional<double> tau_b_from_counts(const KendallCounts& c) {
  const std::int64_t untied = c.concordant + c.discordant;
  const std::int64_t fx = untied + c.tied_x_only;
  const std::int64_t fy = untied + c.tied_y_only;
  if (fx == 0 && fy == 0)
    throw Error(Errc::DegenerateSeries, "kendall_tau: every pair is tied in both series");
  if (fx == 0 || fy == 0) return std::nullopt;
  return static_cast<double>(c.concordant - c.discordant) /
         std::sqrt(static_cast<double>(fx) * static_cast<double>(fy));
}

std::optional<double> kendall_tau(const RankedPairSeries& series) {
  if (series.metric_scores.size() < 2)
    throw Error(Errc::InvalidArgument, "kendall_tau needs at least two pairs");
  return tau_b_from_counts(kendall_counts(series.metric_scores, series.human_scores));
}

// ---------------------------------------------------------------------------
// ROC AUC

double roc_auc(std::span<const double> scores, std::span<const bool> labels) {
  if (scores.size() != labels.size())
    throw Error(Errc::InvalidArgument, "roc_auc: scores and labels differ in length");
  std::int64_t positives = 0;
  for (bool l : labels) positives += l ? 1 : 0;
  const std::int64_t negatives = static_cast<std::int64_t>(labels.size()) - positives;
  if (positives == 0 || negatives == 0)
    throw Error(Errc::SingleClass, "roc_auc needs both positive and negative labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the positive rank sum, with tied groups sharing their mean rank.
  std::int64_t rank_sum2 = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::int64_t pos_in_group = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      pos_in_group += labels[order[j]] ? 1 : 0;
      ++j;
    }
    const auto doubled_mean_rank = static_cast<std::int64_t>(i + 1 + j);
    rank_sum2 += pos_in_group * doubled_mean_rank;
    i = j;
  }
  const std::int64_t u2 = rank_sum2 - positives * (positives + 1);
  return static_cast<double>(u2) / static_cast<double>(2 * positives * negatives);
}

double roc_auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  std::vector<char> copy(labels.begin(), labels.end());
  return roc_auc(std::span<const double>(scores),
                 std::span<const bool>(reinterpret_cast<const bool*>(copy.data()), copy.size()));
}

// ---------------------------------------------------------------------------
// RMS-F1

std::vector<TableEntry> table_entries(const Table& table) {
  std::vector<TableEntry> out;
  const bool single = table.num_columns() == 1;
  for (const auto& row : table.rows()) {
    for (std::size_t c = single ? 0 : 1; c < table.num_columns(); ++c) {
      out.push_back(TableEntry{single ? std::string() : row[0].raw(), table.header()[c], row[c]});
    }
  }
  return out;
}

double entry_similarity(const TableEntry& predicted, const TableEntry& gold) {
  const double key_sim =
      1.0 - normalized_levenshtein(predicted.row_header + " " + predicted.column_header,
                                   gold.row_header + " " + gold.column_header);
  double value_sim = 0.0;
  if (gold.value.numeric()) {
    if (predicted.value.numeric()) {
      const double v = predicted.value.numeric()->magnitude();
      const double g = gold.value.numeric()->magnitude();
      const double rel = g == 0.0 ? (v == 0.0 ? 0.0 : 1.0) : std::fabs(v - g) / std::fabs(g);
      value_sim = 1.0 - std::min(1.0, rel);
    }
  } else {
    value_sim = predicted.value.raw() == gold.value.raw() ? 1.0 : 0.0;
  }
  return key_sim * value_sim;
}

std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights) {
  const std::size_t rows = weights.size();
  if (rows == 0) return {};
  const std::size_t cols = weights.front().size();
  if (cols == 0) return std::vector<int>(rows, -1);

  // Hungarian method on costs -w; requires rows <= cols, so transpose if needed.
  const bool transposed = rows > cols;
  const std::size_t n = transposed ? cols : rows;
  const std::size_t m = transposed ? rows : cols;
  auto cost = [&](std::size_t i, std::size_t j) {
    return transposed ? -weights[j - 1][i - 1] : -weights[i - 1][j - 1];
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> assign(rows, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    if (transposed)
      assign[j - 1] = static_cast<int>(p[j] - 1);
    else
      assign[p[j] - 1] = static_cast<int>(j - 1);
  }
  return assign;
}

double rms_f1(const Table& predicted, const Table& gold) {
  const auto pred = table_entries(predicted);
  const auto ref = table_entries(gold);
  if (pred.empty() && ref.empty()) return 1.0;
  if (pred.empty() || ref.empty()) return 0.0;

  std::vector<std::vector<double>> sim(pred.size(), std::vector<double>(ref.size()));
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t j = 0; j < ref.size(); ++j) sim[i][j] = entry_similarity(pred[i], ref[j]);

  const auto assign = max_weight_assignment(sim);
  double matched = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (assign[i] >= 0) matched += sim[i][static_cast<std::size_t>(assign[i])];

  const double precision = matched / static_cast<double>(pred.size());
  const double recall = matched / static_cast<double>(ref.size());
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

// ---------------------------------------------------------------------------
// Agreement

AnnotationMatrix::AnnotationMatrix(std::vector<std::vector<std::uint32_t>> counts)
    : counts_(std::move(counts)) {
  if (counts_.empty()) throw Error(Errc::InvalidArgument, "annotation matrix has no items");
  categories_ = counts_.front().size();
  if (categories_ == 0) throw Error(Errc::InvalidArgument, "annotation matrix has no categories");
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i].size() != categories_)
      throw Error(Errc::InvalidArgument, "item " + std::to_string(i) + " has a different category count", i);
    const auto sum = std::accumulate(counts_[i].begin(), counts_[i].end(), std::uint32_t{0});
    if (i == 0) raters_ = sum;
    if (sum != raters_)
      throw Error(Errc::InvalidArgument,
                  "item " + std::to_string(i) + " has " + std::to_string(sum) + " ratings, expected " +
                      std::to_string(raters_),
                  i);
  }
  if (raters_ < 2) throw Error(Errc::InvalidArgument, "annotation matrix needs at least two raters");
}

double fleiss_kappa(const AnnotationMatrix& m) {
  const auto N = static_cast<double>(m.items());
  const auto n = static_cast<double>(m.raters());
  std::vector<std::uint64_t> column_totals(m.categories(), 0);
  double p_bar = 0.0;
  for (const auto& row : m.counts()) {
    std::uint64_t squares = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      squares += std::uint64_t{row[j]} * row[j];
      column_totals[j] += row[j];
    }
    p_bar += (static_cast<double>(squares) - n) / (n * (n - 1.0));
  }
  p_bar /= N;

  const std::uint64_t all = static_cast<std::uint64_t>(m.items()) * m.raters();
  if (std::count(column_totals.begin(), column_totals.end(), all) > 0)
    throw Error(Errc::DegenerateAgreement, "every rating falls in one category; kappa is undefined");
  double p_e = 0.0;
  for (auto t : column_totals) {
    const double pj = static_cast<double>(t) / (N * n);
    p_e += pj * pj;
  }
  return (p_bar - p_e) / (1.0 - p_e);
}

double majority_agreement(const AnnotationMatrix& m) {
  std::size_t agreed = 0;
  for (const auto& row : m.counts()) {
    const auto top = *std::max_element(row.begin(), row.end());
    if (2 * top > m.raters()) ++agreed;
  }
  return 100.0 * static_cast<double>(agreed) / static_cast<double>(m.items());
}

std::string format_rate(std::size_t numerator, std::size_t denominator) {
  char buf[96];
  if (denominator == 0) {
    std::snprintf(buf, sizeof buf, "N/A (%zu/%zu)", numerator, denominator);
  } else {
    std::snprintf(buf, sizeof buf, "%.2f (%zu/%zu)",
                  100.0 * static_cast<double>(numerator) / static_cast<double>(denominator),
                  numerator, denominator);
  }
  return buf;
}

}  // namespace chartfact
