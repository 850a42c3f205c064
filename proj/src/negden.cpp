#include "chartfact/negden.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "chartfact/error.hpp"

namespace chartfact {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
  for (char c : key) mix(static_cast<unsigned char>(c));
  // splitmix64 finalizer
  h += 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

std::string_view family_name(NegativeFamily f) noexcept {
  switch (f) {
    case NegativeFamily::ValueLabel: return "ValueLabel";
    case NegativeFamily::Trend: return "Trend";
    case NegativeFamily::OutOfContext: return "OutOfContext";
  }
  return {};
}

std::optional<NegativeFamily> parse_family(std::string_view name) noexcept {
  if (name == "ValueLabel" || name == "value") return NegativeFamily::ValueLabel;
  if (name == "Trend" || name == "trend") return NegativeFamily::Trend;
  if (name == "OutOfContext" || name == "ooc") return NegativeFamily::OutOfContext;
  return std::nullopt;
}

std::string_view split_name(Split s) noexcept {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return {};
}

std::string EntailmentInstance::origin_name() const {
  if (negative) return "Generated:" + std::string(family_name(negative->family));
  return positive_origin == PositiveOrigin::QA ? "RepurposedQA" : "RepurposedCaption";
}

namespace {

std::string splice(const std::string& s, Span span, const std::string& replacement) {
  std::string out = s.substr(0, span.begin);
  out += replacement;
  out += s.substr(span.end);
  return out;
}

// Text that takes the place of `match` when the cell is swapped for `to`.
std::string replacement_text(const MentionMatch& match, const Cell& from, const Cell& to) {
  const auto& src = std::get<TableCellSource>(match.source);
  if (src.form == TableCellSource::Form::Raw || !to.numeric()) {
    if (src.form == TableCellSource::Form::Raw && from.numeric() && to.numeric() &&
        from.numeric()->is_percent != to.numeric()->is_percent) {
      auto bare = format_decimal(to.numeric()->value);
      if (from.numeric()->is_percent) bare.push_back('%');
      return bare;
    }
    return to.raw();
  }
  auto bare = format_decimal(to.numeric()->value);
  return src.form == TableCellSource::Form::GroupedNumber ? group_thousands(bare) : bare;
}

// First k indices of a partial Fisher-Yates shuffle of [0, n), sorted.
std::vector<std::size_t> choose_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, n);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.index(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::vector<NegativeSample> gen_value_label_negatives(const Table& table,
                                                      const std::string& positive, Rng& rng,
                                                      std::size_t max_per_sentence,
                                                      const std::string& chart_id) {
  struct Eligible {
    MentionMatch match;
    std::vector<std::size_t> alternative_rows;
  };
  std::vector<Eligible> eligible;
  for (auto& m : find_value_mentions(positive, table)) {
    const auto& src = std::get<TableCellSource>(m.source);
    const Cell& old_cell = table.at(src.row, src.col);
    std::vector<std::size_t> alts;
    for (std::size_t r = 0; r < table.num_rows(); ++r) {
      const Cell& cand = table.at(r, src.col);
      if (cand.raw() == old_cell.raw()) continue;
      const auto text = replacement_text(m, old_cell, cand);
      if (text.empty() || text == m.matched_text) continue;
      alts.push_back(r);
    }
    if (!alts.empty()) eligible.push_back(Eligible{std::move(m), std::move(alts)});
  }

  std::vector<NegativeSample> out;
  for (auto i : choose_without_replacement(eligible.size(), max_per_sentence, rng)) {
    const auto& e = eligible[i];
    const auto& src = std::get<TableCellSource>(e.match.source);
    const auto new_row = e.alternative_rows[rng.index(e.alternative_rows.size())];
    auto new_text = replacement_text(e.match, table.at(src.row, src.col), table.at(new_row, src.col));
    NegativeSample s;
    s.chart_id = chart_id;
    s.positive = positive;
    s.negative = splice(positive, e.match.span, new_text);
    s.family = NegativeFamily::ValueLabel;
    s.provenance = ValueLabelProvenance{e.match.span, CellRef{src.row, src.col},
                                        CellRef{new_row, src.col}, e.match.matched_text,
                                        std::move(new_text)};
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<NegativeSample> gen_value_label_negatives(const Table& table,
                                                      const std::string& positive,
                                                      std::uint64_t rng_seed,
                                                      std::size_t max_per_sentence,
                                                      const std::string& chart_id) {
  Rng rng(rng_seed);
  return gen_value_label_negatives(table, positive, rng, max_per_sentence, chart_id);
}

std::vector<NegativeSample> gen_trend_negatives(const std::string& positive,
                                                const TrendLexicon& lexicon,
                                                const std::string& chart_id) {
  std::vector<NegativeSample> out;
  for (const auto& m : find_trend_terms(positive, lexicon)) {
    auto replacement = antonym_for(m, lexicon);
    NegativeSample s;
    s.chart_id = chart_id;
    s.positive = positive;
    s.negative = splice(positive, m.span, replacement);
    s.family = NegativeFamily::Trend;
    s.provenance = TrendProvenance{m.span, m.matched_text, std::move(replacement)};
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

// Chart ids in first-appearance order with every (entry, sentence) pair.
struct CorpusIndex {
  std::vector<std::string> ids;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> sentences;
  std::unordered_map<std::string, std::size_t> position;

  explicit CorpusIndex(const Corpus& corpus) {
    for (std::size_t e = 0; e < corpus.size(); ++e) {
      const auto& id = corpus[e].chart.id;
      auto [it, inserted] = position.emplace(id, ids.size());
      if (inserted) {
        ids.push_back(id);
        sentences.emplace_back();
      }
      for (std::size_t s = 0; s < corpus[e].sentences.size(); ++s)
        sentences[it->second].emplace_back(e, s);
    }
  }
};

std::optional<NegativeSample> sample_ooc(const std::string& chart_id, const std::string& positive,
                                         const Corpus& corpus, const CorpusIndex& index,
                                         Rng& rng) {
  if (index.ids.size() < 2)
    throw Error(Errc::InsufficientCorpus, "out-of-context sampling needs at least two charts");

  std::vector<std::size_t> others;
  others.reserve(index.ids.size());
  for (std::size_t i = 0; i < index.ids.size(); ++i)
    if (index.ids[i] != chart_id) others.push_back(i);

  while (!others.empty()) {
    const auto pick = rng.index(others.size());
    const auto chart = others[pick];
    std::vector<std::pair<std::size_t, std::size_t>> usable;
    for (const auto& es : index.sentences[chart])
      if (corpus[es.first].sentences[es.second] != positive) usable.push_back(es);
    if (usable.empty()) {
      others.erase(others.begin() + static_cast<std::ptrdiff_t>(pick));
      continue;
    }
    const auto [entry, sent] = usable[rng.index(usable.size())];
    NegativeSample s;
    s.chart_id = chart_id;
    s.positive = positive;
    s.negative = corpus[entry].sentences[sent];
    s.family = NegativeFamily::OutOfContext;
    s.provenance = OutOfContextProvenance{index.ids[chart], sent};
    return s;
  }
  return std::nullopt;
}

std::vector<std::size_t> split_sizes(std::size_t n, const std::array<double, 3>& ratio) {
  const double total = ratio[0] + ratio[1] + ratio[2];
  if (!(total > 0) || ratio[0] < 0 || ratio[1] < 0 || ratio[2] < 0)
    throw Error(Errc::InvalidArgument, "split ratio must be non-negative with a positive sum");
  std::vector<std::size_t> sizes(3);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * ratio[i] / total;
    sizes[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += sizes[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++sizes[remainders[k % 3].second];
  return sizes;
}

}  // namespace

std::optional<NegativeSample> gen_ooc_negative(const std::string& chart_id,
                                               const std::string& positive, const Corpus& corpus,
                                               std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  return sample_ooc(chart_id, positive, corpus, CorpusIndex(corpus), rng);
}

std::vector<EntailmentInstance> generate_all(const Corpus& corpus, const TrendLexicon& lexicon,
                                             std::uint64_t rng_seed,
                                             const GenerationConfig& config) {
  const CorpusIndex index(corpus);
  if (index.ids.size() != corpus.size())
    throw Error(Errc::InvalidArgument, "chart ids must be unique within a corpus");
  if (config.value_label) {
    for (std::size_t e = 0; e < corpus.size(); ++e)
      if (!corpus[e].chart.gold_table)
        throw Error(Errc::InvalidArgument,
                    "chart '" + corpus[e].chart.id + "' has no data table", e);
  }
  if (config.out_of_context && index.ids.size() < 2)
    throw Error(Errc::InsufficientCorpus, "out-of-context sampling needs at least two charts");

  // split assignment: sorted ids shuffled by a dedicated stream
  std::vector<std::string> ids = index.ids;
  std::sort(ids.begin(), ids.end());
  Rng split_rng(derive_seed(rng_seed, "\x1fsplit"));
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[split_rng.index(i)]);
  const auto sizes = split_sizes(ids.size(), config.split_ratio);
  std::unordered_map<std::string, Split> split_of;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    split_of[ids[i]] = i < sizes[0] ? Split::Train : i < sizes[0] + sizes[1] ? Split::Dev
                                                                            : Split::Test;
  }

  auto run_chart = [&](std::size_t e) {
    const auto& entry = corpus[e];
    const auto& id = entry.chart.id;
    const Split split = split_of.at(id);
    Rng rng(derive_seed(rng_seed, id));
    std::vector<EntailmentInstance> out;
    auto emit_negative = [&](NegativeSample s) {
      EntailmentInstance inst;
      inst.chart_id = id;
      inst.sentence = s.negative;
      inst.label = Label::NotEntailment;
      inst.negative = std::move(s);
      inst.split = split;
      out.push_back(std::move(inst));
    };
    for (const auto& sentence : entry.sentences) {
      EntailmentInstance pos;
      pos.chart_id = id;
      pos.sentence = sentence;
      pos.label = Label::Entailment;
      pos.positive_origin = entry.origin;
      pos.split = split;
      out.push_back(std::move(pos));

      if (config.value_label) {
        for (auto& s : gen_value_label_negatives(*entry.chart.gold_table, sentence, rng,
                                                 config.max_per_sentence, id))
          emit_negative(std::move(s));
      }
      if (config.trend) {
        auto trends = gen_trend_negatives(sentence, lexicon, id);
        for (auto i : choose_without_replacement(trends.size(), config.max_per_sentence, rng))
          emit_negative(std::move(trends[i]));
      }
      if (config.out_of_context) {
        if (auto s = sample_ooc(id, sentence, corpus, index, rng)) emit_negative(std::move(*s));
      }
    }
    return out;
  };

  std::vector<std::vector<EntailmentInstance>> per_chart(corpus.size());
  const std::size_t workers = std::max<std::size_t>(1, config.threads);
  if (workers == 1) {
    for (std::size_t e = 0; e < corpus.size(); ++e) per_chart[e] = run_chart(e);
  } else {
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t e = w; e < corpus.size(); e += workers) per_chart[e] = run_chart(e);
      }));
    }
    for (auto& j : jobs) j.get();
  }

  std::vector<EntailmentInstance> all;
  for (auto& chunk : per_chart)
    for (auto& inst : chunk) all.push_back(std::move(inst));
  return all;
}

nlohmann::ordered_json to_json(const EntailmentInstance& inst) {
  nlohmann::ordered_json j;
  j["chart_id"] = inst.chart_id;
  j["sentence"] = inst.sentence;
  j["label"] = inst.label == Label::Entailment ? "Entailment" : "NotEntailment";
  j["origin"] = inst.origin_name();
  if (!inst.negative) {
    j["provenance"] = nullptr;
  } else {
    const auto& s = *inst.negative;
    nlohmann::ordered_json p;
    p["family"] = family_name(s.family);
    p["positive"] = s.positive;
    std::visit(
        [&p](const auto& prov) {
          using T = std::decay_t<decltype(prov)>;
          if constexpr (std::is_same_v<T, ValueLabelProvenance>) {
            p["span"] = {prov.span.begin, prov.span.end};
            p["old_cell"] = {prov.old_cell.row, prov.old_cell.col};
            p["new_cell"] = {prov.new_cell.row, prov.new_cell.col};
            p["old_text"] = prov.old_text;
            p["new_text"] = prov.new_text;
          } else if constexpr (std::is_same_v<T, TrendProvenance>) {
            p["span"] = {prov.span.begin, prov.span.end};
            p["old_term"] = prov.old_term;
            p["new_term"] = prov.new_term;
          } else {
            p["source_chart_id"] = prov.source_chart_id;
            p["source_sentence_index"] = prov.source_sentence_index;
          }
        },
        s.provenance);
    j["provenance"] = std::move(p);
  }
  j["split"] = split_name(inst.split);
  return j;
}

}  // namespace chartfact
