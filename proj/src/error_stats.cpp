#include "chartfact/error_stats.hpp"

#include <map>
#include <tuple>

#include "chartfact/metrics.hpp"

namespace chartfact {

namespace {

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

void add(GroupErrorRates& g, const ChocolateInstance& inst) {
  ++g.captions;
  if (inst.caption_factual()) ++g.factual_captions;
  for (const auto& labels : inst.resolved_labels) {
    ++g.sentences;
    if (has_factual_error(labels)) ++g.non_factual_sentences;
    for (auto t : labels) ++g.sentences_with_type[static_cast<std::size_t>(t)];
  }
}

}  // namespace

double GroupErrorRates::type_rate(ErrorType t) const {
  return percent(sentences_with_type[static_cast<std::size_t>(t)], sentences);
}

double GroupErrorRates::factual_caption_rate() const { return percent(factual_captions, captions); }

double GroupErrorRates::non_factual_caption_rate() const {
  return percent(captions - factual_captions, captions);
}

ErrorRateReport error_rates(const std::vector<ChocolateInstance>& instances) {
  ErrorRateReport report;
  report.overall.group = "all";
  std::map<std::string, GroupErrorRates> models;
  std::array<GroupErrorRates, 3> splits;
  for (const auto& inst : instances) {
    add(report.overall, inst);
    add(models[inst.source_model], inst);
    add(splits[static_cast<std::size_t>(inst.split)], inst);
  }
  for (const auto& name : known_models()) {
    auto it = models.find(name);
    if (it == models.end()) continue;
    it->second.group = name;
    report.by_model.push_back(it->second);
  }
  for (auto s : kAllSplits) {
    auto& g = splits[static_cast<std::size_t>(s)];
    if (g.captions == 0) continue;
    g.group = std::string(data_split_name(s));
    report.by_split.push_back(g);
  }
  return report;
}

nlohmann::ordered_json to_json(const GroupErrorRates& g) {
  nlohmann::ordered_json j;
  j["group"] = g.group;
  j["sentences"] = g.sentences;
  j["non_factual_sentences"] = g.non_factual_sentences;
  j["captions"] = g.captions;
  j["factual_captions"] = g.factual_captions;
  j["non_factual_caption_rate"] = format_rate(g.captions - g.factual_captions, g.captions);
  nlohmann::ordered_json types;
  for (auto t : kAllErrorTypes)
    types[std::string(error_type_name(t))] =
        format_rate(g.sentences_with_type[static_cast<std::size_t>(t)], g.sentences);
  j["sentence_error_rates"] = std::move(types);
  return j;
}

nlohmann::ordered_json to_json(const ErrorRateReport& r) {
  nlohmann::ordered_json j;
  j["overall"] = to_json(r.overall);
  auto splits = nlohmann::ordered_json::array();
  for (const auto& g : r.by_split) splits.push_back(to_json(g));
  j["by_split"] = std::move(splits);
  auto models = nlohmann::ordered_json::array();
  for (const auto& g : r.by_model) models.push_back(to_json(g));
  j["by_model"] = std::move(models);
  return j;
}

std::vector<MentionRate> mention_error_rate(const std::vector<MentionRecord>& records) {
  std::map<std::tuple<std::string, DatasetOrigin, ErrorType>, MentionRate> groups;
  for (const auto& r : records) {
    auto& g = groups[{r.model, r.origin, r.type}];
    g.model = r.model;
    g.origin = r.origin;
    g.type = r.type;
    if (!r.has_mention) continue;
    ++g.denominator;
    if (r.non_factual) ++g.numerator;
  }
  std::vector<MentionRate> out;
  for (auto& [key, g] : groups) {
    g.formatted = format_rate(g.numerator, g.denominator);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace chartfact
