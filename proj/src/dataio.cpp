#include "chartfact/dataio.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "chartfact/error.hpp"
#include "text_util.hpp"

namespace chartfact {

namespace {

constexpr std::array<std::string_view, 7> kErrorTypeNames{
    "Value", "Label", "Trend", "Magnitude", "OutOfContext", "Nonsense", "Grammatical"};

struct ModelInfo {
  std::string_view name;
  DataSplit split;
};

constexpr std::array<ModelInfo, 6> kModels{{
    {"GPT-4V", DataSplit::LVLM},
    {"Bard", DataSplit::LVLM},
    {"DePlot+GPT-4", DataSplit::LLM},
    {"ChartT5", DataSplit::FT},
    {"UniChart", DataSplit::FT},
    {"MatCha", DataSplit::FT},
}};

}  // namespace

std::string_view error_type_name(ErrorType t) noexcept {
  return kErrorTypeNames[static_cast<std::size_t>(t)];
}

std::optional<ErrorType> parse_error_type(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kErrorTypeNames.size(); ++i)
    if (kErrorTypeNames[i] == name) return static_cast<ErrorType>(i);
  return std::nullopt;
}

bool has_factual_error(const ErrorSet& labels) noexcept {
  return std::any_of(labels.begin(), labels.end(), is_factual_error);
}

std::string_view data_split_name(DataSplit s) noexcept {
  switch (s) {
    case DataSplit::LVLM: return "LVLM";
    case DataSplit::LLM: return "LLM";
    case DataSplit::FT: return "FT";
  }
  return "?";
}

std::optional<DataSplit> parse_data_split(std::string_view name) noexcept {
  for (auto s : kAllSplits)
    if (data_split_name(s) == name) return s;
  return std::nullopt;
}

std::string_view origin_name(DatasetOrigin o) noexcept {
  return o == DatasetOrigin::VisText ? "VisText" : "Pew";
}

std::optional<DatasetOrigin> parse_origin(std::string_view name) noexcept {
  if (name == "VisText") return DatasetOrigin::VisText;
  if (name == "Pew") return DatasetOrigin::Pew;
  return std::nullopt;
}

const std::vector<std::string>& known_models() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& m : kModels) v.emplace_back(m.name);
    return v;
  }();
  return names;
}

std::optional<DataSplit> split_for_model(std::string_view model) noexcept {
  for (const auto& m : kModels)
    if (m.name == model) return m.split;
  return std::nullopt;
}

bool ChocolateInstance::caption_factual() const {
  return std::none_of(resolved_labels.begin(), resolved_labels.end(), has_factual_error);
}

double ChocolateInstance::factual_fraction() const {
  if (resolved_labels.empty()) return caption_factual() ? 1.0 : 0.0;
  const auto good = std::count_if(resolved_labels.begin(), resolved_labels.end(),
                                  [](const ErrorSet& s) { return !has_factual_error(s); });
  return static_cast<double>(good) / static_cast<double>(resolved_labels.size());
}

ErrorSet aggregate_annotations(const std::vector<ErrorSet>& per_annotator) {
  if (per_annotator.size() < 2)
    throw Error(Errc::InvalidArgument, "aggregation needs at least two annotators");
  ErrorSet out;
  for (auto t : kAllErrorTypes) {
    const auto votes = std::count_if(per_annotator.begin(), per_annotator.end(),
                                     [t](const ErrorSet& s) { return s.count(t) > 0; });
    if (2 * static_cast<std::size_t>(votes) >= per_annotator.size()) out.insert(t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Native schema

namespace {

[[noreturn]] void violation(const std::string& id, const std::string& path, const std::string& msg) {
  throw Error(Errc::SchemaViolation,
              "instance '" + (id.empty() ? std::string("?") : id) + "': field " + path + ": " + msg);
}

const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& id,
                              const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) violation(id, path + key, "missing");
  return obj.at(key);
}

std::string require_string(const nlohmann::json& obj, const char* key, const std::string& id,
                           const std::string& path = "") {
  const auto& v = require(obj, key, id, path);
  if (!v.is_string()) violation(id, path + key, "expected a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const nlohmann::json& obj, const char* key,
                                           const std::string& id, const std::string& path) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  if (!obj.at(key).is_string()) violation(id, path + key, "expected a string or null");
  return obj.at(key).get<std::string>();
}

ErrorSet read_error_set(const nlohmann::json& v, const std::string& id, const std::string& path) {
  if (!v.is_array()) violation(id, path, "expected an array of error types");
  ErrorSet out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto p = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_string()) violation(id, p, "expected a string");
    const auto t = parse_error_type(v[i].get<std::string>());
    if (!t) violation(id, p, "unknown error type '" + v[i].get<std::string>() + "'");
    out.insert(*t);
  }
  return out;
}

nlohmann::ordered_json error_set_json(const ErrorSet& s) {
  auto arr = nlohmann::ordered_json::array();
  for (auto t : s) arr.push_back(std::string(error_type_name(t)));
  return arr;
}

}  // namespace

ChocolateInstance instance_from_json(const nlohmann::json& record) {
  if (!record.is_object()) violation("", "<record>", "expected an object");
  ChocolateInstance inst;
  inst.id = require_string(record, "id", "");
  const auto& id = inst.id;
  if (id.empty()) violation(id, "id", "empty");

  inst.source_model = require_string(record, "source_model", id);
  const auto model_split = split_for_model(inst.source_model);
  if (!model_split) violation(id, "source_model", "unknown captioner '" + inst.source_model + "'");
  const auto split_text = require_string(record, "split", id);
  const auto split = parse_data_split(split_text);
  if (!split) violation(id, "split", "unknown split '" + split_text + "'");
  if (*split != *model_split)
    violation(id, "split",
              "'" + split_text + "' does not match captioner " + inst.source_model + " (" +
                  std::string(data_split_name(*model_split)) + ")");
  inst.split = *split;

  const auto origin_text = require_string(record, "dataset_origin", id);
  const auto origin = parse_origin(origin_text);
  if (!origin) violation(id, "dataset_origin", "unknown dataset '" + origin_text + "'");
  inst.dataset_origin = *origin;

  const auto& chart = require(record, "chart", id, "");
  if (!chart.is_object()) violation(id, "chart", "expected an object");
  inst.chart.id = optional_string(chart, "id", id, "chart.").value_or(id);
  inst.chart.image_uri = optional_string(chart, "image_uri", id, "chart.");
  inst.chart_title = optional_string(chart, "title", id, "chart.");
  if (auto table = optional_string(chart, "gold_table", id, "chart.")) {
    try {
      inst.chart.gold_table = parse_linearized(*table).with_title(inst.chart_title);
    } catch (const Error& e) {
      violation(id, "chart.gold_table", e.what());
    }
  }

  const auto raw = require_string(record, "caption", id);
  if (record.contains("sentences") && !record.at("sentences").is_null()) {
    const auto& list = record.at("sentences");
    if (!list.is_array()) violation(id, "sentences", "expected an array of strings");
    inst.caption.raw = raw;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (!list[i].is_string()) violation(id, "sentences[" + std::to_string(i) + "]", "expected a string");
      inst.caption.sentences.push_back(Sentence{list[i].get<std::string>(), i});
    }
  } else {
    inst.caption = Caption::from_text(raw);
  }
  const std::size_t n = inst.caption.sentences.size();
  if (n == 0) violation(id, "caption", "no sentences");

  if (record.contains("annotations") && !record.at("annotations").is_null()) {
    const auto& ann = record.at("annotations");
    if (!ann.is_array()) violation(id, "annotations", "expected an array");
    if (ann.size() != n)
      violation(id, "annotations",
                std::to_string(ann.size()) + " entries for " + std::to_string(n) + " sentences");
    std::vector<std::vector<ErrorSet>> all;
    for (std::size_t s = 0; s < n; ++s) {
      const auto p = "annotations[" + std::to_string(s) + "]";
      if (!ann[s].is_array() || ann[s].size() < 2)
        violation(id, p, "expected at least two annotator label sets");
      std::vector<ErrorSet> per;
      for (std::size_t a = 0; a < ann[s].size(); ++a)
        per.push_back(read_error_set(ann[s][a], id, p + "[" + std::to_string(a) + "]"));
      all.push_back(std::move(per));
    }
    inst.annotations = std::move(all);
  }

  if (record.contains("resolved_labels") && !record.at("resolved_labels").is_null()) {
    const auto& res = record.at("resolved_labels");
    if (!res.is_array()) violation(id, "resolved_labels", "expected an array");
    if (res.size() != n)
      violation(id, "resolved_labels",
                std::to_string(res.size()) + " entries for " + std::to_string(n) + " sentences");
    for (std::size_t s = 0; s < n; ++s)
      inst.resolved_labels.push_back(
          read_error_set(res[s], id, "resolved_labels[" + std::to_string(s) + "]"));
  }

  if (inst.annotations) {
    std::vector<ErrorSet> derived;
    for (const auto& per : *inst.annotations) derived.push_back(aggregate_annotations(per));
    if (inst.resolved_labels.empty()) {
      inst.resolved_labels = std::move(derived);
    } else {
      for (std::size_t s = 0; s < n; ++s)
        if (inst.resolved_labels[s] != derived[s])
          violation(id, "resolved_labels[" + std::to_string(s) + "]",
                    "disagrees with the majority of annotations");
    }
  } else if (inst.resolved_labels.empty()) {
    violation(id, "resolved_labels", "missing (and no annotations to derive it from)");
  }
  return inst;
}

nlohmann::ordered_json to_json(const ChocolateInstance& inst) {
  nlohmann::ordered_json j;
  j["id"] = inst.id;
  j["split"] = std::string(data_split_name(inst.split));
  j["source_model"] = inst.source_model;
  j["dataset_origin"] = std::string(origin_name(inst.dataset_origin));
  nlohmann::ordered_json chart;
  chart["id"] = inst.chart.id;
  chart["image_uri"] = inst.chart.image_uri ? nlohmann::ordered_json(*inst.chart.image_uri) : nlohmann::ordered_json(nullptr);
  chart["title"] = inst.chart_title ? nlohmann::ordered_json(*inst.chart_title) : nlohmann::ordered_json(nullptr);
  chart["gold_table"] = inst.chart.gold_table
                            ? nlohmann::ordered_json(serialize_linearized(*inst.chart.gold_table))
                            : nlohmann::ordered_json(nullptr);
  j["chart"] = std::move(chart);
  j["caption"] = inst.caption.raw;
  auto sentences = nlohmann::ordered_json::array();
  for (const auto& s : inst.caption.sentences) sentences.push_back(s.text);
  j["sentences"] = std::move(sentences);
  if (inst.annotations) {
    auto ann = nlohmann::ordered_json::array();
    for (const auto& per : *inst.annotations) {
      auto row = nlohmann::ordered_json::array();
      for (const auto& set : per) row.push_back(error_set_json(set));
      ann.push_back(std::move(row));
    }
    j["annotations"] = std::move(ann);
  } else {
    j["annotations"] = nullptr;
  }
  auto res = nlohmann::ordered_json::array();
  for (const auto& set : inst.resolved_labels) res.push_back(error_set_json(set));
  j["resolved_labels"] = std::move(res);
  return j;
}

std::vector<ChocolateInstance> parse_dataset(std::string_view jsonl) {
  std::vector<ChocolateInstance> out;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= jsonl.size()) {
    auto nl = jsonl.find('\n', start);
    if (nl == std::string_view::npos) nl = jsonl.size();
    const auto line = text::trim(jsonl.substr(start, nl - start));
    ++line_no;
    start = nl + 1;
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::SchemaViolation, where + "not valid JSON: " + e.what(), line_no);
    }
    try {
      out.push_back(instance_from_json(record));
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what(), line_no);
    }
    if (!seen.insert(out.back().id).second)
      throw Error(Errc::SchemaViolation, where + "duplicate instance id '" + out.back().id + "'",
                  line_no);
  }
  return out;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<ChocolateInstance> load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path));
}

std::string serialize_dataset(const std::vector<ChocolateInstance>& data) {
  std::string out;
  for (const auto& inst : data) {
    out.append(to_json(inst).dump());
    out.push_back('\n');
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const std::vector<ChocolateInstance>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << serialize_dataset(data);
  if (!out) throw Error(Errc::Io, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Released-layout adapter

namespace {

std::string squash(std::string_view s) {
  std::string out;
  for (char c : s)
    if (text::is_alnum(c)) out.push_back(text::to_lower(c));
  return out;
}

std::optional<ErrorType> loose_error_type(std::string_view s, bool& is_none) {
  std::string k = squash(s);
  is_none = k.empty() || k == "none" || k == "noerror" || k == "factual" || k == "correct" || k == "na";
  if (is_none) return std::nullopt;
  for (std::string_view suffix : {"errors", "error"})
    if (k.size() > suffix.size() && k.ends_with(suffix)) {
      k.resize(k.size() - suffix.size());
      break;
    }
  if (k == "value" || k == "values") return ErrorType::Value;
  if (k == "label" || k == "labels") return ErrorType::Label;
  if (k == "trend" || k == "trends") return ErrorType::Trend;
  if (k == "magnitude") return ErrorType::Magnitude;
  if (k == "outofcontext" || k == "ooc" || k == "context") return ErrorType::OutOfContext;
  if (k == "nonsense" || k == "nonsensical") return ErrorType::Nonsense;
  if (k == "grammatical" || k == "grammar") return ErrorType::Grammatical;
  return std::nullopt;
}

std::optional<std::string> loose_model(std::string_view s) {
  const auto k = squash(s);
  if (k == "gpt4v" || k == "gpt4vision" || k == "gpt4visionpreview") return "GPT-4V";
  if (k == "bard" || k == "gemini") return "Bard";
  if (k == "deplotgpt4" || k == "deplot" || k == "deplotgpt" || k == "deplotllm") return "DePlot+GPT-4";
  if (k == "chartt5") return "ChartT5";
  if (k == "unichart") return "UniChart";
  if (k == "matcha") return "MatCha";
  return std::nullopt;
}

std::optional<DataSplit> loose_split(std::string_view s) {
  const auto k = squash(s);
  if (k == "lvlm" || k == "lvlms") return DataSplit::LVLM;
  if (k == "llm" || k == "llms") return DataSplit::LLM;
  if (k == "ft" || k == "finetuned" || k == "finetune") return DataSplit::FT;
  return std::nullopt;
}

std::optional<DatasetOrigin> loose_origin(std::string_view s) {
  const auto k = squash(s);
  if (k == "vistext") return DatasetOrigin::VisText;
  if (k == "pew" || k == "pewresearch") return DatasetOrigin::Pew;
  return std::nullopt;
}

const nlohmann::json* first_key(const nlohmann::json& obj, std::initializer_list<const char*> keys) {
  for (const char* k : keys)
    if (obj.contains(k) && !obj.at(k).is_null()) return &obj.at(k);
  return nullptr;
}

std::string scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return v.dump();
}

// One sentence's labels: ["Value Error", ...], "Value, Trend", or null.
nlohmann::json loose_label_list(const nlohmann::json& v, const std::string& id,
                                const std::string& path) {
  std::vector<std::string> items;
  if (v.is_null()) return nlohmann::json::array();
  if (v.is_string()) {
    std::string_view s = v.get_ref<const std::string&>();
    std::size_t from = 0;
    while (from <= s.size()) {
      auto cut = s.find_first_of(",;|", from);
      if (cut == std::string_view::npos) cut = s.size();
      items.emplace_back(text::trim(s.substr(from, cut - from)));
      from = cut + 1;
    }
  } else if (v.is_array()) {
    for (const auto& e : v) {
      if (!e.is_string()) violation(id, path, "expected error type strings");
      items.push_back(e.get<std::string>());
    }
  } else {
    violation(id, path, "expected a list of error types");
  }
  ErrorSet set;
  for (const auto& item : items) {
    bool none = false;
    const auto t = loose_error_type(item, none);
    if (none) continue;
    if (!t) violation(id, path, "unknown error type '" + item + "'");
    set.insert(*t);
  }
  auto out = nlohmann::json::array();
  for (auto t : set) out.push_back(std::string(error_type_name(t)));
  return out;
}

std::string table_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  // list of rows, header first
  Table t = [&] {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : v) {
      std::vector<std::string> cells;
      for (const auto& c : r) cells.push_back(scalar_text(c));
      rows.push_back(std::move(cells));
    }
    if (rows.empty()) throw Error(Errc::EmptyInput, "empty table");
    auto header = rows.front();
    rows.erase(rows.begin());
    return Table::from_strings(std::move(header), rows);
  }();
  return serialize_linearized(t);
}

}  // namespace

ChocolateInstance import_released_record(const nlohmann::json& rec,
                                         std::optional<DataSplit> split_hint) {
  if (!rec.is_object()) violation("", "<record>", "expected an object");
  const auto* idv = first_key(rec, {"id", "_id", "instance_id", "caption_id"});
  if (!idv) violation("", "id", "missing (looked for id, _id, instance_id, caption_id)");
  const std::string id = scalar_text(*idv);

  nlohmann::json out;
  out["id"] = id;

  const auto* model = first_key(rec, {"source_model", "model", "captioner", "model_name"});
  if (!model || !model->is_string()) violation(id, "model", "missing captioner name");
  const auto canonical_model = loose_model(model->get<std::string>());
  if (!canonical_model) violation(id, "model", "unknown captioner '" + model->get<std::string>() + "'");
  out["source_model"] = *canonical_model;

  auto split = split_for_model(*canonical_model);
  if (const auto* sv = first_key(rec, {"split"}); sv && sv->is_string()) {
    const auto given = loose_split(sv->get<std::string>());
    if (!given) violation(id, "split", "unknown split '" + sv->get<std::string>() + "'");
    split = given;
  } else if (split_hint) {
    split = split_hint;
  }
  out["split"] = std::string(data_split_name(*split));

  const auto* ds = first_key(rec, {"dataset_origin", "dataset", "source", "origin"});
  if (!ds || !ds->is_string()) violation(id, "dataset", "missing source dataset");
  const auto origin = loose_origin(ds->get<std::string>());
  if (!origin) violation(id, "dataset", "unknown dataset '" + ds->get<std::string>() + "'");
  out["dataset_origin"] = std::string(origin_name(*origin));

  nlohmann::json chart = nlohmann::json::object();
  const nlohmann::json* chart_obj = rec.contains("chart") && rec["chart"].is_object() ? &rec["chart"] : nullptr;
  const auto& src = chart_obj ? *chart_obj : rec;
  const auto* cid = first_key(src, {"chart_id", "id"});
  chart["id"] = chart_obj && cid ? scalar_text(*cid) : (rec.contains("chart_id") ? scalar_text(rec["chart_id"]) : id);
  if (const auto* img = first_key(src, {"image_uri", "image_path", "image", "img_path", "chart_image", "img"}))
    chart["image_uri"] = scalar_text(*img);
  if (const auto* title = first_key(src, {"title", "chart_title"})) chart["title"] = scalar_text(*title);
  if (const auto* table = first_key(src, {"gold_table", "table", "data_table", "datatable"})) {
    try {
      chart["gold_table"] = table_text(*table);
    } catch (const Error& e) {
      violation(id, "table", e.what());
    }
  }
  out["chart"] = std::move(chart);

  const auto* sentences = first_key(rec, {"sentences", "caption_sentences", "sents"});
  const auto* caption = first_key(rec, {"caption", "generated_caption", "text", "output"});
  if (sentences && !sentences->is_array()) violation(id, "sentences", "expected an array");
  if (caption && caption->is_string()) {
    out["caption"] = caption->get<std::string>();
  } else if (sentences) {
    std::string joined;
    for (const auto& s : *sentences) {
      if (!joined.empty()) joined.push_back(' ');
      joined.append(scalar_text(s));
    }
    out["caption"] = joined;
  } else {
    violation(id, "caption", "missing caption text");
  }
  if (sentences) {
    auto list = nlohmann::json::array();
    for (const auto& s : *sentences) list.push_back(std::string(text::trim(scalar_text(s))));
    out["sentences"] = std::move(list);
  }

  if (const auto* ann = first_key(rec, {"annotations", "annotator_labels"})) {
    if (!ann->is_array()) violation(id, "annotations", "expected an array");
    auto converted = nlohmann::json::array();
    for (std::size_t s = 0; s < ann->size(); ++s) {
      const auto& per = (*ann)[s];
      if (!per.is_array()) violation(id, "annotations[" + std::to_string(s) + "]", "expected an array");
      auto row = nlohmann::json::array();
      for (std::size_t a = 0; a < per.size(); ++a)
        row.push_back(loose_label_list(
            per[a], id, "annotations[" + std::to_string(s) + "][" + std::to_string(a) + "]"));
      converted.push_back(std::move(row));
    }
    out["annotations"] = std::move(converted);
  }
  if (const auto* labels =
          first_key(rec, {"resolved_labels", "labels", "error_types", "errors", "sentence_labels"})) {
    if (!labels->is_array()) violation(id, "labels", "expected one entry per sentence");
    auto converted = nlohmann::json::array();
    for (std::size_t s = 0; s < labels->size(); ++s)
      converted.push_back(loose_label_list((*labels)[s], id, "labels[" + std::to_string(s) + "]"));
    out["resolved_labels"] = std::move(converted);
    if (out.contains("annotations")) {
      // released majority labels win over our tie rule when both are present
      out.erase("annotations");
    }
  }
  return instance_from_json(out);
}

namespace {

std::vector<nlohmann::json> released_records(const std::string& content) {
  std::vector<nlohmann::json> out;
  const auto first = text::trim(content);
  if (first.empty()) return out;
  try {
    auto doc = nlohmann::json::parse(first);
    if (doc.is_array()) {
      for (auto& r : doc) out.push_back(std::move(r));
      return out;
    }
    if (doc.is_object()) {
      for (const char* key : {"data", "instances", "captions", "records"})
        if (doc.contains(key) && doc[key].is_array()) {
          for (auto& r : doc[key]) out.push_back(std::move(r));
          return out;
        }
      // a map keyed by id
      if (!doc.contains("caption") && !doc.contains("sentences")) {
        for (auto& [key, value] : doc.items()) {
          if (value.is_object() && !value.contains("id") && !value.contains("_id")) value["id"] = key;
          out.push_back(std::move(value));
        }
        return out;
      }
      out.push_back(std::move(doc));
      return out;
    }
  } catch (const nlohmann::json::parse_error&) {
    // fall through to JSON lines
  }
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::SchemaViolation, "line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return out;
}

}  // namespace

std::vector<ChocolateInstance> import_released(const std::filesystem::path& path) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(path)) {
    for (const auto& entry : std::filesystem::recursive_directory_iterator(path)) {
      const auto ext = entry.path().extension();
      if (entry.is_regular_file() && (ext == ".json" || ext == ".jsonl")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else if (std::filesystem::exists(path)) {
    files.push_back(path);
  } else {
    throw Error(Errc::Io, "no such file or directory: " + path.string());
  }

  std::vector<ChocolateInstance> out;
  std::unordered_set<std::string> seen;
  for (const auto& file : files) {
    const auto hint = loose_split(file.stem().string());
    const auto records = released_records(read_file(file));
    for (std::size_t i = 0; i < records.size(); ++i) {
      try {
        out.push_back(import_released_record(records[i], hint));
      } catch (const Error& e) {
        throw Error(e.code(), file.filename().string() + " record " + std::to_string(i) + ": " + e.what(), i);
      }
      if (!seen.insert(out.back().id).second)
        throw Error(Errc::SchemaViolation, "duplicate instance id '" + out.back().id + "' in " +
                                               file.filename().string());
    }
  }
  return out;
}

SplitStats split_stats(const std::vector<ChocolateInstance>& instances) {
  SplitStats stats;
  for (const auto& inst : instances) {
    auto& row = stats.per_split[static_cast<std::size_t>(inst.split)];
    for (const auto& labels : inst.resolved_labels) {
      auto& bucket = has_factual_error(labels) ? row.sentences.non_factual : row.sentences.factual;
      ++bucket;
    }
    ++(inst.caption_factual() ? row.captions.factual : row.captions.non_factual);
  }
  for (const auto& row : stats.per_split) {
    stats.total.sentences.factual += row.sentences.factual;
    stats.total.sentences.non_factual += row.sentences.non_factual;
    stats.total.captions.factual += row.captions.factual;
    stats.total.captions.non_factual += row.captions.non_factual;
  }
  return stats;
}

}  // namespace chartfact
