#include "chartfact/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "CLI11.hpp"
#include "chartfact/correct.hpp"
#include "chartfact/dataio.hpp"
#include "chartfact/entail.hpp"
#include "chartfact/error.hpp"
#include "chartfact/error_stats.hpp"
#include "chartfact/metrics.hpp"
#include "chartfact/negden.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace chartfact::cli {

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw Error(Errc::InvalidArgument, "config has no key '" + key + "'");
  return it->second;
}

std::optional<std::string> RunConfig::find(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const auto n = std::stoull(v, &used);
    if (used == v.size() && !v.empty() && v.front() != '-') return n;
  } catch (const std::exception&) {
  }
  throw Error(Errc::InvalidArgument, key + ": expected a non-negative integer, got '" + v + "'");
}

double RunConfig::get_double(const std::string& key) const {
  const auto& v = get(key);
  const auto n = parse_cell_number(v);
  if (!n || n->is_percent || n->scale)
    throw Error(Errc::InvalidArgument, key + ": expected a number, got '" + v + "'");
  return n->value;
}

std::string RunConfig::to_text() const {
  std::string out = "# chartfact " + command + "\n";
  for (const auto& [k, v] : values) out += k + "=" + v + "\n";
  return out;
}

std::map<std::string, std::string> parse_config_text(std::string_view content) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    auto nl = content.find('\n', start);
    if (nl == std::string_view::npos) nl = content.size();
    const auto line = text::trim(content.substr(start, nl - start));
    start = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(Errc::InvalidArgument,
                  "config line " + std::to_string(line_no) + ": expected key=value", line_no);
    auto key = std::string(text::trim(line.substr(0, eq)));
    if (key.starts_with("--")) key.erase(0, 2);
    if (key.empty())
      throw Error(Errc::InvalidArgument, "config line " + std::to_string(line_no) + ": empty key",
                  line_no);
    out[key] = std::string(text::trim(line.substr(eq + 1)));
  }
  return out;
}

namespace {

struct CommandSpec {
  std::string name;
  std::string help;
  std::vector<std::pair<std::string, std::string>> options;  // key, default
  std::vector<std::string> required;
  std::vector<std::string> outputs;
};

const std::vector<CommandSpec>& command_specs() {
  static const std::vector<CommandSpec> specs{
      {"gen-negatives",
       "generate entailment training pairs",
       {{"corpus", ""}, {"lexicon", ""}, {"families", "value,trend,ooc"}, {"max-per-sentence", "2"}},
       {"corpus"},
       {"negatives.jsonl"}},
      {"score",
       "score caption factuality per sentence",
       {{"dataset", ""}, {"backend", "oracle"}, {"lexicon", ""}},
       {"dataset"},
       {"scores.jsonl"}},
      {"correct",
       "run chart-to-table conversion and caption rectification",
       {{"dataset", ""},
        {"c2t-backend", "gold"},
        {"rectifier-backend", "oracle"},
        {"template", ""},
        {"max-edit-ratio", ""},
        {"lexicon", ""}},
       {"dataset"},
       {"corrections.jsonl"}},
      {"evaluate",
       "factuality and edit distance of corrected captions",
       {{"dataset", ""}, {"corrections", ""}, {"backend", "oracle"}, {"lexicon", ""}},
       {"dataset", "corrections"},
       {"evaluation.json"}},
      {"meta-eval",
       "correlate metric scores with human judgements",
       {{"dataset", ""}, {"scores", ""}},
       {"dataset", "scores"},
       {"meta_eval.json"}},
      {"stats",
       "dataset statistics, error distributions and annotator agreement",
       {{"dataset", ""}, {"dataset-format", "native"}, {"mentions", ""}},
       {"dataset"},
       {"stats.json", "error_distribution.csv"}},
      {"table-eval",
       "RMS-F1 between predicted and gold tables",
       {{"predicted", ""}, {"gold", ""}},
       {"predicted", "gold"},
       {"table_eval.json"}},
  };
  return specs;
}

const std::vector<std::pair<std::string, std::string>> kCommonOptions{
    {"seed", "0"}, {"concurrency", "4"}, {"out", ""}};

// ---------------------------------------------------------------------------
// file helpers

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(Errc::Io, "write failed for " + path.string());
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::vector<nlohmann::json> out;
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::SchemaViolation,
                  path + " line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return out;
}

template <typename T>
T field(const nlohmann::json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::SchemaViolation, where + ": field '" + key + "' missing or mistyped");
  }
}

const TrendLexicon& lexicon_for(const RunConfig& cfg, std::unique_ptr<TrendLexicon>& holder) {
  if (auto path = cfg.find("lexicon")) {
    holder = std::make_unique<TrendLexicon>(TrendLexicon::load(*path));
    return *holder;
  }
  return TrendLexicon::defaults();
}

fs::path out_dir(const RunConfig& cfg) {
  auto dir = cfg.find("out");
  if (!dir) throw Error(Errc::InvalidArgument, "--out is required");
  return fs::path(*dir);
}

int batch_exit(std::size_t failures, std::size_t total, bool all_backend) {
  if (failures == 0) return kOk;
  if (failures == total && all_backend) return kBackend;
  return kPartial;
}

std::vector<ChocolateInstance> load_instances(const RunConfig& cfg) {
  const auto& path = cfg.get("dataset");
  const auto format = cfg.find("dataset-format").value_or("native");
  if (format == "released") return import_released(path);
  if (format != "native")
    throw Error(Errc::InvalidArgument, "dataset-format must be 'native' or 'released'");
  return load_dataset(path);
}

// ---------------------------------------------------------------------------
// commands

Corpus load_corpus(const std::string& path) {
  Corpus corpus;
  std::size_t n = 0;
  for (const auto& j : read_jsonl(path)) {
    const std::string where = path + " record " + std::to_string(n++);
    CorpusEntry e;
    e.chart.id = field<std::string>(j, "chart_id", where);
    if (j.contains("image_uri") && j["image_uri"].is_string())
      e.chart.image_uri = j["image_uri"].get<std::string>();
    std::optional<std::string> title;
    if (j.contains("title") && j["title"].is_string()) title = j["title"].get<std::string>();
    if (j.contains("table") && j["table"].is_string()) {
      try {
        e.chart.gold_table = parse_linearized(j["table"].get<std::string>()).with_title(title);
      } catch (const Error& err) {
        throw Error(Errc::SchemaViolation, where + ": table: " + err.what());
      }
    }
    e.sentences = field<std::vector<std::string>>(j, "sentences", where);
    const auto origin = j.value("origin", std::string("caption"));
    if (origin == "qa") {
      e.origin = PositiveOrigin::QA;
    } else if (origin != "caption") {
      throw Error(Errc::SchemaViolation, where + ": origin must be 'caption' or 'qa'");
    }
    corpus.push_back(std::move(e));
  }
  return corpus;
}

int cmd_gen_negatives(const RunConfig& cfg, std::ostream& out) {
  const auto corpus = load_corpus(cfg.get("corpus"));
  std::unique_ptr<TrendLexicon> holder;
  const auto& lexicon = lexicon_for(cfg, holder);

  GenerationConfig gen;
  gen.value_label = gen.trend = gen.out_of_context = false;
  std::string_view families = cfg.get("families");
  while (!families.empty()) {
    const auto comma = families.find(',');
    const auto name = text::trim(families.substr(0, comma));
    families = comma == std::string_view::npos ? std::string_view{} : families.substr(comma + 1);
    if (name.empty()) continue;
    const auto f = parse_family(name);
    if (!f) throw Error(Errc::InvalidArgument, "unknown negative family '" + std::string(name) + "'");
    if (*f == NegativeFamily::ValueLabel) gen.value_label = true;
    if (*f == NegativeFamily::Trend) gen.trend = true;
    if (*f == NegativeFamily::OutOfContext) gen.out_of_context = true;
  }
  gen.max_per_sentence = cfg.get_u64("max-per-sentence");
  gen.threads = std::max<std::uint64_t>(1, cfg.get_u64("concurrency"));

  const auto instances = generate_all(corpus, lexicon, cfg.get_u64("seed"), gen);
  std::string body;
  std::size_t negatives = 0;
  for (const auto& inst : instances) {
    body += to_json(inst).dump() + "\n";
    if (inst.negative) ++negatives;
  }
  const auto dir = out_dir(cfg);
  write_text(dir / "negatives.jsonl", body);
  out << ordered_json{{"instances", instances.size()},
                      {"negatives", negatives},
                      {"output", (dir / "negatives.jsonl").string()}}
             .dump()
      << "\n";
  return kOk;
}

int cmd_score(const RunConfig& cfg, std::ostream& out) {
  const auto data = load_instances(cfg);
  std::unique_ptr<TrendLexicon> holder;
  auto backend = make_entailment_backend(cfg.get("backend"), lexicon_for(cfg, holder));
  ScoreOptions opts;
  opts.max_concurrency = std::max<std::uint64_t>(1, cfg.get_u64("concurrency"));

  std::string body;
  std::size_t failures = 0;
  bool all_backend = true;
  for (const auto& inst : data) {
    ordered_json line;
    line["id"] = inst.id;
    line["split"] = std::string(data_split_name(inst.split));
    line["source_model"] = inst.source_model;
    try {
      const auto report = to_json(score_caption(inst.chart, inst.caption, *backend, opts));
      for (const auto& [k, v] : report.items()) line[k] = v;
    } catch (const Error& e) {
      ++failures;
      all_backend = all_backend && e.code() == Errc::BackendUnavailable;
      line["error"] = {{"code", std::string(errc_name(e.code()))}, {"message", e.what()}};
    }
    body += line.dump() + "\n";
  }
  const auto dir = out_dir(cfg);
  write_text(dir / "scores.jsonl", body);
  out << ordered_json{{"captions", data.size()}, {"failures", failures}}.dump() << "\n";
  return batch_exit(failures, data.size(), all_backend);
}

int cmd_correct(const RunConfig& cfg, std::ostream& out) {
  const auto data = load_instances(cfg);
  std::unique_ptr<TrendLexicon> holder;
  const auto& lexicon = lexicon_for(cfg, holder);
  auto c2t = make_chart2table_backend(cfg.get("c2t-backend"));
  auto rectifier = make_rectifier_backend(cfg.get("rectifier-backend"), lexicon);

  CorrectionOptions options;
  if (auto path = cfg.find("template")) options.template_text = read_text(*path);
  if (cfg.find("max-edit-ratio")) options.max_edit_ratio = cfg.get_double("max-edit-ratio");

  std::vector<CorrectionJob> jobs;
  for (const auto& inst : data) jobs.push_back(CorrectionJob{inst.id, inst.chart, inst.caption});
  const auto outcomes =
      batch_correct(jobs, *c2t, *rectifier, std::max<std::uint64_t>(1, cfg.get_u64("concurrency")),
                    options);

  std::string body;
  std::size_t failures = 0, changed = 0;
  bool all_backend = true;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    ordered_json line;
    line["id"] = outcomes[i].id;
    line["split"] = std::string(data_split_name(data[i].split));
    line["source_model"] = data[i].source_model;
    const auto record = to_json(outcomes[i]);
    for (const auto& [k, v] : record.items())
      if (k != "id") line[k] = v;
    if (!outcomes[i].result) {
      ++failures;
      all_backend = all_backend && outcomes[i].error_code == errc_name(Errc::BackendUnavailable);
    } else if (outcomes[i].result->status == CorrectionStatus::Corrected) {
      ++changed;
    }
    body += line.dump() + "\n";
  }
  const auto dir = out_dir(cfg);
  write_text(dir / "corrections.jsonl", body);
  out << ordered_json{{"captions", outcomes.size()}, {"corrected", changed}, {"failures", failures}}
             .dump()
      << "\n";
  return batch_exit(failures, outcomes.size(), all_backend);
}

struct Accumulator {
  std::size_t n = 0;
  double factuality = 0.0;
  double original_factuality = 0.0;
  double levenshtein = 0.0;

  ordered_json to_json(const std::string& name) const {
    ordered_json j;
    j["split"] = name;
    j["captions"] = n;
    j["original_factuality"] = n ? 100.0 * original_factuality / static_cast<double>(n) : 0.0;
    j["factuality"] = n ? 100.0 * factuality / static_cast<double>(n) : 0.0;
    j["levenshtein"] = n ? levenshtein / static_cast<double>(n) : 0.0;
    return j;
  }
};

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  const auto data = load_instances(cfg);
  std::unordered_map<std::string, const ChocolateInstance*> by_id;
  for (const auto& inst : data) by_id[inst.id] = &inst;
  std::unique_ptr<TrendLexicon> holder;
  auto backend = make_entailment_backend(cfg.get("backend"), lexicon_for(cfg, holder));
  ScoreOptions opts;
  opts.max_concurrency = std::max<std::uint64_t>(1, cfg.get_u64("concurrency"));

  std::array<Accumulator, 3> splits;
  Accumulator overall;
  std::size_t skipped = 0, failures = 0;
  std::size_t row = 0;
  for (const auto& line : read_jsonl(cfg.get("corrections"))) {
    const std::string where = "corrections record " + std::to_string(row++);
    if (line.contains("error")) {
      ++skipped;
      continue;
    }
    const auto id = field<std::string>(line, "id", where);
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw Error(Errc::SchemaViolation, where + ": id '" + id + "' is not in the dataset");
    const auto& inst = *it->second;
    const auto corrected = field<std::string>(line, "corrected", where);
    try {
      const double after =
          score_caption(inst.chart, Caption::from_text(corrected), *backend, opts).caption_score;
      const double before = score_caption(inst.chart, inst.caption, *backend, opts).caption_score;
      const auto dist = static_cast<double>(levenshtein(inst.caption.raw, corrected));
      for (auto* acc : {&splits[static_cast<std::size_t>(inst.split)], &overall}) {
        ++acc->n;
        acc->factuality += after;
        acc->original_factuality += before;
        acc->levenshtein += dist;
      }
    } catch (const Error& e) {
      if (e.code() != Errc::BackendUnavailable && e.code() != Errc::EmptyCaption) throw;
      ++failures;
    }
  }

  ordered_json report;
  report["backend"] = backend->id();
  auto rows = ordered_json::array();
  for (auto s : kAllSplits)
    if (splits[static_cast<std::size_t>(s)].n > 0)
      rows.push_back(splits[static_cast<std::size_t>(s)].to_json(std::string(data_split_name(s))));
  report["splits"] = std::move(rows);
  report["overall"] = overall.to_json("all");
  report["skipped_failed_corrections"] = skipped;
  report["scoring_failures"] = failures;
  write_text(out_dir(cfg) / "evaluation.json", report.dump(2) + "\n");
  out << report["overall"].dump() << "\n";
  return failures == 0 ? kOk : kPartial;
}

ordered_json meta_eval_row(const std::string& name, const std::vector<double>& metric,
                           const std::vector<double>& human, const std::vector<bool>& factual) {
  ordered_json j;
  j["split"] = name;
  j["captions"] = metric.size();
  if (metric.size() < 2) {
    j["kendall_tau"] = nullptr;
    j["kendall_tau_note"] = "fewer than two captions";
  } else {
    try {
      const auto tau = kendall_tau(RankedPairSeries{metric, human});
      j["kendall_tau"] = tau ? ordered_json(*tau) : ordered_json(nullptr);
      if (!tau) j["kendall_tau_note"] = "undefined: one series is constant";
    } catch (const Error& e) {
      j["kendall_tau"] = nullptr;
      j["kendall_tau_note"] = e.what();
    }
  }
  try {
    j["roc_auc"] = roc_auc(metric, factual);
  } catch (const Error& e) {
    j["roc_auc"] = nullptr;
    j["roc_auc_note"] = e.what();
  }
  return j;
}

int cmd_meta_eval(const RunConfig& cfg, std::ostream& out) {
  const auto data = load_instances(cfg);
  std::unordered_map<std::string, double> scores;
  std::string backend_id;
  std::size_t row = 0;
  for (const auto& line : read_jsonl(cfg.get("scores"))) {
    const std::string where = "scores record " + std::to_string(row++);
    if (line.contains("error")) continue;
    scores[field<std::string>(line, "id", where)] = field<double>(line, "caption_score", where);
    if (backend_id.empty()) backend_id = line.value("backend_id", std::string());
  }

  struct Series {
    std::vector<double> metric, human;
    std::vector<bool> factual;
  };
  std::array<Series, 3> per_split;
  Series all;
  for (const auto& inst : data) {
    auto it = scores.find(inst.id);
    if (it == scores.end()) continue;
    for (auto* s : {&per_split[static_cast<std::size_t>(inst.split)], &all}) {
      s->metric.push_back(it->second);
      s->human.push_back(inst.factual_fraction());
      s->factual.push_back(inst.caption_factual());
    }
  }

  ordered_json report;
  report["metric"] = backend_id;
  report["human_score"] = "fraction of factual sentences";
  auto rows = ordered_json::array();
  for (auto s : kAllSplits) {
    const auto& series = per_split[static_cast<std::size_t>(s)];
    if (!series.metric.empty())
      rows.push_back(meta_eval_row(std::string(data_split_name(s)), series.metric, series.human,
                                   series.factual));
  }
  report["splits"] = std::move(rows);
  report["overall"] = meta_eval_row("all", all.metric, all.human, all.factual);
  write_text(out_dir(cfg) / "meta_eval.json", report.dump(2) + "\n");
  out << report["overall"].dump() << "\n";
  return kOk;
}

ordered_json counts_json(const FactualCounts& c) {
  return ordered_json{{"factual", c.factual},
                      {"non_factual", c.non_factual},
                      {"total", c.total()},
                      {"non_factual_rate", format_rate(c.non_factual, c.total())}};
}

ordered_json agreement_json(const std::vector<ChocolateInstance>& data) {
  // binary factual / non-factual judgement per sentence and annotator
  std::map<std::size_t, std::vector<std::vector<std::uint32_t>>> by_raters;
  for (const auto& inst : data) {
    if (!inst.annotations) continue;
    for (const auto& per : *inst.annotations) {
      std::vector<std::uint32_t> row(2, 0);
      for (const auto& set : per) ++row[has_factual_error(set) ? 1 : 0];
      by_raters[per.size()].push_back(std::move(row));
    }
  }
  if (by_raters.empty()) return ordered_json{{"note", "no per-annotator labels in the dataset"}};
  auto best = by_raters.begin();
  for (auto it = by_raters.begin(); it != by_raters.end(); ++it)
    if (it->second.size() > best->second.size()) best = it;
  AnnotationMatrix matrix(best->second);
  ordered_json j;
  j["items"] = matrix.items();
  j["raters"] = matrix.raters();
  try {
    j["fleiss_kappa"] = fleiss_kappa(matrix);
  } catch (const Error& e) {
    j["fleiss_kappa"] = nullptr;
    j["fleiss_kappa_note"] = e.what();
  }
  j["majority_agreement"] = majority_agreement(matrix);
  return j;
}

int cmd_stats(const RunConfig& cfg, std::ostream& out) {
  const auto data = load_instances(cfg);
  const auto split = split_stats(data);
  ordered_json report;
  ordered_json splits;
  for (auto s : kAllSplits) {
    const auto& r = split.at(s);
    splits[std::string(data_split_name(s))] = {{"sentences", counts_json(r.sentences)},
                                               {"captions", counts_json(r.captions)}};
  }
  splits["total"] = {{"sentences", counts_json(split.total.sentences)},
                     {"captions", counts_json(split.total.captions)}};
  report["split_stats"] = std::move(splits);
  const auto rates = error_rates(data);
  report["error_rates"] = to_json(rates);
  report["agreement"] = agreement_json(data);

  if (auto path = cfg.find("mentions")) {
    std::vector<MentionRecord> records;
    std::size_t n = 0;
    for (const auto& j : read_jsonl(*path)) {
      const std::string where = "mentions record " + std::to_string(n++);
      MentionRecord r;
      r.model = field<std::string>(j, "model", where);
      const auto origin = parse_origin(field<std::string>(j, "dataset", where));
      const auto type = parse_error_type(field<std::string>(j, "type", where));
      if (!origin || !type) throw Error(Errc::SchemaViolation, where + ": unknown dataset or type");
      r.origin = *origin;
      r.type = *type;
      r.has_mention = field<bool>(j, "has_mention", where);
      r.non_factual = j.value("non_factual", false);
      records.push_back(std::move(r));
    }
    auto arr = ordered_json::array();
    for (const auto& m : mention_error_rate(records))
      arr.push_back({{"model", m.model},
                     {"dataset", std::string(origin_name(m.origin))},
                     {"type", std::string(error_type_name(m.type))},
                     {"rate", m.formatted}});
    report["mention_error_rates"] = std::move(arr);
  }

  std::string csv = "model,error_type,sentences_with_error,sentences,rate_percent\n";
  for (const auto& g : rates.by_model) {
    for (auto t : kAllErrorTypes) {
      char rate[32];
      std::snprintf(rate, sizeof rate, "%.2f", g.type_rate(t));
      csv += g.group + "," + std::string(error_type_name(t)) + "," +
             std::to_string(g.sentences_with_type[static_cast<std::size_t>(t)]) + "," +
             std::to_string(g.sentences) + "," + rate + "\n";
    }
  }

  const auto dir = out_dir(cfg);
  write_text(dir / "stats.json", report.dump(2) + "\n");
  write_text(dir / "error_distribution.csv", csv);
  out << report["split_stats"]["total"].dump() << "\n";
  return kOk;
}

std::vector<std::pair<std::string, Table>> load_tables(const std::string& path) {
  std::vector<std::pair<std::string, Table>> out;
  std::size_t n = 0;
  for (const auto& j : read_jsonl(path)) {
    const std::string where = path + " record " + std::to_string(n++);
    const auto id = field<std::string>(j, "id", where);
    try {
      out.emplace_back(id, parse_linearized(field<std::string>(j, "table", where)));
    } catch (const Error& e) {
      if (e.code() == Errc::SchemaViolation) throw;
      throw Error(Errc::SchemaViolation, where + ": " + e.what());
    }
  }
  return out;
}

int cmd_table_eval(const RunConfig& cfg, std::ostream& out) {
  const auto predicted = load_tables(cfg.get("predicted"));
  const auto gold = load_tables(cfg.get("gold"));
  std::unordered_map<std::string, const Table*> pred_by_id;
  for (const auto& [id, t] : predicted) pred_by_id[id] = &t;

  auto pairs = ordered_json::array();
  double total = 0.0;
  std::size_t missing = 0;
  for (const auto& [id, g] : gold) {
    auto it = pred_by_id.find(id);
    double score = 0.0;
    if (it == pred_by_id.end()) {
      ++missing;
    } else {
      score = rms_f1(*it->second, g);
    }
    total += score;
    pairs.push_back({{"id", id}, {"rms_f1", score}, {"predicted", it != pred_by_id.end()}});
  }
  ordered_json report;
  report["tables"] = gold.size();
  report["missing_predictions"] = missing;
  report["mean_rms_f1"] = gold.empty() ? 0.0 : total / static_cast<double>(gold.size());
  report["pairs"] = std::move(pairs);
  write_text(out_dir(cfg) / "table_eval.json", report.dump(2) + "\n");
  out << ordered_json{{"tables", gold.size()}, {"mean_rms_f1", report["mean_rms_f1"]}}.dump() << "\n";
  return kOk;
}

int dispatch(const RunConfig& cfg, std::ostream& out) {
  const auto& c = cfg.command;
  if (c == "gen-negatives") return cmd_gen_negatives(cfg, out);
  if (c == "score") return cmd_score(cfg, out);
  if (c == "correct") return cmd_correct(cfg, out);
  if (c == "evaluate") return cmd_evaluate(cfg, out);
  if (c == "meta-eval") return cmd_meta_eval(cfg, out);
  if (c == "stats") return cmd_stats(cfg, out);
  if (c == "table-eval") return cmd_table_eval(cfg, out);
  throw Error(Errc::InvalidArgument, "unknown command " + c);
}

int exit_for(Errc code) {
  switch (code) {
    case Errc::BackendUnavailable: return kBackend;
    default: return kValidation;
  }
}

void report_error(std::ostream& err, const std::string& command, const std::string& code,
                  const std::string& message, std::optional<std::size_t> index) {
  ordered_json j;
  j["command"] = command;
  j["code"] = code;
  j["message"] = message;
  j["index"] = index ? ordered_json(*index) : ordered_json(nullptr);
  err << ordered_json{{"error", j}}.dump() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Chart caption factuality toolkit", "chartfact"};
  app.require_subcommand(1, 1);

  struct Bound {
    CLI::App* sub = nullptr;
    std::map<std::string, std::string> flags;
    std::map<std::string, CLI::Option*> options;
    std::string config_path;
    bool dry_run = false;
  };
  std::map<std::string, Bound> bound;
  for (const auto& spec : command_specs()) {
    auto& b = bound[spec.name];
    b.sub = app.add_subcommand(spec.name, spec.help);
    for (const auto* list : {&kCommonOptions, &spec.options})
      for (const auto& [key, def] : *list) {
        std::string help = def.empty() ? "" : "default: " + def;
        b.options[key] = b.sub->add_option("--" + key, b.flags[key], help);
      }
    b.sub->add_option("--config", b.config_path, "flat key=value file; flags override it");
    b.sub->add_flag("--dry-run", b.dry_run, "print the resolved plan and exit");
  }

  std::vector<const char*> cargs;
  for (const auto& a : argv) cargs.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  const CommandSpec* spec = nullptr;
  for (const auto& s : command_specs())
    if (bound[s.name].sub->parsed()) spec = &s;
  auto& b = bound[spec->name];

  RunConfig cfg;
  cfg.command = spec->name;
  try {
    for (const auto* list : {&kCommonOptions, &spec->options})
      for (const auto& [key, def] : *list) cfg.values[key] = def;
    if (!b.config_path.empty()) {
      for (const auto& [key, value] : parse_config_text(read_text(b.config_path))) {
        if (!cfg.values.count(key))
          throw Error(Errc::InvalidArgument,
                      "config key '" + key + "' is not an option of " + spec->name);
        cfg.values[key] = value;
      }
    }
    for (const auto& [key, opt] : b.options)
      if (opt->count() > 0) cfg.values[key] = b.flags[key];
    for (const auto& key : spec->required)
      if (cfg.values[key].empty()) throw Error(Errc::InvalidArgument, "--" + key + " is required");
    cfg.get_u64("seed");
    cfg.get_u64("concurrency");

    if (b.dry_run) {
      ordered_json plan;
      plan["command"] = spec->name;
      plan["dry_run"] = true;
      plan["config"] = cfg.values;
      auto outputs = ordered_json::array();
      const auto dir = cfg.find("out").value_or("<out>");
      for (const auto& name : spec->outputs) outputs.push_back((fs::path(dir) / name).string());
      outputs.push_back((fs::path(dir) / (spec->name + ".config")).string());
      plan["outputs"] = std::move(outputs);
      out << plan.dump(2) << "\n";
      return kOk;
    }

    const auto dir = out_dir(cfg);
    const int code = dispatch(cfg, out);
    write_text(dir / (spec->name + ".config"), cfg.to_text());
    return code;
  } catch (const Error& e) {
    report_error(err, spec->name, std::string(errc_name(e.code())), e.what(), e.index());
    return exit_for(e.code());
  } catch (const std::exception& e) {
    report_error(err, spec->name, "Internal", e.what(), std::nullopt);
    return kValidation;
  }
}

}  // namespace chartfact::cli
