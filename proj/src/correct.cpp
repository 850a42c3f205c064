#include "chartfact/correct.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <thread>

#include "chartfact/error.hpp"
#include "chartfact/metrics.hpp"
#include "text_util.hpp"

namespace chartfact {

// ---------------------------------------------------------------------------
// Stage 1

TitledTable GoldTableBackend::convert(const ChartRef& chart) {
  if (!chart.gold_table)
    throw Error(Errc::BackendUnavailable, "chart '" + chart.id + "' has no gold table");
  return TitledTable{chart.gold_table->title().value_or(""), *chart.gold_table};
}

nlohmann::json chart2table_request_body(const ChartRef& chart) {
  if (!chart.image_uri)
    throw Error(Errc::BackendUnavailable, "chart '" + chart.id + "' has no image_uri");
  return nlohmann::json{{"image_uri", *chart.image_uri}};
}

TitledTable parse_chart2table_response(const nlohmann::json& response) {
  try {
    std::string title = response.value("title", std::string());
    auto table = parse_linearized(response.at("table_linearized").get<std::string>());
    return TitledTable{title, table.with_title(title)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BackendUnavailable, std::string("malformed chart2table response: ") + e.what());
  } catch (const Error& e) {
    throw Error(Errc::BackendUnavailable, std::string("chart2table returned a bad table: ") + e.what());
  }
}

TitledTable FixtureChart2TableBackend::convert(const ChartRef& chart) {
  return parse_chart2table_response(
      wire::read_fixture(dir_, wire::kChart2TableRoute, chart2table_request_body(chart)));
}

TitledTable RemoteChart2TableBackend::convert(const ChartRef& chart) {
  return parse_chart2table_response(
      client_.post(wire::kChart2TableRoute, chart2table_request_body(chart)));
}

std::unique_ptr<Chart2TableBackend> make_chart2table_backend(std::string_view selector) {
  if (selector == "gold") return std::make_unique<GoldTableBackend>();
  if (selector.starts_with("fixture:"))
    return std::make_unique<FixtureChart2TableBackend>(std::string(selector.substr(8)));
  if (selector.starts_with("remote:"))
    return std::make_unique<RemoteChart2TableBackend>(std::string(selector.substr(7)));
  throw Error(Errc::InvalidArgument, "unknown chart2table backend '" + std::string(selector) + "'");
}

// ---------------------------------------------------------------------------
// Prompt

namespace {

constexpr std::string_view kDefaultTemplate =
    "You are checking a chart caption against the data table extracted from the chart.\n"
    "\n"
    "Chart title: {TITLE}\n"
    "Data table (rows separated by \"&&&\", cells separated by tabs):\n"
    "{TABLE}\n"
    "\n"
    "Caption:\n"
    "{CAPTION}\n"
    "\n"
    "Step 1. List every factual inconsistency between the caption and the table, one per line,\n"
    "quoting the caption text and the table evidence. If there are none, write the line\n"
    "NO ERRORS\n"
    "Step 2. Write the line\n"
    "CORRECTED CAPTION:\n"
    "followed by the corrected caption. Change as little as possible. If there were no\n"
    "inconsistencies, repeat the original caption exactly.\n";

}  // namespace

std::string_view default_rectification_template() { return kDefaultTemplate; }

std::string template_id(std::string_view template_text) {
  if (template_text == kDefaultTemplate) return "default";
  return "sha256:" + wire::sha256_hex(template_text).substr(0, 16);
}

std::string render_rectification_prompt(std::string_view title, const Table& table,
                                        std::string_view caption, std::string_view tmpl) {
  const std::string linearized = serialize_linearized(table);
  const std::pair<std::string_view, std::string_view> slots[] = {
      {"{TITLE}", title}, {"{TABLE}", linearized}, {"{CAPTION}", caption}};
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool replaced = false;
    if (tmpl[i] == '{') {
      for (const auto& [key, value] : slots) {
        if (tmpl.substr(i, key.size()) == key) {
          out.append(value);
          i += key.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out.push_back(tmpl[i++]);
  }
  return out;
}

nlohmann::json RectifyRequest::wire_body() const {
  return nlohmann::json{{"title", title},
                        {"table_linearized", serialize_linearized(table)},
                        {"caption", caption},
                        {"template_id", template_id}};
}

// ---------------------------------------------------------------------------
// Stage 2

namespace {

bool same_number(const CellNumber& a, const CellNumber& b) {
  auto close = [](double x, double y) {
    return x == y || std::fabs(x - y) <= 1e-9 * std::max(std::fabs(x), std::fabs(y));
  };
  return close(a.value, b.value) || close(a.magnitude(), b.magnitude());
}

bool is_year_like(const CellNumber& n) {
  return !n.is_percent && !n.scale && n.value >= 1000 && n.value <= 2999 &&
         n.value == std::floor(n.value);
}

bool contains_word(std::string_view haystack, std::string_view word) {
  if (word.empty() || word.size() > haystack.size()) return false;
  for (std::size_t i = 0; i + word.size() <= haystack.size(); ++i) {
    if (!text::iequals(haystack.substr(i, word.size()), word)) continue;
    const bool left = i == 0 || !text::is_alnum(haystack[i - 1]);
    const std::size_t j = i + word.size();
    const bool right = j == haystack.size() || !text::is_alnum(haystack[j]);
    if (left && right) return true;
  }
  return false;
}

struct Edit {
  Span span;  // relative to the sentence
  std::string replacement;
};

// Position of the digit run ("20.4", "1,234") inside a number token.
Span digit_run(std::string_view token) {
  std::size_t b = 0;
  while (b < token.size() && !text::is_digit(token[b])) ++b;
  std::size_t e = b;
  while (e < token.size()) {
    if (text::is_digit(token[e])) {
      ++e;
    } else if ((token[e] == ',' || token[e] == '.') && e + 1 < token.size() &&
               text::is_digit(token[e + 1])) {
      ++e;
    } else {
      break;
    }
  }
  return Span{b, e};
}

}  // namespace

std::string TableRectifier::rectify(const RectifyRequest& request) {
  const Table& table = request.table;
  const std::string& caption = request.caption;

  std::vector<CellNumber> known;
  for (const auto& row : table.rows())
    for (const auto& cell : row)
      if (cell.numeric()) known.push_back(*cell.numeric());
  for (const auto& name : table.header())
    for (const auto& tok : find_numbers(name))
      if (is_year_like(tok.number)) known.push_back(tok.number);

  const auto cols = value_columns(table);
  std::optional<double> delta;
  if (cols.size() == 1 && table.num_rows() >= 2) {
    delta = table.at(table.num_rows() - 1, cols[0]).numeric()->magnitude() -
            table.at(0, cols[0]).numeric()->magnitude();
  }

  std::vector<std::string> findings;
  std::string corrected;
  std::size_t cursor = 0;
  for (const auto& sentence : segment_sentences(caption)) {
    const auto at = caption.find(sentence.text, cursor);
    if (at == std::string::npos) continue;
    corrected.append(caption, cursor, at - cursor);
    cursor = at + sentence.text.size();
    const std::string_view s = sentence.text;
    std::vector<Edit> edits;

    std::set<std::size_t> anchor_rows;
    if (table.num_columns() >= 2)
      for (const auto& m : find_value_mentions(s, table))
        if (const auto& src = std::get<TableCellSource>(m.source); src.col == 0)
          anchor_rows.insert(src.row);
    std::vector<std::size_t> anchor_cols;
    for (auto c : cols)
      if (contains_word(s, table.header()[c])) anchor_cols.push_back(c);
    if (anchor_cols.empty() && cols.size() == 1) anchor_cols = cols;
    if (anchor_rows.empty() && table.num_rows() == 1) anchor_rows.insert(0);

    for (const auto& tok : find_numbers(s)) {
      const bool supported = std::any_of(known.begin(), known.end(), [&](const CellNumber& n) {
        return same_number(tok.number, n);
      });
      if (supported) continue;
      const std::string_view token = s.substr(tok.span.begin, tok.span.size());
      if (anchor_rows.size() != 1 || anchor_cols.size() != 1) {
        findings.push_back("- \"" + std::string(token) +
                           "\" is not in the table, and the sentence does not identify one cell.");
        continue;
      }
      const std::size_t r = *anchor_rows.begin();
      const std::size_t c = anchor_cols.front();
      const auto& cell = table.at(r, c);
      const auto run = digit_run(token);
      const auto old_digits = token.substr(run.begin, run.size());
      std::string new_digits = format_decimal(std::fabs(cell.numeric()->value));
      if (old_digits.find(',') != std::string_view::npos) new_digits = group_thousands(new_digits);
      if (new_digits == old_digits) continue;
      edits.push_back(Edit{Span{tok.span.begin + run.begin, tok.span.begin + run.end}, new_digits});
      const std::string row_label = table.num_columns() >= 2 ? table.at(r, 0).raw() : "";
      findings.push_back("- \"" + std::string(token) + "\" contradicts the table: " +
                         table.header()[c] + (row_label.empty() ? "" : " at " + row_label) +
                         " is " + cell.raw() + ".");
    }

    if (delta) {
      for (const auto& m : find_trend_terms(s, lexicon_)) {
        const auto polarity = std::get<TrendTermSource>(m.source).polarity;
        if ((polarity == Polarity::Up && *delta <= 0) || (polarity == Polarity::Down && *delta >= 0)) {
          if (*delta == 0) {
            findings.push_back("- \"" + m.matched_text + "\" is wrong: the series ends where it starts.");
            continue;
          }
          edits.push_back(Edit{m.span, antonym_for(m, lexicon_)});
          findings.push_back("- \"" + m.matched_text + "\" contradicts the table: " +
                             table.header()[cols[0]] + (*delta > 0 ? " goes up" : " goes down") +
                             " from the first to the last row.");
        }
      }
    }

    std::sort(edits.begin(), edits.end(),
              [](const Edit& a, const Edit& b) { return a.span.begin < b.span.begin; });
    std::size_t pos = 0;
    for (const auto& e : edits) {
      if (e.span.begin < pos) continue;
      corrected.append(s.substr(pos, e.span.begin - pos));
      corrected.append(e.replacement);
      pos = e.span.end;
    }
    corrected.append(s.substr(pos));
  }
  corrected.append(caption, cursor, std::string::npos);

  std::string out;
  if (findings.empty()) {
    out.append(kNoErrorsLine);
  } else {
    for (std::size_t i = 0; i < findings.size(); ++i) {
      if (i > 0) out.push_back('\n');
      out.append(findings[i]);
    }
  }
  out.push_back('\n');
  out.append(kCorrectedMarker);
  out.push_back('\n');
  out.append(findings.empty() ? caption : corrected);
  return out;
}

std::string FixtureRectifierBackend::rectify(const RectifyRequest& request) {
  const auto response = wire::read_fixture(dir_, wire::kRectifyRoute, request.wire_body());
  if (!response.contains("raw_response") || !response["raw_response"].is_string())
    throw Error(Errc::BackendUnavailable, "rectify fixture has no raw_response");
  return response["raw_response"].get<std::string>();
}

std::string RemoteRectifierBackend::rectify(const RectifyRequest& request) {
  const auto response = client_.post(wire::kRectifyRoute, request.wire_body());
  if (!response.contains("raw_response") || !response["raw_response"].is_string())
    throw Error(Errc::BackendUnavailable, "rectify response has no raw_response");
  return response["raw_response"].get<std::string>();
}

std::unique_ptr<RectifierBackend> make_rectifier_backend(std::string_view selector,
                                                         const TrendLexicon& lexicon) {
  if (selector == "oracle") return std::make_unique<TableRectifier>(lexicon);
  if (selector.starts_with("fixture:"))
    return std::make_unique<FixtureRectifierBackend>(std::string(selector.substr(8)));
  if (selector.starts_with("remote:"))
    return std::make_unique<RemoteRectifierBackend>(std::string(selector.substr(7)));
  throw Error(Errc::InvalidArgument, "unknown rectifier backend '" + std::string(selector) + "'");
}

RectifierOutput parse_rectifier_response(std::string_view raw) {
  const auto at = raw.rfind(kCorrectedMarker);
  if (at == std::string_view::npos)
    throw Error(Errc::MissingMarker, "rectifier response has no CORRECTED CAPTION marker");
  RectifierOutput out;
  out.explanation = std::string(text::trim(raw.substr(0, at)));
  out.corrected = std::string(text::trim(raw.substr(at + kCorrectedMarker.size())));
  if (out.corrected.empty())
    throw Error(Errc::MissingMarker, "nothing follows the CORRECTED CAPTION marker");

  std::string_view rest = out.explanation;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    if (text::trim(rest.substr(0, nl)) == kNoErrorsLine) {
      out.declared_no_errors = true;
      break;
    }
    if (nl == std::string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }
  return out;
}

std::string_view status_name(CorrectionStatus s) noexcept {
  switch (s) {
    case CorrectionStatus::Corrected: return "Corrected";
    case CorrectionStatus::Unchanged: return "Unchanged";
    case CorrectionStatus::ParseFallback: return "ParseFallback";
  }
  return "?";
}

CorrectionResult correct_caption(const ChartRef& chart, const Caption& caption,
                                 Chart2TableBackend& c2t, RectifierBackend& rectifier,
                                 const CorrectionOptions& options) {
  if (text::trim(caption.raw).empty()) throw Error(Errc::EmptyCaption, "caption is empty");

  TitledTable stage1{"", Table({"_"}, {})};
  try {
    stage1 = c2t.convert(chart);
  } catch (const std::exception& e) {
    throw Error(Errc::BackendUnavailable, "chart2table (" + c2t.id() + "): " + e.what());
  }

  RectifyRequest req{stage1.title, stage1.table, caption.raw, template_id(options.template_text),
                     render_rectification_prompt(stage1.title, stage1.table, caption.raw,
                                                 options.template_text)};
  std::string raw;
  try {
    raw = rectifier.rectify(req);
  } catch (const std::exception& e) {
    throw Error(Errc::BackendUnavailable, "rectifier (" + rectifier.id() + "): " + e.what());
  }

  CorrectionResult result;
  result.original = caption;
  result.title = stage1.title;
  result.table_used = stage1.table;
  result.corrected = caption.raw;

  RectifierOutput parsed;
  try {
    parsed = parse_rectifier_response(raw);
  } catch (const Error& e) {
    if (e.code() != Errc::MissingMarker) throw;
    result.explanation = raw;
    result.status = CorrectionStatus::ParseFallback;
    return result;
  }
  result.explanation = parsed.explanation;
  if (parsed.declared_no_errors || parsed.corrected == caption.raw) {
    result.status = CorrectionStatus::Unchanged;
    return result;
  }

  const std::size_t distance = levenshtein(caption.raw, parsed.corrected);
  if (options.max_edit_ratio) {
    const auto length = std::max<std::size_t>(1, text::decode_utf8(caption.raw).size());
    if (static_cast<double>(distance) > *options.max_edit_ratio * static_cast<double>(length)) {
      result.status = CorrectionStatus::Unchanged;
      return result;
    }
  }
  result.corrected = parsed.corrected;
  result.edit_distance = distance;
  result.status = CorrectionStatus::Corrected;
  return result;
}

std::vector<BatchOutcome> batch_correct(const std::vector<CorrectionJob>& jobs,
                                        Chart2TableBackend& c2t, RectifierBackend& rectifier,
                                        std::size_t concurrency_limit,
                                        const CorrectionOptions& options) {
  std::vector<BatchOutcome> outcomes(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      auto& out = outcomes[i];
      out.id = jobs[i].id;
      try {
        out.result = correct_caption(jobs[i].chart, jobs[i].caption, c2t, rectifier, options);
      } catch (const Error& e) {
        out.error_code = std::string(errc_name(e.code()));
        out.error_message = e.what();
      } catch (const std::exception& e) {
        out.error_code = "Internal";
        out.error_message = e.what();
      }
    }
  };

  const std::size_t width = std::min(std::max<std::size_t>(1, concurrency_limit), jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < width; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return outcomes;
}

nlohmann::ordered_json to_json(const BatchOutcome& outcome) {
  nlohmann::ordered_json j;
  j["id"] = outcome.id;
  if (!outcome.result) {
    j["error"] = {{"code", outcome.error_code}, {"message", outcome.error_message}};
    return j;
  }
  const auto& r = *outcome.result;
  j["status"] = std::string(status_name(r.status));
  j["original"] = r.original.raw;
  j["corrected"] = r.corrected;
  j["edit_distance"] = r.edit_distance;
  j["explanation"] = r.explanation;
  j["title"] = r.title;
  j["table_used"] = r.table_used ? nlohmann::ordered_json(serialize_linearized(*r.table_used))
                                 : nlohmann::ordered_json(nullptr);
  return j;
}

}  // namespace chartfact
