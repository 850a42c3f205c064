#include "chartfact/entail.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "chartfact/error.hpp"
#include "text_util.hpp"

namespace chartfact {

std::string build_prompt(std::string_view sentence) {
  std::string out = "Does the image entail this statement: \"";
  out.append(sentence);
  out.append("\"?");
  return out;
}

double sentence_score(const EntailmentLogits& logits) {
  const double m = std::max(logits.yes, logits.no);
  const double ey = std::exp(logits.yes - m);
  const double en = std::exp(logits.no - m);
  return ey / (ey + en);
}

double caption_score(const std::vector<double>& scores) {
  if (scores.empty()) throw Error(Errc::EmptyCaption, "caption has no sentence scores");
  return *std::min_element(scores.begin(), scores.end());
}

nlohmann::json EntailRequest::wire_body() const {
  nlohmann::json body;
  if (image_uri) {
    body["image_uri"] = *image_uri;
  } else if (table) {
    body["table_linearized"] = serialize_linearized(*table);
  }
  body["prompt"] = prompt;
  return body;
}

namespace {

bool close(double a, double b) {
  if (a == b) return true;
  return std::fabs(a - b) <= kOracleRelativeTolerance * std::max(std::fabs(a), std::fabs(b));
}

bool matches_number(const CellNumber& stated, const CellNumber& cell) {
  return close(stated.value, cell.value) || close(stated.magnitude(), cell.magnitude());
}

bool is_year_like(const CellNumber& n) {
  return !n.is_percent && !n.scale && n.value >= 1000 && n.value <= 2999 &&
         n.value == std::floor(n.value);
}

}  // namespace

EntailmentLogits oracle_logits(const Table& table, std::string_view sentence,
                               const TrendLexicon& lexicon) {
  constexpr EntailmentLogits kEntailed{kOracleLogit, -kOracleLogit};
  constexpr EntailmentLogits kViolated{-kOracleLogit, kOracleLogit};

  std::vector<CellNumber> known;
  for (const auto& row : table.rows())
    for (const auto& cell : row)
      if (cell.numeric()) known.push_back(*cell.numeric());
  for (const auto& name : table.header())
    for (const auto& tok : find_numbers(name))
      if (is_year_like(tok.number)) known.push_back(tok.number);

  for (const auto& tok : find_numbers(sentence)) {
    const bool found = std::any_of(known.begin(), known.end(), [&](const CellNumber& n) {
      return matches_number(tok.number, n);
    });
    if (!found) return kViolated;
  }

  const auto cols = value_columns(table);
  if (cols.size() == 1 && table.num_rows() >= 2) {
    const double first = table.at(0, cols[0]).numeric()->magnitude();
    const double last = table.at(table.num_rows() - 1, cols[0]).numeric()->magnitude();
    const double delta = last - first;
    for (const auto& m : find_trend_terms(sentence, lexicon)) {
      const auto polarity = std::get<TrendTermSource>(m.source).polarity;
      if ((polarity == Polarity::Up && delta <= 0) || (polarity == Polarity::Down && delta >= 0))
        return kViolated;
    }
  }
  return kEntailed;
}

EntailmentLogits OracleBackend::score(const EntailRequest& request) {
  if (!request.table)
    throw Error(Errc::BackendUnavailable,
                "oracle backend needs a data table for chart '" + request.chart_id + "'");
  return oracle_logits(*request.table, request.sentence, lexicon_);
}

EntailmentLogits parse_entail_response(const nlohmann::json& response) {
  try {
    if (response.contains("logit_yes") || response.contains("logit_no")) {
      EntailmentLogits l{response.at("logit_yes").get<double>(),
                         response.at("logit_no").get<double>()};
      if (!std::isfinite(l.yes) || !std::isfinite(l.no))
        throw Error(Errc::BackendUnavailable, "entail response has non-finite logits");
      return l;
    }
    if (response.contains("answer")) {
      const auto answer = text::lower(text::trim(response.at("answer").get<std::string>()));
      if (answer == "yes") return {kBinaryAnswerLogit, -kBinaryAnswerLogit};
      if (answer == "no") return {-kBinaryAnswerLogit, kBinaryAnswerLogit};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BackendUnavailable, std::string("malformed entail response: ") + e.what());
  }
  throw Error(Errc::BackendUnavailable, "entail response has neither logits nor a yes/no answer");
}

EntailmentLogits FixtureEntailmentBackend::score(const EntailRequest& request) {
  return parse_entail_response(wire::read_fixture(dir_, wire::kEntailRoute, request.wire_body()));
}

EntailmentLogits RemoteEntailmentBackend::score(const EntailRequest& request) {
  return parse_entail_response(client_.post(wire::kEntailRoute, request.wire_body()));
}

EntailmentLogits CachingBackend::score(const EntailRequest& request) {
  const auto key = wire::content_hash(wire::kEntailRoute, request.wire_body());
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++hits_;
      return it->second;
    }
  }
  const auto logits = inner_->score(request);
  std::lock_guard lock(mutex_);
  ++misses_;
  cache_.emplace(key, logits);
  return logits;
}

std::size_t CachingBackend::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::size_t CachingBackend::misses() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

std::shared_ptr<EntailmentBackend> make_entailment_backend(std::string_view selector,
                                                           const TrendLexicon& lexicon) {
  std::shared_ptr<EntailmentBackend> inner;
  if (selector == "oracle") {
    inner = std::make_shared<OracleBackend>(lexicon);
  } else if (selector.starts_with("fixture:")) {
    inner = std::make_shared<FixtureEntailmentBackend>(std::string(selector.substr(8)));
  } else if (selector.starts_with("remote:")) {
    inner = std::make_shared<RemoteEntailmentBackend>(std::string(selector.substr(7)));
  } else {
    throw Error(Errc::InvalidArgument, "unknown entailment backend '" + std::string(selector) + "'");
  }
  return std::make_shared<CachingBackend>(std::move(inner));
}

FactualityReport score_caption(const ChartRef& chart, const Caption& caption,
                               EntailmentBackend& backend, const ScoreOptions& options) {
  if (caption.sentences.empty()) throw Error(Errc::EmptyCaption, "caption has no sentences");

  const auto& sentences = caption.sentences;
  std::vector<double> scores(sentences.size());
  auto score_one = [&](std::size_t i) {
    EntailRequest req;
    req.chart_id = chart.id;
    req.image_uri = chart.image_uri;
    req.table = chart.gold_table;
    req.sentence = sentences[i].text;
    req.prompt = build_prompt(sentences[i].text);
    try {
      scores[i] = sentence_score(backend.score(req));
    } catch (const std::exception& e) {
      throw Error(Errc::BackendUnavailable,
                  "sentence " + std::to_string(i) + " of chart '" + chart.id + "': " + e.what(), i);
    }
  };

  const std::size_t width =
      backend.serial() ? 1 : std::max<std::size_t>(1, options.max_concurrency);
  for (std::size_t start = 0; start < sentences.size(); start += width) {
    const std::size_t stop = std::min(sentences.size(), start + width);
    if (stop - start == 1) {
      score_one(start);
      continue;
    }
    std::vector<std::future<void>> batch;
    for (std::size_t i = start; i < stop; ++i)
      batch.push_back(std::async(std::launch::async, score_one, i));
    // join every task before rethrowing so no task outlives `scores`
    std::exception_ptr first_error;
    for (auto& f : batch) {
      try {
        f.get();
      } catch (...) {
        if (!first_error) first_error = std::current_exception();
      }
    }
    if (first_error) std::rethrow_exception(first_error);
  }

  FactualityReport report;
  report.backend_id = backend.id();
  for (std::size_t i = 0; i < sentences.size(); ++i)
    report.per_sentence.emplace_back(sentences[i].index, scores[i]);
  report.caption_score = caption_score(scores);
  return report;
}

nlohmann::ordered_json to_json(const FactualityReport& report) {
  nlohmann::ordered_json j;
  j["backend_id"] = report.backend_id;
  j["caption_score"] = report.caption_score;
  auto per = nlohmann::ordered_json::array();
  for (const auto& [idx, score] : report.per_sentence)
    per.push_back(nlohmann::ordered_json{{"index", idx}, {"score", score}});
  j["per_sentence"] = std::move(per);
  return j;
}

}  // namespace chartfact
