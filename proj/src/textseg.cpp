#include "chartfact/textseg.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "chartfact/error.hpp"
#include "text_util.hpp"

namespace chartfact {

namespace {

constexpr std::array<std::string_view, 40> kAbbreviations{
    "u.s", "u.k", "u.n", "e.u", "e.g", "i.e", "vs", "etc", "mr", "mrs",
    "ms", "dr", "st", "jr", "sr", "inc", "ltd", "co", "corp", "approx",
    "fig", "a.m", "p.m", "jan", "feb", "mar", "apr", "jun", "jul", "aug",
    "sep", "sept", "oct", "nov", "dec", "est", "avg", "no", "pct", "gov"};

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closer(std::string_view s, std::size_t i, std::size_t& len) {
  if (s[i] == '"' || s[i] == '\'' || s[i] == ')' || s[i] == ']') {
    len = 1;
    return true;
  }
  // U+201D and U+2019
  if (s.substr(i, 3) == "\xE2\x80\x9D" || s.substr(i, 3) == "\xE2\x80\x99") {
    len = 3;
    return true;
  }
  return false;
}

bool starts_sentence(std::string_view s, std::size_t i) {
  while (i < s.size() && (s[i] == '"' || s[i] == '\'' || s[i] == '(' || s[i] == '['))
    ++i;
  if (i < s.size() && s.substr(i, 3) == "\xE2\x80\x9C") i += 3;
  return i < s.size() && text::is_upper(s[i]);
}

// Token that ends just before the period at `dot`, lowercased, without the
// final period and any opening punctuation.
std::string token_before(std::string_view s, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && !text::is_space(s[b - 1])) --b;
  while (b < dot && (s[b] == '"' || s[b] == '(' || s[b] == '[' || s[b] == '\'')) ++b;
  return text::lower(s.substr(b, dot - b));
}

bool is_abbreviation(std::string_view token) {
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), token) != kAbbreviations.end();
}

}  // namespace

std::vector<Sentence> segment_sentences(std::string_view raw) {
  std::vector<Sentence> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    const auto piece = text::trim(raw.substr(b, e - b));
    if (!piece.empty()) out.push_back(Sentence{std::string(piece), out.size()});
  };

  std::size_t seg_start = 0;
  std::size_t i = 0;
  while (i < raw.size()) {
    if (!is_terminal(raw[i])) {
      ++i;
      continue;
    }
    const std::size_t punct_begin = i;
    std::size_t dots = 0;
    while (i < raw.size() && is_terminal(raw[i])) {
      if (raw[i] == '.') ++dots;
      ++i;
    }
    std::size_t closer_len = 0;
    while (i < raw.size() && is_closer(raw, i, closer_len)) i += closer_len;
    const std::size_t end = i;

    std::size_t next = end;
    while (next < raw.size() && text::is_space(raw[next])) ++next;
    const bool at_end = next == raw.size();

    if (!at_end) {
      if (dots >= 3) continue;
      if (next == end || !starts_sentence(raw, next)) continue;
      if (raw[punct_begin] == '.' && end - punct_begin == 1 &&
          is_abbreviation(token_before(raw, punct_begin)))
        continue;
    }
    emit(seg_start, end);
    seg_start = end;
  }
  emit(seg_start, raw.size());
  return out;
}

Caption Caption::from_text(std::string raw) {
  Caption c;
  c.sentences = segment_sentences(raw);
  c.raw = std::move(raw);
  return c;
}

Caption Caption::from_sentences(const std::vector<std::string>& sentences) {
  Caption c;
  for (const auto& s : sentences) {
    const auto t = text::trim(s);
    if (t.empty()) continue;
    if (!c.raw.empty()) c.raw.push_back(' ');
    c.raw.append(t);
    c.sentences.push_back(Sentence{std::string(t), c.sentences.size()});
  }
  return c;
}

// ---------------------------------------------------------------------------
// Trend lexicon

namespace {

struct Irregular {
  std::string_view base, past, participle;
};

constexpr std::array<Irregular, 4> kIrregulars{{
    {"rise", "rose", "risen"},
    {"fall", "fell", "fallen"},
    {"grow", "grew", "grown"},
    {"shrink", "shrank", "shrunk"},
}};

constexpr std::string_view kDefaultLexicon =
    "# Trend antonym pairs: increasing term <TAB> decreasing term\n"
    "increase\tdecrease\n"
    "rise\tfall\n"
    "grow\tshrink\n"
    "upward\tdownward\n"
    "climb\tdrop\n"
    "gain\tdecline\n"
    "improve\tworsen\n"
    "peak\tbottom\n";

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool doubles_final_consonant(std::string_view w) {
  if (w.size() < 3) return false;
  const char last = w.back();
  if (is_vowel(last) || last == 'w' || last == 'x' || last == 'y') return false;
  if (!is_vowel(w[w.size() - 2]) || is_vowel(w[w.size() - 3])) return false;
  int groups = 0;
  bool in_vowel = false;
  for (char c : w) {
    const bool v = is_vowel(c);
    if (v && !in_vowel) ++groups;
    in_vowel = v;
  }
  return groups == 1;
}

std::string inflect_word(std::string_view w, Inflection slot) {
  std::string s(w);
  if (slot == Inflection::Base || s.empty()) return s;
  for (const auto& irr : kIrregulars) {
    if (irr.base != w) continue;
    if (slot == Inflection::Past) return std::string(irr.past);
    if (slot == Inflection::PastParticiple) return std::string(irr.participle);
  }
  const char last = s.back();
  const bool consonant_y = last == 'y' && s.size() > 1 && !is_vowel(s[s.size() - 2]);
  switch (slot) {
    case Inflection::ThirdPerson:
      if (last == 's' || last == 'x' || last == 'z' || s.ends_with("ch") || s.ends_with("sh"))
        return s + "es";
      if (consonant_y) return s.substr(0, s.size() - 1) + "ies";
      return s + "s";
    case Inflection::Past:
    case Inflection::PastParticiple:
      if (last == 'e') return s + "d";
      if (consonant_y) return s.substr(0, s.size() - 1) + "ied";
      if (doubles_final_consonant(s)) return s + last + "ed";
      return s + "ed";
    case Inflection::Gerund:
      if (s.ends_with("ie")) return s.substr(0, s.size() - 2) + "ying";
      if (last == 'e' && !s.ends_with("ee") && !s.ends_with("ye") && !s.ends_with("oe"))
        return s.substr(0, s.size() - 1) + "ing";
      if (doubles_final_consonant(s)) return s + last + "ing";
      return s + "ing";
    case Inflection::Base:
      break;
  }
  return s;
}

// Slots in match priority order: when two slots share a surface form the
// earlier one is reported.
constexpr std::array<Inflection, 5> kSlots{Inflection::Base, Inflection::ThirdPerson,
                                           Inflection::Past, Inflection::Gerund,
                                           Inflection::PastParticiple};

std::string apply_case(std::string_view pattern, std::string word) {
  std::size_t letters = 0, uppers = 0;
  for (char c : pattern) {
    if (text::is_alpha(c)) ++letters;
    if (text::is_upper(c)) ++uppers;
  }
  if (letters > 1 && uppers == letters) {
    for (auto& c : word) c = text::to_upper(c);
  } else if (!pattern.empty() && text::is_upper(pattern.front()) && !word.empty()) {
    word.front() = text::to_upper(word.front());
  }
  return word;
}

}  // namespace

std::string inflect(std::string_view term, Inflection slot) {
  const auto space = term.find(' ');
  if (space == std::string_view::npos) return inflect_word(term, slot);
  return inflect_word(term.substr(0, space), slot) + std::string(term.substr(space));
}

TrendLexicon::TrendLexicon(std::vector<TrendPair> pairs) : pairs_(std::move(pairs)) {
  std::map<std::string, std::size_t> seen;
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    for (auto* term : {&pairs_[p].up, &pairs_[p].down}) {
      *term = text::collapse_whitespace(text::lower(*term));
      if (term->empty())
        throw Error(Errc::InvalidArgument, "empty trend term in pair " + std::to_string(p), p);
      auto [it, inserted] = seen.emplace(*term, p);
      if (!inserted)
        throw Error(Errc::DuplicateTerm, "trend term '" + *term + "' appears in more than one pair",
                    p);
    }
  }
}

TrendLexicon TrendLexicon::parse(std::string_view contents) {
  std::vector<TrendPair> pairs;
  std::istringstream in{std::string(contents)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (text::trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw Error(Errc::InvalidArgument,
                  "lexicon line " + std::to_string(line_no) + ": expected two tab-separated terms",
                  line_no);
    pairs.push_back(TrendPair{std::string(text::trim(line.substr(0, tab))),
                              std::string(text::trim(line.substr(tab + 1)))});
  }
  return TrendLexicon(std::move(pairs));
}

TrendLexicon TrendLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open lexicon file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const TrendLexicon& TrendLexicon::defaults() {
  static const TrendLexicon lexicon = parse(kDefaultLexicon);
  return lexicon;
}

std::vector<MentionMatch> find_trend_terms(std::string_view sentence, const TrendLexicon& lexicon) {
  struct Form {
    std::string text;
    TrendTermSource source;
  };
  std::vector<Form> forms;
  for (std::size_t p = 0; p < lexicon.pairs().size(); ++p) {
    for (auto pol : {Polarity::Up, Polarity::Down}) {
      for (auto slot : kSlots) {
        auto surface = inflect(lexicon.term(p, pol), slot);
        const bool dup = std::any_of(forms.begin(), forms.end(),
                                     [&](const Form& f) { return f.text == surface; });
        if (!dup) forms.push_back(Form{std::move(surface), TrendTermSource{p, pol, slot}});
      }
    }
  }
  std::stable_sort(forms.begin(), forms.end(),
                   [](const Form& a, const Form& b) { return a.text.size() > b.text.size(); });

  std::vector<MentionMatch> out;
  std::size_t i = 0;
  while (i < sentence.size()) {
    const bool word_start = text::is_alpha(sentence[i]) && (i == 0 || !text::is_alnum(sentence[i - 1]));
    if (!word_start) {
      ++i;
      continue;
    }
    const Form* hit = nullptr;
    for (const auto& f : forms) {
      const auto end = i + f.text.size();
      if (end > sentence.size()) continue;
      if (!text::iequals(sentence.substr(i, f.text.size()), f.text)) continue;
      if (end < sentence.size() && text::is_alnum(sentence[end])) continue;
      hit = &f;
      break;
    }
    if (!hit) {
      while (i < sentence.size() && text::is_alnum(sentence[i])) ++i;
      continue;
    }
    const Span span{i, i + hit->text.size()};
    out.push_back(MentionMatch{span, std::string(sentence.substr(span.begin, span.size())),
                               hit->source});
    i = span.end;
  }
  return out;
}

std::string antonym_for(const MentionMatch& match, const TrendLexicon& lexicon) {
  const auto& src = std::get<TrendTermSource>(match.source);
  const auto& other = lexicon.term(src.pair_id, opposite(src.polarity));
  return apply_case(match.matched_text, inflect(other, src.inflection));
}

// ---------------------------------------------------------------------------
// Table value mentions

namespace {

bool left_boundary_ok(std::string_view s, std::size_t b, std::string_view cand) {
  if (b == 0) return true;
  const char first = cand.front();
  const char prev = s[b - 1];
  if (text::is_alnum(first) && text::is_alnum(prev)) return false;
  if (text::is_digit(first) && (prev == '.' || prev == ',') && b >= 2 && text::is_digit(s[b - 2]))
    return false;
  return true;
}

bool right_boundary_ok(std::string_view s, std::size_t e, std::string_view cand) {
  if (e >= s.size()) return true;
  const char last = cand.back();
  const char next = s[e];
  if (text::is_alnum(last) && text::is_alnum(next)) return false;
  if (text::is_digit(last) && (next == '.' || next == ',') && e + 1 < s.size() &&
      text::is_digit(s[e + 1]))
    return false;
  return true;
}

}  // namespace

std::vector<MentionMatch> find_value_mentions(std::string_view sentence, const Table& table) {
  struct Candidate {
    std::string text;
    TableCellSource source;
  };
  std::vector<MentionMatch> found;

  for (std::size_t r = 0; r < table.num_rows(); ++r) {
    for (std::size_t c = 0; c < table.num_columns(); ++c) {
      const Cell& cell = table.at(r, c);
      if (text::trim(cell.raw()).empty()) continue;
      std::vector<Candidate> cands{{cell.raw(), {r, c, TableCellSource::Form::Raw}}};
      if (cell.numeric()) {
        auto bare = format_decimal(cell.numeric()->value);
        auto grouped = group_thousands(bare);
        if (grouped != bare)
          cands.push_back({std::move(grouped), {r, c, TableCellSource::Form::GroupedNumber}});
        cands.push_back({std::move(bare), {r, c, TableCellSource::Form::Number}});
      }
      for (const auto& cand : cands) {
        std::size_t pos = sentence.find(cand.text);
        while (pos != std::string_view::npos) {
          const std::size_t end = pos + cand.text.size();
          if (left_boundary_ok(sentence, pos, cand.text) &&
              right_boundary_ok(sentence, end, cand.text)) {
            found.push_back(MentionMatch{Span{pos, end}, cand.text, cand.source});
          }
          pos = sentence.find(cand.text, pos + 1);
        }
      }
    }
  }

  // Stable sort keeps row-major / raw-first order among identical spans.
  std::stable_sort(found.begin(), found.end(), [](const MentionMatch& a, const MentionMatch& b) {
    if (a.span.begin != b.span.begin) return a.span.begin < b.span.begin;
    return a.span.end > b.span.end;
  });

  std::vector<MentionMatch> out;
  for (std::size_t i = 0; i < found.size(); ++i) {
    const auto& m = found[i];
    bool drop = false;
    for (std::size_t j = 0; j < found.size() && !drop; ++j) {
      if (i == j) continue;
      const auto& o = found[j];
      const bool contains = o.span.begin <= m.span.begin && m.span.end <= o.span.end;
      if (contains && o.span.size() > m.span.size()) drop = true;
      if (o.span == m.span && j < i) drop = true;
    }
    if (!drop) out.push_back(m);
  }
  return out;
}

}  // namespace chartfact

namespace chartfact {

std::vector<NumberToken> find_numbers(std::string_view s) {
  std::vector<NumberToken> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const bool starts_digits =
        text::is_digit(s[i]) || (s[i] == '.' && i + 1 < s.size() && text::is_digit(s[i + 1]));
    const bool glued = i > 0 && (text::is_alnum(s[i - 1]) ||
                                 ((s[i - 1] == '.' || s[i - 1] == ',') && i >= 2 &&
                                  text::is_digit(s[i - 2])));
    if (!starts_digits || glued) {
      ++i;
      continue;
    }
    std::size_t b = i;
    // currency symbol, then sign, immediately before the digits
    for (std::string_view sym : {"$", "\xE2\x82\xAC", "\xC2\xA3"}) {
      if (b >= sym.size() && s.substr(b - sym.size(), sym.size()) == sym) {
        b -= sym.size();
        break;
      }
    }
    if (b > 0 && s[b - 1] == '-' && (b == 1 || !text::is_alnum(s[b - 2]))) --b;

    std::size_t e = i;
    while (e < s.size() &&
           (text::is_digit(s[e]) ||
            ((s[e] == ',' || s[e] == '.') && e + 1 < s.size() && text::is_digit(s[e + 1]))))
      ++e;
    if (e < s.size() && text::is_alpha(s[e])) {
      // "1990s", "3rd": not a plain number; skip the whole word
      while (e < s.size() && text::is_alnum(s[e])) ++e;
      i = e;
      continue;
    }
    if (e < s.size() && s[e] == '%') ++e;
    // optional scale word
    std::size_t w = e;
    while (w < s.size() && s[w] == ' ') ++w;
    for (std::string_view word : {"thousand", "million", "billion", "trillion"}) {
      if (w > e && s.size() - w >= word.size() && text::iequals(s.substr(w, word.size()), word) &&
          (w + word.size() == s.size() || !text::is_alnum(s[w + word.size()]))) {
        e = w + word.size();
        break;
      }
    }
    auto number = parse_cell_number(s.substr(b, e - b));
    if (number) out.push_back(NumberToken{Span{b, e}, *number});
    i = e;
  }
  return out;
}

}  // namespace chartfact
