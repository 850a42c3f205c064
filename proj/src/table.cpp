#include "chartfact/table.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <utility>

#include "chartfact/error.hpp"
#include "text_util.hpp"

namespace chartfact {

namespace {

struct ScaleEntry {
  std::string_view word;
  ScaleWord scale;
};

constexpr std::array<ScaleEntry, 4> kScaleWords{{
    {"thousand", ScaleWord::Thousand},
    {"million", ScaleWord::Million},
    {"billion", ScaleWord::Billion},
    {"trillion", ScaleWord::Trillion},
}};

constexpr std::array<std::string_view, 3> kCurrencySymbols{"$", "\xE2\x82\xAC", "\xC2\xA3"};

bool strip_prefix(std::string_view& s, std::string_view prefix) {
  if (s.substr(0, prefix.size()) != prefix) return false;
  s.remove_prefix(prefix.size());
  return true;
}

bool strip_sign(std::string_view& s, bool& negative) {
  if (s.empty() || (s.front() != '-' && s.front() != '+')) return false;
  negative = s.front() == '-';
  s.remove_prefix(1);
  return true;
}

// Validates comma placement and returns the digits with commas removed.
std::optional<std::string> strip_separators(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  const auto dot = s.find('.');
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != ',') {
      out.push_back(s[i]);
      continue;
    }
    const bool in_integer_part = dot == std::string_view::npos || i < dot;
    const bool between_digits = i > 0 && i + 1 < s.size() &&
                                text::is_digit(s[i - 1]) && text::is_digit(s[i + 1]);
    if (!in_integer_part || !between_digits) return std::nullopt;
  }
  return out;
}

bool is_plain_decimal(std::string_view s) {
  std::size_t i = 0, int_digits = 0, frac_digits = 0;
  while (i < s.size() && text::is_digit(s[i])) ++i, ++int_digits;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && text::is_digit(s[i])) ++i, ++frac_digits;
  }
  return i == s.size() && (int_digits + frac_digits) > 0;
}

}  // namespace

std::string_view scale_word_name(ScaleWord w) noexcept {
  for (const auto& e : kScaleWords)
    if (e.scale == w) return e.word;
  return {};
}

double scale_factor(ScaleWord w) noexcept {
  switch (w) {
    case ScaleWord::Thousand: return 1e3;
    case ScaleWord::Million: return 1e6;
    case ScaleWord::Billion: return 1e9;
    case ScaleWord::Trillion: return 1e12;
  }
  return 1.0;
}

double CellNumber::magnitude() const noexcept {
  return scale ? value * scale_factor(*scale) : value;
}

std::optional<CellNumber> parse_cell_number(std::string_view text) {
  std::string_view s = text::trim(text);
  if (s.empty()) return std::nullopt;

  CellNumber number;
  for (const auto& e : kScaleWords) {
    if (s.size() <= e.word.size()) continue;
    const auto tail = s.substr(s.size() - e.word.size());
    if (!text::iequals(tail, e.word)) continue;
    const char before = s[s.size() - e.word.size() - 1];
    if (!text::is_space(before) && !text::is_digit(before)) continue;
    number.scale = e.scale;
    s = text::trim(s.substr(0, s.size() - e.word.size()));
    break;
  }
  if (!s.empty() && s.back() == '%') {
    number.is_percent = true;
    s = text::trim(s.substr(0, s.size() - 1));
  }

  bool negative = false;
  const bool leading_sign = strip_sign(s, negative);
  for (auto sym : kCurrencySymbols) {
    if (strip_prefix(s, sym)) {
      s = text::trim(s);
      break;
    }
  }
  if (!leading_sign) strip_sign(s, negative);

  auto digits = strip_separators(s);
  if (!digits || !is_plain_decimal(*digits)) return std::nullopt;

  double value = 0.0;
  const char* first = digits->data();
  const char* last = first + digits->size();
  auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::fixed);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) return std::nullopt;
  number.value = negative ? -value : value;
  return number;
}

std::string format_decimal(double value) {
  std::array<char, 512> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::fixed);
  if (ec != std::errc{}) return std::to_string(value);
  return std::string(buf.data(), ptr);
}

std::string group_thousands(std::string_view plain) {
  std::string_view sign;
  if (!plain.empty() && (plain.front() == '-' || plain.front() == '+')) {
    sign = plain.substr(0, 1);
    plain.remove_prefix(1);
  }
  const auto dot = plain.find('.');
  const auto int_part = plain.substr(0, dot);
  const auto rest = dot == std::string_view::npos ? std::string_view{} : plain.substr(dot);
  std::string out(sign);
  for (std::size_t i = 0; i < int_part.size(); ++i) {
    if (i > 0 && (int_part.size() - i) % 3 == 0) out.push_back(',');
    out.push_back(int_part[i]);
  }
  out.append(rest);
  return out;
}

std::string render_cell_number(const CellNumber& number) {
  std::string out = format_decimal(number.value);
  if (number.is_percent) out.push_back('%');
  if (number.scale) {
    out.push_back(' ');
    out.append(scale_word_name(*number.scale));
  }
  return out;
}

Cell::Cell(std::string raw) : raw_(std::move(raw)), numeric_(parse_cell_number(raw_)) {}

Table::Table(std::vector<std::string> header, std::vector<Row> rows,
             std::optional<std::string> title)
    : title_(std::move(title)), header_(std::move(header)), rows_(std::move(rows)) {
  if (header_.empty()) throw Error(Errc::EmptyInput, "table header has no columns");
  for (std::size_t c = 0; c < header_.size(); ++c) {
    header_[c] = std::string(text::trim(header_[c]));
    if (header_[c].empty())
      throw Error(Errc::EmptyHeaderName, "header column " + std::to_string(c) + " is blank", c);
  }
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    if (rows_[r].size() != header_.size()) {
      throw Error(Errc::RaggedRow,
                  "row " + std::to_string(r + 1) + " has " + std::to_string(rows_[r].size()) +
                      " cells, header has " + std::to_string(header_.size()),
                  r + 1);
    }
  }
}

Table Table::from_strings(std::vector<std::string> header,
                          const std::vector<std::vector<std::string>>& rows,
                          std::optional<std::string> title) {
  std::vector<Row> cells;
  cells.reserve(rows.size());
  for (const auto& r : rows) {
    Row row;
    row.reserve(r.size());
    for (const auto& v : r) row.emplace_back(v);
    cells.push_back(std::move(row));
  }
  return Table(std::move(header), std::move(cells), std::move(title));
}

std::optional<std::size_t> Table::find_column(std::string_view name) const {
  const auto wanted = text::trim(name);
  for (std::size_t c = 0; c < header_.size(); ++c)
    if (header_[c] == wanted) return c;
  return std::nullopt;
}

Table Table::with_title(std::optional<std::string> title) const {
  Table copy = *this;
  copy.title_ = std::move(title);
  return copy;
}

Table parse_linearized(std::string_view input) {
  if (input.empty()) throw Error(Errc::EmptyInput, "linearized table is empty");

  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (true) {
    const auto pos = input.find(kRowDelimiter, start);
    if (pos == std::string_view::npos) {
      lines.push_back(input.substr(start));
      break;
    }
    lines.push_back(input.substr(start, pos - start));
    start = pos + kRowDelimiter.size();
  }

  auto split_cells = [](std::string_view line) {
    std::vector<std::string> cells;
    std::size_t from = 0;
    while (true) {
      const auto tab = line.find(kCellDelimiter, from);
      if (tab == std::string_view::npos) {
        cells.emplace_back(line.substr(from));
        break;
      }
      cells.emplace_back(line.substr(from, tab - from));
      from = tab + 1;
    }
    return cells;
  };

  auto header = split_cells(lines.front());
  std::vector<Row> rows;
  rows.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    Row row;
    for (auto& raw : split_cells(lines[i])) row.emplace_back(std::move(raw));
    if (row.size() != header.size()) {
      throw Error(Errc::RaggedRow,
                  "row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                      " cells, header has " + std::to_string(header.size()),
                  i);
    }
    rows.push_back(std::move(row));
  }
  return Table(std::move(header), std::move(rows));
}

std::string serialize_linearized(const Table& table) {
  const std::size_t total_rows = table.num_rows() + 1;
  std::size_t flat = 0;
  std::string out;

  auto emit_row = [&](std::size_t row_index, auto&& cell_text) {
    if (row_index > 0) out.append(kRowDelimiter);
    for (std::size_t c = 0; c < table.num_columns(); ++c, ++flat) {
      const std::string_view raw = cell_text(c);
      const bool fuses_with_delimiter =
          c + 1 == table.num_columns() && row_index + 1 < total_rows && !raw.empty() &&
          raw.back() == '&';
      if (raw.find(kCellDelimiter) != std::string_view::npos ||
          raw.find(kRowDelimiter) != std::string_view::npos || fuses_with_delimiter) {
        throw Error(Errc::UnencodableCell,
                    "cell " + std::to_string(flat) + " (row " + std::to_string(row_index) +
                        ", column " + std::to_string(c) + ") collides with a delimiter",
                    flat);
      }
      if (c > 0) out.push_back(kCellDelimiter);
      out.append(raw);
    }
  };

  emit_row(0, [&](std::size_t c) -> std::string_view { return table.header()[c]; });
  for (std::size_t r = 0; r < table.num_rows(); ++r)
    emit_row(r + 1, [&](std::size_t c) -> std::string_view { return table.at(r, c).raw(); });
  return out;
}

std::vector<Cell> column(const Table& table, std::size_t index) {
  if (index >= table.num_columns())
    throw Error(Errc::UnknownColumn, "column index " + std::to_string(index) + " out of range",
                index);
  std::vector<Cell> out;
  out.reserve(table.num_rows());
  for (const auto& row : table.rows()) out.push_back(row[index]);
  return out;
}

std::vector<Cell> column(const Table& table, std::string_view name) {
  const auto idx = table.find_column(name);
  if (!idx) throw Error(Errc::UnknownColumn, "no column named '" + std::string(name) + "'");
  return column(table, *idx);
}

std::vector<std::size_t> value_columns(const Table& table) {
  std::vector<std::size_t> cols;
  if (table.num_rows() == 0) return cols;
  const std::size_t first = table.num_columns() >= 2 ? 1 : 0;
  for (std::size_t c = first; c < table.num_columns(); ++c) {
    bool numeric = true;
    for (std::size_t r = 0; r < table.num_rows() && numeric; ++r)
      numeric = table.at(r, c).is_numeric();
    if (numeric) cols.push_back(c);
  }
  return cols;
}

}  // namespace chartfact
