#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chartfact {

enum class ScaleWord { Thousand, Million, Billion, Trillion };

std::string_view scale_word_name(ScaleWord w) noexcept;
double scale_factor(ScaleWord w) noexcept;

// Number as it was written in a cell: "20.4%" keeps value 20.4 with the
// percent flag, "$1.2 billion" keeps 1.2 with the scale word.
struct CellNumber {
  double value = 0.0;
  bool is_percent = false;
  std::optional<ScaleWord> scale;

  // value multiplied out by the scale word (percent is left as written)
  double magnitude() const noexcept;

  friend bool operator==(const CellNumber&, const CellNumber&) = default;
};

// Strips whitespace, one currency symbol ($, €, £), thousands separators,
// a trailing '%' and one trailing scale word, then reads a signed decimal.
std::optional<CellNumber> parse_cell_number(std::string_view text);

// Canonical text for a parsed number, e.g. "1234", "20.4%", "1.5 million".
// Feeding it back through parse_cell_number yields the same record.
std::string render_cell_number(const CellNumber& number);

// Shortest round-trip decimal rendering of a double ("20.4", "1234", "-0.5").
std::string format_decimal(double value);

// Inserts thousands separators into the integer part of a plain decimal.
std::string group_thousands(std::string_view plain_decimal);

class Cell {
 public:
  Cell() = default;
  explicit Cell(std::string raw);

  const std::string& raw() const noexcept { return raw_; }
  const std::optional<CellNumber>& numeric() const noexcept { return numeric_; }
  bool is_numeric() const noexcept { return numeric_.has_value(); }

  friend bool operator==(const Cell& a, const Cell& b) { return a.raw_ == b.raw_; }

 private:
  std::string raw_;
  std::optional<CellNumber> numeric_;
};

using Row = std::vector<Cell>;

// Immutable rectangular table. Header names are stored trimmed; data cells
// are kept exactly as given.
class Table {
 public:
  // Throws Errc::EmptyInput for an empty header, Errc::EmptyHeaderName for a
  // blank column name and Errc::RaggedRow (with the row's linearized index,
  // header = 0) for a row of the wrong arity.
  Table(std::vector<std::string> header, std::vector<Row> rows,
        std::optional<std::string> title = std::nullopt);

  static Table from_strings(std::vector<std::string> header,
                            const std::vector<std::vector<std::string>>& rows,
                            std::optional<std::string> title = std::nullopt);

  const std::optional<std::string>& title() const noexcept { return title_; }
  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<Row>& rows() const noexcept { return rows_; }
  std::size_t num_columns() const noexcept { return header_.size(); }
  std::size_t num_rows() const noexcept { return rows_.size(); }
  const Cell& at(std::size_t row, std::size_t col) const { return rows_.at(row).at(col); }

  std::optional<std::size_t> find_column(std::string_view name) const;

  Table with_title(std::optional<std::string> title) const;

  friend bool operator==(const Table&, const Table&) = default;

 private:
  std::optional<std::string> title_;
  std::vector<std::string> header_;
  std::vector<Row> rows_;
};

struct ChartRef {
  std::string id;
  std::optional<std::string> image_uri;
  std::optional<Table> gold_table;
};

inline constexpr std::string_view kRowDelimiter = "&&&";
inline constexpr char kCellDelimiter = '\t';

// Rows split on "&&&", cells on TAB, first row is the header. The title is
// never part of this format.
Table parse_linearized(std::string_view text);

// Inverse of parse_linearized. Throws Errc::UnencodableCell (index = flat
// cell position, header cells first) when a cell holds a TAB, the row
// delimiter, or a trailing '&' that would fuse with the next row delimiter.
std::string serialize_linearized(const Table& table);

std::vector<Cell> column(const Table& table, std::size_t index);

// Columns whose every cell is numeric. With two or more columns, column 0
// holds the x-axis / row labels and is never a value column.
std::vector<std::size_t> value_columns(const Table& table);
std::vector<Cell> column(const Table& table, std::string_view name);

}  // namespace chartfact
