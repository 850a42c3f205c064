#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chartfact {

enum class Errc {
  EmptyInput,
  RaggedRow,
  EmptyHeaderName,
  UnencodableCell,
  UnknownColumn,
  DuplicateTerm,
  InsufficientCorpus,
  EmptyCaption,
  BackendUnavailable,
  MissingMarker,
  DegenerateSeries,
  SingleClass,
  DegenerateAgreement,
  SchemaViolation,
  InvalidArgument,
  Io,
};

std::string_view errc_name(Errc code) noexcept;

// Every module reports failures through this one exception type. `index`
// carries the row/cell/sentence position when the failing operation has one.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message,
        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(message), code_(code), index_(index) {}

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  Errc code_;
  std::optional<std::size_t> index_;
};

}  // namespace chartfact
