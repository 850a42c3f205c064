#include "chartfact/error.hpp"

namespace chartfact {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::RaggedRow: return "RaggedRow";
    case Errc::EmptyHeaderName: return "EmptyHeaderName";
    case Errc::UnencodableCell: return "UnencodableCell";
    case Errc::UnknownColumn: return "UnknownColumn";
    case Errc::DuplicateTerm: return "DuplicateTerm";
    case Errc::InsufficientCorpus: return "InsufficientCorpus";
    case Errc::EmptyCaption: return "EmptyCaption";
    case Errc::BackendUnavailable: return "BackendUnavailable";
    case Errc::MissingMarker: return "MissingMarker";
    case Errc::DegenerateSeries: return "DegenerateSeries";
    case Errc::SingleClass: return "SingleClass";
    case Errc::DegenerateAgreement: return "DegenerateAgreement";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace chartfact
