#include "nsmfm/error.hpp"

namespace nsmfm {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::RankTooLarge: return "RankTooLarge";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::SingularInput: return "SingularInput";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::DegenerateAntiProjection: return "DegenerateAntiProjection";
    case ErrorCode::InvalidQuery: return "InvalidQuery";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace nsmfm
