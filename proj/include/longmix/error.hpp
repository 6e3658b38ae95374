#ifndef LONGMIX_ERROR_HPP
#define LONGMIX_ERROR_HPP

#include <stdexcept>
#include <string>

namespace longmix {

// Condition codes shared across modules. Grouped so callers can map a
// failure to a coarse category (bad input vs numerical breakdown).
enum class Errc {
    // data / input
    MissingColumn,
    NonContiguousWeeks,
    BadNumber,
    DuplicateId,
    ParseError,
    UnknownOperator,
    UnknownVariable,
    UnknownGroup,
    MethodMismatch,
    NotNested,
    ZeroContrast,
    LayoutMismatch,
    TooFew,
    TooLarge,
    IoError,
    // numerical
    RankDeficient,
    NonFiniteParam,
    DegenerateVariance,
    BoundaryParam,
    SingularInformation,
    CholeskyFailure,
    NonConvergence,
};

enum class ErrorCategory { Data, Numerical };

constexpr ErrorCategory category(Errc c) {
    switch (c) {
        case Errc::RankDeficient:
        case Errc::NonFiniteParam:
        case Errc::DegenerateVariance:
        case Errc::BoundaryParam:
        case Errc::SingularInformation:
        case Errc::CholeskyFailure:
        case Errc::NonConvergence:
            return ErrorCategory::Numerical;
        default:
            return ErrorCategory::Data;
    }
}

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const { return code_; }
    ErrorCategory category() const { return longmix::category(code_); }

  private:
    Errc code_;
};

// Parse failures carry the byte offset of the offending token.
class FormulaParseError : public Error {
  public:
    FormulaParseError(Errc code, const std::string& message, std::size_t offset)
        : Error(code, message + " (at byte " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

}  // namespace longmix

#endif  // LONGMIX_ERROR_HPP
