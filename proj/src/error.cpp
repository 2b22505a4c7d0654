#include "bdsde/error.hpp"

namespace bdsde {

std::string NumericalFailure::with_step(const std::string& what, std::optional<std::size_t> step) {
    if (!step) return what;
    return what + " (step " + std::to_string(*step) + ")";
}

ParseError::ParseError(const std::string& what, int line, int column)
    : Error(ErrorKind::parse_error,
            std::to_string(line) + ":" + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_argument:
        case ErrorKind::parse_error: return exit_validation;
        case ErrorKind::numerical_failure: return exit_numerical;
        case ErrorKind::io_error: return exit_usage;
    }
    return exit_usage;
}

}  // namespace bdsde
