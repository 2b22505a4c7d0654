#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace bdsde {

enum class ErrorKind { invalid_argument, numerical_failure, parse_error, io_error };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error(ErrorKind::invalid_argument, what) {}
};

/// Raised when a computation produces non-finite values or a numerical kernel
/// cannot converge. `step` is set when the failure happened inside a backward sweep.
class NumericalFailure : public Error {
public:
    explicit NumericalFailure(const std::string& what, std::optional<std::size_t> step = std::nullopt)
        : Error(ErrorKind::numerical_failure, with_step(what, step)), step_(step) {}
    std::optional<std::size_t> step() const noexcept { return step_; }

private:
    static std::string with_step(const std::string& what, std::optional<std::size_t> step);
    std::optional<std::size_t> step_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, int column);
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io_error, what) {}
};

// CLI exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_validation = 2;
inline constexpr int exit_numerical = 3;
inline constexpr int exit_check_failed = 4;

int exit_code_for(ErrorKind kind) noexcept;

}  // namespace bdsde
