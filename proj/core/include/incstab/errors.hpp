#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace incstab {

// Error taxonomy. The CLI maps these onto exit codes:
// ParseError/ConfigError -> 2 (bad input), NumericError -> 3 (aborted run).

/// Syntax error in an expression, with the byte offset of the offending token.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " at offset " + std::to_string(offset)),
          offset_(offset) {}

    [[nodiscard]] std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Domain error while evaluating an expression (log/sqrt of a negative
/// argument, division by zero). Carries the offending subexpression.
class EvalError : public std::runtime_error {
public:
    EvalError(const std::string& what, std::string subexpr)
        : std::runtime_error(what + " in '" + subexpr + "'"),
          subexpr_(std::move(subexpr)) {}

    [[nodiscard]] const std::string& subexpr() const { return subexpr_; }

private:
    std::string subexpr_;
};

/// Invalid configuration or argument: schema violations, topology rule
/// violations, out-of-range options.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical abort: state blow-up or a suspected sliding mode. Records the
/// last time the integration was still healthy.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, double last_good_time)
        : std::runtime_error(what), last_good_time_(last_good_time) {}

    [[nodiscard]] double last_good_time() const { return last_good_time_; }

private:
    double last_good_time_ = 0.0;
};

}  // namespace incstab
