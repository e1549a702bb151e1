#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace arbp {

/// Argument outside the mathematical domain of a function (e.g. Phi^-1(1)).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Caller broke a precondition: shape mismatch, empty data, bad index.
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Non-finite intermediate inside a recursion or optimizer step.
class NumericFault : public std::runtime_error {
public:
    NumericFault(const std::string& what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Malformed input file. Row and column are 1-based; 0 means "not applicable".
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t row = 0, std::size_t col = 0)
        : std::runtime_error(format(what, row, col)), row_(row), col_(col) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }

private:
    static std::string format(const std::string& what, std::size_t row, std::size_t col) {
        if (row == 0) return what;
        return what + " at row " + std::to_string(row) + ", column " + std::to_string(col);
    }

    std::size_t row_;
    std::size_t col_;
};

/// Model file has the wrong schema version or does not match the expected variant.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace arbp
