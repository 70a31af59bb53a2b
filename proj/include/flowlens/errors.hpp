#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flowlens {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration: bad mapping, bad spec file, bad flag combination.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Malformed input data (XES/CSV). Carries a 1-based line and column where known.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line = 0, std::size_t column = 0)
        : Error(format(msg, line, column)), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& msg, std::size_t line, std::size_t column) {
        if (line == 0)
            return msg;
        std::string out = msg + " (line " + std::to_string(line);
        if (column != 0)
            out += ", column " + std::to_string(column);
        out += ")";
        return out;
    }

    std::size_t line_;
    std::size_t column_;
};

/// Inconsistent state between pipeline stages: fingerprint mismatches,
/// infeasible clustering parameters, internal contract violations.
class AnalysisError : public Error {
public:
    explicit AnalysisError(const std::string& msg) : Error(msg) {}
};

} // namespace flowlens
