#pragma once

#include <stdexcept>
#include <string>

namespace qwyc {

// Raised when an input file cannot be parsed (bad CSV row, bad JSON, ...).
struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when inputs parse but violate a documented precondition
// (NaN scores, non-positive costs, alpha out of range, ...).
struct validation_error : std::runtime_error {
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qwyc
