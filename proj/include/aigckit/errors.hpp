#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace aigckit {

/// Base class for every error the toolkit throws.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A named field failed validation while constructing a domain value.
struct InvalidField : Error {
    InvalidField(std::string field_name, const std::string& why)
        : Error(field_name + ": " + why), field(std::move(field_name)) {}
    std::string field;
};

/// Precondition violation on an operation argument.
struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

}  // namespace aigckit
