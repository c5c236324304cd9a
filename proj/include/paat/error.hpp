#pragma once

#include <stdexcept>
#include <string>

namespace paat {

// Base for all library errors so the CLI can catch one type.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Matrix dimension disagreement.
struct ShapeError : Error {
    using Error::Error;
};

// Bad user-facing input: tokens, ids, file contents, label names.
struct InputError : Error {
    using Error::Error;
};

// Violated internal contract (caller bug, not user input).
struct ContractError : Error {
    using Error::Error;
};

// Corrupt or incompatible serialized artifact.
struct FormatError : Error {
    using Error::Error;
};

// Invalid configuration or generator spec.
struct SpecError : Error {
    using Error::Error;
};

}  // namespace paat
