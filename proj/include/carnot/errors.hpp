#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace carnot {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad indices, unparseable files, unknown names.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Invalid numeric parameters (negative dilation, p > q, s <= 0, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// An H-type classification was requested on an algebra whose step is not 2.
class NotStepTwoError : public Error {
public:
    using Error::Error;
};

/// A field was evaluated outside its positivity domain.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what, std::optional<std::size_t> sample = std::nullopt)
        : Error(what), sample_(sample) {}

    std::optional<std::size_t> sample_index() const { return sample_; }

private:
    std::optional<std::size_t> sample_;
};

}  // namespace carnot
