#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace semalign {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Shape or dimension mismatch between matrix operands.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error(what) {}
};

/// Input violates a mathematical precondition (e.g. batch too small for a variance).
class ValueError : public Error {
public:
    explicit ValueError(const std::string& what) : Error(what) {}
};

/// Corrupt or truncated on-disk data. Carries the byte offset where parsing stopped.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

/// File carries a format version this build does not understand.
class VersionError : public Error {
public:
    explicit VersionError(const std::string& what) : Error(what) {}
};

/// Training produced a non-finite loss; message carries the component dump.
class TrainingError : public Error {
public:
    explicit TrainingError(const std::string& what) : Error(what) {}
};

} // namespace semalign
