#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dforge {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A record broke one of its type invariants; `field` names the culprit.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error("invalid " + field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class DuplicateIdError : public Error {
public:
    explicit DuplicateIdError(const std::string& id)
        : Error("duplicate record id: " + id), id_(id) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

// Malformed persisted data. `line` is 1-based, 0 when not line-oriented.
class StoreParseError : public Error {
public:
    StoreParseError(std::string file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what),
          file_(std::move(file)),
          line_(line) {}
    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

class StaleConfigError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ProviderError : public Error {
public:
    using Error::Error;
};

class AuthError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

class RetriesExhaustedError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

class MalformedResponseError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

class ScriptUnderrunError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

class GenerationError : public Error {
public:
    GenerationError(std::size_t turn, const std::string& what)
        : Error("turn " + std::to_string(turn) + ": " + what), turn_(turn) {}
    std::size_t turn() const noexcept { return turn_; }

private:
    std::size_t turn_;
};

class TranscriptParseError : public Error {
public:
    TranscriptParseError(const std::string& what, std::string raw)
        : Error(what), raw_(std::move(raw)) {}
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

class SchedulingError : public Error {
public:
    using Error::Error;
};

class CoverageError : public Error {
public:
    using Error::Error;
};

class EmptyDenominatorError : public Error {
public:
    using Error::Error;
};

class NotIdentifiableError : public Error {
public:
    using Error::Error;
};

class SeparationError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::string trace)
        : Error(what), trace_(std::move(trace)) {}
    const std::string& trace() const noexcept { return trace_; }

private:
    std::string trace_;
};

class DomainError : public Error {
public:
    using Error::Error;
};

}  // namespace dforge
