#pragma once

#include <stdexcept>
#include <string>

namespace kgrag {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Malformed input file line. line() is 1-based; 0 when not tied to a line.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Mini query syntax error. position() is a 0-based byte offset into the query text.
class QueryParseError : public Error {
public:
    QueryParseError(const std::string& what, std::size_t position)
        : Error("query parse error at " + std::to_string(position) + ": " + what),
          position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

// Network-level failure after all retries were spent.
class TransportError : public Error {
public:
    TransportError(const std::string& what, int attempts)
        : Error(what + " (after " + std::to_string(attempts) + " attempt" +
                (attempts == 1 ? "" : "s") + ")"),
          attempts_(attempts) {}
    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

// The provider answered with an error payload; the payload is kept verbatim.
class ProviderError : public Error {
public:
    ProviderError(int status, std::string payload)
        : Error("provider error (HTTP " + std::to_string(status) + "): " + payload),
          status_(status), payload_(std::move(payload)) {}
    int status() const noexcept { return status_; }
    const std::string& payload() const noexcept { return payload_; }

private:
    int status_;
    std::string payload_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Wraps a component failure with the pipeline stage it happened in.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace kgrag
