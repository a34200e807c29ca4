#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jailkit {

// Root of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DatasetError : public Error {
public:
    DatasetError(const std::string& message, std::size_t row = 0)
        : Error(row == 0 ? message : message + " (row " + std::to_string(row) + ")"), row_(row) {}

    // 1-based line/row in the source file, 0 when not row-specific.
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// A backend or component lacks a capability the caller requires
// (log-probabilities, a classifier, a gradient mutator plugin).
class CapabilityError : public Error {
public:
    using Error::Error;
};

// Anything raised while talking to a model. The engine treats these as
// per-query failures rather than run failures.
class BackendError : public Error {
public:
    using Error::Error;
};

class TransportError : public BackendError {
public:
    TransportError(const std::string& message, int attempts)
        : BackendError(message + " after " + std::to_string(attempts) + " attempt(s)"),
          attempts_(attempts) {}

    int attempts() const noexcept { return attempts_; }
    bool retryable() const noexcept { return true; }

private:
    int attempts_;
};

class HttpStatusError : public BackendError {
public:
    HttpStatusError(int status, std::string body_excerpt, int attempts)
        : BackendError("HTTP " + std::to_string(status) + ": " + body_excerpt),
          status_(status),
          body_excerpt_(std::move(body_excerpt)),
          attempts_(attempts) {}

    int status() const noexcept { return status_; }
    const std::string& body_excerpt() const noexcept { return body_excerpt_; }
    int attempts() const noexcept { return attempts_; }

private:
    int status_;
    std::string body_excerpt_;
    int attempts_;
};

// Scripted mock received a prompt it has no answer for.
class ScriptError : public BackendError {
public:
    using BackendError::BackendError;
};

class CodecError : public Error {
public:
    CodecError(const std::string& message, std::size_t position)
        : Error(message + " at position " + std::to_string(position)), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

// A generative mutator got no usable text back from the attack model. The
// candidate is dropped (never kept silently) and the reason logged.
class MutationError : public Error {
public:
    MutationError(const std::string& mutator, const std::string& reason)
        : Error(mutator + ": " + reason), mutator_(mutator) {}

    const std::string& mutator() const noexcept { return mutator_; }

private:
    std::string mutator_;
};

}  // namespace jailkit
