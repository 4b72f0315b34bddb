#pragma once

#include <stdexcept>
#include <string>

namespace lplab {

// Every error raised by the library carries a short machine-readable kind so
// the CLI can print a single parseable line.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct DomainError : Error {
    explicit DomainError(const std::string& m) : Error("domain", m) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error("config", m) {}
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& m) : Error("validation", m) {}
};

struct DecodeError : Error {
    explicit DecodeError(const std::string& m) : Error("decode", m) {}
};

struct RangeError : Error {
    explicit RangeError(const std::string& m) : Error("range", m) {}
};

struct WarmupError : Error {
    explicit WarmupError(const std::string& m) : Error("warmup", m) {}
};

// Retryable network failure.
struct TransportError : Error {
    explicit TransportError(const std::string& m) : Error("transport", m) {}
};

struct DivergenceError : Error {
    explicit DivergenceError(const std::string& m) : Error("divergence", m) {}
};

}  // namespace lplab
