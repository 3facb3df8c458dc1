#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gca {

// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyMessage : Error {
    using Error::Error;
};
struct EmptyText : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct UnknownAsset : Error {
    using Error::Error;
};

// gateway
struct BackendError : Error {
    using Error::Error;
};
struct FixtureMiss : BackendError {
    explicit FixtureMiss(const std::string& what, std::string request_key = {})
        : BackendError(what), key(std::move(request_key)) {}
    std::string key;  // hex hash of the unmatched request, when known
};
struct RateLimited : BackendError {
    using BackendError::BackendError;
};
struct Timeout : BackendError {
    using BackendError::BackendError;
};

struct RepairAttempt {
    int attempt = 0;          // 1-based repair round
    std::string parse_error;  // why the previous candidate failed
    std::string candidate;    // what the repairer produced
};

struct RepairExhausted : Error {
    RepairExhausted(const std::string& what, std::vector<RepairAttempt> log)
        : Error(what), attempts(std::move(log)) {}
    std::vector<RepairAttempt> attempts;
};

struct SchemaViolation : Error {
    using Error::Error;
};

// curator
struct NoMatch : Error {
    using Error::Error;
};
struct InvertedSpan : Error {
    using Error::Error;
};
struct UnknownCharacter : Error {
    using Error::Error;
};
struct InsufficientPool : Error {
    using Error::Error;
};

// simulator / exporter
struct MissingProfile : Error {
    using Error::Error;
};
struct HeldOutLeak : Error {
    using Error::Error;
};

// metrics
struct LengthMismatch : Error {
    using Error::Error;
};
struct NoComparable : Error {
    using Error::Error;
};
struct DegenerateX : Error {
    using Error::Error;
};
struct MissingSample : Error {
    using Error::Error;
};

}  // namespace gca
