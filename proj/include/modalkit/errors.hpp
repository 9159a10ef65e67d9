#pragma once

#include <stdexcept>
#include <string>

namespace modalkit {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid arguments, malformed configuration, unknown keys.
class UsageError : public Error {
 public:
    explicit UsageError(const std::string& msg) : Error(msg) {}
};

/// Shape mismatches, missing data, broken preconditions on inputs.
class DataError : public Error {
 public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

/// A leaf in the data container does not exist.
class NotFoundError : public DataError {
 public:
    explicit NotFoundError(const std::string& msg) : DataError(msg) {}
};

/// Stored data failed its checksum or structural validation.
class IntegrityError : public DataError {
 public:
    explicit IntegrityError(const std::string& msg) : DataError(msg) {}
};

/// Numerically singular or ill-conditioned system. Carries a condition
/// estimate of the offending matrix when one is available.
class ConditioningError : public Error {
 public:
    ConditioningError(const std::string& msg, double condition_estimate)
        : Error(msg + " (condition estimate " + std::to_string(condition_estimate) + ")"),
          condition_estimate_(condition_estimate) {}

    double condition_estimate() const { return condition_estimate_; }

 private:
    double condition_estimate_;
};

/// Sample rate too low for the requested system bandwidth.
class BandwidthError : public DataError {
 public:
    explicit BandwidthError(const std::string& msg) : DataError(msg) {}
};

}  // namespace modalkit
