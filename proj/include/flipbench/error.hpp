#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace flipbench {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller violated a precondition (bad k, empty input, wrong window length...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Input data is malformed, missing, or too thin to compute a statistic.
class DataError : public Error {
public:
    using Error::Error;
};

class InsufficientData : public DataError {
public:
    using DataError::DataError;
};

class MixedLengthError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

// Raised by heads_proportion when some sequences are too short for the
// requested position. Carries the replicate indices of the offenders.
class PositionOutOfRange : public InvalidArgument {
public:
    PositionOutOfRange(std::string what, std::vector<int> replicates)
        : InvalidArgument(std::move(what)), replicates_(std::move(replicates)) {}

    const std::vector<int>& replicates() const noexcept { return replicates_; }

private:
    std::vector<int> replicates_;
};

// Endpoint rejected our credentials; the only condition that aborts a sweep.
class AuthenticationError : public Error {
public:
    using Error::Error;
};

} // namespace flipbench
