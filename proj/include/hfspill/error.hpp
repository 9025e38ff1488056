#pragma once

#include <stdexcept>
#include <string>

namespace hfspill {

/// Bad input: malformed files, out-of-range parameters, schema mismatches.
/// The CLI maps these to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The input was well-formed but the computation cannot proceed
/// (rank deficiency, failed factorization, empty identified set).
/// The CLI maps these to exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateInputError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class CollinearSurprisesError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class IdentificationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class RankDeficientError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace hfspill
