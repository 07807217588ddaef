#pragma once

#include <stdexcept>
#include <string>

namespace oscloc {

// Bad caller input: dimension mismatches, malformed files, invalid config.
class InvalidInputError : public std::runtime_error {
public:
    explicit InvalidInputError(const std::string& what) : std::runtime_error(what) {}
};

// Equal-length requirement violated; the caller should fall back to DTW.
class LengthMismatchError : public InvalidInputError {
public:
    explicit LengthMismatchError(const std::string& what) : InvalidInputError(what) {}
};

// Numerical breakdown: singular factor, non-convergence, PSD drift.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// A singular inner factor in a metric update. Recoverable: the training loop
// skips the offending triplet instead of aborting.
class SingularFactorError : public NumericalError {
public:
    explicit SingularFactorError(const std::string& what) : NumericalError(what) {}
};

} // namespace oscloc
