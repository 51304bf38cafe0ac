#pragma once

#include <stdexcept>
#include <string>

namespace detroll {

// Caller broke a documented precondition (bad indices, size mismatch, ...).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A matrix cannot be fitted even after pruning single-valued columns.
class UnfittableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// EM produced a non-finite log-likelihood.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, std::size_t iteration)
        : std::runtime_error(what), iteration_(iteration) {}

    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace detroll
