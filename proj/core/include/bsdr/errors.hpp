#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bsdr {

/// Invalid input: a state outside the grid, mismatched dimensions, an
/// inconsistent trajectory or dataset.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A requested enumeration or grid exceeds its configured budget.
class SizeError : public DomainError {
public:
    using DomainError::DomainError;
};

/// The operation is not defined for the selected feature map.
class UnsupportedConfiguration : public DomainError {
public:
    using DomainError::DomainError;
};

/// A cached value was used with inputs other than the ones it was built for.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class DivergedError : public std::runtime_error {
public:
    DivergedError(const std::string& what, std::vector<double> trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}

    const std::vector<double>& trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

class DegenerateSolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bsdr
