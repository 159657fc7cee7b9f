#pragma once

#include <stdexcept>
#include <string>

namespace unilearn {

// Invalid inputs: shape mismatches, violated construction inequalities,
// out-of-range exponents. The CLI maps these to exit code 2.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A method issued more oracle queries than its declared budget.
class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The fooling attack could not complete (blindness violated, no untouched cell).
class AttackAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace unilearn
