#pragma once

#include <stdexcept>
#include <string>

namespace levytax {

// Two roots of psi(alpha) = q coincide (within 1e-9); the partial-fraction
// representation of the scale function breaks down.
struct NumericalDegeneracy : std::runtime_error {
    explicit NumericalDegeneracy(const std::string& msg) : std::runtime_error(msg) {}
};

// The valuation integral has no exponential decay (largest root of psi = q is zero),
// so the expected discounted tax stream is infinite.
struct DivergentIntegral : std::runtime_error {
    explicit DivergentIntegral(const std::string& msg) : std::runtime_error(msg) {}
};

// The dividend valuation 1/lambda is requested at lambda = 0 (no discounting and no
// injection penalty), where the expected stream is infinite.
struct InfiniteValue : std::runtime_error {
    explicit InfiniteValue(const std::string& msg) : std::runtime_error(msg) {}
};

// A path simulation exceeded its hard segment budget without terminating.
struct NonTermination : std::runtime_error {
    explicit NonTermination(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace levytax
