#pragma once

// Numerical property suites shared by the `verify` command and the
// acceptance runner. Each check records a pass flag and a one-line detail.

#include <cstdint>
#include <string>
#include <vector>

namespace steinshrink {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct SuiteResult {
    std::string suite;
    std::vector<CheckResult> checks;

    bool pass() const;
};

/// pinv, lambda, pade, lq-moments, steinhaff, digamma, equivariance,
/// dominance, exact-risk.
const std::vector<std::string>& suite_names();

/// Throws ValidationError for an unknown suite.
SuiteResult run_suite(const std::string& name, std::uint64_t seed);

}  // namespace steinshrink
