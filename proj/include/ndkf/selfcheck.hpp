// Invariant self-test run by `ndkf check`.
#pragma once

#include <string>
#include <vector>

namespace ndkf::selfcheck {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Jacobian cross-checks, fusion identities, a linear Kalman filter oracle,
/// parameter-file round trip, and cost-counter structure. Never throws;
/// an exception inside a check marks that check failed.
std::vector<CheckResult> run_self_checks();

} // namespace ndkf::selfcheck
