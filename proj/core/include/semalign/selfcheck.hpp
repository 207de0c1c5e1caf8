#pragma once

#include <string>
#include <vector>

namespace semalign {

struct CheckResult {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct SelfcheckReport {
    std::vector<CheckResult> checks;
    bool all_pass() const;
};

/// Gradient-vs-finite-difference suite, KDE/MMD brute-force oracles, and the
/// invariant battery. `inject_gradient_fault` perturbs one reverse-mode
/// gradient entry before comparison; a healthy suite must then report a
/// failure (mutation check for the checker itself).
SelfcheckReport run_selfcheck(bool inject_gradient_fault = false);

std::string format_report(const SelfcheckReport& report);

} // namespace semalign
