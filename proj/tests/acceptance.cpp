// Acceptance gate: every release criterion at its pinned tolerance, one
// pass/fail line per criterion. Exits nonzero if any criterion fails.
#include <cstdio>
#include <vector>

#include "svpic/verify.hpp"

int main() {
    using svpic::CriterionResult;
    const std::vector<CriterionResult> results = {
        svpic::verify_lb_relaxation(),
        svpic::verify_lb_distribution(),
        svpic::verify_lorentz_speed(),
        svpic::verify_reconstruction(),
        svpic::verify_coulomb_identities(),
        svpic::verify_fields(),
        svpic::verify_momentum_identity(),
        svpic::verify_weak_convergence(),
        svpic::verify_determinism(),
        svpic::verify_gauss_law(),
    };

    int failures = 0;
    for (const auto& r : results) {
        std::printf("[%s] criterion %2d %-32s %s\n", r.pass ? "PASS" : "FAIL", r.id,
                    r.name.c_str(), r.details.dump().c_str());
        if (!r.pass) ++failures;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failures,
                results.size());
    return failures == 0 ? 0 : 1;
}
