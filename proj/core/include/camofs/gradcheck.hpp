#pragma once

#include <cstdint>

namespace camofs::ad {

struct GradCheckReport {
    int trials = 0;
    /// Trials with at least one coordinate outside tolerance.
    int failures = 0;
    /// Leaf coordinates compared (those with |central difference| > 1e-6).
    long coords_checked = 0;
    double max_rel_err = 0.0;
    double seconds = 0.0;

    bool ok() const { return failures == 0; }
};

/// Builds random computation graphs over the tape op set (dot, cosine
/// distance, log-sum-exp, arithmetic) and compares reverse-mode gradients
/// against central finite differences at step h = 1e-4. A coordinate fails
/// when its relative error exceeds `tolerance`; coordinates with
/// |difference quotient| <= 1e-6 are skipped as numerically unresolved.
GradCheckReport run_random_graph_check(int trials, double tolerance, std::uint64_t seed = 42);

}  // namespace camofs::ad
