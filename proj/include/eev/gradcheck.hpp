// Central-difference verification of the hand-written backward passes.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "eev/matrix.hpp"

namespace eev {

// One variable participating in a check: the matrix the forward reads from
// and the analytic gradient of the checked scalar with respect to it.
struct GradVar {
    Matrix* value = nullptr;
    const Matrix* analytic = nullptr;
};

// Perturbs every entry of every variable by +/- epsilon, re-evaluates the
// scalar forward, and compares the central difference against the analytic
// gradient. Returns the max over entries of
//   |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
// Throws NumericError if any forward evaluation is non-finite.
double grad_check(const std::function<double()>& forward_scalar,
                  const std::vector<GradVar>& vars, double epsilon = 1e-5);

// One row of the repo-wide gradient audit.
struct GradSuiteEntry {
    std::string name;
    double max_rel_err = 0.0;
};

// Runs grad_check over every layer in the model plus the three losses and
// the composed model at tiny dims. Seed fixes the random test points.
std::vector<GradSuiteEntry> run_gradient_suite(std::uint64_t seed, double epsilon = 1e-4);

}  // namespace eev
