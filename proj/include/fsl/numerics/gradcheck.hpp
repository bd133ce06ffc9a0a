#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "fsl/numerics/tape.hpp"

namespace fsl::numerics {

// Builds a scalar loss on a fresh tape, registering whatever entries of the
// parameter map it uses via Tape::param.
using ScalarProgram = std::function<Var(Tape&, const TensorMap&)>;

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t coordinates = 0;
};

// Per-coordinate error scale: |analytic - numeric| / max(|analytic|, |numeric|, floor).
// The floor keeps near-zero gradients from turning round-off into huge ratios.
inline constexpr double kGradCheckFloor = 1e-3;

// Compares backward() against central differences (f(p+eps)-f(p-eps))/2eps
// on every coordinate of every parameter.
GradCheckReport finite_diff_report(const ScalarProgram& forward, const TensorMap& params, double eps = 1e-5);

inline double finite_diff_check(const ScalarProgram& forward, const TensorMap& params, double eps = 1e-5) {
    return finite_diff_report(forward, params, eps).max_rel_error;
}

} // namespace fsl::numerics
