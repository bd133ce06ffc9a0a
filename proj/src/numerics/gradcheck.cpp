#include "fsl/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "fsl/common/errors.hpp"

namespace fsl::numerics {
namespace {

double evaluate(const ScalarProgram& forward, const TensorMap& params) {
    Tape tape;
    return forward(tape, params).value().item();
}

} // namespace

GradCheckReport finite_diff_report(const ScalarProgram& forward, const TensorMap& params, double eps) {
    if (!(eps > 0.0)) {
        throw ContractError("finite_diff_check: eps must be > 0");
    }
    GradMap analytic;
    {
        Tape tape;
        const Var loss = forward(tape, params);
        analytic = tape.backward(loss);
    }
    GradCheckReport report;
    TensorMap probe = params;
    for (auto& [name, tensor] : probe) {
        const auto found = analytic.find(name);
        for (std::size_t i = 0; i < tensor.size(); ++i) {
            const double original = tensor[i];
            tensor[i] = original + eps;
            const double up = evaluate(forward, probe);
            tensor[i] = original - eps;
            const double down = evaluate(forward, probe);
            tensor[i] = original;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = found == analytic.end() ? 0.0 : found->second[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
            const double err = std::abs(a - numeric) / denom;
            ++report.coordinates;
            if (err > report.max_rel_error || report.worst_param.empty()) {
                report.max_rel_error = std::max(err, report.max_rel_error);
                report.worst_param = name;
                report.worst_index = i;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    return report;
}

} // namespace fsl::numerics
