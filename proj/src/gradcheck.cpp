#include "eev/gradcheck.hpp"

#include <cmath>

namespace eev {

double grad_check(const std::function<double()>& forward_scalar,
                  const std::vector<GradVar>& vars, double epsilon) {
    if (epsilon <= 0.0) {
        throw InputError("grad_check: epsilon must be positive");
    }
    double max_rel = 0.0;
    for (const GradVar& var : vars) {
        Matrix& value = *var.value;
        const Matrix& analytic = *var.analytic;
        if (!value.same_shape(analytic)) {
            throw DimensionError("grad_check: analytic gradient shape " + analytic.shape_str() +
                                 " does not match value shape " + value.shape_str());
        }
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double saved = value.data()[i];
            value.data()[i] = saved + epsilon;
            const double fp = forward_scalar();
            value.data()[i] = saved - epsilon;
            const double fm = forward_scalar();
            value.data()[i] = saved;
            if (!std::isfinite(fp) || !std::isfinite(fm)) {
                throw NumericError("grad_check: non-finite forward output");
            }
            const double numeric = (fp - fm) / (2.0 * epsilon);
            const double a = analytic.data()[i];
            const double rel = std::abs(a - numeric) /
                               std::max(1e-8, std::abs(a) + std::abs(numeric));
            if (rel > max_rel) max_rel = rel;
        }
    }
    return max_rel;
}

}  // namespace eev
