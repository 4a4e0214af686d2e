#include "ile/gradcheck.hpp"

#include <cmath>

#include "ile/errors.hpp"

namespace ile {

double finite_diff_check(const ValueFn& f, std::span<const Tensor> params,
                         std::span<const Tensor> analytic_grads, double h) {
    if (params.size() != analytic_grads.size())
        throw DimensionError("finite_diff_check: parameter/gradient count mismatch");
    std::vector<Tensor> work(params.begin(), params.end());
    double worst = 0.0;
    for (std::size_t p = 0; p < work.size(); ++p) {
        if (!params[p].same_shape(analytic_grads[p]))
            throw DimensionError("finite_diff_check: gradient shape mismatch");
        for (std::int64_t i = 0; i < work[p].numel(); ++i) {
            const double saved = work[p][i];
            work[p][i] = saved + h;
            const double fp = f(work);
            work[p][i] = saved - h;
            const double fm = f(work);
            work[p][i] = saved;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw NumericError("finite_diff_check: non-finite evaluation");
            const double fd = (fp - fm) / (2.0 * h);
            const double err = std::fabs(analytic_grads[p][i] - fd) / std::max(1.0, std::fabs(fd));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace ile
