#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ile/tensor.hpp"

namespace ile {

using ValueFn = std::function<double(std::span<const Tensor>)>;

// Max over parameter coordinates of |analytic - central difference| /
// max(1, |central difference|), perturbing one coordinate at a time by +-h.
double finite_diff_check(const ValueFn& f, std::span<const Tensor> params,
                         std::span<const Tensor> analytic_grads, double h);

}  // namespace ile
