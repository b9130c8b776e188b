#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "sparsegan/ops.hpp"
#include "sparsegan/tensor.hpp"
#include "sparsegan/tolerances.hpp"

namespace sparsegan {

// Compares reverse-mode gradients against central finite differences.
//
// `fn` must rebuild the loss from scratch on every call (the inputs are
// perturbed in place between calls). Returns the worst relative error
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8) over all input
// elements. Callers assert the result against tol::kFdRelTol.
inline double grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& fn,
                         std::vector<Tensor> inputs, double eps = tol::kFdEps) {
    for (Tensor& t : inputs) {
        t.set_requires_grad(true);
        t.zero_grad();
    }
    Tensor loss = fn(inputs);
    backward(loss);

    double worst = 0.0;
    for (Tensor& t : inputs) {
        Tensor g = t.grad();
        for (int64_t i = 0; i < t.numel(); ++i) {
            double* slot = &t.raw()[static_cast<size_t>(i)];
            const double saved = *slot;
            *slot = saved + eps;
            const double up = fn(inputs).item();
            *slot = saved - eps;
            const double down = fn(inputs).item();
            *slot = saved;

            const double numeric = (up - down) / (2.0 * eps);
            const double analytic = g.defined() ? g.data()[static_cast<size_t>(i)] : 0.0;
            const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            worst = std::max(worst, std::abs(analytic - numeric) / denom);
        }
    }
    return worst;
}

} // namespace sparsegan
