#pragma once

#include <functional>

#include "hac/core/rng.hpp"
#include "hac/core/tensor.hpp"

namespace hac::testing {

// Central finite differences of a scalar-valued rebuild function with respect
// to one parameter tensor. The function must rebuild the graph from scratch.
inline std::vector<real> numeric_grad(Tensor& param, const std::function<real()>& eval,
                                      real h = 1e-6) {
    std::vector<real> g((size_t)param.numel());
    for (long i = 0; i < param.numel(); ++i) {
        const real keep = param.data()[i];
        param.data()[i] = keep + h;
        const real up = eval();
        param.data()[i] = keep - h;
        const real dn = eval();
        param.data()[i] = keep;
        g[(size_t)i] = (up - dn) / (2.0 * h);
    }
    return g;
}

inline real max_rel_err(const std::vector<real>& got, const std::vector<real>& want,
                        real floor_val = 1e-8) {
    real worst = 0.0;
    for (size_t i = 0; i < got.size(); ++i) {
        const real denom = std::max(std::abs(want[i]), floor_val);
        worst = std::max(worst, std::abs(got[i] - want[i]) / denom);
    }
    return worst;
}

inline Tensor random_tensor(Shape shape, Rng& rng, real scale = 1.0, bool requires_grad = true) {
    std::vector<real> v((size_t)shape_numel(shape));
    rng.fill_normal(v, scale);
    return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

}  // namespace hac::testing
