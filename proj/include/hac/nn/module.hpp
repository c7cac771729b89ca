#pragma once

#include "hac/core/rng.hpp"
#include "hac/core/tensor.hpp"

namespace hac {

// Named parameter/state listing in registration order. Ordering is part of
// the training contract: the optimizer and checkpoints index by it.
using ParamMap = std::vector<std::pair<std::string, Tensor>>;

inline void add_param(ParamMap& m, const std::string& name, const Tensor& t) {
    m.emplace_back(name, t);
}

inline ParamMap trainable(const ParamMap& all) {
    ParamMap out;
    for (const auto& [name, t] : all)
        if (t.requires_grad()) out.emplace_back(name, t);
    return out;
}

inline void zero_grads(const ParamMap& params) {
    for (auto& [name, t] : params) const_cast<Tensor&>(t).zero_grad();
}

inline Tensor init_normal(Shape shape, Rng& rng, real scale, bool requires_grad = true) {
    std::vector<real> v((size_t)shape_numel(shape));
    rng.fill_normal(v, scale);
    return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

inline Tensor init_const(Shape shape, real value, bool requires_grad = true) {
    std::vector<real> v((size_t)shape_numel(shape), value);
    return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

}  // namespace hac
