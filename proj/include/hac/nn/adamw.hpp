#pragma once

#include "hac/core/binio.hpp"
#include "hac/nn/module.hpp"

namespace hac {

// AdamW with decoupled weight decay over a fixed-order parameter list.
class AdamW {
public:
    AdamW() = default;
    AdamW(ParamMap params, real beta1, real beta2, real weight_decay = 0.0, real eps = 1e-8)
        : params_(std::move(params)), beta1_(beta1), beta2_(beta2), wd_(weight_decay), eps_(eps) {
        for (auto& [name, t] : params_) {
            m_.emplace_back((size_t)t.numel(), 0.0);
            v_.emplace_back((size_t)t.numel(), 0.0);
        }
    }

    void step(real lr) {
        ++t_;
        const real bc1 = 1.0 - std::pow(beta1_, (real)t_);
        const real bc2 = 1.0 - std::pow(beta2_, (real)t_);
        for (size_t p = 0; p < params_.size(); ++p) {
            Tensor& param = params_[p].second;
            if (!param.has_grad()) continue;
            const real* g = param.grad_data();
            real* w = param.data();
            auto& m = m_[p];
            auto& v = v_[p];
            for (long i = 0; i < param.numel(); ++i) {
                m[(size_t)i] = beta1_ * m[(size_t)i] + (1.0 - beta1_) * g[i];
                v[(size_t)i] = beta2_ * v[(size_t)i] + (1.0 - beta2_) * g[i] * g[i];
                const real mhat = m[(size_t)i] / bc1;
                const real vhat = v[(size_t)i] / bc2;
                w[i] -= lr * (mhat / (std::sqrt(vhat) + eps_) + wd_ * w[i]);
            }
        }
    }

    void zero_grad() { zero_grads(params_); }

    long step_count() const { return t_; }
    const ParamMap& params() const { return params_; }

    void save(BinWriter& w) const {
        w.u64((std::uint64_t)t_);
        w.u64((std::uint64_t)params_.size());
        for (size_t p = 0; p < params_.size(); ++p) {
            w.str(params_[p].first);
            w.f64_vec(m_[p]);
            w.f64_vec(v_[p]);
        }
    }

    void load(BinReader& r) {
        t_ = (long)r.u64();
        const size_t n = (size_t)r.u64();
        check(n == params_.size(), "optimizer state: parameter count mismatch");
        for (size_t p = 0; p < n; ++p) {
            const std::string name = r.str();
            check(name == params_[p].first, "optimizer state: parameter order mismatch at " + name);
            m_[p] = r.f64_vec();
            v_[p] = r.f64_vec();
            check(m_[p].size() == (size_t)params_[p].second.numel(),
                  "optimizer state: moment size mismatch at " + name);
            check(v_[p].size() == m_[p].size(), "optimizer state: moment size mismatch at " + name);
        }
    }

private:
    ParamMap params_;
    std::vector<std::vector<real>> m_, v_;
    real beta1_ = 0.8, beta2_ = 0.9, wd_ = 0.0, eps_ = 1e-8;
    long t_ = 0;
};

}  // namespace hac
