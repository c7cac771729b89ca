#pragma once

#include "hac/audio/spectrogram.hpp"
#include "hac/core/ops.hpp"

namespace hac {

// Distillation loss between a projected student and a frozen teacher:
// for each embedding dimension d, the cosine similarity of the two F-length
// time courses is squashed through a sigmoid and negative-log-scored,
//   loss = -(1/D') sum_d log(sigmoid(cos(U[:,d], T[:,d]))).
// Rows where `mask` is false are excluded; zero-norm columns score cos = 0.
// `student_proj` must already carry the projection (gradients flow through it).
inline Tensor kd_cosine_columns(const Tensor& student_proj, const Mat& teacher,
                                const std::vector<bool>& mask = {}) {
    check(student_proj.rank() == 2, "kd loss: student must be [F, D']");
    const long f = student_proj.dim(0), d = student_proj.dim(1);
    check(teacher.rows == f && teacher.cols == d,
          "kd loss: teacher " + std::to_string(teacher.rows) + "x" + std::to_string(teacher.cols) +
              " does not match student " + std::to_string(f) + "x" + std::to_string(d));
    check(f >= 2, "kd loss: cosine over the time axis needs at least 2 frames");
    check(mask.empty() || (long)mask.size() == f, "kd loss: mask length mismatch");

    long active = 0;
    for (long i = 0; i < f; ++i)
        if (mask.empty() || mask[(size_t)i]) ++active;

    auto out = make_op_node({1}, {student_proj.node()});
    if (active == 0) {  // every dimension masked out entirely
        out->value[0] = 0.0;
        return Tensor(out);
    }

    const real* u = student_proj.data();
    // forward: per-dimension cosine over active rows
    std::vector<real> cos_d((size_t)d, 0.0), unorm((size_t)d, 0.0), tnorm((size_t)d, 0.0),
        dots((size_t)d, 0.0);
    for (long j = 0; j < d; ++j) {
        real uu = 0, tt = 0, ut = 0;
        for (long i = 0; i < f; ++i) {
            if (!mask.empty() && !mask[(size_t)i]) continue;
            const real uv = u[i * d + j], tv = teacher.at(i, j);
            uu += uv * uv;
            tt += tv * tv;
            ut += uv * tv;
        }
        unorm[(size_t)j] = std::sqrt(uu);
        tnorm[(size_t)j] = std::sqrt(tt);
        dots[(size_t)j] = ut;
        cos_d[(size_t)j] =
            (unorm[(size_t)j] > 0 && tnorm[(size_t)j] > 0) ? ut / (unorm[(size_t)j] * tnorm[(size_t)j]) : 0.0;
    }
    real loss = 0.0;
    for (long j = 0; j < d; ++j) {
        const real c = cos_d[(size_t)j];
        // -log(sigmoid(c)) = softplus(-c), stable both directions
        loss += c > 0 ? std::log1p(std::exp(-c)) : -c + std::log1p(std::exp(c));
    }
    out->value[0] = loss / (real)d;

    if (out->requires_grad) {
        Node* o = out.get();
        Node* un = student_proj.node().get();
        auto teach = std::make_shared<Mat>(teacher);
        auto msk = std::make_shared<std::vector<bool>>(mask);
        out->backward = [o, un, teach, msk, f, d, cos_d, unorm, tnorm] {
            un->ensure_grad();
            const real g = o->grad[0];
            for (long j = 0; j < d; ++j) {
                if (unorm[(size_t)j] <= 0 || tnorm[(size_t)j] <= 0) continue;  // cos pinned at 0
                const real c = cos_d[(size_t)j];
                const real sig = 1.0 / (1.0 + std::exp(-c));
                const real dl_dc = (sig - 1.0) / (real)d;
                const real inv_ut = 1.0 / (unorm[(size_t)j] * tnorm[(size_t)j]);
                const real inv_uu = 1.0 / (unorm[(size_t)j] * unorm[(size_t)j]);
                for (long i = 0; i < f; ++i) {
                    if (!msk->empty() && !(*msk)[(size_t)i]) continue;
                    const real uv = un->value[(size_t)(i * d + j)];
                    const real tv = teach->at(i, j);
                    un->grad[(size_t)(i * d + j)] += g * dl_dc * (tv * inv_ut - c * uv * inv_uu);
                }
            }
        };
    }
    return Tensor(out);
}

// Convenience form: projects the student through A (D x D') first.
inline Tensor kd_cosine_loss(const Tensor& student, const Tensor& projection, const Mat& teacher,
                             const std::vector<bool>& mask = {}) {
    check(projection.rank() == 2 && projection.dim(0) == student.dim(1),
          "kd loss: projection must map student dim " + std::to_string(student.dim(1)));
    check(projection.dim(1) == teacher.cols,
          "kd loss: projection output " + std::to_string(projection.dim(1)) +
              " does not match teacher dim " + std::to_string(teacher.cols));
    return kd_cosine_columns(matmul(student, projection), teacher, mask);
}

}  // namespace hac
