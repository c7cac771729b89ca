#include <catch2/catch_amalgamated.hpp>

#include "hac/codec/quantizer.hpp"
#include "test_util.hpp"

using namespace hac;
using hac::testing::random_tensor;

namespace {

void make_identity(LinearLayer& l) {
    const long in = l.w.dim(0), out = l.w.dim(1);
    REQUIRE(in == out);
    std::fill(l.w.values().begin(), l.w.values().end(), 0.0);
    for (long i = 0; i < in; ++i) l.w.data()[i * out + i] = 1.0;
    std::fill(l.b.values().begin(), l.b.values().end(), 0.0);
}

Codebook identity_codebook(long k, long d, Rng& rng) {
    Codebook cb(k, d, d, QuantizerStyle::low_dim_lookup, rng);
    make_identity(cb.project_in);
    make_identity(cb.project_out);
    return cb;
}

// exhaustive nearest-neighbor search, lowest index on ties
std::vector<long> brute_force_codes(const Tensor& e, const Tensor& entries) {
    std::vector<long> codes;
    const long f = e.dim(0), k = entries.dim(0), d = e.dim(1);
    for (long i = 0; i < f; ++i) {
        long best = 0;
        real best_d = 1e300;
        for (long j = 0; j < k; ++j) {
            real dist = 0;
            for (long c = 0; c < d; ++c) {
                const real diff = e.data()[i * d + c] - entries.data()[j * d + c];
                dist += diff * diff;
            }
            if (dist < best_d) {
                best_d = dist;
                best = j;
            }
        }
        codes.push_back(best);
    }
    return codes;
}

}  // namespace

TEST_CASE("vq returns the planted entry with zero losses") {
    Rng rng(31);
    Codebook cb = identity_codebook(5, 3, rng);
    // plant row 3 and feed it back
    std::vector<real> z{cb.entries.data()[9], cb.entries.data()[10], cb.entries.data()[11]};
    QuantizerOutput out = vq_forward(Tensor::from_data({1, 3}, z), cb);
    REQUIRE(out.codes == std::vector<long>{3});
    REQUIRE(out.codebook_loss.item() == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(out.commitment_loss.item() == Catch::Approx(0.0).margin(1e-15));
    for (long i = 0; i < 3; ++i) REQUIRE(out.quantized.data()[i] == Catch::Approx(z[(size_t)i]));
}

TEST_CASE("single-entry codebook always emits code zero") {
    Rng rng(32);
    Codebook cb(1, 4, 6, QuantizerStyle::low_dim_lookup, rng);
    Tensor z = random_tensor({7, 6}, rng, 1.0, false);
    QuantizerOutput out = vq_forward(z, cb);
    for (long c : out.codes) REQUIRE(c == 0);
    // constant per projection: all rows of quantized identical
    for (long i = 1; i < 7; ++i)
        for (long j = 0; j < 6; ++j)
            REQUIRE(out.quantized.data()[i * 6 + j] == Catch::Approx(out.quantized.data()[j]));
}

TEST_CASE("vq codes equal exhaustive nearest-neighbor search") {
    Rng rng(33);
    for (int trial = 0; trial < 10; ++trial) {
        Codebook cb(16, 4, 8, QuantizerStyle::low_dim_lookup, rng);
        Tensor z = random_tensor({12, 8}, rng, 1.0, false);
        QuantizerOutput out = vq_forward(z, cb);
        Tensor e = cb.project_in.forward(z);
        REQUIRE(out.codes == brute_force_codes(e, cb.entries));
    }
}

TEST_CASE("tie-breaking picks the lowest index") {
    Rng rng(34);
    Codebook cb = identity_codebook(4, 2, rng);
    // entries 1 and 2 identical; the query is exactly that point
    cb.entries.data()[2] = 0.5; cb.entries.data()[3] = -0.25;
    cb.entries.data()[4] = 0.5; cb.entries.data()[5] = -0.25;
    QuantizerOutput out = vq_forward(Tensor::from_data({1, 2}, {0.5, -0.25}), cb);
    REQUIRE(out.codes == std::vector<long>{1});
}

TEST_CASE("identity projections reduce to classical nearest-neighbor VQ") {
    Rng rng(35);
    Codebook cb = identity_codebook(9, 5, rng);
    Tensor z = random_tensor({20, 5}, rng, 1.0, false);
    QuantizerOutput out = vq_forward(z, cb);
    REQUIRE(out.codes == brute_force_codes(z, cb.entries));
    for (long i = 0; i < 20; ++i)
        for (long j = 0; j < 5; ++j)
            REQUIRE(out.quantized.data()[i * 5 + j] ==
                    Catch::Approx(cb.entries.data()[out.codes[(size_t)i] * 5 + j]));
}

TEST_CASE("straight-through gradient equals identity-after-projections path") {
    Rng rng(36);
    Codebook cb(6, 3, 4, QuantizerStyle::low_dim_lookup, rng);
    Tensor z = random_tensor({5, 4}, rng);
    Tensor w = random_tensor({5, 4}, rng, 1.0, false);  // fixed linear readout

    z.zero_grad();
    Tensor loss = sum_all(mul(vq_forward(z, cb).quantized, detach(w)));
    loss.backward();
    std::vector<real> got = z.grad();

    // identity path: project_out(project_in(z)) with the discretization removed
    z.zero_grad();
    Tensor ident = cb.project_out.forward(cb.project_in.forward(z));
    sum_all(mul(ident, detach(w))).backward();
    REQUIRE(hac::testing::max_rel_err(got, z.grad()) < 1e-12);
}

TEST_CASE("straight-through matches finite differences of the surrogate path") {
    // The estimator's contract: backprop through the discretized path equals
    // the gradient of the same pipeline with the discretization replaced by
    // the identity. Finite differences are taken on that surrogate (the
    // discretized forward itself is piecewise constant in z).
    Rng rng(37);
    Codebook cb(6, 3, 4, QuantizerStyle::low_dim_lookup, rng);
    Codebook surrogate = cb;
    surrogate.passthrough = true;
    Tensor z = random_tensor({5, 4}, rng);
    Tensor w = random_tensor({5, 4}, rng, 1.0, false);
    z.zero_grad();
    Tensor loss = sum_all(mul(vq_forward(z, cb).quantized, detach(w)));
    loss.backward();
    auto eval = [&] {
        return sum_all(mul(vq_forward(z, surrogate).quantized, detach(w))).item();
    };
    std::vector<real> fd = hac::testing::numeric_grad(z, eval);
    REQUIRE(hac::testing::max_rel_err(z.grad(), fd) < 1e-6);
}

TEST_CASE("rvq with one stage equals vq") {
    Rng rng(38);
    Codebook cb(8, 4, 4, QuantizerStyle::low_dim_lookup, rng);
    Tensor z = random_tensor({6, 4}, rng, 1.0, false);
    QuantizerOutput a = vq_forward(z, cb);
    QuantizerOutput b = rvq_forward(z, {cb}, 1);
    REQUIRE(a.codes == b.codes);
    REQUIRE(a.quantized.values() == b.quantized.values());
}

TEST_CASE("rvq stage-2 residual is no larger when stage-1 output is fed back") {
    Rng rng(39);
    std::vector<Codebook> cbs;
    for (int i = 0; i < 2; ++i) cbs.push_back(identity_codebook(8, 3, rng));
    // stage 2 can represent the zero residual exactly
    for (long j = 0; j < 3; ++j) cbs[1].entries.data()[j] = 0.0;
    Tensor z0 = random_tensor({4, 3}, rng, 1.0, false);
    // feed a stage-1 reconstruction: stage 1 reproduces it, residual drops to 0
    QuantizerOutput first = rvq_forward(z0, cbs, 1);
    Tensor z = detach(first.quantized);
    QuantizerOutput out = rvq_forward(z, cbs, 2);
    auto norm = [](const Tensor& t) {
        real acc = 0;
        for (real v : t.values()) acc += v * v;
        return std::sqrt(acc);
    };
    Tensor r1 = sub(z, out.stage_quantized[0]);
    REQUIRE(norm(r1) <= 1e-12);
    REQUIRE(norm(out.residual) <= norm(r1) + 1e-12);
}

TEST_CASE("rvq recurrence matches an independent stage-by-stage recomputation") {
    Rng rng(40);
    std::vector<Codebook> cbs;
    for (int i = 0; i < 3; ++i)
        cbs.push_back(Codebook(5, 2, 4, QuantizerStyle::low_dim_lookup, rng));
    Tensor z = random_tensor({6, 4}, rng, 1.0, false);
    QuantizerOutput out = rvq_forward(z, cbs, 3);

    std::vector<real> residual(z.values());
    std::vector<real> total((size_t)(6 * 4), 0.0);
    for (long s = 0; s < 3; ++s) {
        Tensor r = Tensor::from_data({6, 4}, residual);
        QuantizerOutput stage = vq_forward(r, cbs[(size_t)s]);
        for (long i = 0; i < 6; ++i) REQUIRE(stage.codes[(size_t)i] == out.code_at(i, s));
        for (size_t i = 0; i < total.size(); ++i) {
            total[i] += stage.quantized.values()[i];
            residual[i] -= stage.quantized.values()[i];
        }
    }
    for (size_t i = 0; i < total.size(); ++i) {
        REQUIRE(out.quantized.values()[i] == Catch::Approx(total[i]).margin(1e-12));
        REQUIRE(out.residual.values()[i] == Catch::Approx(residual[i]).margin(1e-12));
    }
}

TEST_CASE("fuse sums the present operands") {
    Rng rng(41);
    Tensor a = random_tensor({3, 4}, rng, 1.0, false);
    Tensor b = random_tensor({3, 4}, rng, 1.0, false);
    Tensor c = random_tensor({3, 4}, rng, 1.0, false);
    Tensor none;

    Tensor zero = Tensor::zeros({3, 4});
    Tensor r1 = fuse(a, zero, zero);
    for (long i = 0; i < 12; ++i) REQUIRE(r1.data()[i] == Catch::Approx(a.data()[i]));

    Tensor abc = fuse(a, b, c);
    Tensor cba = fuse(c, b, a);
    for (long i = 0; i < 12; ++i) {
        REQUIRE(abc.data()[i] == Catch::Approx(a.data()[i] + b.data()[i] + c.data()[i]));
        REQUIRE(abc.data()[i] == Catch::Approx(cba.data()[i]));
    }

    Tensor ab = fuse(a, b, none);  // lexical branch absent
    for (long i = 0; i < 12; ++i)
        REQUIRE(ab.data()[i] == Catch::Approx(a.data()[i] + b.data()[i]));

    REQUIRE_THROWS_AS(fuse(a, random_tensor({2, 4}, rng, 1.0, false), none), Error);
}

TEST_CASE("ema decay limits: zero gives batch means, one freezes entries") {
    Rng rng(42);
    Codebook cb(2, 3, 3, QuantizerStyle::ema, rng);
    std::vector<real> before = cb.entries.values();
    Tensor batch = random_tensor({8, 3}, rng, 1.0, false);
    std::vector<long> assign{0, 0, 0, 0, 1, 1, 1, 1};

    Codebook frozen = cb;
    ema_update(frozen, assign, batch, 1.0);
    REQUIRE(frozen.entries.values() == before);

    ema_update(cb, assign, batch, 0.0);
    for (long k = 0; k < 2; ++k) {
        for (long j = 0; j < 3; ++j) {
            real mean = 0;
            for (long i = k * 4; i < k * 4 + 4; ++i) mean += batch.data()[i * 3 + j];
            mean /= 4.0;
            REQUIRE(cb.entries.data()[k * 3 + j] == Catch::Approx(mean).margin(1e-12));
        }
    }
}

TEST_CASE("ema converges to the two cluster means of a stationary stream") {
    Rng rng(43);
    Codebook cb(2, 2, 2, QuantizerStyle::ema, rng);
    cb.entries.data()[0] = 1.0; cb.entries.data()[1] = 1.0;
    cb.entries.data()[2] = -1.0; cb.entries.data()[3] = -1.0;
    const real mu_a[2] = {2.0, 1.5}, mu_b[2] = {-2.0, -1.0};
    for (int step = 0; step < 100; ++step) {
        std::vector<real> batch;
        for (int i = 0; i < 16; ++i) {
            const bool a = i % 2 == 0;
            batch.push_back((a ? mu_a[0] : mu_b[0]) + 0.05 * rng.normal());
            batch.push_back((a ? mu_a[1] : mu_b[1]) + 0.05 * rng.normal());
        }
        Tensor b = Tensor::from_data({16, 2}, batch);
        ema_update(cb, nearest_codes(cb, b), b, 0.99);
    }
    const bool first_is_a = cb.entries.data()[0] > 0;
    const real* ea = first_is_a ? mu_a : mu_b;
    const real* eb = first_is_a ? mu_b : mu_a;
    REQUIRE(std::abs(cb.entries.data()[0] - ea[0]) < 0.05);
    REQUIRE(std::abs(cb.entries.data()[1] - ea[1]) < 0.05);
    REQUIRE(std::abs(cb.entries.data()[2] - eb[0]) < 0.05);
    REQUIRE(std::abs(cb.entries.data()[3] - eb[1]) < 0.05);
}

TEST_CASE("ema_update rejects lookup-style codebooks") {
    Rng rng(44);
    Codebook cb(4, 2, 2, QuantizerStyle::low_dim_lookup, rng);
    Tensor b = random_tensor({2, 2}, rng, 1.0, false);
    REQUIRE_THROWS_AS(ema_update(cb, {0, 1}, b, 0.9), Error);
}

TEST_CASE("stale entries reseed after two idle windows") {
    Rng rng(45);
    Codebook cb(3, 2, 2, QuantizerStyle::ema, rng);
    Tensor batch = random_tensor({4, 2}, rng, 1.0, false);
    ema_update(cb, {0, 0, 1, 1}, batch, 0.5);  // entry 2 never used
    REQUIRE(ema_reinit_stale(cb, batch, rng) == 0);
    ema_update(cb, {0, 0, 1, 1}, batch, 0.5);
    REQUIRE(ema_reinit_stale(cb, batch, rng) == 1);
    bool matches_batch_row = false;
    for (long i = 0; i < 4; ++i)
        if (cb.entries.data()[4] == batch.data()[i * 2] &&
            cb.entries.data()[5] == batch.data()[i * 2 + 1])
            matches_batch_row = true;
    REQUIRE(matches_batch_row);
}

TEST_CASE("codebook statistics") {
    {
        std::vector<long> codes{0, 1, 2, 3, 4, 5, 6, 7};
        CodebookStats s = codebook_stats(codes, 8);
        REQUIRE(s.utilization == Catch::Approx(1.0));
        REQUIRE(s.perplexity == Catch::Approx(8.0));
    }
    {
        std::vector<long> codes(10, 3);
        CodebookStats s = codebook_stats(codes, 4);
        REQUIRE(s.utilization == Catch::Approx(0.25));
        REQUIRE(s.perplexity == Catch::Approx(1.0));
    }
    {
        std::vector<long> codes{0, 0, 1, 2};
        CodebookStats s = codebook_stats(codes, 4);
        REQUIRE(s.utilization == Catch::Approx(0.75));
        REQUIRE(s.perplexity == Catch::Approx(std::exp(1.0397207708399179)).epsilon(1e-4));
        REQUIRE(s.perplexity == Catch::Approx(2.8284271).epsilon(1e-4));
    }
}

TEST_CASE("vq rejects dimension mismatch and empty rvq lists") {
    Rng rng(46);
    Codebook cb(4, 2, 3, QuantizerStyle::low_dim_lookup, rng);
    REQUIRE_THROWS_AS(vq_forward(random_tensor({2, 5}, rng, 1.0, false), cb), Error);
    REQUIRE_THROWS_AS(rvq_forward(random_tensor({2, 3}, rng, 1.0, false), {}, 1), Error);
}
