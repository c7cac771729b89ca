#pragma once

#include <random>
#include <sstream>

#include "hac/core/tensor.hpp"

namespace hac {

// mt19937_64 with explicit distribution mappings so a stream of draws is a
// pure function of the engine state (std:: distributions keep hidden state).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    real uniform() {  // [0, 1)
        return (real)(eng_() >> 11) * 0x1.0p-53;
    }

    real uniform(real lo, real hi) { return lo + (hi - lo) * uniform(); }

    long uniform_int(long n) {  // [0, n)
        check(n > 0, "uniform_int: n must be positive");
        return (long)(eng_() % (std::uint64_t)n);
    }

    real normal() {  // Box-Muller, one fresh pair of draws per call
        real u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const real u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    void fill_normal(std::vector<real>& v, real scale = 1.0) {
        for (auto& x : v) x = normal() * scale;
    }

    std::string save_state() const {
        std::ostringstream os;
        os << eng_;
        return os.str();
    }

    void load_state(const std::string& s) {
        std::istringstream is(s);
        is >> eng_;
        check(!is.fail(), "rng: corrupt engine state");
    }

private:
    std::mt19937_64 eng_;
};

// Stable 64-bit FNV-1a, used for config hashes and label embeddings.
inline std::uint64_t fnv1a64(const std::string& s, std::uint64_t seed = 1469598103934665603ull) {
    std::uint64_t h = seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace hac
