#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace aclnet {

// Seedable, splittable generator (splitmix64 core). Every randomized step of
// the pipeline owns a stream derived from (seed, purpose, indices...), so a
// run replays exactly regardless of scheduling.
class Rng {
public:
    explicit Rng(uint64_t seed) : key_(mix(seed ^ 0x9e3779b97f4a7c15ull)), state_(key_) {}

    // Derive an independent child stream. Children depend only on the parent
    // key and the path components, never on how much the parent has drawn.
    Rng derive(std::initializer_list<uint64_t> path) const {
        uint64_t k = key_;
        for (uint64_t p : path) k = mix(k ^ mix(p + 0x632be59bd9b4e019ull));
        return Rng(k, k);
    }

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    // Uniform in [0,1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0,n).
    int64_t uniform_int(int64_t n) {
        return static_cast<int64_t>(uniform() * static_cast<double>(n));
    }

    // Standard normal via Box-Muller (fixed two draws per call).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // Gamma(alpha, 1) via Marsaglia-Tsang, with the alpha<1 boost.
    double gamma(double alpha) {
        if (alpha < 1.0) {
            double u = uniform();
            while (u <= 0.0) u = uniform();
            return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
        }
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Symmetric Beta(alpha, alpha) as g1/(g1+g2).
    double beta(double alpha) {
        for (;;) {
            double g1 = gamma(alpha);
            double g2 = gamma(alpha);
            if (g1 + g2 > 0.0) return g1 / (g1 + g2);
        }
    }

private:
    Rng(uint64_t key, uint64_t state) : key_(key), state_(state) {}

    static uint64_t mix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    uint64_t key_;
    uint64_t state_;
};

// Stream purposes used by the trainer; kept in one place so replay order is
// documented.
namespace stream {
constexpr uint64_t kInit = 1;      // weight initialization
constexpr uint64_t kShuffle = 2;   // per-epoch example order
constexpr uint64_t kAugment = 3;   // per-example augmentation draws
constexpr uint64_t kMixup = 4;     // per-step mixup permutation and lambdas
constexpr uint64_t kDropout = 5;   // per-step dropout masks
}  // namespace stream

}  // namespace aclnet
