#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace irsopt {

// 64-bit mixing finalizer (splitmix64). Used both for seed derivation and as the
// core of the counter-based generator below.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Derive a child stream key from a parent seed and up to three stream labels.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t k = mix64(seed ^ 0x2545f4914f6cdd1dull);
    k = mix64(k ^ mix64(a));
    k = mix64(k ^ mix64(b + 0x632be59bd9b4e019ull));
    k = mix64(k ^ mix64(c + 0xd6e8feb86659fd93ull));
    return k;
}

// Counter-based generator: the n-th output is a pure function of (key, n), so
// parallel consumers produce identical streams regardless of scheduling.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key), ctr_(0) {}

    std::uint64_t next_u64() { return mix64(key_ ^ mix64(ctr_++ + 0x9e3779b97f4a7c15ull)); }

    // Uniform on [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Standard normal via Box-Muller (consumes two uniforms per pair).
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 1e-300) u1 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    // Circularly-symmetric complex normal with E|z|^2 = var.
    std::complex<double> next_cnormal(double var = 1.0) {
        const double s = std::sqrt(var / 2.0);
        return {s * next_gaussian(), s * next_gaussian()};
    }

private:
    std::uint64_t key_;
    std::uint64_t ctr_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace irsopt
