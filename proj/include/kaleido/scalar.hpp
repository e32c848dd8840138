#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

#include "kaleido/error.hpp"

namespace kaleido {

// All arithmetic runs over complex doubles; real data is carried with a zero
// imaginary part.
using Scalar = std::complex<double>;

inline bool is_finite(double x) { return std::isfinite(x); }

inline bool is_finite(const Scalar& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

inline void ensure_finite(const Scalar& z, const char* where) {
    if (!is_finite(z)) throw NonFinite(std::string("non-finite value in ") + where);
}

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t log2_exact(std::size_t n) {
    std::size_t l = 0;
    while ((std::size_t{1} << l) < n) ++l;
    if ((std::size_t{1} << l) != n) throw InvalidArgument("size is not a power of two");
    return l;
}

inline std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Reverses the low `bits` bits of `x`.
inline std::size_t bit_reverse(std::size_t x, std::size_t bits) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) {
        r = (r << 1) | (x & 1);
        x >>= 1;
    }
    return r;
}

// splitmix64: tiny, seedable, identical across platforms. The standard
// <random> distributions are implementation-defined, which would break the
// bitwise-determinism contract of seeded runs.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [-s, s].
    double next_symmetric(double s) { return s * (2.0 * next_unit() - 1.0); }

    Scalar next_scalar(double s) {
        double re = next_symmetric(s);
        double im = next_symmetric(s);
        return {re, im};
    }

    // Uniform in [0, bound).
    std::size_t next_index(std::size_t bound) {
        return static_cast<std::size_t>(next_u64() % bound);
    }

  private:
    std::uint64_t state_;
};

}  // namespace kaleido
