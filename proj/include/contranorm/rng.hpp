#ifndef CONTRANORM_RNG_HPP
#define CONTRANORM_RNG_HPP

#include <cstdint>
#include <random>

#include "contranorm/matrix.hpp"

namespace contranorm {

/// Deterministic random source: std::mt19937_64 (bit-exact by the standard)
/// with explicit scalar transforms. std::normal_distribution and friends are
/// implementation-defined, so uniforms use 53-bit scaling and normals the
/// Marsaglia polar method.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random mantissa bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound) without modulo bias.
    std::uint64_t integer(std::uint64_t bound);

    /// Standard normal via the polar method.
    double normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Stream splitting: a distinct, well-mixed seed for substream `stream` of a
/// master seed (SplitMix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// n x d matrix with independent standard normal entries.
Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng);

/// Random n x n orthogonal matrix: modified Gram-Schmidt on a Gaussian draw.
Matrix orthogonal_matrix(std::size_t n, Rng& rng);

}  // namespace contranorm

#endif  // CONTRANORM_RNG_HPP
