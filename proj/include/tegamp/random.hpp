#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tegamp {

/// Reproducible random stream. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; uniforms take the top 53 bits and
/// normals use the Box-Muller transform, so no library distribution (whose
/// algorithms differ between standard libraries) is involved.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in (0, 1].
    double uniform_open0();
    double normal();
    double normal(double mean, double variance);

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// Sub-seed derivation: splitmix64 finalizer of (base, stream). Streams are
/// named so that adding a consumer never shifts another consumer's draws.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream);

}  // namespace tegamp
