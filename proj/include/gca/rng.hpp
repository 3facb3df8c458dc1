#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace gca {

// Derives a child seed from a root seed and a stage label, so independent
// pipeline stages (simulate, judge, export, ...) draw from unrelated streams
// and partial re-runs stay deterministic.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage);

// Thin wrapper over mt19937_64 that avoids std::*_distribution, whose output
// is implementation-defined; every draw here is reproducible across platforms
// for a given seed.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // uniform in [0, n); n must be > 0
    std::size_t next_index(std::size_t n);

    // index drawn proportionally to non-negative weights
    std::size_t next_weighted(const std::vector<double>& weights);

    bool next_bool(double p_true) { return next_double() < p_true; }

  private:
    std::mt19937_64 engine_;
};

}  // namespace gca
