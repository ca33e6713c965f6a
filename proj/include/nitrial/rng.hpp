#pragma once

#include <cstdint>
#include <random>

namespace nitrial {

// A reproducible substream of a master seed. Distinct (master, index) pairs
// produce independent, collision-resistant generator states.
struct SeedStream {
    std::uint64_t master = 0;
    std::uint64_t index = 0;

    // mt19937_64 seeded from four mixed words derived from (master, index).
    std::mt19937_64 engine() const;
};

SeedStream derive_stream(std::uint64_t master, std::uint64_t index);

// splitmix64 finalizer; the mixing primitive behind stream derivation.
std::uint64_t mix64(std::uint64_t v);

// Derive a single 64-bit sub-seed (used for per-estimator chain seeds so
// chain streams never reuse a dataset stream's (master, index) pair).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t salt);

}  // namespace nitrial
