#include "nitrial/rng.hpp"

namespace nitrial {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t v) {
    v ^= v >> 30;
    v *= 0xbf58476d1ce4e5b9ULL;
    v ^= v >> 27;
    v *= 0x94d049bb133111ebULL;
    v ^= v >> 31;
    return v;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t salt) {
    std::uint64_t s = mix64(master + kGolden);
    s = mix64(s ^ mix64(index + 2 * kGolden));
    s = mix64(s ^ mix64(salt + 3 * kGolden));
    return s;
}

SeedStream derive_stream(std::uint64_t master, std::uint64_t index) {
    return SeedStream{master, index};
}

std::mt19937_64 SeedStream::engine() const {
    // Four independent words keep the state-space entry far from the
    // degenerate low-entropy seeds mt19937_64 is sensitive to.
    std::uint64_t w[4];
    for (std::uint64_t i = 0; i < 4; ++i) {
        w[i] = derive_seed(master, index, kGolden * (i + 17));
    }
    std::seed_seq seq{
        static_cast<std::uint32_t>(w[0]), static_cast<std::uint32_t>(w[0] >> 32),
        static_cast<std::uint32_t>(w[1]), static_cast<std::uint32_t>(w[1] >> 32),
        static_cast<std::uint32_t>(w[2]), static_cast<std::uint32_t>(w[2] >> 32),
        static_cast<std::uint32_t>(w[3]), static_cast<std::uint32_t>(w[3] >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace nitrial
