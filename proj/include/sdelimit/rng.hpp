#pragma once

#include <array>
#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace sdelimit {

/// splitmix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stream tags keep prelimit, limit and auxiliary draws on disjoint families of streams.
enum class StreamTag : std::uint64_t {
    prelimit = 1,
    limit = 2,
    exit = 3,
    occupation = 4,
    auxiliary = 5,
};

/// One independent random stream. Owns its engine; never shared between paths.
class RngStream {
public:
    using engine_type = std::mt19937_64;

    explicit RngStream(std::uint64_t seed) {
        std::array<std::uint32_t, 8> words{};
        std::uint64_t s = seed;
        for (std::size_t i = 0; i < words.size(); i += 2) {
            s = mix64(s);
            words[i] = static_cast<std::uint32_t>(s);
            words[i + 1] = static_cast<std::uint32_t>(s >> 32);
        }
        std::seed_seq seq(words.begin(), words.end());
        engine_.seed(seq);
    }

    double normal() { return normal_(engine_); }
    /// Uniform on [0,1).
    double uniform() { return uniform_(engine_); }
    bool bernoulli(double p) { return uniform() < p; }

    engine_type& engine() noexcept { return engine_; }

private:
    engine_type engine_;
    boost::random::normal_distribution<double> normal_;
    boost::random::uniform_01<double> uniform_;
};

/// Path index -> stream seed. Distinct (tag, index) pairs give distinct seeds for a fixed master seed.
struct RngPolicy {
    std::uint64_t master_seed = 0;

    std::uint64_t stream_seed(StreamTag tag, std::uint64_t index) const noexcept {
        std::uint64_t h = mix64(master_seed);
        h = mix64(h ^ (static_cast<std::uint64_t>(tag) * 0xd1b54a32d192ed03ULL));
        return mix64(h ^ index);
    }

    RngStream stream(StreamTag tag, std::uint64_t index) const {
        return RngStream(stream_seed(tag, index));
    }
};

} // namespace sdelimit
