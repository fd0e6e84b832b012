#include "tmachine/rng.hpp"

#include <cmath>

#include "tmachine/errors.hpp"

namespace tmachine {
namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

__extension__ typedef unsigned __int128 uint128;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    const uint128 product = static_cast<uint128>(a) * b;
    hi = static_cast<std::uint64_t>(product >> 64);
    lo = static_cast<std::uint64_t>(product);
}

}  // namespace

Philox4x64::Counter Philox4x64::encrypt(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint64_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

Philox4x64::result_type Philox4x64::operator()() {
    if (next_ == 4) {
        buffer_ = encrypt(counter_, key_);
        // The block counter lives in word 0 only; word 2 holds the stream index.
        ++counter_[0];
        next_ = 0;
    }
    return buffer_[next_++];
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

RandomStream::RandomStream(StreamSpec spec)
    : spec_(spec),
      engine_({mix64(spec.master_seed), mix64(spec.master_seed ^ 0x6A09E667F3BCC909ULL)},
              {0, 0, spec.stream_index, 0}) {}

RandomStream derive_stream(StreamSpec spec) { return RandomStream(spec); }

std::size_t categorical(RandomStream& stream, std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw ValidationError("categorical: weights must be finite and non-negative");
        }
        total += w;
    }
    return categorical(stream, weights, total);
}

std::size_t categorical(RandomStream& stream, std::span<const double> weights, double total) {
    if (weights.empty() || !(total > 0.0) || !std::isfinite(total)) {
        throw ValidationError("categorical: need at least one positive weight and a finite total");
    }
    const double target = stream.uniform() * total;
    double cumulative = 0.0;
    std::size_t last_positive = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        cumulative += weights[i];
        last_positive = i;
        if (target < cumulative) return i;
    }
    // Rounding can leave target just above the scanned sum.
    return last_positive;
}

}  // namespace tmachine
