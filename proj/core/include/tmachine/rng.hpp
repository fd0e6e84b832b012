#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>

namespace tmachine {

// Philox4x64-10 counter-based generator (Salmon et al., Random123).
//
// A stream is the keyed bijection applied to the counter sequence
// (block, 0, stream_index, 0) for block = 0, 1, 2, ...; distinct stream
// indices therefore occupy disjoint counter ranges under the same key and
// can never overlap. Period per stream is 2^66 words.
class Philox4x64 {
public:
    using result_type = std::uint64_t;
    using Counter = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    Philox4x64(Key key, Counter counter) : key_(key), counter_(counter) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    // One application of the 10-round bijection.
    static Counter encrypt(Counter counter, Key key);

private:
    Key key_;
    Counter counter_;
    Counter buffer_{};
    unsigned next_ = 4;
};

struct StreamSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;
};

// Random stream owned by one simulation. Satisfies UniformRandomBitGenerator.
class RandomStream {
public:
    using result_type = std::uint64_t;

    explicit RandomStream(StreamSpec spec);

    static constexpr result_type min() { return Philox4x64::min(); }
    static constexpr result_type max() { return Philox4x64::max(); }

    result_type operator()() { return engine_(); }

    // Uniform real in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    const StreamSpec& spec() const { return spec_; }

private:
    StreamSpec spec_;
    Philox4x64 engine_;
};

// SplitMix64 finaliser; used to spread the master seed over the 128-bit key.
std::uint64_t mix64(std::uint64_t x);

RandomStream derive_stream(StreamSpec spec);

// Index i with probability weights[i] / sum(weights). One uniform, cumulative
// scan in index order. Throws ValidationError on empty, negative, non-finite
// or all-zero weights.
std::size_t categorical(RandomStream& stream, std::span<const double> weights);

// As above, but the caller supplies the total it already computed by summing
// `weights` in index order.
std::size_t categorical(RandomStream& stream, std::span<const double> weights, double total);

}  // namespace tmachine
