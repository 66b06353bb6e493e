#ifndef TARDOS_RNG_HPP
#define TARDOS_RNG_HPP

// Counter-based random streams.
//
// Every random quantity in the library is a pure function of a 64-bit seed
// and a tuple of indices, so any position or user can be regenerated without
// replaying earlier draws. The algorithm is fixed; changing any constant here
// changes every golden transcript.
//
//   mix64(x)              SplitMix64 finalizer (Stafford variant 13).
//   purpose_key(s, tag)   = mix64(s + GOLDEN * (tag + 1))
//   index_key(k, i)       = mix64(k ^ (i + INDEX_OFFSET))
//   user_word(k_i, j)     = mix64(k_i ^ (j * USER_STRIDE + USER_OFFSET))
//   unit_open(w)          = ((w >> 11) + 0.5) * 2^-53, always inside (0, 1)
//
// A code symbol X[j,i] is unit_open(user_word(index_key(purpose_key(seed,
// symbol), i), j)) < p_i; the bias p_i uses unit_open(index_key(purpose_key(
// seed, bias), i)). Sequential streams (strategies, sampling) are SplitMix64
// generators whose state starts at a derived key.

#include <cstdint>
#include <limits>

namespace tardos::rng {

inline constexpr std::uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t INDEX_OFFSET = 0x632BE59BD9B4E019ULL;
inline constexpr std::uint64_t USER_STRIDE = 0xD1B54A32D192ED03ULL;
inline constexpr std::uint64_t USER_OFFSET = 0x8CB92BA72F3D8DD7ULL;

enum class Purpose : std::uint64_t {
    bias = 1,
    symbol = 2,
    strategy = 3,
    trial = 4,
    innocent_sample = 5,
    codebook = 6,
};

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

constexpr std::uint64_t purpose_key(std::uint64_t seed, Purpose tag) noexcept {
    return mix64(seed + GOLDEN * (static_cast<std::uint64_t>(tag) + 1));
}

constexpr std::uint64_t index_key(std::uint64_t key, std::uint64_t index) noexcept {
    return mix64(key ^ (index + INDEX_OFFSET));
}

constexpr std::uint64_t user_word(std::uint64_t index_key_value, std::uint64_t user) noexcept {
    return mix64(index_key_value ^ (user * USER_STRIDE + USER_OFFSET));
}

constexpr double unit_open(std::uint64_t word) noexcept {
    return (static_cast<double>(word >> 11) + 0.5) * 0x1.0p-53;
}

/// Key for an independent sub-stream: (seed, purpose, a, b).
constexpr std::uint64_t derive(std::uint64_t seed, Purpose tag, std::uint64_t a,
                               std::uint64_t b = 0) noexcept {
    return user_word(index_key(purpose_key(seed, tag), a), b);
}

/// Sequential SplitMix64 stream. Satisfies UniformRandomBitGenerator, but the
/// library only draws through the member helpers so output does not depend on
/// the standard library's distribution implementations.
class Stream {
public:
    using result_type = std::uint64_t;

    Stream() = default;
    explicit Stream(std::uint64_t key) : state_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        state_ += GOLDEN;
        return mix64(state_);
    }

    /// Uniform in (0, 1).
    double uniform() noexcept { return unit_open((*this)()); }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    bool coin() noexcept { return ((*this)() >> 63) != 0; }

    /// Uniform integer in [0, bound), Lemire's nearly-divisionless method.
    std::uint64_t below(std::uint64_t bound) noexcept {
        if (bound <= 1) return 0;
        std::uint64_t x = (*this)();
        auto m = static_cast<unsigned __int128>(x) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                x = (*this)();
                m = static_cast<unsigned __int128>(x) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    std::uint64_t state() const noexcept { return state_; }

private:
    std::uint64_t state_ = 0;
};

} // namespace tardos::rng

#endif // TARDOS_RNG_HPP
