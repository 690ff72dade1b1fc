#ifndef ERTKIT_RANDOM_HPP
#define ERTKIT_RANDOM_HPP

#include <cstdint>
#include <vector>

namespace ertkit {

// Counter-based (splittable) pseudo-random stream.
//
// Output k of stream (seed, id) is a pure function of (seed, id, k), so
// replicate/permutation loops can hand each task its own stream and draw
// from it in any order or thread without affecting other streams.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    std::uint64_t next_u64();

    // Uniform on [0,1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller (second draw cached).
    double normal();

    // Unbiased draw from {0, 1, ..., n-1}.
    std::uint64_t below(std::uint64_t n);

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derived stream for a sub-task; deterministic in (seed, stream_id, id).
    RandomStream substream(std::uint64_t id) const;

    // Combines task indices into a stream id.
    static std::uint64_t combine(std::uint64_t a, std::uint64_t b);

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool have_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

} // namespace ertkit

#endif
