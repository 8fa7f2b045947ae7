#ifndef GHSS_HASHING_HPP
#define GHSS_HASHING_HPP

#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ghss {

// Field prime for all polynomial hash families: the Mersenne prime 2^61 - 1.
inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

inline std::uint64_t mul_mod61(std::uint64_t a, std::uint64_t b)
{
    __uint128_t z = static_cast<__uint128_t>(a) * b;
    std::uint64_t lo = static_cast<std::uint64_t>(z) & kMersenne61;
    std::uint64_t hi = static_cast<std::uint64_t>(z >> 61);
    std::uint64_t r = lo + hi;
    if (r >= kMersenne61) r -= kMersenne61;
    return r;
}

inline std::uint64_t add_mod61(std::uint64_t a, std::uint64_t b)
{
    std::uint64_t r = a + b;
    if (r >= kMersenne61) r -= kMersenne61;
    return r;
}

// SplitMix64 finalizer; used for seed branching and for drawing hash coefficients.
inline std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic seed derivation: master seed combined with a structure tag and an
// index, so every substructure of a sketch gets an independent stream of bits.
inline std::uint64_t branch_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index)
{
    return mix64(master ^ mix64(tag ^ 0xa5a5a5a5deadbeefull) ^ mix64(index ^ 0x0123456789abcdefull));
}

// Small counter-based generator over mix64.
class SeedStream {
public:
    explicit SeedStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() { return mix64(state_ ^ counter_++); }

    // Uniform value in [0, bound) by rejection; bound must be nonzero.
    std::uint64_t next_below(std::uint64_t bound)
    {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return v % bound;
    }

private:
    std::uint64_t state_;
    std::uint64_t counter_ = 0;
};

// d-wise independent hash family realized as a random polynomial of degree d-1
// over GF(2^61 - 1), reduced to [0, range) by modulus.
class PolyHashFamily {
public:
    PolyHashFamily(unsigned degree, std::uint64_t range, std::uint64_t seed)
        : range_(range)
    {
        if (degree == 0) throw std::invalid_argument("PolyHashFamily: degree must be >= 1");
        if (range == 0) throw std::invalid_argument("PolyHashFamily: range must be >= 1");
        SeedStream rng(seed);
        coeffs_.resize(degree);
        for (auto& c : coeffs_) c = rng.next_below(kMersenne61);
    }

    static PolyHashFamily from_coefficients(std::vector<std::uint64_t> coeffs, std::uint64_t range)
    {
        PolyHashFamily f(static_cast<unsigned>(coeffs.size()), range, 0);
        for (auto c : coeffs)
            if (c >= kMersenne61) throw std::invalid_argument("coefficient out of field");
        f.coeffs_ = std::move(coeffs);
        return f;
    }

    // Horner evaluation mod 2^61 - 1.
    std::uint64_t eval_field(std::uint64_t key) const
    {
        assert(key < kMersenne61);
        std::uint64_t acc = coeffs_.back();
        for (std::size_t j = coeffs_.size() - 1; j-- > 0;)
            acc = add_mod61(mul_mod61(acc, key), coeffs_[j]);
        return acc;
    }

    std::uint64_t operator()(std::uint64_t key) const { return eval_field(key) % range_; }

    unsigned degree() const { return static_cast<unsigned>(coeffs_.size()); }
    std::uint64_t range() const { return range_; }

private:
    std::vector<std::uint64_t> coeffs_;
    std::uint64_t range_;
};

// Rademacher sign family: parity of the field value of an underlying polynomial
// family mapped to {-1, +1}. Independence 2 or 4 in practice.
class RademacherFamily {
public:
    RademacherFamily(unsigned independence, std::uint64_t seed)
        : base_(independence, 2, seed), independence_(independence)
    {
    }

    int operator()(std::uint64_t key) const
    {
        return (base_.eval_field(key) & 1) ? -1 : +1;
    }

    unsigned independence() const { return independence_; }

private:
    PolyHashFamily base_;
    unsigned independence_;
};

// Level-membership bits g_1 .. g_L, one independent d-wise family per level.
// An item belongs to substream l iff its first l bits are all 1, so the
// substreams are nested and the survival rate halves per level.
class LevelHashes {
public:
    LevelHashes(unsigned levels, unsigned degree, std::uint64_t seed)
    {
        families_.reserve(levels);
        for (unsigned l = 1; l <= levels; ++l)
            families_.emplace_back(degree, 2, branch_seed(seed, /*tag=*/1, l));
    }

    // g_l(i) for l in 1..L.
    bool member_bit(unsigned l, std::uint64_t key) const
    {
        assert(l >= 1 && l <= families_.size());
        return (families_[l - 1].eval_field(key) & 1) != 0;
    }

    // Largest l <= L with g_1(i) = ... = g_l(i) = 1; 0 if g_1(i) = 0.
    unsigned level_of(std::uint64_t key) const
    {
        unsigned l = 0;
        while (l < families_.size() && member_bit(l + 1, key)) ++l;
        return l;
    }

    unsigned levels() const { return static_cast<unsigned>(families_.size()); }

private:
    std::vector<PolyHashFamily> families_;
};

} // namespace ghss

#endif
