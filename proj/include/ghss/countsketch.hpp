#ifndef GHSS_COUNTSKETCH_HPP
#define GHSS_COUNTSKETCH_HPP

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "hashing.hpp"

namespace ghss {

// CountSketch(C, s): s rows of C signed counters with per-row hash and sign
// families. Linear in the stream; mergeable across same-seed instances.
class CountSketch {
public:
    CountSketch(std::size_t rows, std::size_t width, unsigned hash_independence,
                unsigned sign_independence, std::uint64_t seed)
        : rows_(rows), width_(width), seed_(seed),
          counters_(rows * width, 0)
    {
        if (rows == 0 || width == 0)
            throw std::invalid_argument("CountSketch: rows and width must be >= 1");
        hashes_.reserve(rows);
        signs_.reserve(rows);
        for (std::size_t j = 0; j < rows; ++j) {
            hashes_.emplace_back(hash_independence, width, branch_seed(seed, 2, j));
            signs_.emplace_back(sign_independence, branch_seed(seed, 3, j));
        }
    }

    void update(std::uint64_t item, std::int64_t delta)
    {
        for (std::size_t j = 0; j < rows_; ++j) {
            std::int64_t& c = counters_[j * width_ + hashes_[j](item)];
            const std::int64_t add = delta * signs_[j](item);
#ifndef NDEBUG
            std::int64_t tmp;
            assert(!__builtin_add_overflow(c, add, &tmp) && "counter overflow");
#endif
            c += add;
        }
    }

    std::uint64_t bucket_of(std::size_t row, std::uint64_t item) const
    {
        return hashes_[row](item);
    }

    int sign_of(std::size_t row, std::uint64_t item) const { return signs_[row](item); }

    // Raw per-row read: T_j[h_j(i)] * xi_j(i) * sign_hint.
    std::int64_t row_estimate(std::size_t row, std::uint64_t item, int sign_hint) const
    {
        assert(row < rows_);
        return counters_[row * width_ + hashes_[row](item)] * signs_[row](item) * sign_hint;
    }

    // Median of per-row signed reads; even row counts take the lower median.
    std::int64_t point_estimate(std::uint64_t item) const
    {
        std::vector<std::int64_t> vals(rows_);
        for (std::size_t j = 0; j < rows_; ++j) vals[j] = row_estimate(j, item, +1);
        const std::size_t idx = (rows_ - 1) / 2;
        std::nth_element(vals.begin(), vals.begin() + idx, vals.end());
        return vals[idx];
    }

    // True iff item shares no bucket of this row with any of `others`.
    bool row_isolated(std::size_t row, std::uint64_t item,
                      std::span<const std::uint64_t> others) const
    {
        const std::uint64_t b = hashes_[row](item);
        for (std::uint64_t o : others)
            if (o != item && hashes_[row](o) == b) return false;
        return true;
    }

    void merge(const CountSketch& other)
    {
        if (rows_ != other.rows_ || width_ != other.width_ || seed_ != other.seed_)
            throw std::invalid_argument("CountSketch::merge: dimension or seed mismatch");
        for (std::size_t i = 0; i < counters_.size(); ++i) {
#ifndef NDEBUG
            std::int64_t tmp;
            assert(!__builtin_add_overflow(counters_[i], other.counters_[i], &tmp));
#endif
            counters_[i] += other.counters_[i];
        }
    }

    bool all_zero() const
    {
        return std::all_of(counters_.begin(), counters_.end(),
                           [](std::int64_t c) { return c == 0; });
    }

    // Row-major little-endian 64-bit counter dump for harness checkpointing.
    void write_counters(std::ostream& out) const
    {
        for (std::int64_t c : counters_) {
            unsigned char buf[8];
            std::uint64_t u = static_cast<std::uint64_t>(c);
            for (int b = 0; b < 8; ++b) buf[b] = static_cast<unsigned char>(u >> (8 * b));
            out.write(reinterpret_cast<const char*>(buf), 8);
        }
    }

    std::span<const std::int64_t> counters() const { return counters_; }
    std::size_t rows() const { return rows_; }
    std::size_t width() const { return width_; }
    std::size_t word_count() const { return counters_.size(); }
    std::uint64_t seed() const { return seed_; }

    friend bool operator==(const CountSketch& a, const CountSketch& b)
    {
        return a.rows_ == b.rows_ && a.width_ == b.width_ && a.seed_ == b.seed_ &&
               a.counters_ == b.counters_;
    }

private:
    std::size_t rows_;
    std::size_t width_;
    std::uint64_t seed_;
    std::vector<std::int64_t> counters_;
    std::vector<PolyHashFamily> hashes_;
    std::vector<RademacherFamily> signs_;
};

} // namespace ghss

#endif
