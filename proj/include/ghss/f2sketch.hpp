#ifndef GHSS_F2SKETCH_HPP
#define GHSS_F2SKETCH_HPP

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "hashing.hpp"

namespace ghss {

// Tug-of-war second-moment estimator, median-of-means layout. The correction
// multiplier (1 - delta)^-1 makes the returned estimate one-sided: with widths
// meeting the configured accuracy, F2 <= estimate holds with high probability.
class AmsSketch {
public:
    AmsSketch(std::size_t groups, std::size_t per_group, double correction_delta,
              std::uint64_t seed)
        : groups_(groups), per_group_(per_group),
          correction_(1.0 / (1.0 - correction_delta)),
          seed_(seed),
          accumulators_(groups * per_group, 0)
    {
        if (groups == 0 || per_group == 0)
            throw std::invalid_argument("AmsSketch: groups and per_group must be >= 1");
        if (!(correction_delta >= 0.0 && correction_delta < 1.0))
            throw std::invalid_argument("AmsSketch: correction delta must be in [0, 1)");
        signs_.reserve(accumulators_.size());
        for (std::size_t a = 0; a < accumulators_.size(); ++a)
            signs_.emplace_back(4, branch_seed(seed, 4, a));
    }

    void update(std::uint64_t item, std::int64_t delta)
    {
        for (std::size_t a = 0; a < accumulators_.size(); ++a) {
            const std::int64_t add = delta * signs_[a](item);
#ifndef NDEBUG
            std::int64_t tmp;
            assert(!__builtin_add_overflow(accumulators_[a], add, &tmp));
#endif
            accumulators_[a] += add;
        }
    }

    // Median over groups of the mean of squared accumulators, times correction.
    double estimate() const
    {
        std::vector<double> means(groups_);
        for (std::size_t g = 0; g < groups_; ++g) {
            double sum = 0;
            for (std::size_t a = 0; a < per_group_; ++a) {
                const double v = static_cast<double>(accumulators_[g * per_group_ + a]);
                sum += v * v;
            }
            means[g] = sum / static_cast<double>(per_group_);
        }
        const std::size_t idx = (groups_ - 1) / 2;
        std::nth_element(means.begin(), means.begin() + idx, means.end());
        return means[idx] * correction_;
    }

    // Pre-correction mean of all squared accumulators (unbiased for F2).
    double raw_mean_of_squares() const
    {
        double sum = 0;
        for (std::int64_t c : accumulators_) {
            const double v = static_cast<double>(c);
            sum += v * v;
        }
        return sum / static_cast<double>(accumulators_.size());
    }

    void merge(const AmsSketch& other)
    {
        if (groups_ != other.groups_ || per_group_ != other.per_group_ ||
            seed_ != other.seed_)
            throw std::invalid_argument("AmsSketch::merge: layout or seed mismatch");
        for (std::size_t a = 0; a < accumulators_.size(); ++a)
            accumulators_[a] += other.accumulators_[a];
    }

    bool all_zero() const
    {
        return std::all_of(accumulators_.begin(), accumulators_.end(),
                           [](std::int64_t c) { return c == 0; });
    }

    std::span<const std::int64_t> accumulators() const { return accumulators_; }
    std::size_t word_count() const { return accumulators_.size(); }
    double correction() const { return correction_; }

    friend bool operator==(const AmsSketch& a, const AmsSketch& b)
    {
        return a.groups_ == b.groups_ && a.per_group_ == b.per_group_ &&
               a.seed_ == b.seed_ && a.accumulators_ == b.accumulators_;
    }

private:
    std::size_t groups_;
    std::size_t per_group_;
    double correction_;
    std::uint64_t seed_;
    std::vector<std::int64_t> accumulators_;
    std::vector<RademacherFamily> signs_;
};

} // namespace ghss

#endif
