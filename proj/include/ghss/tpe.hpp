#ifndef GHSS_TPE_HPP
#define GHSS_TPE_HPP

#include <bit>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "hashing.hpp"

namespace ghss {

// Falling power <a>_m = a (a-1) ... (a-m+1); 1 for m = 0.
inline double falling_factorial(double a, unsigned m)
{
    double prod = 1.0;
    for (unsigned j = 0; j < m; ++j) prod *= a - static_cast<double>(j);
    return prod;
}

// Generalized binomial coefficient <p>_j / j!; zero for negative j.
inline double gen_binomial(double p, long long j)
{
    if (j < 0) return 0.0;
    double prod = 1.0;
    for (long long i = 0; i < j; ++i)
        prod *= (p - static_cast<double>(i)) / static_cast<double>(i + 1);
    return prod;
}

// Constant-weight code: r codewords of weight k in {0,1}^s with pairwise
// Hamming distance >= ceil(3k/2), i.e. shared support <= k - ceil(3k/4).
struct ConstantWeightCode {
    unsigned block_length = 0; // s
    unsigned weight = 0;       // k
    unsigned min_distance = 0; // ceil(3k/2)
    std::vector<std::vector<std::uint32_t>> codewords; // sorted index lists

    nlohmann::json to_json() const
    {
        nlohmann::json words = nlohmann::json::array();
        for (const auto& cw : codewords) words.push_back(cw);
        return {{"block_length", block_length}, {"weight", weight},
                {"min_distance", min_distance}, {"codewords", words}};
    }
};

namespace detail {

inline unsigned max_shared_support(unsigned k)
{
    const unsigned min_dist = (3 * k + 1) / 2;
    return k - (min_dist + 1) / 2;
}

} // namespace detail

// Randomized-greedy construction: sample weight-k index sets, keep those at
// distance >= ceil(3k/2) from everything kept so far. Throws when the retry
// budget runs out, which signals that r is too large for this k.
inline ConstantWeightCode build_code(unsigned k, unsigned s, unsigned r,
                                     std::uint64_t seed)
{
    if (k < 2) throw std::invalid_argument("build_code: k must be >= 2");
    if (s != 8 * k) throw std::invalid_argument("build_code: s must equal 8k");
    const unsigned max_shared = detail::max_shared_support(k);
    const std::size_t words = (s + 63) / 64;

    ConstantWeightCode code;
    code.block_length = s;
    code.weight = k;
    code.min_distance = (3 * k + 1) / 2;

    std::vector<std::vector<std::uint64_t>> masks;
    std::vector<std::uint32_t> pool(s);
    SeedStream rng(seed);

    const std::uint64_t budget = 2000ull * r + 100000ull;
    std::uint64_t attempts = 0;
    while (code.codewords.size() < r) {
        if (++attempts > budget)
            throw std::runtime_error(
                "build_code: retry budget exhausted; lower r or raise k");
        // Partial Fisher-Yates draw of k distinct indices from [s].
        for (std::uint32_t i = 0; i < s; ++i) pool[i] = i;
        std::vector<std::uint32_t> cand(k);
        std::vector<std::uint64_t> mask(words, 0);
        for (unsigned j = 0; j < k; ++j) {
            const std::uint64_t pick = j + rng.next_below(s - j);
            std::swap(pool[j], pool[pick]);
            cand[j] = pool[j];
            mask[pool[j] >> 6] |= std::uint64_t{1} << (pool[j] & 63);
        }
        bool ok = true;
        for (const auto& kept : masks) {
            unsigned shared = 0;
            for (std::size_t w = 0; w < words; ++w)
                shared += static_cast<unsigned>(std::popcount(mask[w] & kept[w]));
            if (shared > max_shared) { ok = false; break; }
        }
        if (!ok) continue;
        std::sort(cand.begin(), cand.end());
        code.codewords.push_back(std::move(cand));
        masks.push_back(std::move(mask));
    }
    return code;
}

struct TaylorConfig {
    double p;
    unsigned k;

    TaylorConfig(double p_, unsigned k_) : p(p_), k(k_)
    {
        if (!(k + 1.0 > p))
            throw std::invalid_argument("TaylorConfig: requires k + 1 > p");
    }
};

// gamma_j(lambda) = binom(p, j) * lambda^{p-j} for j = 0..k, computed by the
// recurrence gamma_{j+1} = gamma_j * (p-j) / ((j+1) * lambda).
inline std::vector<double> taylor_coefficients(double p, unsigned k, double lambda)
{
    std::vector<double> gamma(k + 1);
    gamma[0] = std::pow(lambda, p);
    for (unsigned j = 0; j < k; ++j)
        gamma[j + 1] = gamma[j] * (p - static_cast<double>(j)) /
                       (static_cast<double>(j + 1) * lambda);
    return gamma;
}

namespace detail {

template <typename IndexFn>
inline double tp_sum(std::span<const double> gamma, double lambda, unsigned k,
                     IndexFn x_at)
{
    double acc = gamma[0];
    double prod = 1.0;
    for (unsigned j = 1; j <= k; ++j) {
        prod *= x_at(j - 1) - lambda;
        acc += gamma[j] * prod;
    }
    return acc;
}

} // namespace detail

// Degree-k Taylor polynomial estimator for mu^p around lambda, with the powers
// of (mu - lambda) replaced by products of independent estimates.
inline double tp_estimate(const TaylorConfig& cfg, double lambda,
                          std::span<const double> xs)
{
    if (!(lambda > 0.0))
        throw std::invalid_argument("tp_estimate: lambda must be positive");
    if (xs.size() != cfg.k)
        throw std::invalid_argument("tp_estimate: need exactly k variables");
    const std::vector<double> gamma = taylor_coefficients(cfg.p, cfg.k, lambda);
    return detail::tp_sum(gamma, lambda, cfg.k, [&](unsigned l) { return xs[l]; });
}

// Mean over all codewords of the TP estimator on the codeword's variables,
// each codeword ordered by an independent uniform permutation drawn from
// perm_seed.
inline double averaged_tp_estimate(const TaylorConfig& cfg, double lambda,
                                   const ConstantWeightCode& code,
                                   std::uint64_t perm_seed,
                                   std::span<const double> xs,
                                   bool permute = true)
{
    if (!(lambda > 0.0))
        throw std::invalid_argument("averaged_tp_estimate: lambda must be positive");
    if (xs.size() != code.block_length)
        throw std::invalid_argument("averaged_tp_estimate: |xs| must equal block length");
    if (code.weight != cfg.k)
        throw std::invalid_argument("averaged_tp_estimate: code weight must equal k");
    const std::vector<double> gamma = taylor_coefficients(cfg.p, cfg.k, lambda);
    const unsigned k = cfg.k;
    std::vector<std::uint32_t> perm(k);
    double total = 0.0;
    for (std::size_t ci = 0; ci < code.codewords.size(); ++ci) {
        const auto& cw = code.codewords[ci];
        SeedStream rng(branch_seed(perm_seed, 5, ci));
        for (unsigned j = 0; j < k; ++j) perm[j] = cw[j];
        if (permute) {
            for (unsigned j = 0; j < k; ++j) { // Fisher-Yates
                const std::uint64_t pick = j + rng.next_below(k - j);
                std::swap(perm[j], perm[pick]);
            }
        }
        total += detail::tp_sum(gamma, lambda, k,
                                [&](unsigned l) { return xs[perm[l]]; });
    }
    return total / static_cast<double>(code.codewords.size());
}

} // namespace ghss

#endif
