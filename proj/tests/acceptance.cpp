// Acceptance gate: one self-contained check per criterion, each printing a
// single [PASS]/[FAIL] line with its runtime. Exit status is the number of
// failed criteria.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ghss/countsketch.hpp"
#include "ghss/ghss.hpp"
#include "ghss/harness.hpp"
#include "ghss/hashing.hpp"
#include "ghss/params.hpp"
#include "ghss/tpe.hpp"

namespace {

using ghss::build_code;
using ghss::gen_binomial;
using ghss::SeedStream;
using ghss::TaylorConfig;

// Deterministic standard normals via Box-Muller over the project's own
// counter-based generator.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : rng_(seed) {}

    double next(double mean, double sigma)
    {
        if (have_spare_) {
            have_spare_ = false;
            return mean + sigma * spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return mean + sigma * r * std::cos(a);
    }

private:
    double uniform() { return static_cast<double>(rng_.next() >> 11) * 0x1.0p-53; }

    SeedStream rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

struct Moments {
    double mean = 0;
    double var = 0;
    double se = 0;
};

Moments moments_of(const std::vector<double>& xs)
{
    Moments m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    for (double x : xs) m.var += (x - m.mean) * (x - m.mean);
    m.var /= static_cast<double>(xs.size() - 1);
    m.se = std::sqrt(m.var / static_cast<double>(xs.size()));
    return m;
}

// 1. Combinatorial identities on random fractional inputs.
bool criterion_identities()
{
    SeedStream rng(101);
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
    };
    auto close = [](double a, double b) {
        return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
    };
    for (int it = 0; it < 10000; ++it) {
        const double p = uniform(-5.0, 5.0);
        const long long j = 1 + it % 12;
        const double absorb = p / static_cast<double>(j) * gen_binomial(p - 1.0, j - 1);
        if (!close(gen_binomial(p, j), absorb)) return false;
        const double sign = (j % 2) ? -1.0 : 1.0;
        if (!close(gen_binomial(p, j), sign * gen_binomial(j - p - 1.0, j))) return false;
        const unsigned m = it % 5, n = it % 7;
        if (!close(ghss::falling_factorial(p, m + n),
                   ghss::falling_factorial(p, m) * ghss::falling_factorial(p - m, n)))
            return false;
    }
    return true;
}

// 2. Constant-weight code at production shape, full pairwise scan.
bool criterion_code()
{
    ghss::ConstantWeightCode code = build_code(32, 256, 512, 7);
    if (code.codewords.size() != 512) return false;
    std::vector<std::vector<std::uint64_t>> masks;
    for (const auto& cw : code.codewords) {
        if (cw.size() != 32) return false;
        std::vector<std::uint64_t> mask(4, 0);
        for (auto idx : cw) {
            if (idx >= 256) return false;
            mask[idx >> 6] |= std::uint64_t{1} << (idx & 63);
        }
        masks.push_back(mask);
    }
    for (std::size_t i = 0; i < masks.size(); ++i) {
        for (std::size_t j = i + 1; j < masks.size(); ++j) {
            unsigned shared = 0;
            for (int w = 0; w < 4; ++w)
                shared += static_cast<unsigned>(std::popcount(masks[i][w] & masks[j][w]));
            // Hamming distance between weight-32 words = 2 * (32 - shared).
            if (2 * (32 - shared) < 48) return false;
        }
    }
    return true;
}

// 3. TP estimator unbiasedness for integral p.
bool criterion_tp_unbiased()
{
    const TaylorConfig cfg(3.0, 16);
    NormalStream noise(303);
    std::vector<double> xs(16), samples;
    samples.reserve(100000);
    for (int t = 0; t < 100000; ++t) {
        for (auto& x : xs) x = noise.next(10.0, 0.3);
        samples.push_back(ghss::tp_estimate(cfg, 10.2, xs));
    }
    const Moments m = moments_of(samples);
    return std::abs(m.mean - 1000.0) <= 3.0 * m.se;
}

// 4. Bias envelope for non-integral p.
bool criterion_tp_bias_envelope()
{
    const double p = 2.5, mu = 10.0, lambda = 10.2;
    const unsigned k = 16;
    const TaylorConfig cfg(p, k);
    NormalStream noise(404);
    std::vector<double> xs(k), samples;
    samples.reserve(100000);
    for (int t = 0; t < 100000; ++t) {
        for (auto& x : xs) x = noise.next(mu, 0.3);
        samples.push_back(ghss::tp_estimate(cfg, lambda, xs));
    }
    const Moments m = moments_of(samples);
    const double a = std::abs(lambda - mu) / mu;
    const double bias_bound = std::pow(a / (1.0 - a), k + 1) * std::pow(mu, p) *
                              std::pow(p / (k + 1.0), std::floor(p) + 1.0);
    return std::abs(m.mean - std::pow(mu, p)) <= bias_bound + 4.0 * m.se;
}

// 5. Variance bounds and the k-fold reduction from averaging.
bool criterion_variance()
{
    const double p = 3.0, mu = 10.0, lambda = 10.2, sigma = 0.3;
    const unsigned k = 16, s = 128, r = 64;
    const double eta2 = sigma * sigma + (mu - lambda) * (mu - lambda);
    const TaylorConfig cfg(p, k);
    const ghss::ConstantWeightCode code = build_code(k, s, r, 5);

    NormalStream noise(505);
    std::vector<double> xs(s), plain, averaged;
    plain.reserve(100000);
    averaged.reserve(100000);
    for (int t = 0; t < 100000; ++t) {
        for (auto& x : xs) x = noise.next(mu, sigma);
        plain.push_back(ghss::tp_estimate(
            cfg, lambda, std::span<const double>(xs.data(), k)));
        averaged.push_back(ghss::averaged_tp_estimate(
            cfg, lambda, code, 900000ull + static_cast<std::uint64_t>(t), xs));
    }
    const double var_plain = moments_of(plain).var;
    const double var_avg = moments_of(averaged).var;
    const double plain_bound = 1.08 * p * p * std::pow(mu, 2.0 * p - 2.0) * eta2 * 1.25;
    const double avg_bound =
        0.288 * p * p / static_cast<double>(k) * std::pow(mu, 2.0 * p - 2.0) * eta2 * 1.5;
    return var_plain <= plain_bound && var_avg <= avg_bound &&
           var_avg <= var_plain / 4.0;
}

// 6. CountSketch point-estimate error against the exact residual bound.
bool criterion_countsketch_error()
{
    const std::uint64_t n = 4096;
    const std::size_t width = 1024, rows = 7;
    std::uint64_t ok = 0, total = 0;
    for (int stream = 0; stream < 100; ++stream) {
        ghss::StreamSpec spec;
        spec.n = n;
        spec.dist = ghss::StreamDist::Uniform;
        spec.m = 10000;
        spec.delete_fraction = 0.15;
        spec.max_magnitude = 8;
        spec.seed = 600 + static_cast<std::uint64_t>(stream);
        const auto updates = ghss::generate_stream(spec);
        const auto freqs = ghss::exact_frequencies(n, updates);

        ghss::CountSketch cs(rows, width, 2, 2, 6000 + static_cast<std::uint64_t>(stream));
        for (const auto& u : updates) cs.update(u.item, u.delta);

        std::vector<double> sq;
        sq.reserve(n);
        for (auto f : freqs)
            sq.push_back(static_cast<double>(f) * static_cast<double>(f));
        std::sort(sq.begin(), sq.end(), std::greater<>());
        double f2res = 0;
        for (std::size_t i = 128; i < sq.size(); ++i) f2res += sq[i];
        const double bound = std::sqrt(8.0 * f2res / static_cast<double>(width));

        for (std::uint64_t i = 1; i <= n; ++i) {
            ++total;
            const double err = std::abs(
                static_cast<double>(cs.point_estimate(i) - freqs[i - 1]));
            if (err <= bound) ++ok;
        }
    }
    return static_cast<double>(ok) >= 0.95 * static_cast<double>(total);
}

// 7. Hierarchy linearity: negation zeroes everything; sharding merges exactly.
bool criterion_linearity()
{
    const ghss::ParamSet params = ghss::derive_scaled_params(4096, 3.0, 0.2);
    ghss::StreamSpec spec;
    spec.n = 4096;
    spec.dist = ghss::StreamDist::Zipf;
    spec.zipf_theta = 1.2;
    spec.m = 10000;
    spec.delete_fraction = 0.2;
    spec.seed = 77;
    const auto updates = ghss::generate_stream(spec);

    ghss::GhssSketch forward(params, 700);
    for (const auto& u : updates) forward.update(u.item, u.delta);
    for (const auto& u : updates) forward.update(u.item, -u.delta);
    if (!forward.all_zero()) return false;

    ghss::GhssSketch whole(params, 701), left(params, 701), right(params, 701);
    for (std::size_t i = 0; i < updates.size(); ++i) {
        whole.update(updates[i].item, updates[i].delta);
        (i % 2 ? left : right).update(updates[i].item, updates[i].delta);
    }
    left.merge(right);
    std::ostringstream a, b;
    left.save_snapshot(a);
    whole.save_snapshot(b);
    return a.str() == b.str();
}

// 8. Exact recovery of level-L survivors when they fit in half the last table.
bool criterion_last_level()
{
    const ghss::ParamSet params = ghss::derive_scaled_params(4096, 3.0, 0.2);
    ghss::GhssSketch sketch(params, 800);
    std::vector<std::uint64_t> survivors;
    for (std::uint64_t i = 1; i <= params.n; ++i)
        if (sketch.level_of(i) == params.L) survivors.push_back(i);
    if (survivors.empty() || survivors.size() > params.C_L_star / 2) return false;
    for (std::size_t idx = 0; idx < survivors.size(); ++idx) {
        const std::int64_t f = 100 + static_cast<std::int64_t>(idx % 57) -
                               (idx % 3 ? 150 : 0);
        sketch.update(survivors[idx], f == 0 ? 1 : f);
    }
    for (std::size_t idx = 0; idx < survivors.size(); ++idx) {
        const std::int64_t f = 100 + static_cast<std::int64_t>(idx % 57) -
                               (idx % 3 ? 150 : 0);
        const std::int64_t truth = f == 0 ? 1 : f;
        if (sketch.point_estimate_at_level(params.L, survivors[idx]) != truth)
            return false;
    }
    return true;
}

// 9. End-to-end accuracy on Zipf streams with deletions.
bool criterion_end_to_end()
{
    ghss::TrialConfig cfg;
    cfg.stream.n = 4096;
    cfg.stream.dist = ghss::StreamDist::Zipf;
    cfg.stream.zipf_theta = 1.2;
    cfg.stream.m = 10000;
    cfg.stream.delete_fraction = 0.2;
    cfg.stream.seed = 900;
    cfg.p = 3.0;
    cfg.epsilon = 0.2;
    cfg.scaled = true;
    cfg.trials = 50;
    cfg.base_seed = 901;
    const ghss::TrialReport report = ghss::run_trials(cfg);
    std::printf("      trials=%llu successes=%llu median_rel=%.4f p90_rel=%.4f "
                "nocollision_failures=%llu\n",
                static_cast<unsigned long long>(report.trials),
                static_cast<unsigned long long>(report.successes),
                report.median_rel_error, report.p90_rel_error,
                static_cast<unsigned long long>(report.nocollision_failures));
    return report.successes >= 30 && report.median_rel_error <= 0.15;
}

// 10. Space audit: recount and geometric level decay.
bool criterion_space()
{
    const ghss::ParamSet params = ghss::derive_scaled_params(4096, 3.0, 0.2);
    ghss::GhssSketch sketch(params, 1000);
    std::uint64_t recount = static_cast<std::uint64_t>(params.f2_groups) * params.f2_per_group;
    for (unsigned l = 0; l < params.L; ++l) {
        recount += static_cast<std::uint64_t>(params.s_tables) * params.hh_width(l);
        recount += 2ull * params.s_tables * params.est_width(l);
    }
    recount += static_cast<std::uint64_t>(params.s_tables) * params.C_L_star;
    if (sketch.space_words() != recount) return false;

    std::uint64_t level_sum = 0;
    for (unsigned l = 0; l <= params.L; ++l) level_sum += sketch.level_words(l);
    return level_sum <= 2 * sketch.level_words(0);
}

// 11. Oracle self-test of the moment inequalities.
bool criterion_oracle()
{
    SeedStream rng(1100);
    for (double p : {2.5, 3.0, 4.0}) {
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<std::int64_t> f(64);
            for (auto& x : f)
                x = static_cast<std::int64_t>(rng.next_below(201)) - 100;
            if (!ghss::check_moment_inequalities(f, p).all()) return false;
        }
    }
    return true;
}

} // namespace

int main()
{
    struct Criterion {
        const char* name;
        std::function<bool()> run;
    };
    const std::vector<Criterion> criteria = {
        {"combinatorial identities", criterion_identities},
        {"code construction (k=32, s=256, r=512)", criterion_code},
        {"Taylor unbiasedness, integral p", criterion_tp_unbiased},
        {"bias envelope, non-integral p", criterion_tp_bias_envelope},
        {"variance bounds and k-fold reduction", criterion_variance},
        {"CountSketch point error", criterion_countsketch_error},
        {"hierarchy linearity", criterion_linearity},
        {"level-L exact recovery", criterion_last_level},
        {"end-to-end accuracy", criterion_end_to_end},
        {"space audit", criterion_space},
        {"oracle self-test", criterion_oracle},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = criteria[i].run();
        } catch (const std::exception& e) {
            std::printf("      exception: %s\n", e.what());
        }
        const double secs = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - start)
                                .count();
        std::printf("[%s] %2zu. %s (%.2f s)\n", ok ? "PASS" : "FAIL", i + 1,
                    criteria[i].name, secs);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    std::printf("%d/%zu criteria passed\n",
                static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures;
}
