#ifndef GHSS_HARNESS_HPP
#define GHSS_HARNESS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghss.hpp"
#include "hashing.hpp"
#include "params.hpp"

namespace ghss {

enum class StreamDist { Zipf, Uniform, Planted };

struct StreamSpec {
    std::uint64_t n = 0;
    StreamDist dist = StreamDist::Zipf;
    double zipf_theta = 1.2;
    std::vector<std::int64_t> planted; // 1-based item i has frequency planted[i-1]
    std::uint64_t m = 0;               // total updates (zipf/uniform)
    double delete_fraction = 0.0;      // in [0, 1)
    std::int64_t max_magnitude = 1;    // M
    std::uint64_t seed = 0;
};

struct Update {
    std::uint64_t item;
    std::int64_t delta;
};

namespace detail {

class ZipfSampler {
public:
    ZipfSampler(std::uint64_t n, double theta)
    {
        cdf_.resize(n);
        double acc = 0;
        for (std::uint64_t i = 0; i < n; ++i) {
            acc += std::pow(static_cast<double>(i + 1), -theta);
            cdf_[i] = acc;
        }
        for (auto& c : cdf_) c /= acc;
    }

    std::uint64_t sample(double u) const
    {
        auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        return static_cast<std::uint64_t>(it - cdf_.begin()) + 1;
    }

private:
    std::vector<double> cdf_;
};

inline double unit_uniform(SeedStream& rng)
{
    return static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
}

} // namespace detail

// Deterministic turnstile stream. Deletions fully cancel earlier insertions,
// so the final frequency vector is exactly the sum of the surviving inserts;
// for planted specs the final frequencies equal the planted vector exactly.
inline std::vector<Update> generate_stream(const StreamSpec& spec)
{
    if (spec.n < 1) throw std::invalid_argument("generate_stream: n must be >= 1");
    if (!(spec.delete_fraction >= 0.0 && spec.delete_fraction < 1.0))
        throw std::invalid_argument("generate_stream: delete fraction must be in [0, 1)");
    if (spec.max_magnitude < 1)
        throw std::invalid_argument("generate_stream: max magnitude must be >= 1");

    SeedStream rng(mix64(spec.seed ^ 0x57c2a6f1u));
    std::vector<Update> out;

    if (spec.dist == StreamDist::Planted) {
        if (spec.planted.size() > spec.n)
            throw std::invalid_argument("generate_stream: planted vector longer than universe");
        for (std::size_t i = 0; i < spec.planted.size(); ++i)
            if (spec.planted[i] != 0)
                out.push_back({static_cast<std::uint64_t>(i + 1), spec.planted[i]});
        // Churn that cancels exactly: delete_fraction of m updates as +v/-v pairs.
        const std::uint64_t pairs =
            static_cast<std::uint64_t>(spec.delete_fraction * static_cast<double>(spec.m) / 2.0);
        for (std::uint64_t c = 0; c < pairs; ++c) {
            const std::uint64_t item = 1 + rng.next_below(spec.n);
            const std::int64_t v =
                1 + static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(spec.max_magnitude)));
            out.push_back({item, v});
            out.push_back({item, -v});
        }
        return out;
    }

    const std::uint64_t m_del = static_cast<std::uint64_t>(
        spec.delete_fraction * static_cast<double>(spec.m));
    const std::uint64_t m_ins = spec.m - m_del;
    detail::ZipfSampler zipf(spec.n, spec.zipf_theta);

    // Which inserts get cancelled later: the first m_del of a random permutation.
    std::vector<std::uint32_t> order(m_ins);
    for (std::uint32_t i = 0; i < m_ins; ++i) order[i] = i;
    for (std::uint64_t i = 0; i < m_ins; ++i) {
        const std::uint64_t j = i + rng.next_below(m_ins - i);
        std::swap(order[i], order[j]);
    }
    std::vector<char> cancel(m_ins, 0);
    for (std::uint64_t i = 0; i < m_del && i < m_ins; ++i) cancel[order[i]] = 1;

    out.reserve(spec.m);
    std::vector<Update> pending; // emitted inserts awaiting cancellation
    std::uint64_t emitted_ins = 0, emitted_del = 0;
    while (emitted_ins < m_ins || emitted_del < m_del) {
        const bool can_delete = !pending.empty();
        const bool must_delete = emitted_ins == m_ins;
        bool do_delete = false;
        if (must_delete) {
            do_delete = true;
        } else if (can_delete && emitted_del < m_del) {
            const std::uint64_t remaining = (m_ins - emitted_ins) + (m_del - emitted_del);
            do_delete = rng.next_below(remaining) < m_del - emitted_del;
        }
        if (do_delete) {
            const std::uint64_t pick = rng.next_below(pending.size());
            out.push_back({pending[pick].item, -pending[pick].delta});
            pending[pick] = pending.back();
            pending.pop_back();
            ++emitted_del;
        } else {
            const double u = detail::unit_uniform(rng);
            const std::uint64_t item = spec.dist == StreamDist::Zipf
                                           ? zipf.sample(u)
                                           : 1 + rng.next_below(spec.n);
            const std::int64_t v =
                1 + static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(spec.max_magnitude)));
            out.push_back({item, v});
            if (cancel[emitted_ins]) pending.push_back({item, v});
            ++emitted_ins;
        }
    }
    return out;
}

inline std::vector<std::int64_t> exact_frequencies(std::uint64_t n,
                                                   std::span<const Update> updates)
{
    std::vector<std::int64_t> freqs(n, 0);
    for (const Update& u : updates) {
        if (u.item < 1 || u.item > n)
            throw std::out_of_range("exact_frequencies: item outside universe");
        freqs[u.item - 1] += u.delta;
    }
    return freqs;
}

// F_p = sum |f_i|^p, Kahan-compensated.
inline double exact_moment(std::span<const std::int64_t> freqs, double p)
{
    double sum = 0.0, comp = 0.0;
    for (std::int64_t f : freqs) {
        if (f == 0) continue;
        const double term = std::pow(std::abs(static_cast<double>(f)), p);
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

struct MomentChecks {
    bool f2_bound = false;    // F_2 <= n^{1-2/p} F_p^{2/p}
    bool f2p2_bound = false;  // F_{2p-2} <= F_p^{2-2/p}
    bool all() const { return f2_bound && f2p2_bound; }
};

inline MomentChecks check_moment_inequalities(std::span<const std::int64_t> freqs, double p)
{
    const double n = static_cast<double>(freqs.size());
    const double fp = exact_moment(freqs, p);
    const double f2 = exact_moment(freqs, 2.0);
    const double f2p2 = exact_moment(freqs, 2.0 * p - 2.0);
    const double slack = 1.0 + 1e-9;
    MomentChecks checks;
    checks.f2_bound = f2 <= std::pow(n, 1.0 - 2.0 / p) * std::pow(fp, 2.0 / p) * slack;
    checks.f2p2_bound = f2p2 <= std::pow(fp, 2.0 - 2.0 / p) * slack;
    return checks;
}

// --- stream file format: one "item<TAB>delta" per line, items 1-based -------

inline void write_stream(std::ostream& out, std::span<const Update> updates)
{
    for (const Update& u : updates) out << u.item << '\t' << u.delta << '\n';
}

inline std::vector<Update> read_stream(std::istream& in)
{
    std::vector<Update> updates;
    std::string line;
    std::uint64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        Update u{};
        if (!(ls >> u.item >> u.delta))
            throw std::runtime_error("read_stream: malformed line " + std::to_string(lineno));
        updates.push_back(u);
    }
    return updates;
}

// --- trial orchestration ----------------------------------------------------

struct TrialConfig {
    StreamSpec stream;
    double p = 3.0;
    double epsilon = 0.2;
    bool scaled = true;
    ScalingOptions options;
    std::uint64_t trials = 0;
    std::uint64_t base_seed = 0;
    bool fresh_stream_per_trial = true;
};

struct TrialReport {
    std::uint64_t trials = 0;
    std::uint64_t successes = 0;
    double exact_fp = 0;      // mean over trials when streams vary per trial
    double mean_fp_hat = 0;
    double median_fp_hat = 0;
    double median_rel_error = 0;
    double p90_rel_error = 0;
    double max_rel_error = 0;
    std::uint64_t nocollision_failures = 0;
    std::uint64_t space_words = 0;
    double wall_time_ms = 0;

    nlohmann::json to_json() const
    {
        return {
            {"trials", trials},
            {"successes", successes},
            {"exact_fp", exact_fp},
            {"mean_fp_hat", mean_fp_hat},
            {"median_fp_hat", median_fp_hat},
            {"median_rel_error", median_rel_error},
            {"p90_rel_error", p90_rel_error},
            {"max_rel_error", max_rel_error},
            {"nocollision_failures", nocollision_failures},
            {"space_words", space_words},
            {"wall_time_ms", wall_time_ms},
        };
    }
};

namespace detail {

inline double quantile(std::vector<double> v, double q)
{
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

} // namespace detail

// One sketch per seed against the brute-force oracle; a trial succeeds when
// |fp_hat - F_p| <= epsilon * F_p. NOCOLLISION failures count as failed
// trials, never as crashes.
inline TrialReport run_trials(const TrialConfig& config)
{
    const auto start = std::chrono::steady_clock::now();
    TrialReport report;
    report.trials = config.trials;
    if (config.trials == 0) return report;

    const ParamSet params =
        config.scaled
            ? derive_scaled_params(config.stream.n, config.p, config.epsilon, config.options)
            : derive_paper_params(config.stream.n, config.p, config.epsilon);

    std::vector<double> fp_hats, rel_errors;
    double exact_sum = 0;
    for (std::uint64_t trial = 0; trial < config.trials; ++trial) {
        StreamSpec spec = config.stream;
        if (config.fresh_stream_per_trial)
            spec.seed = branch_seed(config.stream.seed, 20, trial);
        const std::vector<Update> updates = generate_stream(spec);
        const std::vector<std::int64_t> freqs = exact_frequencies(spec.n, updates);
        const double exact = exact_moment(freqs, config.p);
        exact_sum += exact;

        GhssSketch sketch(params, branch_seed(config.base_seed, 21, trial));
        for (const Update& u : updates) sketch.update(u.item, u.delta);
        const EstimateReport est = sketch.estimate_fp(
            branch_seed(config.base_seed, 22, trial),
            branch_seed(config.base_seed, 23, trial));

        report.space_words = est.space_words;
        if (!est.nocollision_ok) ++report.nocollision_failures;
        fp_hats.push_back(est.fp_hat);
        const double rel = exact > 0 ? std::abs(est.fp_hat - exact) / exact
                                     : (est.fp_hat > 0 ? 1.0 : 0.0);
        rel_errors.push_back(rel);
        if (rel <= config.epsilon) ++report.successes;
    }

    report.exact_fp = exact_sum / static_cast<double>(config.trials);
    double sum = 0;
    for (double v : fp_hats) sum += v;
    report.mean_fp_hat = sum / static_cast<double>(fp_hats.size());
    report.median_fp_hat = detail::quantile(fp_hats, 0.5);
    report.median_rel_error = detail::quantile(rel_errors, 0.5);
    report.p90_rel_error = detail::quantile(rel_errors, 0.9);
    report.max_rel_error = detail::quantile(rel_errors, 1.0);
    report.wall_time_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - start)
                              .count();
    return report;
}

} // namespace ghss

#endif
