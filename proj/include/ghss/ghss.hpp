#ifndef GHSS_GHSS_HPP
#define GHSS_GHSS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "countsketch.hpp"
#include "f2sketch.hpp"
#include "hashing.hpp"
#include "params.hpp"
#include "tpe.hpp"

namespace ghss {

struct Thresholds {
    std::vector<double> T; // size L: T_l = (1/(2a))^{l/2} T_0
    std::vector<double> Q; // size L+1: Q_l = (1 - epsbar) T_l, Q_L = 1/2
    bool degenerate = false;
};

struct DiscoveryRecord {
    std::uint64_t item = 0;
    unsigned level = 0;       // l_d(i)
    std::int64_t f_hat = 0;   // estimate at the discovery level
};

struct SampleAssignment {
    std::uint64_t item = 0;
    unsigned group = 0;       // l_s(i); scale is 2^group
};

struct EstimateReport {
    double fp_hat = 0;
    double f2_hat = 0;
    Thresholds thresholds;
    bool nocollision_ok = true;
    std::vector<std::uint64_t> group_sizes; // size L+1
    std::uint64_t discovered = 0;
    std::uint64_t offtop_sampled = 0; // sampled items outside their level's top-C_l
    std::uint64_t space_words = 0;
    ParamSet params_echo;
    bool scaled = false;

    nlohmann::json to_json() const
    {
        return {
            {"fp_hat", fp_hat},
            {"f2_hat", f2_hat},
            {"thresholds", {{"T", thresholds.T}, {"Q", thresholds.Q},
                            {"degenerate", thresholds.degenerate}}},
            {"nocollision_ok", nocollision_ok},
            {"group_sizes", group_sizes},
            {"discovered", discovered},
            {"offtop_sampled", offtop_sampled},
            {"space_words", space_words},
            {"scaled", scaled},
            {"params", params_echo.to_json()},
        };
    }
};

struct NoCollisionResult {
    bool ok = false;
    // item -> ascending indices of rows where the item is isolated from the
    // rest of the top-k set.
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> rows;
};

// For each item of `topk`, the set R(i) of EST rows where the item collides
// with no other top-k item; success iff every R(i) has at least `need` rows.
inline NoCollisionResult check_nocollision(const CountSketch& est,
                                           const std::vector<std::uint64_t>& topk,
                                           std::size_t need)
{
    NoCollisionResult result;
    result.rows.reserve(topk.size());
    for (std::uint64_t i : topk) result.rows.emplace(i, std::vector<std::uint32_t>{});

    std::vector<std::uint32_t> occupancy(est.width());
    std::vector<std::uint64_t> bucket(topk.size());
    for (std::size_t j = 0; j < est.rows(); ++j) {
        std::fill(occupancy.begin(), occupancy.end(), 0);
        for (std::size_t t = 0; t < topk.size(); ++t) {
            bucket[t] = est.bucket_of(j, topk[t]);
            ++occupancy[bucket[t]];
        }
        for (std::size_t t = 0; t < topk.size(); ++t)
            if (occupancy[bucket[t]] == 1)
                result.rows[topk[t]].push_back(static_cast<std::uint32_t>(j));
    }
    result.ok = true;
    for (const auto& [item, rows] : result.rows)
        if (rows.size() < need) { result.ok = false; break; }
    return result;
}

// The full level hierarchy: per-level (HH_l, EST_l) CountSketch pairs for
// l = 0..L-1, an exact-recovery HH_L at the last level, d-wise level-membership
// hashes, and an independently seeded F2 sketch.
class GhssSketch {
public:
    explicit GhssSketch(ParamSet params, std::uint64_t master_seed,
                        std::uint64_t memory_budget_bytes = std::uint64_t{4} << 30)
        : params_(std::move(params)), master_seed_(master_seed),
          levels_(params_.L, params_.d, branch_seed(master_seed, 14, 0)),
          f2_(params_.f2_groups, params_.f2_per_group, params_.f2_delta,
              branch_seed(master_seed, 13, 0)),
          code_(build_code(params_.k, params_.s, params_.r,
                           branch_seed(master_seed, 15, 0)))
    {
        std::uint64_t words = f2_.word_count();
        for (unsigned l = 0; l < params_.L; ++l)
            words += 3 * static_cast<std::uint64_t>(params_.s_tables) * params_.hh_width(l);
        words += static_cast<std::uint64_t>(params_.s_tables) * params_.C_L_star;
        if (words * 8 > memory_budget_bytes)
            throw std::runtime_error("GhssSketch: allocation exceeds memory budget");

        hh_.reserve(params_.L);
        est_.reserve(params_.L);
        for (unsigned l = 0; l < params_.L; ++l) {
            hh_.emplace_back(params_.s_tables, params_.hh_width(l), 2, 2,
                             branch_seed(master_seed, 10, l));
            est_.emplace_back(2 * params_.s_tables, params_.est_width(l), params_.t, 4,
                              branch_seed(master_seed, 11, l));
        }
        hh_last_.emplace(params_.s_tables, params_.C_L_star, 2, 2,
                         branch_seed(master_seed, 12, 0));
    }

    void update(std::uint64_t item, std::int64_t delta)
    {
        if (item < 1 || item > params_.n)
            throw std::out_of_range("GhssSketch::update: item outside universe");
        const unsigned m = levels_.level_of(item);
        const unsigned top = std::min(m, params_.L - 1);
        for (unsigned l = 0; l <= top && m >= l; ++l) {
            hh_[l].update(item, delta);
            est_[l].update(item, delta);
        }
        if (m == params_.L) hh_last_->update(item, delta);
        f2_.update(item, delta);
    }

    // --- estimation phase (sketch frozen) -----------------------------------

    double estimate_f2() const { return f2_.estimate(); }

    Thresholds compute_thresholds() const
    {
        Thresholds th;
        const double f2 = estimate_f2();
        th.T.assign(params_.L, 0.0);
        th.Q.assign(params_.L + 1, 0.0);
        if (!(f2 > 0.0)) {
            th.degenerate = true;
            return th;
        }
        const double t0 = std::sqrt(f2 / static_cast<double>(params_.B));
        for (unsigned l = 0; l < params_.L; ++l) {
            th.T[l] = std::pow(1.0 / (2.0 * params_.alpha), l / 2.0) * t0;
            th.Q[l] = (1.0 - params_.epsbar) * th.T[l];
        }
        th.Q[params_.L] = 0.5;
        return th;
    }

    std::int64_t point_estimate_at_level(unsigned l, std::uint64_t item) const
    {
        return l < params_.L ? hh_[l].point_estimate(item)
                             : hh_last_->point_estimate(item);
    }

    // First level l with |f_hat_{il}| >= Q_l, walking the levels the item
    // belongs to; items surviving to level L are discovered there iff the exact
    // estimate is nonzero (|f_hat| >= Q_L = 1/2).
    std::vector<DiscoveryRecord> discover(const Thresholds& th) const
    {
        std::vector<DiscoveryRecord> records;
        if (th.degenerate) return records;
        for (std::uint64_t i = 1; i <= params_.n; ++i) {
            const unsigned m = levels_.level_of(i);
            bool found = false;
            for (unsigned l = 0; l <= std::min(m, params_.L - 1); ++l) {
                const std::int64_t e = hh_[l].point_estimate(i);
                if (std::abs(static_cast<double>(e)) >= th.Q[l]) {
                    records.push_back({i, l, e});
                    found = true;
                    break;
                }
            }
            if (!found && m == params_.L) {
                const std::int64_t e = hh_last_->point_estimate(i);
                if (std::abs(static_cast<double>(e)) >= th.Q[params_.L])
                    records.push_back({i, params_.L, e});
            }
        }
        return records;
    }

    // The C_l items of S_l with the largest |f_hat_{il}|, ties broken by
    // smaller item id.
    std::vector<std::uint64_t> topk_at_level(unsigned l) const
    {
        struct Entry { std::uint64_t abs_est; std::uint64_t item; };
        std::vector<Entry> entries;
        for (std::uint64_t i = 1; i <= params_.n; ++i) {
            if (levels_.level_of(i) < l) continue;
            const std::int64_t e = l < params_.L ? hh_[l].point_estimate(i)
                                                 : hh_last_->point_estimate(i);
            entries.push_back({static_cast<std::uint64_t>(e < 0 ? -e : e), i});
        }
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            if (a.abs_est != b.abs_est) return a.abs_est > b.abs_est;
            return a.item < b.item;
        });
        const std::uint64_t cap = l < params_.L ? params_.C_l[l] : params_.C_L_star;
        if (entries.size() > cap) entries.resize(cap);
        std::vector<std::uint64_t> topk;
        topk.reserve(entries.size());
        for (const auto& e : entries) topk.push_back(e.item);
        return topk;
    }

    // Sample-group rules: deterministic at |f_hat| >= T_l, a fair coin for the
    // margin Q_l <= |f_hat| < T_l (into group l+1), and group L for every item
    // discovered at the last level.
    std::vector<SampleAssignment> assign_groups(std::span<const DiscoveryRecord> discoveries,
                                                const Thresholds& th,
                                                std::uint64_t coin_seed) const
    {
        std::vector<SampleAssignment> out;
        for (const DiscoveryRecord& rec : discoveries) {
            if (rec.level == params_.L) {
                out.push_back({rec.item, params_.L});
                continue;
            }
            const double a = std::abs(static_cast<double>(rec.f_hat));
            if (a >= th.T[rec.level]) {
                out.push_back({rec.item, rec.level});
            } else if (coin_heads(coin_seed, rec.item)) {
                out.push_back({rec.item, rec.level + 1});
            }
        }
        return out;
    }

    static bool coin_heads(std::uint64_t coin_seed, std::uint64_t item)
    {
        return (mix64(coin_seed ^ mix64(item)) & 1) != 0;
    }

    // Averaged TP estimate of |f_i|^p from the s lowest isolated EST rows at
    // the discovery level, with lambda = |f_hat_i|.
    double item_estimate(std::uint64_t item, const DiscoveryRecord& rec,
                         std::span<const std::uint32_t> isolated_rows,
                         std::uint64_t perm_seed) const
    {
        if (rec.level >= params_.L)
            throw std::logic_error("item_estimate: record must be below level L");
        if (isolated_rows.size() < params_.s)
            throw std::logic_error("item_estimate: fewer than s isolated rows");
        const int sign_hint = rec.f_hat < 0 ? -1 : +1;
        const double lambda = std::abs(static_cast<double>(rec.f_hat));
        std::vector<double> xs(params_.s);
        for (unsigned j = 0; j < params_.s; ++j)
            xs[j] = static_cast<double>(
                est_[rec.level].row_estimate(isolated_rows[j], item, sign_hint));
        const TaylorConfig cfg(params_.p, params_.k);
        return averaged_tp_estimate(cfg, lambda, code_,
                                    branch_seed(perm_seed, 6, item), xs);
    }

    EstimateReport estimate_fp(std::uint64_t coin_seed, std::uint64_t perm_seed) const
    {
        EstimateReport report;
        report.params_echo = params_;
        report.scaled = params_.scaled;
        report.space_words = space_words();
        report.group_sizes.assign(params_.L + 1, 0);
        report.f2_hat = estimate_f2();
        report.thresholds = compute_thresholds();
        if (report.thresholds.degenerate) return report;

        const std::vector<DiscoveryRecord> discoveries = discover(report.thresholds);
        report.discovered = discoveries.size();

        std::vector<std::vector<std::uint64_t>> topk(params_.L);
        std::vector<NoCollisionResult> iso(params_.L);
        bool ok = true;
        for (unsigned l = 0; l < params_.L; ++l) {
            topk[l] = topk_at_level(l);
            iso[l] = check_nocollision(est_[l], topk[l], params_.s_tables);
            if (!iso[l].ok) ok = false;
        }

        std::unordered_map<std::uint64_t, const DiscoveryRecord*> by_item;
        by_item.reserve(discoveries.size());
        for (const DiscoveryRecord& rec : discoveries) by_item.emplace(rec.item, &rec);

        const std::vector<SampleAssignment> assignments =
            assign_groups(discoveries, report.thresholds, coin_seed);
        for (const SampleAssignment& sa : assignments) ++report.group_sizes[sa.group];

        double total = 0.0;
        for (const SampleAssignment& sa : assignments) {
            const DiscoveryRecord& rec = *by_item.at(sa.item);
            const double scale = std::ldexp(1.0, static_cast<int>(sa.group));
            if (rec.level == params_.L) {
                total += scale * std::pow(std::abs(static_cast<double>(rec.f_hat)),
                                          params_.p);
                continue;
            }
            std::span<const std::uint32_t> rows;
            std::vector<std::uint32_t> local;
            auto it = iso[rec.level].rows.find(sa.item);
            if (it != iso[rec.level].rows.end()) {
                rows = it->second;
            } else {
                // Sampled item outside the level's top-C_l: isolate it against
                // the top-k set on the fly and surface the event.
                ++report.offtop_sampled;
                for (std::uint32_t j = 0; j < est_[rec.level].rows(); ++j)
                    if (est_[rec.level].row_isolated(j, sa.item, topk[rec.level]))
                        local.push_back(j);
                rows = local;
            }
            if (rows.size() < params_.s) { ok = false; break; }
            total += scale * item_estimate(sa.item, rec, rows, perm_seed);
        }

        report.nocollision_ok = ok;
        report.fp_hat = ok ? std::max(0.0, total) : 0.0;
        return report;
    }

    // --- audits and plumbing ------------------------------------------------

    std::uint64_t level_words(unsigned l) const
    {
        return l < params_.L
                   ? hh_[l].word_count() + est_[l].word_count()
                   : hh_last_->word_count();
    }

    std::uint64_t space_words() const
    {
        std::uint64_t total = f2_.word_count();
        for (unsigned l = 0; l <= params_.L; ++l) total += level_words(l);
        return total;
    }

    void merge(const GhssSketch& other)
    {
        if (master_seed_ != other.master_seed_ || params_.n != other.params_.n ||
            params_.L != other.params_.L)
            throw std::invalid_argument("GhssSketch::merge: parameter or seed mismatch");
        for (unsigned l = 0; l < params_.L; ++l) {
            hh_[l].merge(other.hh_[l]);
            est_[l].merge(other.est_[l]);
        }
        hh_last_->merge(*other.hh_last_);
        f2_.merge(other.f2_);
    }

    bool all_zero() const
    {
        for (unsigned l = 0; l < params_.L; ++l)
            if (!hh_[l].all_zero() || !est_[l].all_zero()) return false;
        return hh_last_->all_zero() && f2_.all_zero();
    }

    // Versioned binary container: magic, params JSON header, seed, then every
    // counter array in level order.
    void save_snapshot(std::ostream& out) const
    {
        const char magic[8] = {'G', 'H', 'S', 'S', '0', '0', '0', '1'};
        out.write(magic, 8);
        const std::string header = params_.to_json().dump();
        write_u64(out, header.size());
        out.write(header.data(), static_cast<std::streamsize>(header.size()));
        write_u64(out, master_seed_);
        for (unsigned l = 0; l < params_.L; ++l) {
            hh_[l].write_counters(out);
            est_[l].write_counters(out);
        }
        hh_last_->write_counters(out);
        for (std::int64_t a : f2_.accumulators()) write_u64(out, static_cast<std::uint64_t>(a));
    }

    const ParamSet& params() const { return params_; }
    std::uint64_t master_seed() const { return master_seed_; }
    unsigned level_of(std::uint64_t item) const { return levels_.level_of(item); }
    const CountSketch& hh(unsigned l) const { return hh_.at(l); }
    const CountSketch& est(unsigned l) const { return est_.at(l); }
    const CountSketch& hh_last() const { return *hh_last_; }
    const AmsSketch& f2() const { return f2_; }
    const ConstantWeightCode& code() const { return code_; }

private:
    static void write_u64(std::ostream& out, std::uint64_t v)
    {
        unsigned char buf[8];
        for (int b = 0; b < 8; ++b) buf[b] = static_cast<unsigned char>(v >> (8 * b));
        out.write(reinterpret_cast<const char*>(buf), 8);
    }

    ParamSet params_;
    std::uint64_t master_seed_;
    LevelHashes levels_;
    std::vector<CountSketch> hh_;
    std::vector<CountSketch> est_;
    std::optional<CountSketch> hh_last_;
    AmsSketch f2_;
    ConstantWeightCode code_;
};

} // namespace ghss

#endif
