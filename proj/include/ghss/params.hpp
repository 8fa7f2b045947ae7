#ifndef GHSS_PARAMS_HPP
#define GHSS_PARAMS_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace ghss {

// Knobs for the desk-scale parameter mode. Structural relations (s = 8k,
// r = 16k, geometric C_l, epsbar = sqrt(B/C)) are preserved; only magnitudes
// shrink relative to the asymptotic constants.
struct ScalingOptions {
    double b_scale = 0.5;      // replaces the 425 constant in the B formula
    double c_factor = 43.0;    // replaces (27p)^2 in C = c_factor * B
    unsigned k = 32;           // Taylor degree (asymptotic: 1000*ceil(log2 n))
    unsigned d = 8;            // level-hash independence (asymptotic: 50*ceil(log2 n))
    unsigned t = 7;            // EST table hash independence (asymptotic: 11)
    unsigned width_factor = 2; // table width multiplier on C_l (asymptotic: 16)
    double alpha = 0.55;       // reduction factor; must satisfy 1/2 < alpha < 1
    std::size_t f2_groups = 5;
    std::size_t f2_per_group = 200;
    double f2_delta = 0.15;    // one-sided correction / target relative accuracy
};

struct ParamSet {
    std::uint64_t n = 0;
    double p = 0;
    double epsilon = 0;
    double nu = 0;
    double alpha = 0;
    unsigned L = 0;                // levels beyond 0
    std::uint64_t B = 0;
    std::uint64_t C = 0;
    std::vector<std::uint64_t> B_l;
    std::vector<std::uint64_t> C_l;
    std::uint64_t C_L_star = 0;    // last-level table width (factor included)
    unsigned d = 0;
    unsigned k = 0;
    unsigned s = 0;                // 8k; variables per estimator and HH row count
    unsigned r = 0;                // 16k codewords
    unsigned t = 0;                // EST table hash independence
    unsigned s_tables = 0;         // rows per HH structure (== s)
    double epsbar = 0;             // sqrt(B/C)
    unsigned width_factor = 16;
    std::size_t f2_groups = 0;
    std::size_t f2_per_group = 0;
    double f2_delta = 0;
    bool scaled = false;

    std::uint64_t hh_width(unsigned l) const { return width_factor * C_l.at(l); }
    std::uint64_t est_width(unsigned l) const { return width_factor * C_l.at(l); }

    nlohmann::json to_json() const
    {
        return {
            {"n", n}, {"p", p}, {"epsilon", epsilon}, {"nu", nu}, {"alpha", alpha},
            {"L", L}, {"B", B}, {"C", C}, {"B_l", B_l}, {"C_l", C_l},
            {"C_L_star", C_L_star}, {"d", d}, {"k", k}, {"s", s}, {"r", r},
            {"t", t}, {"s_tables", s_tables}, {"epsbar", epsbar},
            {"width_factor", width_factor}, {"f2_groups", f2_groups},
            {"f2_per_group", f2_per_group}, {"f2_delta", f2_delta},
            {"scaled", scaled},
        };
    }

    static ParamSet from_json(const nlohmann::json& j)
    {
        ParamSet ps;
        ps.n = j.at("n"); ps.p = j.at("p"); ps.epsilon = j.at("epsilon");
        ps.nu = j.at("nu"); ps.alpha = j.at("alpha"); ps.L = j.at("L");
        ps.B = j.at("B"); ps.C = j.at("C");
        ps.B_l = j.at("B_l").get<std::vector<std::uint64_t>>();
        ps.C_l = j.at("C_l").get<std::vector<std::uint64_t>>();
        ps.C_L_star = j.at("C_L_star"); ps.d = j.at("d"); ps.k = j.at("k");
        ps.s = j.at("s"); ps.r = j.at("r"); ps.t = j.at("t");
        ps.s_tables = j.at("s_tables"); ps.epsbar = j.at("epsbar");
        ps.width_factor = j.at("width_factor");
        ps.f2_groups = j.at("f2_groups"); ps.f2_per_group = j.at("f2_per_group");
        ps.f2_delta = j.at("f2_delta"); ps.scaled = j.at("scaled");
        return ps;
    }
};

namespace detail {

inline void validate_domain(std::uint64_t n, double p, double epsilon)
{
    if (n < 2) throw std::invalid_argument("params: n must be >= 2");
    if (!(p > 2.0)) throw std::invalid_argument("params: p must be > 2");
    if (!(epsilon > 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("params: epsilon must be in (0, 1]");
}

// B = ceil(b_const * (2a)^{p/2} * n^{1-2/p} * eps^-2 / min(eps^{4/p-2}, log2 n)),
// ceiling applied as the last step.
inline std::uint64_t derive_B(std::uint64_t n, double p, double eps, double alpha,
                              double b_const)
{
    const double log2n = std::log2(static_cast<double>(n));
    const double denom = std::min(std::pow(eps, 4.0 / p - 2.0), log2n);
    const double raw = b_const * std::pow(2.0 * alpha, p / 2.0) *
                       std::pow(static_cast<double>(n), 1.0 - 2.0 / p) /
                       (eps * eps) / denom;
    return static_cast<std::uint64_t>(std::ceil(raw));
}

// L = max(1, ceil(log_{2a}(n/C))); nonpositive values collapse to the
// degenerate level-0 + exact level-L layout.
inline unsigned derive_L(std::uint64_t n, std::uint64_t C, double alpha)
{
    const double ratio = static_cast<double>(n) / static_cast<double>(C);
    const double raw = std::log(ratio) / std::log(2.0 * alpha);
    const long long L = static_cast<long long>(std::ceil(raw));
    return L < 1 ? 1u : static_cast<unsigned>(L);
}

inline void fill_levels(ParamSet& ps)
{
    ps.B_l.clear();
    ps.C_l.clear();
    for (unsigned l = 0; l < ps.L; ++l) {
        const double decay = std::pow(ps.alpha, static_cast<double>(l));
        ps.B_l.push_back(static_cast<std::uint64_t>(std::ceil(4.0 * decay * ps.B)));
        std::uint64_t cl = static_cast<std::uint64_t>(std::ceil(4.0 * decay * ps.C));
        if (cl < 2) throw std::invalid_argument("params: C_l < 2; raise widths");
        ps.C_l.push_back(cl);
    }
    const double last = 4.0 * std::pow(ps.alpha, static_cast<double>(ps.L)) * ps.C;
    ps.C_L_star = static_cast<std::uint64_t>(std::ceil(ps.width_factor * last));
}

} // namespace detail

// Asymptotic constants exactly as printed; too large to instantiate, but the
// closed forms are unit-testable.
inline ParamSet derive_paper_params(std::uint64_t n, double p, double epsilon)
{
    detail::validate_domain(n, p, epsilon);
    ParamSet ps;
    ps.n = n;
    ps.p = p;
    ps.epsilon = epsilon;
    ps.nu = 0.01;
    ps.alpha = 1.0 - (1.0 - 2.0 / p) * ps.nu;
    ps.B = detail::derive_B(n, p, epsilon, ps.alpha, 425.0);
    ps.C = static_cast<std::uint64_t>(std::ceil((27.0 * p) * (27.0 * p) * ps.B));
    ps.L = detail::derive_L(n, ps.C, ps.alpha);
    const unsigned log2n = static_cast<unsigned>(std::ceil(std::log2(static_cast<double>(n))));
    ps.d = 50 * log2n;
    ps.k = 1000 * log2n;
    ps.s = 8 * ps.k;
    ps.r = 16 * ps.k;
    ps.t = 11;
    ps.s_tables = ps.s;
    ps.width_factor = 16;
    ps.epsbar = std::sqrt(static_cast<double>(ps.B) / static_cast<double>(ps.C));
    const double delta = 0.001 / (8.0 * p);
    ps.f2_delta = delta;
    ps.f2_per_group = static_cast<std::size_t>(std::ceil(6.0 / (delta * delta)));
    ps.f2_groups = static_cast<std::size_t>(std::ceil(48.0 * 25.0 * std::log2(static_cast<double>(n))));
    ps.scaled = false;
    detail::fill_levels(ps);
    return ps;
}

inline ParamSet derive_scaled_params(std::uint64_t n, double p, double epsilon,
                                     const ScalingOptions& opt = {})
{
    detail::validate_domain(n, p, epsilon);
    if (opt.k < p + 2.0)
        throw std::invalid_argument("params: scaled k must satisfy k >= p + 2");
    if (!(opt.alpha > 0.5 && opt.alpha < 1.0))
        throw std::invalid_argument("params: scaled alpha must lie in (1/2, 1)");
    if (opt.t < 6) throw std::invalid_argument("params: t must be >= 6 for EST hashes");
    if (opt.width_factor < 1) throw std::invalid_argument("params: width_factor must be >= 1");
    ParamSet ps;
    ps.n = n;
    ps.p = p;
    ps.epsilon = epsilon;
    ps.alpha = opt.alpha;
    ps.nu = (1.0 - opt.alpha) / (1.0 - 2.0 / p);
    ps.B = detail::derive_B(n, p, epsilon, ps.alpha, opt.b_scale);
    if (ps.B < 1) ps.B = 1;
    ps.C = static_cast<std::uint64_t>(std::ceil(opt.c_factor * ps.B));
    if (ps.C < 2) throw std::invalid_argument("params: scaled C < 2");
    ps.L = detail::derive_L(n, ps.C, ps.alpha);
    ps.d = opt.d;
    ps.k = opt.k;
    ps.s = 8 * ps.k;
    ps.r = 16 * ps.k;
    ps.t = opt.t;
    ps.s_tables = ps.s;
    ps.width_factor = opt.width_factor;
    ps.epsbar = std::sqrt(static_cast<double>(ps.B) / static_cast<double>(ps.C));
    ps.f2_groups = opt.f2_groups;
    ps.f2_per_group = opt.f2_per_group;
    ps.f2_delta = opt.f2_delta;
    ps.scaled = true;
    detail::fill_levels(ps);
    return ps;
}

} // namespace ghss

#endif
