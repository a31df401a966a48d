#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core_trees.hpp"
#include "enumeration.hpp"
#include "error.hpp"
#include "exact.hpp"
#include "rng.hpp"
#include "samplers.hpp"

namespace arbor {

inline constexpr double infinity = std::numeric_limits<double>::infinity();
inline constexpr std::size_t default_series_cap = 1'000'000;
inline constexpr std::size_t default_statistics_cap = 40;

/// Non-negative weights (w_k). Either an explicit finite list or a generator
/// k -> log w_k truncated at `cap`. Exact rational weights are available for
/// explicit lists (decimal doubles convert exactly) or via an exact generator.
class WeightSequence {
public:
    using log_generator = std::function<double(std::size_t)>;
    using exact_generator = std::function<rational(std::size_t)>;

    static WeightSequence from_list(std::vector<rational> w, std::optional<double> rho_hint = std::nullopt) {
        if (w.empty() || w[0] <= 0) throw invalid_distribution("weights need w_0 > 0");
        for (const auto& x : w)
            if (x < 0) throw invalid_distribution("weights must be non-negative");
        WeightSequence ws;
        ws.exact_list_ = std::move(w);
        ws.rho_hint_ = rho_hint;
        return ws;
    }

    static WeightSequence from_list(const std::vector<double>& w, std::optional<double> rho_hint = std::nullopt) {
        std::vector<rational> q;
        for (double x : w) {
            if (!std::isfinite(x)) throw invalid_distribution("weights must be finite");
            q.emplace_back(x);
        }
        return from_list(std::move(q), rho_hint);
    }

    static WeightSequence from_generator(log_generator log_w, std::size_t cap = default_series_cap,
                                         std::optional<double> rho_hint = std::nullopt,
                                         exact_generator exact = {}) {
        WeightSequence ws;
        ws.log_gen_ = std::move(log_w);
        ws.exact_gen_ = std::move(exact);
        ws.cap_ = cap;
        ws.rho_hint_ = rho_hint;
        if (!std::isfinite(ws.log_weight(0))) throw invalid_distribution("weights need w_0 > 0");
        return ws;
    }

    /// w_0 = w0 and w_k = k^-exponent for k >= 1; radius of convergence 1.
    static WeightSequence power(double exponent, double w0 = 1.0) {
        return from_generator(
            [exponent, w0](std::size_t k) {
                return k == 0 ? std::log(w0) : -exponent * std::log(static_cast<double>(k));
            },
            default_series_cap, 1.0);
    }

    /// w_k = (k!)^2; radius of convergence 0.
    static WeightSequence factorial_squared() {
        return from_generator([](std::size_t k) { return 2.0 * std::lgamma(static_cast<double>(k) + 1.0); },
                              default_series_cap, 0.0,
                              [](std::size_t k) {
                                  const bigint f = factorial(k);
                                  return rational(f * f);
                              });
    }

    /// {"weights":[...], "rho": number|"infinity"|null} or
    /// {"family":"power","exponent":3,"w0":1} / {"family":"factorial_squared"}.
    static WeightSequence from_json(const nlohmann::json& j) {
        std::optional<double> rho;
        if (j.contains("rho") && !j.at("rho").is_null()) {
            const auto& r = j.at("rho");
            rho = r.is_string() ? (r.get<std::string>() == "infinity" ? infinity : throw bad_parameters("rho"))
                                : r.get<double>();
        }
        if (j.contains("weights")) {
            std::vector<rational> w;
            for (const auto& x : j.at("weights")) {
                if (x.is_string()) w.emplace_back(x.get<std::string>());
                else w.emplace_back(x.get<double>());
            }
            return from_list(std::move(w), rho);
        }
        const auto family = j.value("family", std::string{});
        if (family == "power") return power(j.at("exponent").get<double>(), j.value("w0", 1.0));
        if (family == "factorial_squared") return factorial_squared();
        throw invalid_distribution("unknown weight sequence JSON");
    }

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json j;
        if (is_explicit()) {
            j["weights"] = nlohmann::json::array();
            for (const auto& w : exact_list_) j["weights"].push_back(to_double(w));
        } else {
            j["generator"] = true;
            j["cap"] = cap_;
        }
        if (!rho_hint_) j["rho"] = nullptr;
        else if (std::isinf(*rho_hint_)) j["rho"] = "infinity";
        else j["rho"] = *rho_hint_;
        return j;
    }

    [[nodiscard]] bool is_explicit() const noexcept { return !log_gen_; }
    [[nodiscard]] std::optional<double> rho_hint() const noexcept { return rho_hint_; }

    /// Number of weights consulted in series: the list length, or the generator cap.
    [[nodiscard]] std::size_t extent() const noexcept { return is_explicit() ? exact_list_.size() : cap_; }

    [[nodiscard]] double log_weight(std::size_t k) const {
        if (log_gen_) return k < cap_ ? log_gen_(k) : -infinity;
        if (k >= exact_list_.size() || exact_list_[k] == 0) return -infinity;
        return std::log(to_double(exact_list_[k]));
    }

    [[nodiscard]] double weight(std::size_t k) const {
        if (is_explicit()) return k < exact_list_.size() ? to_double(exact_list_[k]) : 0.0;
        return std::exp(log_weight(k));
    }

    [[nodiscard]] rational exact_weight(std::size_t k) const {
        if (is_explicit()) return k < exact_list_.size() ? exact_list_[k] : rational(0);
        if (exact_gen_) return exact_gen_(k);
        return rational(weight(k));
    }

    /// Largest k with w_k > 0 for explicit lists.
    [[nodiscard]] std::optional<std::size_t> support_max() const {
        if (!is_explicit()) return std::nullopt;
        for (std::size_t k = exact_list_.size(); k > 0; --k)
            if (exact_list_[k - 1] > 0) return k - 1;
        return 0;
    }

private:
    WeightSequence() = default;

    std::vector<rational> exact_list_;
    log_generator log_gen_;
    exact_generator exact_gen_;
    std::size_t cap_ = 0;
    std::optional<double> rho_hint_;
};

struct RadiusOfConvergence {
    double value = 0.0;
    bool estimated = false; // true when read off lim sup w_k^{1/k} over the truncation window
};

/// Finite support gives infinity; otherwise the hint, or a flagged root-test estimate.
inline RadiusOfConvergence radius_of_convergence(const WeightSequence& w) {
    if (w.support_max()) return {infinity, false};
    if (w.rho_hint()) return {*w.rho_hint(), false};
    const std::size_t hi = w.extent();
    if (hi < 64) throw rho_unknown("too few weights to estimate the radius of convergence");
    double limsup = -infinity;
    for (std::size_t k = hi / 2; k < hi; ++k) limsup = std::max(limsup, w.log_weight(k) / static_cast<double>(k));
    if (!std::isfinite(limsup)) {
        if (limsup < 0) return {infinity, true};
        throw rho_unknown("root test failed");
    }
    return {std::exp(-limsup), true};
}

/// Result of summing a non-negative series term(k), k = 0, 1, ...
struct SeriesSum {
    double value = 0.0;
    double tail = 0.0; // estimate of the omitted remainder
    std::size_t terms = 0;
    bool diverged = false;
};

namespace detail {

/// Sums until a term drops below 1e-14 of the partial sum, or `cap` terms.
/// At the cap the decay exponent of the terms decides between a power-law tail
/// estimate and divergence (exponent <= 1.05, or growing terms).
template <class Term>
SeriesSum sum_series(Term&& term, std::size_t cap, bool finite) {
    SeriesSum s;
    double half_term = 0.0;
    double last = 0.0;
    for (std::size_t k = 0; k < cap; ++k) {
        const double t = term(k);
        if (!std::isfinite(t) || !std::isfinite(s.value + t)) {
            s.diverged = true;
            s.value = infinity;
            s.terms = k + 1;
            return s;
        }
        s.value += t;
        s.terms = k + 1;
        if (k == cap / 2) half_term = t;
        last = t;
        if (!finite && k >= 16 && t > 0 && t < 1e-14 * s.value) return s;
    }
    if (finite || last == 0.0) return s;
    if (half_term <= 0.0) return s;
    const double exponent = std::log(half_term / last) / std::log(static_cast<double>(cap - 1) / (cap / 2));
    if (!(exponent > 1.05)) {
        s.diverged = true;
        s.value = infinity;
        return s;
    }
    s.tail = last * static_cast<double>(cap) / (exponent - 1.0);
    return s;
}

inline SeriesSum moment_series(const WeightSequence& w, double t, int power) {
    if (t < 0) throw out_of_domain("series needs t >= 0");
    const bool finite = w.is_explicit();
    const double log_t = std::log(t);
    return sum_series(
        [&](std::size_t k) {
            if (k == 0) return power == 0 ? std::exp(w.log_weight(0)) : 0.0;
            const double lw = w.log_weight(k);
            if (!std::isfinite(lw) || t == 0.0) return 0.0;
            return std::pow(static_cast<double>(k), power) * std::exp(lw + static_cast<double>(k) * log_t);
        },
        w.extent(), finite);
}

} // namespace detail

struct PhiPsi {
    double phi = 0.0;
    double psi = 0.0;
    double truncation_error = 0.0; // estimated remainder of the Phi and t Phi' series combined
};

/// Phi(t) = sum w_k t^k and Psi(t) = t Phi'(t) / Phi(t).
inline PhiPsi phi_psi(const WeightSequence& w, double t) {
    if (t < 0) throw out_of_domain("t must be non-negative");
    if (t == 0) return {w.weight(0), 0.0, 0.0};
    const auto s0 = detail::moment_series(w, t, 0);
    const auto s1 = detail::moment_series(w, t, 1);
    if (s0.diverged || s1.diverged) throw diverged("series diverges at t = " + std::to_string(t));
    return {s0.value, s1.value / s0.value, s0.tail + s1.tail};
}

struct NuSigma {
    double nu = 0.0;
    double sigma2 = 0.0;
    bool sigma2_infinite = false;
    bool nu_is_limit = false; // Psi(rho) taken as lim_{t -> rho-}
    RadiusOfConvergence rho;
};

/// nu = Psi(rho) and sigma^2 = rho Psi'(rho), the mean and variance of pi.
inline NuSigma nu_sigma(const WeightSequence& w) {
    NuSigma out;
    out.rho = radius_of_convergence(w);
    const double rho = out.rho.value;
    if (rho == 0.0) return out;
    if (std::isinf(rho)) {
        const auto top = w.support_max();
        if (!top) throw rho_unknown("infinite radius without finite support");
        out.nu = static_cast<double>(*top);
        return out;
    }
    const auto s0 = detail::moment_series(w, rho, 0);
    const auto s1 = detail::moment_series(w, rho, 1);
    if (s0.diverged || s1.diverged) {
        // Psi is increasing on [0, rho): approach rho from below.
        out.nu_is_limit = true;
        out.sigma2_infinite = true;
        out.sigma2 = infinity;
        double prev = -1.0;
        for (int j = 4; j <= 40; ++j) {
            const double t = rho * (1.0 - std::ldexp(1.0, -j));
            const auto a = detail::moment_series(w, t, 0);
            const auto b = detail::moment_series(w, t, 1);
            if (a.diverged || b.diverged) break;
            out.nu = b.value / a.value;
            if (std::abs(out.nu - prev) < 1e-10) break;
            prev = out.nu;
        }
        return out;
    }
    out.nu = s1.value / s0.value;
    const auto s2 = detail::moment_series(w, rho, 2);
    if (s2.diverged) {
        out.sigma2_infinite = true;
        out.sigma2 = infinity;
    } else {
        out.sigma2 = s2.value / s0.value - out.nu * out.nu;
    }
    return out;
}

/// pi_t(k) = w_k t^k / Phi(t), listed until the remaining mass is below 1e-15.
struct TiltedLaw {
    double t = 0.0;
    std::vector<double> masses;
    double truncation_mass = 0.0;
};

inline TiltedLaw tilted_law(const WeightSequence& w, double t) {
    const auto pp = phi_psi(w, t);
    TiltedLaw law;
    law.t = t;
    if (t == 0.0) {
        law.masses = {1.0};
        return law;
    }
    double acc = 0.0;
    const double log_t = std::log(t);
    const double log_phi = std::log(pp.phi);
    for (std::size_t k = 0; k < w.extent(); ++k) {
        const double lw = w.log_weight(k);
        const double m = std::isfinite(lw) ? std::exp(lw + static_cast<double>(k) * log_t - log_phi) : 0.0;
        law.masses.push_back(m);
        acc += m;
        if (!w.is_explicit() && 1.0 - acc < 1e-15) break;
    }
    while (law.masses.size() > 1 && law.masses.back() == 0.0) law.masses.pop_back();
    law.truncation_mass = std::max(0.0, 1.0 - acc);
    return law;
}

/// pi(k) = w_k rho^k / Phi(rho); pi = delta_0 when rho = 0.
inline TiltedLaw pi_distribution(const WeightSequence& w) {
    const auto rho = radius_of_convergence(w).value;
    if (rho == 0.0) return {0.0, {1.0}, 0.0};
    if (std::isinf(rho)) throw phi_diverges("rho is infinite, pi is undefined");
    if (detail::moment_series(w, rho, 0).diverged) throw phi_diverges("Phi(rho) is infinite");
    return tilted_law(w, rho);
}

/// Z_n = (1/n) [z^{n-1}] Phi(z)^n, coefficients of the power by Miller's recurrence.
template <class Num, class WeightAt>
Num partition_by_lagrange(WeightAt&& weight_at, std::size_t n) {
    if (n == 0) return Num(0);
    std::vector<Num> w(n), a(n);
    for (std::size_t k = 0; k < n; ++k) w[k] = weight_at(k);
    // Work with Phi / w_0 so the leading coefficient is 1.
    const Num w0 = w[0];
    for (auto& x : w) x /= w0;
    a[0] = Num(1);
    const Num alpha(static_cast<long long>(n));
    for (std::size_t k = 1; k < n; ++k) {
        Num acc(0);
        for (std::size_t j = 1; j <= k; ++j) {
            if (w[j] == Num(0)) continue;
            const Num coef = (alpha + Num(1)) * Num(static_cast<long long>(j)) - Num(static_cast<long long>(k));
            acc += coef * w[j] * a[k - j];
        }
        a[k] = acc / Num(static_cast<long long>(k));
    }
    Num scale(1);
    for (std::size_t i = 0; i < n; ++i) scale *= w0;
    return scale * a[n - 1] / alpha;
}

inline double partition_Zn(const WeightSequence& w, std::size_t n) {
    return partition_by_lagrange<double>([&](std::size_t k) { return w.weight(k); }, n);
}

inline rational partition_Zn_exact(const WeightSequence& w, std::size_t n) {
    return partition_by_lagrange<rational>([&](std::size_t k) { return w.exact_weight(k); }, n);
}

/// Every n-node tree with its exact weight prod_v w_{deg v}.
inline std::vector<std::pair<PlaneTree, rational>> weighted_trees(const WeightSequence& w, std::size_t n,
                                                                  std::size_t cap = default_enumeration_cap) {
    std::vector<std::pair<PlaneTree, rational>> out;
    for (const auto& s : all_tree_statistics(n)) {
        rational weight(1);
        for (auto [c, m] : s.counts()) {
            const rational wc = w.exact_weight(c);
            for (count_t i = 0; i < m; ++i) weight *= wc;
        }
        if (weight == 0) continue;
        for_each_tree(s, [&](PlaneTree t) { out.emplace_back(std::move(t), weight); }, cap);
    }
    return out;
}

inline rational partition_Zn_by_enumeration(const WeightSequence& w, std::size_t n,
                                            std::size_t cap = default_enumeration_cap) {
    rational z(0);
    for (const auto& [t, weight] : weighted_trees(w, n, cap)) z += weight;
    return z;
}

/// Exact law w(t)/Z_n over n-node trees, in lexicographic order of the degree word.
inline std::map<PlaneTree, rational> exact_tree_law(const WeightSequence& w, std::size_t n,
                                                    std::size_t cap = default_enumeration_cap) {
    auto trees = weighted_trees(w, n, cap);
    rational z(0);
    for (const auto& [t, weight] : trees) z += weight;
    if (z == 0) throw zero_partition("no n-node tree has positive weight");
    std::map<PlaneTree, rational> law;
    for (auto& [t, weight] : trees) law.emplace(std::move(t), weight / z);
    return law;
}

/// Tilting w_k -> w_k t^k leaves the conditioned n-node law unchanged; checked exactly.
inline bool tilt_invariance_check(const WeightSequence& w, const rational& t1, const rational& t2, std::size_t n,
                                  std::size_t cap = default_enumeration_cap) {
    if (t1 <= 0 || t2 <= 0) throw out_of_domain("tilts must be positive");
    auto tilt = [&](const rational& t) {
        std::vector<rational> tw(n);
        rational power(1);
        for (std::size_t k = 0; k < n; ++k) {
            tw[k] = w.exact_weight(k) * power;
            power *= t;
        }
        if (tw[0] == 0) throw invalid_distribution("weights need w_0 > 0");
        return exact_tree_law(WeightSequence::from_list(std::move(tw)), n, cap);
    };
    return tilt(t1) == tilt(t2);
}

/// Law of the degree statistics of a simply generated n-node tree, as log weights
/// log |T_s| + sum_c n(c) log w_c.
inline std::vector<std::pair<DegreeStatistics, double>> statistics_law(const WeightSequence& w, std::size_t n,
                                                                       std::size_t cap = default_statistics_cap) {
    if (n > cap) throw too_large("degree statistics enumeration capped at " + std::to_string(cap) + " nodes");
    std::vector<std::pair<DegreeStatistics, double>> out;
    double top = -infinity;
    for (auto& s : all_tree_statistics(n)) {
        double lw = std::log(count_forests(s).convert_to<double>());
        for (auto [c, m] : s.counts()) lw += static_cast<double>(m) * w.log_weight(c);
        if (!std::isfinite(lw)) continue;
        top = std::max(top, lw);
        out.emplace_back(std::move(s), lw);
    }
    if (out.empty()) throw zero_partition("no n-node tree has positive weight");
    double z = 0.0;
    for (auto& [s, lw] : out) z += std::exp(lw - top);
    for (auto& [s, lw] : out) lw = std::exp(lw - top) / z;
    return out;
}

/// Tree with P(t) = w(t) / Z_n. For rho > 0 this is a conditioned Bienayme sample
/// with tilted truncated weights; for rho = 0 the degree statistics are drawn from
/// their exact law and the tree is uniform given them.
class SimplyGeneratedSampler {
public:
    SimplyGeneratedSampler(const WeightSequence& w, std::size_t n, std::uint64_t max_attempts = default_max_attempts,
                           std::size_t statistics_cap = default_statistics_cap) {
        if (n == 0) throw zero_partition("no tree has zero nodes");
        if (radius_of_convergence(w).value == 0.0) {
            law_ = statistics_law(w, n, statistics_cap);
            std::vector<double> p;
            for (const auto& [s, q] : law_) p.push_back(q);
            pick_.emplace(p);
            return;
        }
        std::vector<double> lw(n);
        for (std::size_t k = 0; k < n; ++k) lw[k] = w.log_weight(k);
        if (!possible(lw, n)) throw zero_partition("Z_n = 0");
        bienayme_.emplace(std::move(lw), n, max_attempts);
    }

    PlaneTree operator()(RngStream& rng) const {
        if (bienayme_) return (*bienayme_)(rng);
        return sample_uniform_tree(law_[(*pick_)(rng)].first, rng);
    }

private:
    /// Some multiset of n degrees with positive weights sums to n-1.
    static bool possible(const std::vector<double>& lw, std::size_t n) {
        // reach[s] = true if some count of positive-weight degrees (with zeros padding) sums to s
        // using at most n-1 non-zero degrees; n-1 edges need at most n-1 internal nodes.
        std::vector<std::size_t> fewest(n, std::numeric_limits<std::size_t>::max());
        fewest[0] = 0;
        for (std::size_t s = 1; s < n; ++s)
            for (std::size_t c = 1; c <= s; ++c)
                if (std::isfinite(lw[c]) && fewest[s - c] != std::numeric_limits<std::size_t>::max())
                    fewest[s] = std::min(fewest[s], fewest[s - c] + 1);
        return fewest[n - 1] <= n - 1;
    }

    std::optional<ConditionedTreeSampler> bienayme_;
    std::vector<std::pair<DegreeStatistics, double>> law_;
    std::optional<AliasTable> pick_;
};

inline PlaneTree sample_simply_generated(const WeightSequence& w, std::size_t n, RngStream& rng,
                                         std::uint64_t max_attempts = default_max_attempts) {
    SimplyGeneratedSampler sampler(w, n, max_attempts);
    return sampler(rng);
}

/// The hat map: m(c) = floor(n(c)/M) blocks of M nodes of degree c (0 < c <= L) are
/// traded for m(c)(M-c) leaves and c m(c) nodes of degree M.
inline DegreeStatistics hat_transform(const DegreeStatistics& s, std::uint32_t L, std::uint32_t M) {
    if (L <= 2) throw bad_parameters("L must exceed 2");
    if (M <= 2 * L) throw bad_parameters("M must exceed 2L");
    if (!s.is_tree()) throw invalid_statistics("hat transform needs tree statistics");
    auto counts = s.counts();
    for (degree_t c = 1; c <= L; ++c) {
        const count_t m = s.count(c) / M;
        if (m == 0) continue;
        counts[0] += (M - c) * m;
        counts[c] -= static_cast<count_t>(M) * m;
        counts[M] += static_cast<count_t>(c) * m;
    }
    return DegreeStatistics(std::move(counts));
}

/// w(n^)/w(n) from the closed form prod_{0<c<=L} (w_M^c / w_c^M)^{m(c)}.
inline rational hat_weight_ratio(const WeightSequence& w, const DegreeStatistics& s, std::uint32_t L,
                                 std::uint32_t M) {
    hat_transform(s, L, M);
    rational ratio(1);
    const rational wM = w.exact_weight(M);
    for (degree_t c = 1; c <= L; ++c) {
        const count_t m = s.count(c) / M;
        if (m == 0) continue;
        const rational wc = w.exact_weight(c);
        if (wc == 0) throw invalid_distribution("weight ratio needs w_c > 0");
        rational block(1);
        for (degree_t i = 0; i < c; ++i) block *= wM;
        for (std::uint32_t i = 0; i < M; ++i) block /= wc;
        for (count_t i = 0; i < m; ++i) ratio *= block;
    }
    return ratio;
}

/// w(n) = prod_c w_c^{n(c)}.
inline rational statistics_weight(const WeightSequence& w, const DegreeStatistics& s) {
    rational out(1);
    for (auto [c, m] : s.counts()) {
        const rational wc = w.exact_weight(c);
        for (count_t i = 0; i < m; ++i) out *= wc;
    }
    return out;
}

/// |T_n| <= ((M-1)!)^L (L+1)^n |T_n^|, with n the node count; exact.
inline bool hat_count_ratio_check(const DegreeStatistics& s, std::uint32_t L, std::uint32_t M) {
    const auto hat = hat_transform(s, L, M);
    bigint factor = 1;
    const bigint f = factorial(M - 1);
    for (std::uint32_t i = 0; i < L; ++i) factor *= f;
    for (count_t i = 0; i < s.node_count(); ++i) factor *= (L + 1);
    return count_forests(s) <= factor * count_forests(hat);
}

} // namespace arbor
