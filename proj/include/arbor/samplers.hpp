#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/zeta.hpp>
#include <json.hpp>

#include "core_trees.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace arbor {

struct SizeBiasedSequence {
    std::vector<degree_t> d;
};

namespace detail {

inline void require_sampler_tree(const DegreeStatistics& s) {
    if (!s.is_tree())
        throw invalid_statistics("sampler needs tree statistics, got a forest of " +
                                 std::to_string(s.trees()) + " trees");
}

/// True with probability num/den (U <= num/den, ties included), computed exactly
/// from 64 random bits.
inline bool below_ratio(RngStream& rng, std::int64_t num, std::int64_t den) {
    if (num >= den) return true;
    if (num < 0) return false;
    const unsigned __int128 lhs = static_cast<unsigned __int128>(rng.bits()) * static_cast<std::uint64_t>(den);
    const unsigned __int128 rhs = static_cast<unsigned __int128>(static_cast<std::uint64_t>(num)) << 64;
    return lhs <= rhs;
}

/// Incremental size-biased draws without replacement: an item of degree c has weight c;
/// once the remaining weight is zero only zeros are left.
class SizeBiasedDrawer {
public:
    explicit SizeBiasedDrawer(const DegreeStatistics& s)
        : classes_(s.counts().begin(), s.counts().end()), weight_left_(s.edge_count()) {}

    degree_t next(RngStream& rng) {
        if (weight_left_ == 0) {
            auto& zero = classes_.front();
            --zero.second;
            return 0;
        }
        std::uint64_t r = rng.below(weight_left_);
        for (auto& [c, left] : classes_) {
            const std::uint64_t w = static_cast<std::uint64_t>(c) * left;
            if (r < w) {
                --left;
                weight_left_ -= c;
                return c;
            }
            r -= w;
        }
        throw error("size-biased draw fell off the weight table");
    }

private:
    std::vector<std::pair<degree_t, count_t>> classes_;
    std::uint64_t weight_left_;
};

} // namespace detail

inline SizeBiasedSequence sample_size_biasing(const DegreeStatistics& s, RngStream& rng) {
    detail::require_sampler_tree(s);
    detail::SizeBiasedDrawer drawer(s);
    SizeBiasedSequence out;
    out.d.reserve(s.node_count());
    for (count_t i = 0; i < s.node_count(); ++i) out.d.push_back(drawer.next(rng));
    return out;
}

/// Returns M-1 where M = min(i : U_i <= (1 + sum_{j<i}(D_j-1)) / (n+1-i)).
/// Its law is that of the depth of a uniform node in a uniform tree with statistics s.
inline std::size_t sample_mark_height(const DegreeStatistics& s, RngStream& rng) {
    detail::require_sampler_tree(s);
    const auto n = static_cast<std::int64_t>(s.node_count());
    detail::SizeBiasedDrawer drawer(s);
    std::int64_t excess = 0;
    for (std::int64_t i = 1; i <= n; ++i) {
        if (detail::below_ratio(rng, 1 + excess, n + 1 - i)) return static_cast<std::size_t>(i - 1);
        excess += static_cast<std::int64_t>(drawer.next(rng)) - 1;
    }
    throw error("threshold sampler did not stop by step n");
}

/// sigma = inf(i in [n-1] : U_i <= sum_{j<i}(D_j-1) / (n-i)).
/// For a path no threshold is ever positive; sigma = n is returned in that case.
inline std::size_t sample_sigma(const DegreeStatistics& s, RngStream& rng) {
    detail::require_sampler_tree(s);
    if (s.node_count() < 2) throw invalid_statistics("sigma needs at least two nodes");
    const auto n = static_cast<std::int64_t>(s.node_count());
    detail::SizeBiasedDrawer drawer(s);
    std::int64_t excess = 0;
    for (std::int64_t i = 1; i <= n - 1; ++i) {
        if (excess > 0 && detail::below_ratio(rng, excess, n - i)) return static_cast<std::size_t>(i);
        excess += static_cast<std::int64_t>(drawer.next(rng)) - 1;
    }
    return static_cast<std::size_t>(n);
}

struct PoissonAtom {
    double time;          // S_l
    double u;             // U_l
    std::size_t interval; // J(l), 0-based index into the sorted degree layout
};

/// One realisation of the Poissonized size-biasing.
struct PoissonRun {
    std::vector<PoissonAtom> atoms;       // every atom up to tau (all of them if tau is infinite)
    std::vector<std::size_t> records;     // M(1), M(2), ...: 1-based indices of record atoms
    std::vector<degree_t> record_degrees; // D(1), D(2), ...
    std::optional<std::size_t> tau;       // empty when tau is infinite
    std::size_t sigma_records = 0;        // sup(k >= 1 : tau > M(k))
    std::size_t sigma = 0;                // sigma_records + 1; same law as sample_sigma
};

/// Poisson process on [0,inf) x [0,1) read against the intervals
/// I_i = [l_i, l_i + d_i/(n-1)) laid out in non-decreasing degree order.
/// Atoms are generated lazily and the run stops at tau.
inline PoissonRun sample_sigma_poissonized(const DegreeStatistics& s, RngStream& rng) {
    detail::require_sampler_tree(s);
    if (s.node_count() < 2) throw invalid_statistics("sigma needs at least two nodes");
    const auto d = s.sorted_degrees();
    const double scale = static_cast<double>(s.node_count() - 1);

    std::vector<std::uint64_t> left(d.size());
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        left[i] = acc;
        acc += d[i];
    }
    const std::size_t nonzero = d.size() - s.count(0);
    const bool has_branch = s.max_degree() >= 2;

    PoissonRun run;
    std::vector<char> hit(d.size(), 0);
    double time = 0.0;
    for (std::size_t ell = 1;; ++ell) {
        if (!has_branch && run.records.size() == nonzero) break; // tau = infinity
        time += rng.exponential();
        const double u = rng.uniform();
        const double x = u * scale;
        auto it = std::upper_bound(left.begin(), left.end(), static_cast<std::uint64_t>(x));
        // upper_bound on floor(x) may land past intervals that start inside (floor(x), x];
        // left[] are integers so floor comparison is exact.
        std::size_t j = static_cast<std::size_t>(it - left.begin()) - 1;
        run.atoms.push_back({time, u, j});
        if (!hit[j]) {
            hit[j] = 1;
            run.records.push_back(ell);
            run.record_degrees.push_back(d[j]);
            continue;
        }
        const double offset = x - static_cast<double>(left[j]);
        if (d[j] >= 1 && offset < static_cast<double>(d[j] - 1)) {
            run.tau = ell;
            break;
        }
    }
    run.sigma_records = run.records.size();
    run.sigma = run.sigma_records + 1;
    return run;
}

/// Rotates a word whose (d-1) sum is -1 to its unique Lukasiewicz rotation.
inline PlaneTree cycle_lemma_rotate(std::vector<degree_t> word) {
    std::int64_t sum = 0;
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    std::size_t at = 0;
    for (std::size_t i = 0; i < word.size(); ++i) {
        sum += static_cast<std::int64_t>(word[i]) - 1;
        if (sum < best) {
            best = sum;
            at = i;
        }
    }
    if (sum != -1) throw invalid_word("cycle lemma needs a word with total excess -1");
    std::rotate(word.begin(), word.begin() + static_cast<std::ptrdiff_t>((at + 1) % word.size()), word.end());
    return PlaneTree(std::move(word));
}

template <class T>
void shuffle(std::vector<T>& v, RngStream& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

/// Uniform tree with statistics s: uniform shuffle of the degree multiset, then
/// the cycle-lemma rotation.
inline PlaneTree sample_uniform_tree(const DegreeStatistics& s, RngStream& rng) {
    detail::require_sampler_tree(s);
    auto word = s.sorted_degrees();
    shuffle(word, rng);
    return cycle_lemma_rotate(std::move(word));
}

inline MarkedTree sample_uniform_marked_tree(const DegreeStatistics& s, RngStream& rng) {
    auto t = sample_uniform_tree(s, rng);
    const auto mark = rng.below(t.size());
    return MarkedTree(std::move(t), mark);
}

/// Walker/Vose alias table over {0, ..., K-1}.
class AliasTable {
public:
    explicit AliasTable(std::span<const double> weights) : alias_(weights.size()) {
        std::vector<double> prob(weights.size());
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        const std::size_t k = weights.size();
        std::vector<double> scaled(k);
        std::vector<std::size_t> small, large;
        for (std::size_t i = 0; i < k; ++i) {
            scaled[i] = weights[i] * static_cast<double>(k) / total;
            (scaled[i] < 1.0 ? small : large).push_back(i);
        }
        while (!small.empty() && !large.empty()) {
            auto s = small.back();
            small.pop_back();
            auto l = large.back();
            prob[s] = scaled[s];
            alias_[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        for (auto i : large) prob[i] = 1.0, alias_[i] = i;
        for (auto i : small) prob[i] = 1.0, alias_[i] = i;
        threshold_.resize(k);
        for (std::size_t i = 0; i < k; ++i)
            threshold_[i] = prob[i] >= 1.0 ? std::numeric_limits<std::uint64_t>::max()
                                            : static_cast<std::uint64_t>(std::ldexp(prob[i], 64));
    }

    /// One 64-bit draw: the high part of bits*K picks the column, the low part
    /// decides between the column and its alias.
    std::size_t operator()(RngStream& rng) const {
        const unsigned __int128 x = static_cast<unsigned __int128>(rng.bits()) * threshold_.size();
        const auto i = static_cast<std::size_t>(x >> 64);
        return static_cast<std::uint64_t>(x) < threshold_[i] ? i : alias_[i];
    }

private:
    std::vector<std::uint64_t> threshold_;
    std::vector<std::size_t> alias_;
};

/// Offspring law on the non-negative integers, given by its mass function.
class OffspringDistribution {
public:
    static OffspringDistribution from_masses(std::vector<double> masses) {
        double total = 0.0;
        for (double m : masses) {
            if (!(m >= 0.0) || !std::isfinite(m)) throw invalid_distribution("negative or non-finite mass");
            total += m;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw invalid_distribution("masses sum to " + std::to_string(total) + ", not 1");
        OffspringDistribution mu;
        mu.kind_ = kind::explicit_masses;
        mu.masses_ = std::move(masses);
        mu.check_root();
        return mu;
    }

    /// mu(0) = p0 and mu(k) = (1-p0) k^-alpha / zeta(alpha) for k >= 1.
    static OffspringDistribution power_law(double alpha, double p0) {
        if (!(alpha > 1.0) || !(p0 > 0.0 && p0 < 1.0))
            throw invalid_distribution("power law needs alpha > 1 and 0 < p0 < 1");
        OffspringDistribution mu;
        mu.kind_ = kind::power_law;
        mu.alpha_ = alpha;
        mu.p0_ = p0;
        mu.norm_ = boost::math::zeta(alpha);
        return mu;
    }

    /// mu(0) = p0 and mu(k) proportional to exp(-sqrt(k)) for k >= 1.
    static OffspringDistribution stretched_exponential(double p0) {
        if (!(p0 > 0.0 && p0 < 1.0)) throw invalid_distribution("stretched exponential needs 0 < p0 < 1");
        OffspringDistribution mu;
        mu.kind_ = kind::stretched_exponential;
        mu.p0_ = p0;
        double z = 0.0;
        for (std::size_t k = 1;; ++k) {
            const double t = std::exp(-std::sqrt(static_cast<double>(k)));
            z += t;
            if (t < 1e-20 * z) break;
        }
        mu.norm_ = z;
        return mu;
    }

    static OffspringDistribution from_json(const nlohmann::json& j) {
        if (j.contains("masses")) return from_masses(j.at("masses").get<std::vector<double>>());
        const auto family = j.value("family", std::string{});
        if (family == "power_law") return power_law(j.at("alpha").get<double>(), j.at("p0").get<double>());
        if (family == "stretched_exponential") return stretched_exponential(j.at("p0").get<double>());
        throw invalid_distribution("unknown offspring distribution JSON");
    }

    [[nodiscard]] nlohmann::json to_json() const {
        switch (kind_) {
        case kind::explicit_masses: return {{"masses", masses_}};
        case kind::power_law: return {{"family", "power_law"}, {"alpha", alpha_}, {"p0", p0_}};
        case kind::stretched_exponential: return {{"family", "stretched_exponential"}, {"p0", p0_}};
        }
        return {};
    }

    [[nodiscard]] double mass(std::size_t k) const {
        switch (kind_) {
        case kind::explicit_masses: return k < masses_.size() ? masses_[k] : 0.0;
        case kind::power_law:
            return k == 0 ? p0_ : (1.0 - p0_) * std::pow(static_cast<double>(k), -alpha_) / norm_;
        case kind::stretched_exponential:
            return k == 0 ? p0_ : (1.0 - p0_) * std::exp(-std::sqrt(static_cast<double>(k))) / norm_;
        }
        return 0.0;
    }

    /// Largest k with positive mass, or nullopt for infinite support.
    [[nodiscard]] std::optional<std::size_t> support_max() const {
        if (kind_ != kind::explicit_masses) return std::nullopt;
        for (std::size_t k = masses_.size(); k > 0; --k)
            if (masses_[k - 1] > 0.0) return k - 1;
        return 0;
    }

    /// sum_k k^2 mu(k) = infinity.
    [[nodiscard]] bool infinite_variance() const {
        return kind_ == kind::power_law && alpha_ <= 3.0;
    }

    /// sum_k e^{tk} mu(k) = infinity for every t > 0.
    [[nodiscard]] bool no_exponential_moments() const { return kind_ != kind::explicit_masses; }

    /// sum_k k mu(k), summed numerically for infinite supports.
    [[nodiscard]] double mean() const {
        if (kind_ == kind::power_law)
            return alpha_ > 2.0 ? (1.0 - p0_) * boost::math::zeta(alpha_ - 1.0) / norm_
                                : std::numeric_limits<double>::infinity();
        double m = 0.0;
        const std::size_t cap = kind_ == kind::explicit_masses ? masses_.size() : 200000;
        for (std::size_t k = 1; k < cap; ++k) m += static_cast<double>(k) * mass(k);
        return m;
    }

private:
    enum class kind { explicit_masses, power_law, stretched_exponential };

    void check_root() const {
        if (!(mass(0) > 0.0)) throw invalid_distribution("offspring law needs mu(0) > 0");
    }

    kind kind_ = kind::explicit_masses;
    std::vector<double> masses_;
    double alpha_ = 0.0;
    double p0_ = 0.0;
    double norm_ = 1.0;
};

inline constexpr std::uint64_t default_max_attempts = 10'000'000;

/// Exact sampler for trees with P(t) proportional to prod_v weight(deg v) over
/// n-node trees.
///
/// Degrees above n-1 cannot occur, so only the weights 0..n-1 matter. They are
/// exponentially tilted (w_k theta^k) so the mean degree is (n-1)/n; tilting
/// multiplies every n-node tree by theta^{n-1} and leaves the conditioned law
/// unchanged. n i.i.d. degrees are drawn until they sum to n-1, and the word is
/// then rotated by the cycle lemma.
class ConditionedTreeSampler {
public:
    /// log_weights[k] = log w_k for k = 0..n-1; -inf marks a zero weight.
    ConditionedTreeSampler(std::vector<double> log_weights, std::size_t n,
                           std::uint64_t max_attempts = default_max_attempts)
        : n_(n), max_attempts_(max_attempts) {
        if (n == 0) throw invalid_distribution("tree size must be positive");
        log_weights.resize(n, -std::numeric_limits<double>::infinity());
        if (!std::isfinite(log_weights[0])) throw invalid_distribution("weight of degree 0 must be positive");
        std::size_t top = 0;
        for (std::size_t k = 0; k < n; ++k)
            if (std::isfinite(log_weights[k])) top = k;
        if (!feasible(log_weights, n))
            throw invalid_distribution("no " + std::to_string(n) + "-node tree has positive weight");

        const double target = static_cast<double>(n - 1) / static_cast<double>(n);
        if (top >= 1 && n > 1) {
            double lo = -60.0, hi = 60.0;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                (tilted_mean(log_weights, mid) < target ? lo : hi) = mid;
            }
            log_tilt_ = 0.5 * (lo + hi);
        }
        const auto probs = tilted(log_weights, log_tilt_);
        table_.emplace(probs);
    }

    [[nodiscard]] double log_tilt() const noexcept { return log_tilt_; }

    PlaneTree operator()(RngStream& rng) const {
        std::uint64_t attempts = 0;
        return sample(rng, attempts);
    }

    /// As operator(), also reporting how many degree sequences were drawn.
    PlaneTree sample(RngStream& rng, std::uint64_t& attempts) const {
        std::vector<degree_t> word(n_);
        const std::uint64_t edges = n_ - 1;
        for (std::uint64_t attempt = 1; attempt <= max_attempts_; ++attempt) {
            std::uint64_t sum = 0;
            bool over = false;
            for (std::size_t i = 0; i < n_; ++i) {
                word[i] = static_cast<degree_t>((*table_)(rng));
                sum += word[i];
                if (sum > edges) {
                    over = true;
                    break;
                }
            }
            if (!over && sum == edges) {
                attempts = attempt;
                return cycle_lemma_rotate(word);
            }
        }
        attempts = max_attempts_;
        throw attempts_exhausted("no degree sequence summing to " + std::to_string(edges) + " in " +
                                 std::to_string(max_attempts_) + " attempts");
    }

private:
    // Fewest positive degrees summing to n-1 must not exceed n; otherwise the
    // rejection loop could never accept (full binary trees at even n, say).
    static bool feasible(const std::vector<double>& lw, std::size_t n) {
        const std::size_t none = n + 1;
        std::vector<std::size_t> fewest(n, none);
        fewest[0] = 0;
        for (std::size_t s = 1; s < n; ++s)
            for (std::size_t k = 1; k <= s; ++k)
                if (std::isfinite(lw[k]) && fewest[s - k] != none) fewest[s] = std::min(fewest[s], fewest[s - k] + 1);
        return fewest[n - 1] <= n;
    }

    static std::vector<double> tilted(const std::vector<double>& lw, double lt) {
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < lw.size(); ++k)
            if (std::isfinite(lw[k])) top = std::max(top, lw[k] + lt * static_cast<double>(k));
        std::vector<double> p(lw.size(), 0.0);
        for (std::size_t k = 0; k < lw.size(); ++k)
            if (std::isfinite(lw[k])) p[k] = std::exp(lw[k] + lt * static_cast<double>(k) - top);
        return p;
    }

    static double tilted_mean(const std::vector<double>& lw, double lt) {
        const auto p = tilted(lw, lt);
        double z = 0.0, m = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            z += p[k];
            m += static_cast<double>(k) * p[k];
        }
        return m / z;
    }

    std::size_t n_;
    std::uint64_t max_attempts_;
    double log_tilt_ = 0.0;
    std::optional<AliasTable> table_;
};

inline std::vector<double> log_masses(const OffspringDistribution& mu, std::size_t n) {
    std::vector<double> lw(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double m = mu.mass(k);
        lw[k] = m > 0.0 ? std::log(m) : -std::numeric_limits<double>::infinity();
    }
    return lw;
}

/// Bienayme tree with offspring law mu conditioned to have n nodes.
inline PlaneTree sample_conditioned_bienayme(const OffspringDistribution& mu, std::size_t n, RngStream& rng,
                                             std::uint64_t max_attempts = default_max_attempts) {
    ConditionedTreeSampler sampler(log_masses(mu, n), n, max_attempts);
    return sampler(rng);
}

} // namespace arbor
