#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "core_trees.hpp"
#include "exact.hpp"

namespace arbor {

inline constexpr std::size_t default_enumeration_cap = 12;

/// Law of a non-negative integer variable with exact rational masses.
/// Only points of positive mass are stored, in increasing order.
struct ExactDistribution {
    std::vector<std::size_t> support;
    std::vector<rational> mass;

    static ExactDistribution from_masses(const std::vector<rational>& by_value) {
        ExactDistribution d;
        for (std::size_t k = 0; k < by_value.size(); ++k) {
            if (by_value[k] != 0) {
                d.support.push_back(k);
                d.mass.push_back(by_value[k]);
            }
        }
        return d;
    }

    [[nodiscard]] rational at(std::size_t k) const {
        for (std::size_t i = 0; i < support.size(); ++i)
            if (support[i] == k) return mass[i];
        return 0;
    }

    [[nodiscard]] rational total() const {
        rational s = 0;
        for (const auto& m : mass) s += m;
        return s;
    }

    /// P(X >= k).
    [[nodiscard]] rational tail(std::size_t k) const {
        rational s = 0;
        for (std::size_t i = 0; i < support.size(); ++i)
            if (support[i] >= k) s += mass[i];
        return s;
    }

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json num = nlohmann::json::array(), den = nlohmann::json::array();
        for (const auto& m : mass) {
            num.push_back(boost::multiprecision::numerator(m).str());
            den.push_back(boost::multiprecision::denominator(m).str());
        }
        return {{"support", support}, {"num", num}, {"den", den}};
    }

    friend bool operator==(const ExactDistribution&, const ExactDistribution&) = default;
};

/// w(d, c): how many spine slots use degree c.
struct UsageVector {
    std::map<degree_t, count_t> w;

    static UsageVector of(std::span<const degree_t> d) {
        UsageVector u;
        for (auto c : d) ++u.w[c];
        return u;
    }

    [[nodiscard]] count_t operator()(degree_t c) const {
        auto it = w.find(c);
        return it == w.end() ? 0 : it->second;
    }

    [[nodiscard]] bool fits(const DegreeStatistics& n) const {
        for (auto [c, k] : w)
            if (k > n.count(c)) return false;
        return true;
    }
};

/// Plane forests with these statistics: (a/n) * n! / prod n(c)!
inline bigint count_forests(const DegreeStatistics& s) {
    return multinomial(s) * s.trees() / s.node_count();
}

/// Forests with a marked node in the first tree; equals the multinomial coefficient.
inline bigint count_marked_first_tree(const DegreeStatistics& s) { return multinomial(s); }

namespace detail {

inline void require_tree(const DegreeStatistics& s) {
    if (!s.is_tree())
        throw invalid_statistics("expected tree statistics, got a forest of " +
                                 std::to_string(s.trees()) + " trees");
}

inline void require_cap(const DegreeStatistics& s, std::size_t cap) {
    if (s.node_count() > cap)
        throw too_large(std::to_string(s.node_count()) + " nodes exceeds enumeration cap " +
                        std::to_string(cap));
}

} // namespace detail

/// Visits every plane tree with statistics `s` once, in lexicographic order of
/// the degree word. Branches are pruned as soon as a prefix leaves the
/// Lukasiewicz region.
template <class Visitor>
void for_each_tree(const DegreeStatistics& s, Visitor&& visit,
                   std::size_t cap = default_enumeration_cap) {
    detail::require_tree(s);
    detail::require_cap(s, cap);

    std::vector<std::pair<degree_t, count_t>> remaining(s.counts().begin(), s.counts().end());
    const std::size_t n = s.node_count();
    std::vector<degree_t> word(n);

    std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t pos, std::int64_t sum) {
        if (pos == n) {
            visit(PlaneTree(word));
            return;
        }
        for (auto& [c, left] : remaining) {
            if (left == 0) continue;
            const std::int64_t next = sum + static_cast<std::int64_t>(c) - 1;
            if (pos + 1 < n && next < 0) continue;
            --left;
            word[pos] = c;
            rec(pos + 1, next);
            ++left;
        }
    };
    rec(0, 0);
}

inline std::vector<PlaneTree> enumerate_trees(const DegreeStatistics& s,
                                              std::size_t cap = default_enumeration_cap) {
    std::vector<PlaneTree> out;
    for_each_tree(s, [&](PlaneTree t) { out.push_back(std::move(t)); }, cap);
    return out;
}

/// All tree degree statistics on `nodes` nodes (partitions of nodes-1 edges).
inline std::vector<DegreeStatistics> all_tree_statistics(std::size_t nodes) {
    std::vector<DegreeStatistics> out;
    if (nodes == 0) return out;
    DegreeStatistics::map_type parts;
    std::function<void(std::size_t, degree_t)> rec = [&](std::size_t rest, degree_t max_part) {
        if (rest == 0) {
            count_t used = 0;
            for (auto [c, m] : parts) used += m;
            auto m = parts;
            m[0] = nodes - used;
            out.emplace_back(std::move(m));
            return;
        }
        for (degree_t c = static_cast<degree_t>(std::min<std::size_t>(rest, max_part)); c >= 1; --c) {
            ++parts[c];
            rec(rest - c, c);
            if (--parts[c] == 0) parts.erase(c);
        }
    };
    rec(nodes - 1, static_cast<degree_t>(nodes - 1));
    return out;
}

/// |T_n^bullet(d)| = (prod d_i) * multinomial(n-k; n(c) - w(d,c)).
inline bigint count_spine_class(const DegreeStatistics& s, std::span<const degree_t> d) {
    detail::require_tree(s);
    auto u = UsageVector::of(d);
    if (!u.fits(s)) throw usage_exceeded("spine uses more nodes of some degree than available");
    bigint prod = 1;
    for (auto c : d) prod *= c;
    std::vector<std::uint64_t> parts;
    for (auto [c, m] : s.counts()) parts.push_back(m - u(c));
    return prod * multinomial(s.node_count() - d.size(), parts);
}

/// P(spinal degrees of a uniform marked tree start with d and |V| >= k), via
/// (1/(n)_k) prod d_i prod_c (n(c))_{w(d,c)}.
inline rational spine_probability(const DegreeStatistics& s, std::span<const degree_t> d) {
    detail::require_tree(s);
    auto u = UsageVector::of(d);
    if (!u.fits(s)) throw usage_exceeded("spine uses more nodes of some degree than available");
    bigint num = 1;
    for (auto c : d) num *= c;
    for (auto [c, k] : u.w) num *= falling_factorial(s.count(c), k);
    return rational(num, falling_factorial(s.node_count(), d.size()));
}

/// Enumeration route for |T_n^bullet(d)|: counts marked trees directly.
inline bigint count_spine_class_by_enumeration(const DegreeStatistics& s,
                                               std::span<const degree_t> d,
                                               std::size_t cap = default_enumeration_cap) {
    bigint total = 0;
    for_each_tree(s, [&](const PlaneTree& t) {
        auto parent = t.parents();
        for (std::size_t v = 0; v < t.size(); ++v) {
            std::vector<std::size_t> path;
            for (std::size_t x = v; x != PlaneTree::npos; x = parent[x]) path.push_back(x);
            if (path.size() - 1 < d.size()) continue;
            std::reverse(path.begin(), path.end());
            bool match = true;
            for (std::size_t i = 0; i < d.size() && match; ++i) match = t.degree(path[i]) == d[i];
            if (match) ++total;
        }
    }, cap);
    return total;
}

/// Law of |V| for (T,V) uniform over marked trees, by exhaustion.
inline ExactDistribution exact_mark_height_distribution(const DegreeStatistics& s,
                                                        std::size_t cap = default_enumeration_cap) {
    std::vector<bigint> hist;
    bigint trees = 0;
    for_each_tree(s, [&](const PlaneTree& t) {
        ++trees;
        for (auto depth : t.depths()) {
            if (depth >= hist.size()) hist.resize(depth + 1, 0);
            ++hist[depth];
        }
    }, cap);
    const bigint total = trees * s.node_count();
    std::vector<rational> mass;
    for (const auto& h : hist) mass.emplace_back(h, total);
    return ExactDistribution::from_masses(mass);
}

/// Exact law of M-1 for the threshold sampler driven by a size-biased order.
///
/// Dynamic programme over usage vectors: the state after k draws is the
/// multiset of drawn degrees, with mass P(usage = w, M >= k+1). Each step
/// applies the survival factor of A_{k+1} and then the size-biased draw.
inline ExactDistribution exact_M_distribution(const DegreeStatistics& s,
                                              std::size_t cap = default_enumeration_cap) {
    detail::require_tree(s);
    detail::require_cap(s, cap);
    const std::vector<std::pair<degree_t, count_t>> classes(s.counts().begin(), s.counts().end());
    const std::int64_t n = static_cast<std::int64_t>(s.node_count());

    using state = std::vector<count_t>;
    std::map<state, rational> level{{state(classes.size(), 0), rational(1)}};
    std::vector<rational> stop(n, 0); // stop[k] = P(M = k+1)

    for (std::int64_t k = 0; k < n && !level.empty(); ++k) {
        std::map<state, rational> next;
        for (const auto& [w, mass] : level) {
            std::int64_t drawn = 0;
            for (std::size_t j = 0; j < classes.size(); ++j)
                drawn += static_cast<std::int64_t>(classes[j].first) * static_cast<std::int64_t>(w[j]);
            // A_{k+1} = 1 iff U <= (1 + sum_{j<=k}(D_j - 1)) / (n - k)
            rational thr(1 + drawn - k, n - k);
            if (thr > 1) thr = 1;
            if (thr < 0) thr = 0;
            stop[k] += mass * thr;
            const rational survive = mass * (1 - thr);
            if (survive == 0) continue;

            const std::int64_t weight_left = (n - 1) - drawn;
            for (std::size_t j = 0; j < classes.size(); ++j) {
                const count_t left = classes[j].second - w[j];
                if (left == 0) continue;
                rational p;
                if (weight_left > 0)
                    p = rational(static_cast<std::int64_t>(classes[j].first) * static_cast<std::int64_t>(left),
                                 weight_left);
                else
                    p = classes[j].first == 0 ? rational(1) : rational(0);
                if (p == 0) continue;
                state w2 = w;
                ++w2[j];
                next[w2] += survive * p;
            }
        }
        level = std::move(next);
    }
    return ExactDistribution::from_masses(stop);
}

} // namespace arbor
