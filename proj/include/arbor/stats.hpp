#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace arbor {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Wilson score interval for a binomial proportion (z = 1.96 gives 95%).
inline Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z / (1 + z2 / n) * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct ChiSquare {
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
    [[nodiscard]] bool passes(double level = 0.01) const { return p_value >= level; }
};

namespace detail {
inline double chi2_upper(double stat, double dof) {
    if (dof <= 0) return 1.0;
    boost::math::chi_squared dist(dof);
    return boost::math::cdf(boost::math::complement(dist, stat));
}
} // namespace detail

/// Goodness of fit of observed counts to probabilities. Adjacent cells are pooled
/// until each expected count reaches `min_expected`.
inline ChiSquare chi_square_gof(const std::vector<std::uint64_t>& observed, const std::vector<double>& probs,
                                double min_expected = 5.0) {
    double total = 0.0;
    for (auto o : observed) total += static_cast<double>(o);
    std::vector<double> obs, exp;
    double o_acc = 0.0, e_acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        o_acc += i < observed.size() ? static_cast<double>(observed[i]) : 0.0;
        e_acc += probs[i] * total;
        if (e_acc >= min_expected) {
            obs.push_back(o_acc);
            exp.push_back(e_acc);
            o_acc = e_acc = 0.0;
        }
    }
    for (std::size_t i = probs.size(); i < observed.size(); ++i) o_acc += static_cast<double>(observed[i]);
    if (!exp.empty()) {
        obs.back() += o_acc;
        exp.back() += e_acc;
    } else {
        obs.push_back(o_acc);
        exp.push_back(e_acc);
    }
    ChiSquare r;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        if (exp[i] <= 0) {
            if (obs[i] > 0) r.statistic = INFINITY;
            continue;
        }
        r.statistic += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
    }
    r.dof = static_cast<double>(obs.size()) - 1.0;
    r.p_value = std::isinf(r.statistic) ? 0.0 : detail::chi2_upper(r.statistic, r.dof);
    return r;
}

/// Two-sample homogeneity test on integer-valued samples. Values are pooled in
/// increasing order until both expected counts reach `min_expected`.
inline ChiSquare chi_square_two_sample(const std::map<std::int64_t, std::uint64_t>& a,
                                       const std::map<std::int64_t, std::uint64_t>& b,
                                       double min_expected = 5.0) {
    std::map<std::int64_t, std::pair<double, double>> joint;
    double na = 0, nb = 0;
    for (auto [k, c] : a) joint[k].first += static_cast<double>(c), na += static_cast<double>(c);
    for (auto [k, c] : b) joint[k].second += static_cast<double>(c), nb += static_cast<double>(c);
    const double n = na + nb;
    std::vector<std::pair<double, double>> cells;
    std::pair<double, double> acc{0, 0};
    for (const auto& [k, ab] : joint) {
        acc.first += ab.first;
        acc.second += ab.second;
        const double row = acc.first + acc.second;
        if (row * std::min(na, nb) / n >= min_expected) {
            cells.push_back(acc);
            acc = {0, 0};
        }
    }
    if (acc.first + acc.second > 0) {
        if (cells.empty()) cells.push_back(acc);
        else cells.back().first += acc.first, cells.back().second += acc.second;
    }
    ChiSquare r;
    for (const auto& [x, y] : cells) {
        const double row = x + y;
        const double ea = row * na / n, eb = row * nb / n;
        r.statistic += (x - ea) * (x - ea) / ea + (y - eb) * (y - eb) / eb;
    }
    r.dof = static_cast<double>(cells.size()) - 1.0;
    r.p_value = detail::chi2_upper(r.statistic, r.dof);
    return r;
}

} // namespace arbor
