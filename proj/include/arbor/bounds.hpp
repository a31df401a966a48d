#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "core_trees.hpp"
#include "error.hpp"
#include "exact.hpp"

namespace arbor {

/// Smallest beta for which the stretched-exponential bounds apply: 17^{3/2}.
inline const double beta_threshold = std::pow(17.0, 1.5);

struct BoundInput {
    std::uint64_t p1 = 0;
    std::uint64_t p2sq = 0;
    std::uint64_t n1 = 0;
    std::uint64_t n = 1;
    rational v{0};  // (p2sq - n1)/(n-1), kept exact
    degree_t dmax = 0;

    static BoundInput from_statistics(const DegreeStatistics& s) {
        const auto nm = norms(s);
        BoundInput in;
        in.p1 = nm.p1;
        in.p2sq = nm.p2sq;
        in.n1 = nm.n1;
        in.n = s.node_count();
        in.dmax = s.max_degree();
        if (in.n >= 2) in.v = rational(bigint(nm.p2sq - nm.n1), bigint(in.n - 1));
        return in;
    }
};

namespace detail {
inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }
} // namespace detail

/// Stretched-exponential tail for |V| at level beta*p1/sqrt(p2sq-n1).
inline double bound_height_tail(const BoundInput& in, double beta) {
    if (in.p2sq == in.n1) throw path_degenerate("no degree >= 2: use the exact uniform depth law");
    if (!(beta > beta_threshold)) return 1.0;
    const double ratio = static_cast<double>(in.p1) / std::sqrt(static_cast<double>(in.p2sq - in.n1));
    const double b13 = std::cbrt(beta);
    return detail::clamp01(std::exp(-b13 / 3.0 * ratio) + 2.0 * std::exp(-b13 * b13 / 24.0));
}

/// Height level matching bound_height_tail: beta * p1 / sqrt(p2sq - n1).
inline double height_level(const BoundInput& in, double beta) {
    if (in.p2sq == in.n1) throw path_degenerate("no degree >= 2");
    return beta * static_cast<double>(in.p1) / std::sqrt(static_cast<double>(in.p2sq - in.n1));
}

/// Sub-Gaussian bound on P(|V| >= ell) when n(1) = 0.
inline double bound_height_tail_no_ones(const BoundInput& in, std::int64_t ell) {
    if (in.n1 > 0) throw has_ones("bound needs n(1) = 0");
    if (ell < 1) return 1.0;
    const double l = static_cast<double>(ell);
    return detail::clamp01(std::exp(-l * l / (2.0 * static_cast<double>(in.p1))));
}

/// exp(-(ell-1)^2/(2 p1)). Valid for the record count sup(k : tau > M(k)) of the
/// Poissonized construction; see PoissonRun.
inline double bound_sigma_tail_no_ones(const BoundInput& in, std::int64_t ell) {
    if (in.n1 > 0) throw has_ones("bound needs n(1) = 0");
    if (ell < 1) return 1.0;
    const double l = static_cast<double>(ell - 1);
    return detail::clamp01(std::exp(-l * l / (2.0 * static_cast<double>(in.p1))));
}

/// Level matching bound_tau: beta * sqrt((n-1)/v).
inline double tau_level(const BoundInput& in, double beta) {
    if (in.v == 0) return std::numeric_limits<double>::infinity();
    return beta * std::sqrt(to_double(rational(bigint(in.n - 1)) / in.v));
}

inline double bound_tau(const BoundInput& in, double beta) {
    if (in.v == 0) return 0.0;
    if (!(beta >= beta_threshold)) return 1.0;
    const double b23 = std::pow(beta, 2.0 / 3.0);
    const double scaled = b23 * to_double(rational(bigint(in.n - 1)) / in.v);
    return detail::clamp01(std::exp(-std::sqrt(scaled) / 3.0) + 2.0 * std::exp(-b23 / 24.0));
}

namespace detail {
inline void require_degrees(std::span<const degree_t> d) {
    if (d.size() < 2) throw out_of_range("g needs at least two degrees");
}
inline degree_t max_of(std::span<const degree_t> d) { return *std::max_element(d.begin(), d.end()); }
inline double half_scale(std::span<const degree_t> d) { return 2.0 * static_cast<double>(d.size() - 1); }
} // namespace detail

/// g(t,d) = prod_{d_i >= 2} (1 + p_i t) exp(-p_i t), p_i = d_i / (2(n-1)).
inline double g_eval(double t, std::span<const degree_t> d) {
    detail::require_degrees(d);
    if (t < 0) throw out_of_range("g needs t >= 0");
    double log_g = 0.0;
    for (auto di : d) {
        if (di < 2) continue;
        const double x = static_cast<double>(di) * t / detail::half_scale(d);
        log_g += std::log1p(x) - x;
    }
    return std::exp(log_g);
}

/// sum_{k=2}^{terms} (-1)^{k+1}/k sum_{d_i >= 2} (p_i t)^k, the series for log g.
inline double g_log_series(double t, std::span<const degree_t> d, int terms) {
    detail::require_degrees(d);
    const double limit = detail::half_scale(d) / static_cast<double>(detail::max_of(d));
    if (t < 0 || !(t < limit)) throw out_of_range("series needs 0 <= t < 2(n-1)/dmax");
    double total = 0.0;
    for (auto di : d) {
        if (di < 2) continue;
        const double x = static_cast<double>(di) * t / detail::half_scale(d);
        double power = x;
        for (int k = 2; k <= terms; ++k) {
            power *= x;
            total += ((k % 2 == 0) ? -1.0 : 1.0) * power / k;
        }
    }
    return total;
}

/// v = sum_{d_i >= 2} d_i^2 / (n-1) for a degree list.
inline double v_of(std::span<const degree_t> d) {
    double s = 0.0;
    for (auto di : d)
        if (di >= 2) s += static_cast<double>(di) * di;
    return s / static_cast<double>(d.size() - 1);
}

/// exp(-v t^2 / (24(n-1))), valid for 0 <= t <= (n-1)/dmax.
inline double g_upper(double t, std::span<const degree_t> d) {
    detail::require_degrees(d);
    const double nm1 = static_cast<double>(d.size() - 1);
    if (t < 0 || t > nm1 / static_cast<double>(detail::max_of(d)))
        throw out_of_range("upper bound needs 0 <= t <= (n-1)/dmax");
    return std::exp(-v_of(d) * t * t / (24.0 * nm1));
}

/// Right side of |log g + v t^2/(8(n-1))| <= (dmax t/(6(n-1) - 3 dmax t)) (v t^2/(4(n-1))).
inline double g_error_band(double t, std::span<const degree_t> d) {
    detail::require_degrees(d);
    const double nm1 = static_cast<double>(d.size() - 1);
    const double dm = static_cast<double>(detail::max_of(d));
    if (t < 0 || !(t < 2.0 * nm1 / dm)) throw out_of_range("error band needs 0 <= t < 2(n-1)/dmax");
    return dm * t / (6.0 * nm1 - 3.0 * dm * t) * (v_of(d) * t * t / (4.0 * nm1));
}

/// Quadratic term of log g: v t^2 / (8(n-1)).
inline double g_quadratic(double t, std::span<const degree_t> d) {
    return v_of(d) * t * t / (8.0 * static_cast<double>(d.size() - 1));
}

/// Chernoff bound exp(-t((h/t)log(h/t) - h/t + 1)) on P(Poisson(t) > h), h >= t > 0.
inline double poisson_tail_bound(double t, double h) {
    if (!(t > 0) || h < t) throw out_of_range("Poisson tail bound needs h >= t > 0");
    const double r = h / t;
    return std::exp(-t * (r * std::log(r) - r + 1.0));
}

/// P(Poisson(t) > h) computed through the regularised incomplete gamma function.
inline double poisson_tail_exact(double t, double h) {
    const double k = std::floor(h) + 1.0;
    return boost::math::gamma_p(k, t);
}

} // namespace arbor
