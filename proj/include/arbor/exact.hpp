#pragma once

#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "core_trees.hpp"

namespace arbor {

using bigint = boost::multiprecision::cpp_int;
using rational = boost::multiprecision::cpp_rational;

inline bigint factorial(std::uint64_t n) {
    bigint r = 1;
    for (std::uint64_t i = 2; i <= n; ++i) r *= i;
    return r;
}

/// (m)_b = m (m-1) ... (m-b+1); zero when b > m.
inline bigint falling_factorial(std::uint64_t m, std::uint64_t b) {
    if (b > m) return 0;
    bigint r = 1;
    for (std::uint64_t i = 0; i < b; ++i) r *= (m - i);
    return r;
}

/// total! / prod parts!; the parts must sum to total.
inline bigint multinomial(std::uint64_t total, const std::vector<std::uint64_t>& parts) {
    bigint r = factorial(total);
    for (auto p : parts) r /= factorial(p);
    return r;
}

inline bigint multinomial(const DegreeStatistics& s) {
    std::vector<std::uint64_t> parts;
    for (auto [c, m] : s.counts()) parts.push_back(m);
    return multinomial(s.node_count(), parts);
}

inline double to_double(const rational& q) { return q.convert_to<double>(); }

} // namespace arbor
