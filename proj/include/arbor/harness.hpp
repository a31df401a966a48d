#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bounds.hpp"
#include "core_trees.hpp"
#include "enumeration.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "samplers.hpp"
#include "simply_generated.hpp"
#include "stats.hpp"

namespace arbor {

inline constexpr const char* library_version = "0.1.0";
inline constexpr double nan = std::numeric_limits<double>::quiet_NaN();

enum class Verdict { pass, fail, info };

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::info: return "INFO";
    }
    return "?";
}

inline Verdict verdict_of(bool ok) { return ok ? Verdict::pass : Verdict::fail; }

/// One row of a report. Informational rows carry no verdict.
struct Cell {
    std::string experiment;
    std::uint64_t n = 0;
    double grid_value = nan;
    double empirical = nan;
    double ci_lo = nan;
    double ci_hi = nan;
    double bound = nan;
    Verdict verdict = Verdict::info;
    nlohmann::json detail = nlohmann::json::object();
};

struct ExperimentReport {
    std::string kind;
    nlohmann::json config;
    std::vector<Cell> cells;
    double wall_clock_seconds = 0.0;

    [[nodiscard]] bool all_pass() const {
        return std::none_of(cells.begin(), cells.end(), [](const Cell& c) { return c.verdict == Verdict::fail; });
    }

    [[nodiscard]] std::size_t failures() const {
        return static_cast<std::size_t>(
            std::count_if(cells.begin(), cells.end(), [](const Cell& c) { return c.verdict == Verdict::fail; }));
    }

    /// Everything except the wall clock; byte-identical for identical (config, seed).
    [[nodiscard]] nlohmann::json body_json() const {
        nlohmann::json j;
        j["version"] = library_version;
        j["kind"] = kind;
        j["config"] = config;
        j["all_pass"] = all_pass();
        auto& rows = j["cells"] = nlohmann::json::array();
        for (const auto& c : cells) {
            rows.push_back({{"experiment", c.experiment},
                            {"n", c.n},
                            {"grid_value", c.grid_value},
                            {"empirical", c.empirical},
                            {"ci_lo", c.ci_lo},
                            {"ci_hi", c.ci_hi},
                            {"bound", c.bound},
                            {"verdict", to_string(c.verdict)},
                            {"detail", c.detail}});
        }
        return j;
    }

    [[nodiscard]] nlohmann::json to_json() const {
        auto j = body_json();
        j["wall_clock_seconds"] = wall_clock_seconds;
        return j;
    }

    [[nodiscard]] std::string to_csv() const {
        std::ostringstream out;
        out.precision(17);
        auto num = [&](double x) {
            if (std::isfinite(x)) out << x;
            else if (std::isinf(x)) out << (x > 0 ? "inf" : "-inf");
        };
        out << "experiment,n,grid_value,empirical,ci_lo,ci_hi,bound,verdict\n";
        for (const auto& c : cells) {
            out << c.experiment << ',' << c.n << ',';
            num(c.grid_value);
            out << ',';
            num(c.empirical);
            out << ',';
            num(c.ci_lo);
            out << ',';
            num(c.ci_hi);
            out << ',';
            num(c.bound);
            out << ',' << to_string(c.verdict) << '\n';
        }
        return out.str();
    }
};

namespace detail {

/// FNV-1a, stable across platforms (std::hash is not).
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed of one experiment cell; replication r then uses stream r.
inline std::uint64_t cell_seed(std::uint64_t seed, std::string_view tag, std::uint64_t n) {
    return mix64(seed ^ mix64(fnv1a(tag) + n));
}

class Stopwatch {
public:
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct MeanStat {
    double mean = nan;
    double se = nan;
    double median = nan;
};

inline MeanStat mean_stat(std::vector<double> xs) {
    MeanStat m;
    if (xs.empty()) return m;
    const double k = static_cast<double>(xs.size());
    m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.se = xs.size() > 1 ? std::sqrt(ss / (k - 1) / k) : 0.0;
    std::sort(xs.begin(), xs.end());
    const std::size_t h = xs.size() / 2;
    m.median = xs.size() % 2 ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);
    return m;
}

inline Cell mean_cell(std::string experiment, std::uint64_t n, double grid, const MeanStat& m) {
    Cell c;
    c.experiment = std::move(experiment);
    c.n = n;
    c.grid_value = grid;
    c.empirical = m.mean;
    c.ci_lo = m.mean - 1.959963984540054 * m.se;
    c.ci_hi = m.mean + 1.959963984540054 * m.se;
    c.detail["median"] = m.median;
    c.detail["standard_error"] = m.se;
    return c;
}

/// Smallest bound a tail cell with `reps` draws is asked to certify: 8 z^2 / reps.
/// Below it a true tail of half the bound still leaves the Wilson upper end above
/// the bound, so certification is out of reach at this sample size.
inline double certification_floor(std::uint64_t reps) {
    return 8.0 * 1.959963984540054 * 1.959963984540054 / static_cast<double>(reps);
}

/// Bound-versus-tail verdict. Above the certification floor the whole Wilson
/// interval must lie below the bound. Below it the cell fails only when the whole
/// interval lies above the bound.
inline Cell tail_cell(std::string experiment, std::uint64_t n, double grid, std::uint64_t hits, std::uint64_t reps,
                      double bound) {
    Cell c;
    c.experiment = std::move(experiment);
    c.n = n;
    c.grid_value = grid;
    c.empirical = static_cast<double>(hits) / static_cast<double>(reps);
    const auto ci = wilson_interval(hits, reps);
    c.ci_lo = ci.lo;
    c.ci_hi = ci.hi;
    c.bound = bound;
    if (bound >= certification_floor(reps)) {
        c.verdict = verdict_of(ci.hi <= bound);
        c.detail["rule"] = "certify";
    } else {
        c.verdict = verdict_of(ci.lo <= bound);
        c.detail["rule"] = "no_violation";
    }
    c.detail["hits"] = hits;
    c.detail["reps"] = reps;
    return c;
}

/// Exact upper tail P(X > x) of an exact law.
inline rational exact_tail_above(const ExactDistribution& d, double x) {
    rational out(0);
    for (std::size_t i = 0; i < d.support.size(); ++i)
        if (static_cast<double>(d.support[i]) > x) out += d.mass[i];
    return out;
}

/// Number of values >= ell for every ell in [0, max+1].
inline std::vector<std::uint64_t> tail_counts(const std::vector<std::size_t>& values) {
    std::size_t top = 0;
    for (auto v : values) top = std::max(top, v);
    std::vector<std::uint64_t> ge(top + 2, 0);
    for (auto v : values) ++ge[v];
    for (std::size_t i = top + 1; i-- > 0;) ge[i] += ge[i + 1];
    return ge;
}

inline std::uint64_t count_ge(const std::vector<std::uint64_t>& ge, std::uint64_t ell) {
    return ell < ge.size() ? ge[ell] : 0;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Equivalence suite: exhaustive oracle checks on every small degree statistics.

inline const std::vector<double> default_beta_grid{80.0, 125.0, 216.0, 343.0};

inline ExperimentReport run_equivalence_suite(std::size_t max_n, std::size_t max_spine = 4) {
    if (max_n > 10) throw bad_parameters("equivalence suite is limited to max_n <= 10");
    detail::Stopwatch clock;
    ExperimentReport report;
    report.kind = "equivalence";
    report.config = {{"max_n", max_n}, {"max_spine", max_spine}, {"beta_grid", default_beta_grid}};

    for (std::size_t nodes = 1; nodes <= max_n; ++nodes) {
        for (const auto& s : all_tree_statistics(nodes)) {
            const auto label = s.to_json();
            const auto trees = enumerate_trees(s, max_n);
            const bigint formula = count_forests(s);
            {
                Cell c;
                c.experiment = "forest_count";
                c.n = nodes;
                c.empirical = static_cast<double>(trees.size());
                c.bound = formula.convert_to<double>();
                c.verdict = verdict_of(bigint(trees.size()) == formula);
                c.detail["statistics"] = label;
                report.cells.push_back(std::move(c));
            }
            const auto by_m = exact_M_distribution(s, max_n);
            const auto by_v = exact_mark_height_distribution(s, max_n);
            {
                rational worst(0);
                const auto top = std::max(by_m.support.empty() ? 0 : by_m.support.back(),
                                          by_v.support.empty() ? 0 : by_v.support.back());
                for (std::size_t k = 0; k <= top; ++k) {
                    rational diff = by_m.at(k) - by_v.at(k);
                    if (diff < 0) diff = -diff;
                    worst = std::max(worst, diff);
                }
                Cell c;
                c.experiment = "M_equals_mark_height";
                c.n = nodes;
                c.empirical = to_double(worst);
                c.bound = 0.0;
                c.verdict = verdict_of(by_m == by_v);
                c.detail["statistics"] = label;
                c.detail["law"] = by_v.to_json();
                report.cells.push_back(std::move(c));
            }
            {
                // Enumerated spine classes: for each marked tree and k <= max_spine
                // not exceeding the mark depth, count the spinal prefix.
                std::map<std::vector<degree_t>, std::uint64_t> seen;
                for (const auto& t : trees) {
                    const auto parents = t.parents();
                    for (std::size_t v = 0; v < t.size(); ++v) {
                        std::vector<degree_t> path;
                        for (std::size_t u = v; parents[u] != PlaneTree::npos; u = parents[u])
                            path.push_back(t.degree(parents[u]));
                        std::reverse(path.begin(), path.end());
                        for (std::size_t k = 0; k <= std::min(max_spine, path.size()); ++k)
                            ++seen[std::vector<degree_t>(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(k))];
                    }
                }
                const rational marked = rational(formula * nodes);
                std::vector<degree_t> alphabet;
                for (auto [deg, m] : s.counts()) alphabet.push_back(deg);
                std::uint64_t checked = 0, mismatches = 0;
                std::vector<degree_t> d;
                std::function<void()> rec = [&] {
                    const auto usage = UsageVector::of(d);
                    if (!usage.fits(s)) return;
                    ++checked;
                    const auto it = seen.find(d);
                    const rational by_enum(it == seen.end() ? 0 : it->second);
                    const rational closed = spine_probability(s, d);
                    const rational by_count = rational(count_spine_class(s, d)) / marked;
                    if (closed != by_enum / marked || closed != by_count) ++mismatches;
                    if (d.size() == max_spine) return;
                    for (auto deg : alphabet) {
                        d.push_back(deg);
                        rec();
                        d.pop_back();
                    }
                };
                rec();
                Cell c;
                c.experiment = "spine_probability";
                c.n = nodes;
                c.empirical = static_cast<double>(mismatches);
                c.bound = 0.0;
                c.verdict = verdict_of(mismatches == 0);
                c.detail["statistics"] = label;
                c.detail["sequences_checked"] = checked;
                report.cells.push_back(std::move(c));
            }
            const auto in = BoundInput::from_statistics(s);
            if (in.p2sq > in.n1) {
                // Worst grid point of the stretched-exponential bound against the exact law.
                Cell c;
                c.experiment = "height_beta_exact";
                c.n = nodes;
                double worst = -1.0;
                bool ok = true;
                for (double beta : default_beta_grid) {
                    const rational tail = detail::exact_tail_above(by_v, height_level(in, beta));
                    const double bound = bound_height_tail(in, beta);
                    ok = ok && to_double(tail) <= bound;
                    if (to_double(tail) - bound > worst) {
                        worst = to_double(tail) - bound;
                        c.grid_value = beta;
                        c.empirical = to_double(tail);
                        c.bound = bound;
                    }
                }
                c.ci_lo = c.ci_hi = c.empirical;
                c.verdict = verdict_of(ok);
                c.detail["statistics"] = label;
                report.cells.push_back(std::move(c));
            }
            if (in.n1 == 0 && nodes >= 2) {
                Cell c;
                c.experiment = "height_ell_exact";
                c.n = nodes;
                double worst = -2.0;
                bool ok = true;
                for (std::size_t ell = 1; ell <= nodes; ++ell) {
                    const double tail = to_double(by_v.tail(ell));
                    const double bound = bound_height_tail_no_ones(in, static_cast<std::int64_t>(ell));
                    ok = ok && tail <= bound;
                    if (tail - bound > worst) {
                        worst = tail - bound;
                        c.grid_value = static_cast<double>(ell);
                        c.empirical = tail;
                        c.bound = bound;
                    }
                }
                c.ci_lo = c.ci_hi = c.empirical;
                c.verdict = verdict_of(ok);
                c.detail["statistics"] = label;
                report.cells.push_back(std::move(c));
            }
        }
    }
    report.wall_clock_seconds = clock.seconds();
    return report;
}

// ---------------------------------------------------------------------------
// Named degree statistics used by the tail sweeps.

/// Full binary tree statistics with `nodes` = 2^k - 1 nodes.
inline DegreeStatistics full_binary_statistics(std::uint64_t nodes) {
    if (nodes % 2 == 0) throw invalid_statistics("full binary statistics need an odd node count");
    return DegreeStatistics{{0, (nodes + 1) / 2}, {2, (nodes - 1) / 2}};
}

/// Heavy-tailed statistics without degree-one nodes: n(c) = floor(0.2 n c^-2.5)
/// for c >= 2 until half the edges are used, one hub takes the remaining edges.
inline DegreeStatistics heavy_tailed_statistics(std::uint64_t nodes) {
    if (nodes < 8) throw invalid_statistics("heavy-tailed statistics need at least 8 nodes");
    const std::uint64_t edges = nodes - 1;
    DegreeStatistics::map_type counts;
    std::uint64_t used = 0;
    for (degree_t c = 2;; ++c) {
        const auto m = static_cast<std::uint64_t>(0.2 * static_cast<double>(nodes) * std::pow(c, -2.5));
        if (m == 0 || used + c * m > edges / 2) break;
        counts[c] = m;
        used += c * m;
    }
    const std::uint64_t hub = edges - used;
    counts[static_cast<degree_t>(hub)] += 1;
    std::uint64_t internal = 0;
    for (auto [c, m] : counts) internal += m;
    counts[0] = nodes - internal;
    return DegreeStatistics(std::move(counts));
}

/// Resolves {"family":"full_binary"|"heavy_tailed","nodes":N} or a plain statistics object.
inline DegreeStatistics statistics_from_json(const nlohmann::json& j) {
    if (j.is_object() && j.contains("family")) {
        const auto family = j.at("family").get<std::string>();
        const auto nodes = j.at("nodes").get<std::uint64_t>();
        if (family == "full_binary") return full_binary_statistics(nodes);
        if (family == "heavy_tailed") return heavy_tailed_statistics(nodes);
        throw invalid_statistics("unknown statistics family " + family);
    }
    return DegreeStatistics::from_json(j);
}

// ---------------------------------------------------------------------------
// Tail sweeps: Monte Carlo tails against the closed-form bounds.

struct TailSweepConfig {
    DegreeStatistics stats;
    std::uint64_t reps = 100000;
    std::uint64_t seed = 1;
    std::vector<double> grid = default_beta_grid;
    bool sigma = true; // Poissonized record count against the sub-Gaussian bound
    bool tau = true;   // tau against the stretched-exponential bound

    [[nodiscard]] nlohmann::json to_json() const {
        return {{"statistics", stats.to_json()}, {"reps", reps}, {"seed", seed},
                {"grid", grid},                  {"sigma", sigma}, {"tau", tau}};
    }
};

inline ExperimentReport run_tail_sweep(const TailSweepConfig& cfg) {
    if (cfg.reps == 0) throw bad_parameters("replications must be positive");
    detail::Stopwatch clock;
    ExperimentReport report;
    report.kind = "tail_sweep";
    report.config = cfg.to_json();
    const auto& s = cfg.stats;
    const auto in = BoundInput::from_statistics(s);
    const std::uint64_t n = s.node_count();

    const std::uint64_t seed_v = detail::cell_seed(cfg.seed, "mark_height", n);
    const auto heights = parallel_map<std::size_t>(cfg.reps, [&](std::size_t r) {
        RngStream rng(seed_v, r);
        return sample_mark_height(s, rng);
    });
    const auto ge_v = detail::tail_counts(heights);

    for (double beta : cfg.grid) {
        const double level = height_level(in, beta); // throws path_degenerate for paths
        const double bound = bound_height_tail(in, beta);
        const auto above = detail::count_ge(ge_v, static_cast<std::uint64_t>(std::floor(level)) + 1);
        auto c = detail::tail_cell("height_beta", n, beta, above, cfg.reps, bound);
        c.detail["level"] = level;
        report.cells.push_back(std::move(c));
    }

    // Sub-Gaussian sweeps run over every ell until the bound drops below 1e-12.
    auto ell_limit = [&] {
        const double cut = std::sqrt(2.0 * static_cast<double>(in.p1) * 12.0 * std::log(10.0));
        return std::min<std::uint64_t>(n, static_cast<std::uint64_t>(std::ceil(cut)) + 1);
    };
    if (in.n1 == 0 && n >= 2) {
        for (std::uint64_t ell = 1; ell <= ell_limit(); ++ell)
            report.cells.push_back(detail::tail_cell("height_ell", n, static_cast<double>(ell),
                                                     detail::count_ge(ge_v, ell), cfg.reps,
                                                     bound_height_tail_no_ones(in, static_cast<std::int64_t>(ell))));
    }

    if ((cfg.sigma || cfg.tau) && n >= 2) {
        struct Run {
            std::size_t sigma_records = 0;
            std::optional<std::size_t> tau;
        };
        const std::uint64_t seed_p = detail::cell_seed(cfg.seed, "poissonized", n);
        const auto runs = parallel_map<Run>(cfg.reps, [&](std::size_t r) {
            RngStream rng(seed_p, r);
            const auto run = sample_sigma_poissonized(s, rng);
            return Run{run.sigma_records, run.tau};
        });
        if (cfg.sigma && in.n1 == 0) {
            std::vector<std::size_t> sig;
            for (const auto& run : runs) sig.push_back(run.sigma_records);
            const auto ge = detail::tail_counts(sig);
            for (std::uint64_t ell = 1; ell <= ell_limit(); ++ell)
                report.cells.push_back(detail::tail_cell("sigma_records_ell", n, static_cast<double>(ell),
                                                         detail::count_ge(ge, ell), cfg.reps,
                                                         bound_sigma_tail_no_ones(in, static_cast<std::int64_t>(ell))));
        }
        if (cfg.tau && in.v > 0) {
            for (double beta : cfg.grid) {
                const double level = tau_level(in, beta);
                std::uint64_t above = 0;
                for (const auto& run : runs)
                    if (!run.tau || static_cast<double>(*run.tau) > level) ++above;
                auto c = detail::tail_cell("tau_beta", n, beta, above, cfg.reps, bound_tau(in, beta));
                c.detail["level"] = level;
                report.cells.push_back(std::move(c));
            }
        }
    }
    report.wall_clock_seconds = clock.seconds();
    return report;
}

// ---------------------------------------------------------------------------
// Convergence trends for conditioned Bienayme trees.

struct ConvergenceConfig {
    std::optional<OffspringDistribution> mu;
    std::vector<std::uint64_t> sizes{200, 800, 3200};
    std::uint64_t reps = 200;
    std::uint64_t seed = 1;
    /// "heavy": width/sqrt(n) must increase and height/(sqrt(n) log^3 n) decrease.
    /// "control": mean width/sqrt(n) must not double across the ladder.
    std::string expect = "heavy";
    /// Non-empty switches to the mu(1) = 1 - eps family at sizes.front().
    std::vector<double> epsilons;
    std::uint64_t max_attempts = default_max_attempts;

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json j{{"sizes", sizes}, {"reps", reps}, {"seed", seed}, {"expect", expect}};
        if (mu) j["mu"] = mu->to_json();
        if (!epsilons.empty()) j["epsilons"] = epsilons;
        return j;
    }
};

/// Offspring law mu(1) = 1 - eps, mu(0) = mu(2) = eps/2.
inline OffspringDistribution lazy_binary(double eps) {
    if (!(eps > 0.0 && eps <= 1.0)) throw invalid_distribution("eps must lie in (0, 1]");
    return OffspringDistribution::from_masses({eps / 2, 1.0 - eps, eps / 2});
}

namespace detail {

struct TreeShape {
    double width = 0, height = 0, mean_depth = 0;
};

inline std::vector<TreeShape> sample_shapes(const ConditionedTreeSampler& sampler, std::uint64_t seed,
                                            std::uint64_t reps) {
    return parallel_map<TreeShape>(reps, [&](std::size_t r) {
        RngStream rng(seed, r);
        const auto t = sampler(rng);
        const auto depths = t.depths();
        const double total = std::accumulate(depths.begin(), depths.end(), 0.0);
        return TreeShape{static_cast<double>(t.width()), static_cast<double>(t.height()),
                         total / static_cast<double>(t.size())};
    });
}

inline bool strictly_monotone(const std::vector<double>& xs, bool increasing) {
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (increasing ? !(xs[i] > xs[i - 1]) : !(xs[i] < xs[i - 1])) return false;
    return true;
}

} // namespace detail

inline ExperimentReport run_convergence(const ConvergenceConfig& cfg) {
    if (cfg.reps == 0 || cfg.sizes.empty()) throw bad_parameters("need replications and sizes");
    detail::Stopwatch clock;
    ExperimentReport report;
    report.kind = "convergence";
    report.config = cfg.to_json();

    if (!cfg.epsilons.empty()) {
        const std::uint64_t n = cfg.sizes.front();
        std::vector<double> estimates;
        for (double eps : cfg.epsilons) {
            const auto mu = lazy_binary(eps);
            ConditionedTreeSampler sampler(log_masses(mu, n), n, cfg.max_attempts);
            const auto shapes = detail::sample_shapes(
                sampler, detail::cell_seed(cfg.seed, "lazy_binary/" + std::to_string(eps), n), cfg.reps);
            std::vector<double> scaled;
            const double factor = std::sqrt(1.0 - mu.mass(0) - mu.mass(1)) / std::sqrt(static_cast<double>(n));
            for (const auto& sh : shapes) scaled.push_back(sh.mean_depth * factor);
            const auto m = detail::mean_stat(scaled);
            estimates.push_back(m.mean);
            report.cells.push_back(detail::mean_cell("mark_height_constant", n, eps, m));
        }
        Cell c;
        c.experiment = "mark_height_constant_spread";
        c.n = n;
        const auto [lo, hi] = std::minmax_element(estimates.begin(), estimates.end());
        c.empirical = *hi / *lo;
        c.bound = 2.0;
        c.verdict = verdict_of(c.empirical < 2.0);
        report.cells.push_back(std::move(c));
        report.wall_clock_seconds = clock.seconds();
        return report;
    }

    if (!cfg.mu) throw bad_parameters("convergence run needs an offspring distribution");
    if (cfg.expect != "heavy" && cfg.expect != "control") throw bad_parameters("expect must be heavy or control");
    std::vector<double> widths, heights;
    for (auto n : cfg.sizes) {
        ConditionedTreeSampler sampler(log_masses(*cfg.mu, n), n, cfg.max_attempts);
        const auto shapes = detail::sample_shapes(sampler, detail::cell_seed(cfg.seed, "bienayme", n), cfg.reps);
        const double rn = std::sqrt(static_cast<double>(n));
        const double log3 = std::pow(std::log(static_cast<double>(n)), 3.0);
        std::vector<double> w, h, v;
        for (const auto& sh : shapes) {
            w.push_back(sh.width / rn);
            h.push_back(sh.height / (rn * log3));
            v.push_back(sh.mean_depth / rn);
        }
        const auto mw = detail::mean_stat(w), mh = detail::mean_stat(h), mv = detail::mean_stat(v);
        widths.push_back(mw.mean);
        heights.push_back(mh.mean);
        report.cells.push_back(detail::mean_cell("width_over_sqrt_n", n, nan, mw));
        report.cells.push_back(detail::mean_cell("height_over_sqrt_n_log3_n", n, nan, mh));
        report.cells.push_back(detail::mean_cell("mark_height_over_sqrt_n", n, nan, mv));
    }
    const std::uint64_t last = cfg.sizes.back();
    if (cfg.expect == "heavy") {
        Cell w;
        w.experiment = "width_trend_increasing";
        w.n = last;
        w.empirical = widths.back() / widths.front();
        w.verdict = verdict_of(detail::strictly_monotone(widths, true));
        w.detail["means"] = widths;
        report.cells.push_back(std::move(w));
        Cell h;
        h.experiment = "height_trend_decreasing";
        h.n = last;
        h.empirical = heights.back() / heights.front();
        h.verdict = verdict_of(detail::strictly_monotone(heights, false));
        h.detail["means"] = heights;
        report.cells.push_back(std::move(h));
    } else {
        Cell w;
        w.experiment = "width_no_doubling";
        w.n = last;
        w.empirical = widths.back() / widths.front();
        w.bound = 2.0;
        w.verdict = verdict_of(w.empirical < 2.0);
        w.detail["means"] = widths;
        report.cells.push_back(std::move(w));
    }
    report.wall_clock_seconds = clock.seconds();
    return report;
}

// ---------------------------------------------------------------------------
// Concentration of degree statistics.

struct ConcentrationConfig {
    std::string cls = "prop2.5"; // prop2.3 | prop2.4 | prop2.5 | thm5.2 | thm5.3
    std::optional<OffspringDistribution> mu;
    std::optional<WeightSequence> weights;
    std::uint64_t n = 2000;
    std::uint64_t reps = 200;
    std::uint64_t seed = 1;
    double C = 10.0;          // prop2.3, prop2.4
    double eps = 0.1;         // prop2.5 slack; thm5.2 tolerance
    std::size_t k_max = 3;    // thm5.2
    double threshold = 0.99;  // required pass fraction
    std::vector<std::uint64_t> sizes{6, 7, 8, 9, 10, 11, 12}; // thm5.3
    std::uint64_t max_attempts = default_max_attempts;

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json j{{"class", cls}, {"n", n},         {"reps", reps},      {"seed", seed},
                         {"C", C},       {"eps", eps},     {"k_max", k_max},    {"threshold", threshold}};
        if (mu) j["mu"] = mu->to_json();
        if (weights) j["weights"] = weights->to_json();
        if (cls == "thm5.3") j["sizes"] = sizes;
        return j;
    }
};

namespace detail {

inline Cell fraction_cell(std::string experiment, std::uint64_t n, std::uint64_t hits, std::uint64_t reps,
                          double threshold) {
    Cell c;
    c.experiment = std::move(experiment);
    c.n = n;
    c.empirical = static_cast<double>(hits) / static_cast<double>(reps);
    const auto ci = wilson_interval(hits, reps);
    c.ci_lo = ci.lo;
    c.ci_hi = ci.hi;
    c.bound = threshold;
    c.verdict = verdict_of(c.empirical >= threshold);
    c.detail["hits"] = hits;
    c.detail["reps"] = reps;
    return c;
}

} // namespace detail

inline ExperimentReport run_concentration(const ConcentrationConfig& cfg) {
    if (cfg.reps == 0) throw bad_parameters("replications must be positive");
    detail::Stopwatch clock;
    ExperimentReport report;
    report.kind = "concentration";
    report.config = cfg.to_json();
    const auto& cls = cfg.cls;

    if (cls == "prop2.3" || cls == "prop2.4" || cls == "prop2.5") {
        if (!cfg.mu) throw bad_parameters(cls + " needs an offspring distribution");
        const auto& mu = *cfg.mu;
        const double m0 = mu.mass(0), m1 = mu.mass(1);
        if (!(m0 + m1 < 1.0)) throw bad_parameters("hypothesis fails: mu(0) + mu(1) must be below 1");
        if (cls == "prop2.3" && !(mu.infinite_variance() && mu.mean() <= 1.0))
            throw bad_parameters("hypothesis fails: needs mean <= 1 and infinite variance");
        if (cls == "prop2.4" && !(mu.no_exponential_moments() && mu.mean() < 1.0))
            throw bad_parameters("hypothesis fails: needs mean < 1 and no exponential moments");
        ConditionedTreeSampler sampler(log_masses(mu, cfg.n), cfg.n, cfg.max_attempts);
        const std::uint64_t seed = detail::cell_seed(cfg.seed, cls, cfg.n);
        const double factor = cls == "prop2.5" ? 4.0 * (1.0 - m0 - m1 - cfg.eps) : cfg.C;
        const auto ratios = parallel_map<double>(cfg.reps, [&](std::size_t r) {
            RngStream rng(seed, r);
            const auto nm = norms(degree_statistics(sampler(rng)));
            const double lhs = cls == "prop2.5" ? static_cast<double>(nm.p2sq - nm.n1) : static_cast<double>(nm.p2sq);
            return lhs / static_cast<double>(nm.p1);
        });
        std::uint64_t hits = 0;
        for (double r : ratios) hits += r >= factor;
        auto c = detail::fraction_cell(cls, cfg.n, hits, cfg.reps, cfg.threshold);
        c.grid_value = factor;
        c.detail["required_ratio"] = factor;
        c.detail["min_ratio"] = *std::min_element(ratios.begin(), ratios.end());
        report.cells.push_back(std::move(c));
    } else if (cls == "thm5.2") {
        if (!cfg.weights) throw bad_parameters("thm5.2 needs a weight sequence");
        const auto pi = pi_distribution(*cfg.weights);
        SimplyGeneratedSampler sampler(*cfg.weights, cfg.n, cfg.max_attempts);
        const std::uint64_t seed = detail::cell_seed(cfg.seed, cls, cfg.n);
        const auto devs = parallel_map<double>(cfg.reps, [&](std::size_t r) {
            RngStream rng(seed, r);
            const auto st = degree_statistics(sampler(rng));
            double worst = 0.0;
            for (std::size_t k = 0; k <= cfg.k_max; ++k) {
                const double p = k < pi.masses.size() ? pi.masses[k] : 0.0;
                worst = std::max(worst, std::abs(static_cast<double>(st.count(static_cast<degree_t>(k))) /
                                                     static_cast<double>(cfg.n) - p));
            }
            return worst;
        });
        std::uint64_t hits = 0;
        for (double d : devs) hits += d < cfg.eps;
        auto c = detail::fraction_cell(cls, cfg.n, hits, cfg.reps, cfg.threshold);
        c.grid_value = cfg.eps;
        c.detail["max_deviation"] = *std::max_element(devs.begin(), devs.end());
        c.detail["pi"] = std::vector<double>(pi.masses.begin(),
                                             pi.masses.begin() + static_cast<std::ptrdiff_t>(
                                                                     std::min(pi.masses.size(), cfg.k_max + 1)));
        report.cells.push_back(std::move(c));
    } else if (cls == "thm5.3") {
        if (!cfg.weights) throw bad_parameters("thm5.3 needs a weight sequence");
        if (radius_of_convergence(*cfg.weights).value != 0.0)
            throw bad_parameters("hypothesis fails: thm5.3 needs radius of convergence 0");
        std::vector<double> exact_fractions;
        for (auto n : cfg.sizes) {
            const auto law = statistics_law(*cfg.weights, n);
            double expected = 0.0;
            for (const auto& [s, p] : law) expected += p * static_cast<double>(s.count(0));
            expected /= static_cast<double>(n);
            exact_fractions.push_back(expected);
            SimplyGeneratedSampler sampler(*cfg.weights, n);
            const std::uint64_t seed = detail::cell_seed(cfg.seed, cls, n);
            const auto fr = parallel_map<double>(cfg.reps, [&](std::size_t r) {
                RngStream rng(seed, r);
                const auto t = sampler(rng);
                return static_cast<double>(degree_statistics(t).count(0)) / static_cast<double>(n);
            });
            const auto m = detail::mean_stat(fr);
            auto c = detail::mean_cell("leaf_fraction", n, nan, m);
            c.bound = expected;
            // The Monte Carlo mean must agree with the exact expectation within four standard errors.
            c.verdict = verdict_of(std::abs(m.mean - expected) <= 4.0 * m.se + 1e-12);
            c.detail["exact_expectation"] = expected;
            report.cells.push_back(std::move(c));
        }
        Cell c;
        c.experiment = "leaf_fraction_increasing";
        c.n = cfg.sizes.back();
        c.empirical = exact_fractions.back();
        c.verdict = verdict_of(detail::strictly_monotone(exact_fractions, true));
        c.detail["exact_expectations"] = exact_fractions;
        report.cells.push_back(std::move(c));
    } else {
        throw bad_parameters("unknown concentration class " + cls);
    }
    report.wall_clock_seconds = clock.seconds();
    return report;
}

} // namespace arbor
