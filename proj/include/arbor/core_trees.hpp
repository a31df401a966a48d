#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "error.hpp"

namespace arbor {

using degree_t = std::uint32_t;
using count_t = std::uint64_t;

/// Sparse degree statistics n(c) of a plane forest with `trees()` components.
///
/// The number of trees is derived from the forest condition
/// sum_c n(c) = a + sum_c c n(c); construction fails unless a >= 1 and n(0) >= a.
class DegreeStatistics {
public:
    using map_type = std::map<degree_t, count_t>;

    /// Single-node tree.
    DegreeStatistics() : counts_{{0, 1}} {}

    explicit DegreeStatistics(map_type counts) : counts_(std::move(counts)) {
        std::erase_if(counts_, [](const auto& kv) { return kv.second == 0; });
        count_t nodes = 0;
        count_t edges = 0;
        for (auto [c, m] : counts_) {
            nodes += m;
            edges += static_cast<count_t>(c) * m;
        }
        if (nodes <= edges)
            throw invalid_statistics("degree statistics describe no forest: nodes " +
                                     std::to_string(nodes) + " <= edges " + std::to_string(edges));
        trees_ = nodes - edges;
        if (count(0) < trees_)
            throw invalid_statistics("n(0) smaller than the number of trees");
        nodes_ = nodes;
        edges_ = edges;
    }

    DegreeStatistics(std::initializer_list<map_type::value_type> init)
        : DegreeStatistics(map_type(init)) {}

    /// Forest statistics with an expected number of trees; throws if inconsistent.
    static DegreeStatistics forest(map_type counts, count_t trees) {
        DegreeStatistics s(std::move(counts));
        if (s.trees() != trees)
            throw invalid_statistics("statistics describe " + std::to_string(s.trees()) +
                                     " trees, expected " + std::to_string(trees));
        return s;
    }

    [[nodiscard]] count_t count(degree_t c) const {
        auto it = counts_.find(c);
        return it == counts_.end() ? 0 : it->second;
    }
    [[nodiscard]] const map_type& counts() const noexcept { return counts_; }
    [[nodiscard]] count_t node_count() const noexcept { return nodes_; }
    [[nodiscard]] count_t edge_count() const noexcept { return edges_; }
    [[nodiscard]] count_t trees() const noexcept { return trees_; }
    [[nodiscard]] bool is_tree() const noexcept { return trees_ == 1; }
    [[nodiscard]] degree_t max_degree() const noexcept { return counts_.rbegin()->first; }

    /// Degree multiset in non-decreasing order.
    [[nodiscard]] std::vector<degree_t> sorted_degrees() const {
        std::vector<degree_t> out;
        out.reserve(nodes_);
        for (auto [c, m] : counts_) out.insert(out.end(), m, c);
        return out;
    }

    friend bool operator==(const DegreeStatistics& a, const DegreeStatistics& b) {
        return a.counts_ == b.counts_;
    }

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::object();
        for (auto [c, m] : counts_) j[std::to_string(c)] = m;
        return j;
    }

    static DegreeStatistics from_json(const nlohmann::json& j) {
        if (!j.is_object()) throw invalid_statistics("degree statistics JSON must be an object");
        map_type m;
        for (const auto& [key, value] : j.items()) {
            std::size_t pos = 0;
            unsigned long c = 0;
            try {
                c = std::stoul(key, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != key.size() || !value.is_number_integer() || value.get<long long>() < 0)
                throw invalid_statistics("bad degree statistics entry \"" + key + "\"");
            m[static_cast<degree_t>(c)] = value.get<count_t>();
        }
        return DegreeStatistics(std::move(m));
    }

private:
    map_type counts_;
    count_t nodes_ = 1;
    count_t edges_ = 0;
    count_t trees_ = 1;
};

/// |n|_1, |n|_2^2 and n(1).
struct Norms {
    count_t p1 = 0;
    count_t p2sq = 0;
    count_t n1 = 0;
    friend bool operator==(const Norms&, const Norms&) = default;
};

inline Norms norms(const DegreeStatistics& s) {
    Norms r;
    for (auto [c, m] : s.counts()) {
        r.p1 += static_cast<count_t>(c) * m;
        r.p2sq += static_cast<count_t>(c) * c * m;
    }
    r.n1 = s.count(1);
    return r;
}

/// Ordered rooted tree stored as its preorder (Lukasiewicz) degree word.
class PlaneTree {
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    explicit PlaneTree(std::vector<degree_t> luka) : luka_(std::move(luka)) {
        if (!is_valid_word(luka_))
            throw invalid_word("not a Lukasiewicz word: " + to_line());
    }

    /// Proper prefix sums of (d-1) stay >= 0 and the full sum is -1.
    static bool is_valid_word(std::span<const degree_t> word) {
        if (word.empty()) return false;
        std::int64_t s = 0;
        for (std::size_t i = 0; i < word.size(); ++i) {
            s += static_cast<std::int64_t>(word[i]) - 1;
            if (i + 1 < word.size() && s < 0) return false;
        }
        return s == -1;
    }

    [[nodiscard]] std::size_t size() const noexcept { return luka_.size(); }
    [[nodiscard]] degree_t degree(std::size_t i) const { return luka_.at(i); }
    [[nodiscard]] const std::vector<degree_t>& luka() const noexcept { return luka_; }

    /// Parent of every node in preorder; the root's parent is npos.
    [[nodiscard]] std::vector<std::size_t> parents() const {
        std::vector<std::size_t> parent(luka_.size(), npos);
        std::vector<std::pair<std::size_t, degree_t>> open; // (node, children still to attach)
        for (std::size_t i = 0; i < luka_.size(); ++i) {
            if (!open.empty()) {
                parent[i] = open.back().first;
                if (--open.back().second == 0) open.pop_back();
            }
            if (luka_[i] > 0) open.emplace_back(i, luka_[i]);
        }
        return parent;
    }

    [[nodiscard]] std::vector<std::size_t> depths() const {
        std::vector<std::size_t> depth(luka_.size(), 0);
        std::vector<std::pair<std::size_t, degree_t>> open; // (depth, remaining)
        for (std::size_t i = 0; i < luka_.size(); ++i) {
            if (!open.empty()) {
                depth[i] = open.back().first + 1;
                if (--open.back().second == 0) open.pop_back();
            }
            if (luka_[i] > 0) open.emplace_back(depth[i], luka_[i]);
        }
        return depth;
    }

    [[nodiscard]] std::vector<std::vector<std::size_t>> children() const {
        std::vector<std::vector<std::size_t>> out(luka_.size());
        auto parent = parents();
        for (std::size_t i = 1; i < luka_.size(); ++i) out[parent[i]].push_back(i);
        return out;
    }

    [[nodiscard]] std::size_t height() const {
        auto d = depths();
        return *std::max_element(d.begin(), d.end());
    }

    /// wid(t,k) for k = 0..height.
    [[nodiscard]] std::vector<std::size_t> width_profile() const {
        std::vector<std::size_t> profile;
        for (auto d : depths()) {
            if (d >= profile.size()) profile.resize(d + 1, 0);
            ++profile[d];
        }
        return profile;
    }

    [[nodiscard]] std::size_t width() const {
        auto p = width_profile();
        return *std::max_element(p.begin(), p.end());
    }

    [[nodiscard]] std::string to_line() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < luka_.size(); ++i) os << (i ? " " : "") << luka_[i];
        return os.str();
    }

    static PlaneTree from_line(std::string_view line) {
        std::vector<degree_t> word;
        std::istringstream is{std::string(line)};
        long long x = 0;
        while (is >> x) {
            if (x < 0) throw invalid_word("negative degree in tree line");
            word.push_back(static_cast<degree_t>(x));
        }
        if (!is.eof()) throw invalid_word("unparsable tree line: " + std::string(line));
        return PlaneTree(std::move(word));
    }

    friend bool operator==(const PlaneTree&, const PlaneTree&) = default;
    friend auto operator<=>(const PlaneTree& a, const PlaneTree& b) { return a.luka_ <=> b.luka_; }

private:
    std::vector<degree_t> luka_;
};

inline PlaneTree build_tree(std::vector<degree_t> luka) { return PlaneTree(std::move(luka)); }

inline DegreeStatistics degree_statistics(const PlaneTree& t) {
    DegreeStatistics::map_type m;
    for (auto d : t.luka()) ++m[d];
    return DegreeStatistics(std::move(m));
}

/// A plane tree with a distinguished node, identified by its 0-based preorder index.
class MarkedTree {
public:
    MarkedTree(PlaneTree tree, std::size_t mark) : tree_(std::move(tree)), mark_(mark) {
        if (mark_ >= tree_.size())
            throw invalid_mark("mark " + std::to_string(mark_) + " outside tree of size " +
                               std::to_string(tree_.size()));
    }

    [[nodiscard]] const PlaneTree& tree() const noexcept { return tree_; }
    [[nodiscard]] std::size_t mark() const noexcept { return mark_; }

    /// Root-to-mark path v^0, ..., v^{|v|}.
    [[nodiscard]] std::vector<std::size_t> ancestors() const {
        auto parent = tree_.parents();
        std::vector<std::size_t> path;
        for (std::size_t v = mark_; v != PlaneTree::npos; v = parent[v]) path.push_back(v);
        std::reverse(path.begin(), path.end());
        return path;
    }

    [[nodiscard]] std::size_t mark_depth() const { return ancestors().size() - 1; }

private:
    PlaneTree tree_;
    std::size_t mark_;
};

/// (deg v^0, ..., deg v^{k-1}) along the root-to-mark path.
inline std::vector<degree_t> spinal_degrees(const MarkedTree& m, std::size_t k) {
    auto path = m.ancestors();
    if (k + 1 > path.size())
        throw k_too_large("spine length " + std::to_string(k) + " exceeds mark depth " +
                          std::to_string(path.size() - 1));
    std::vector<degree_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(m.tree().degree(path[i]));
    return out;
}

} // namespace arbor
