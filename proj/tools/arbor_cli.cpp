#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <arbor/arbor.hpp>

using namespace arbor;
using nlohmann::json;

namespace {

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return json::parse(in);
}

template <class T>
std::vector<T> parse_list(const std::string& text) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::istringstream is(item);
        T x{};
        if (!(is >> x)) throw std::runtime_error("bad list entry \"" + item + "\"");
        out.push_back(x);
    }
    if (out.empty()) throw std::runtime_error("empty list \"" + text + "\"");
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

struct Outputs {
    std::string json_path = "-";
    std::string csv_path;
};

void add_outputs(CLI::App* cmd, Outputs& o) {
    cmd->add_option("--json", o.json_path, "JSON report path ('-' for stdout)");
    cmd->add_option("--csv", o.csv_path, "CSV cell table path");
}

int emit(const ExperimentReport& r, const Outputs& o) {
    write_text(o.json_path, r.to_json().dump(2) + "\n");
    if (!o.csv_path.empty()) write_text(o.csv_path, r.to_csv());
    for (const auto& c : r.cells)
        if (c.verdict == Verdict::fail)
            std::cerr << "FAIL " << c.experiment << " n=" << c.n << " grid=" << c.grid_value << '\n';
    return r.all_pass() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Plane trees with fixed degree statistics: exact oracles, samplers and bound checks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(library_version));

    int code = 0;
    Outputs out;

    std::size_t max_n = 9;
    auto* equiv = app.add_subcommand("equiv", "exhaustive equivalence suite up to max-n nodes");
    equiv->add_option("--max-n", max_n, "largest node count (<= 10)");
    add_outputs(equiv, out);

    std::string stats_file, grid = "80,125,216,343";
    std::uint64_t reps = 100000, seed = 1;
    auto* tails = app.add_subcommand("tails", "Monte Carlo tails against the height bounds");
    tails->add_option("--stats", stats_file, "degree statistics JSON")->required();
    tails->add_option("--grid", grid, "comma-separated beta values");
    tails->add_option("--reps", reps, "replications");
    tails->add_option("--seed", seed, "seed");
    add_outputs(tails, out);

    std::string mu_file, sizes = "200,800,3200", expect = "heavy", epsilons;
    std::uint64_t conv_reps = 200;
    auto* converge = app.add_subcommand("converge", "width and height trends of conditioned trees");
    converge->add_option("--mu", mu_file, "offspring distribution JSON");
    converge->add_option("--sizes", sizes, "comma-separated sizes");
    converge->add_option("--reps", conv_reps, "replications per size");
    converge->add_option("--seed", seed, "seed");
    converge->add_option("--expect", expect, "heavy or control")->check(CLI::IsMember({"heavy", "control"}));
    converge->add_option("--epsilons", epsilons, "run the mu(1) = 1 - eps family at the first size instead");
    add_outputs(converge, out);

    ConcentrationConfig conc;
    std::string weights_file, conc_sizes;
    auto* concentrate = app.add_subcommand("concentrate", "degree statistics concentration checks");
    concentrate->add_option("--class", conc.cls, "prop2.3 | prop2.4 | prop2.5 | thm5.2 | thm5.3")
        ->check(CLI::IsMember({"prop2.3", "prop2.4", "prop2.5", "thm5.2", "thm5.3"}));
    concentrate->add_option("--mu", mu_file, "offspring distribution JSON");
    concentrate->add_option("--weights", weights_file, "weight sequence JSON");
    concentrate->add_option("--n", conc.n, "tree size");
    concentrate->add_option("--reps", conc.reps, "replications");
    concentrate->add_option("--seed", conc.seed, "seed");
    concentrate->add_option("--C", conc.C, "constant in the squared-norm inequality");
    concentrate->add_option("--eps", conc.eps, "slack or tolerance");
    concentrate->add_option("--threshold", conc.threshold, "required pass fraction");
    concentrate->add_option("--sizes", conc_sizes, "sizes for the leaf-fraction trend");
    add_outputs(concentrate, out);

    std::uint64_t count = 1;
    bool marked = false;
    auto* sample = app.add_subcommand("sample", "uniform trees with the given degree statistics");
    sample->add_option("--stats", stats_file, "degree statistics JSON")->required();
    sample->add_option("--count", count, "number of trees");
    sample->add_option("--seed", seed, "seed");
    sample->add_flag("--marked", marked, "also draw a uniform mark");

    std::size_t zn_n = 0;
    auto* zn = app.add_subcommand("zn", "partition function Z_n of a weight sequence");
    zn->add_option("--weights", weights_file, "weight sequence JSON")->required();
    zn->add_option("--n", zn_n, "tree size")->required()->check(CLI::PositiveNumber);

    auto* exact = app.add_subcommand("exact", "exact mark-height law by enumeration and by the M recursion");
    exact->add_option("--stats", stats_file, "degree statistics JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*equiv) {
            code = emit(run_equivalence_suite(max_n), out);
        } else if (*tails) {
            TailSweepConfig cfg{statistics_from_json(read_json(stats_file))};
            cfg.grid = parse_list<double>(grid);
            cfg.reps = reps;
            cfg.seed = seed;
            code = emit(run_tail_sweep(cfg), out);
        } else if (*converge) {
            ConvergenceConfig cfg;
            if (!mu_file.empty()) cfg.mu = OffspringDistribution::from_json(read_json(mu_file));
            cfg.sizes = parse_list<std::uint64_t>(sizes);
            cfg.reps = conv_reps;
            cfg.seed = seed;
            cfg.expect = expect;
            if (!epsilons.empty()) cfg.epsilons = parse_list<double>(epsilons);
            code = emit(run_convergence(cfg), out);
        } else if (*concentrate) {
            if (!mu_file.empty()) conc.mu = OffspringDistribution::from_json(read_json(mu_file));
            if (!weights_file.empty()) conc.weights = WeightSequence::from_json(read_json(weights_file));
            if (!conc_sizes.empty()) conc.sizes = parse_list<std::uint64_t>(conc_sizes);
            code = emit(run_concentration(conc), out);
        } else if (*sample) {
            const auto s = statistics_from_json(read_json(stats_file));
            json trees = json::array();
            for (std::uint64_t i = 0; i < count; ++i) {
                RngStream rng(seed, i);
                if (marked) {
                    const auto m = sample_uniform_marked_tree(s, rng);
                    trees.push_back({{"tree", m.tree().to_line()}, {"mark", m.mark()}});
                } else {
                    trees.push_back(sample_uniform_tree(s, rng).to_line());
                }
            }
            std::cout << json{{"statistics", s.to_json()}, {"seed", seed}, {"trees", trees}}.dump(2) << '\n';
        } else if (*zn) {
            const auto w = WeightSequence::from_json(read_json(weights_file));
            json j{{"n", zn_n}, {"weights", w.to_json()}, {"Z_n", partition_Zn(w, zn_n)}};
            // rational weights only for explicit lists and the factorial family
            if (w.is_explicit() || w.rho_hint() == std::optional<double>(0.0))
                j["Z_n_exact"] = partition_Zn_exact(w, zn_n).str();
            std::cout << j.dump(2) << '\n';
        } else if (*exact) {
            const auto s = statistics_from_json(read_json(stats_file));
            const auto by_v = exact_mark_height_distribution(s);
            const auto by_m = exact_M_distribution(s);
            std::cout << json{{"statistics", s.to_json()},
                              {"mark_height", by_v.to_json()},
                              {"M_minus_one", by_m.to_json()},
                              {"equal", by_v == by_m}}
                             .dump(2)
                      << '\n';
            code = by_v == by_m ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return code;
}
