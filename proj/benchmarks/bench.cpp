#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "hollowtree/bintab.hpp"
#include "hollowtree/graph.hpp"
#include "hollowtree/infer.hpp"
#include "hollowtree/io.hpp"
#include "hollowtree/lincalc.hpp"

using namespace hollowtree;

namespace {

CountTable achievement() {
    return parse_counts_json(read_text_file(std::string(HOLLOWTREE_DATA_DIR) +
                                            "/achievement.json"));
}

std::vector<double> random_cells(int d, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<double> cells(std::size_t{1} << d);
    for (double& c : cells) c = u(rng);
    return cells;
}

void bm_fast_hadamard(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    std::vector<double> base = random_cells(d, 17);
    for (auto _ : state) {
        std::vector<double> v = base;
        fast_hadamard(v);
        benchmark::DoNotOptimize(v.data());
    }
    state.SetItemsProcessed(state.iterations() * (std::int64_t{1} << d));
}
BENCHMARK(bm_fast_hadamard)->Arg(8)->Arg(12)->Arg(16);

void bm_lambda_roundtrip(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    std::vector<double> cells = random_cells(d, 29);
    double total = 0.0;
    for (double c : cells) total += c;
    for (double& c : cells) c /= total;
    ProbTable p(d, cells);
    for (auto _ : state) {
        ProbTable back = pi_of_lambda(lambda_of(p));
        benchmark::DoNotOptimize(back[0]);
    }
}
BENCHMARK(bm_lambda_roundtrip)->Arg(5)->Arg(10);

void bm_ipf_fit_achievement(benchmark::State& state) {
    CountTable counts = achievement();
    std::vector<std::pair<int, int>> edges = {{1, 2}, {1, 3}, {2, 3},
                                              {2, 5}, {3, 4}, {4, 5}};
    for (auto _ : state) {
        FitReport fit = ipf_fit(counts, edges, false);
        benchmark::DoNotOptimize(fit.deviance);
    }
}
BENCHMARK(bm_ipf_fit_achievement);

void bm_fit_hollow_tree_achievement(benchmark::State& state) {
    CountTable counts = achievement();
    Graph g = build_graph(5, {{1, 2}, {1, 3}, {2, 3}, {2, 5}, {3, 4}, {4, 5}});
    for (auto _ : state) {
        FitReport fit = fit_hollow_tree(counts, g);
        benchmark::DoNotOptimize(fit.deviance);
    }
}
BENCHMARK(bm_fit_hollow_tree_achievement);

void bm_symmetrize_achievement(benchmark::State& state) {
    CountTable counts = achievement();
    for (auto _ : state) {
        ProbTable sym = symmetrize_table(counts);
        benchmark::DoNotOptimize(sym[0]);
    }
}
BENCHMARK(bm_symmetrize_achievement);

void bm_prime_decomposition(benchmark::State& state) {
    // hollow tree on eight nodes: two cycles and a triangle in a chain
    Graph g = build_graph(8, {{1, 2}, {2, 3}, {3, 4}, {1, 4}, {4, 5}, {3, 5},
                              {5, 6}, {6, 7}, {7, 8}, {5, 8}});
    for (auto _ : state) {
        PrimeDecomposition dec = prime_decomposition(g);
        benchmark::DoNotOptimize(dec.primes.size());
    }
}
BENCHMARK(bm_prime_decomposition);

void bm_partial_invert(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::mt19937 rng(7);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = z(rng);
    Eigen::MatrixXd m = a * a.transpose() + n * Eigen::MatrixXd::Identity(n, n);
    NodeSet half;
    for (int s = 1; s <= n / 2; ++s) half.push_back(s);
    for (auto _ : state) {
        Eigen::MatrixXd out = partial_invert(m, half);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(bm_partial_invert)->Arg(8)->Arg(32);

void bm_screen_achievement(benchmark::State& state) {
    CountTable counts = achievement();
    for (auto _ : state) {
        ScreenResult sr = screen_3factor(counts);
        benchmark::DoNotOptimize(sr.rows.size());
    }
}
BENCHMARK(bm_screen_achievement);

}  // namespace

BENCHMARK_MAIN();
