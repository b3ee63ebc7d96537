#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "hollowtree/bintab.hpp"
#include "hollowtree/graph.hpp"
#include "hollowtree/infer.hpp"
#include "support/approx.hpp"
#include "support/datasets.hpp"
#include "support/oracles.hpp"

using namespace hollowtree;

namespace {

void check_pairs_matrix(const Eigen::MatrixXd& m, const datasets::PairValues& want, double tol) {
    for (const auto& [pr, v] : want) {
        CAPTURE(pr.first);
        CAPTURE(pr.second);
        CHECK(m(pr.first - 1, pr.second - 1) == testutil::near(v, tol));
    }
}

std::vector<std::pair<int, int>> all_pairs(int d) {
    std::vector<std::pair<int, int>> out;
    for (int s = 1; s <= d; ++s)
        for (int t = s + 1; t <= d; ++t) out.emplace_back(s, t);
    return out;
}

CountTable scaled_counts(const ProbTable& p, double n) {
    std::vector<double> cells(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) cells[k] = n * p[k];
    return CountTable(p.d(), std::move(cells));
}

const FitTerm& term_of(const FitReport& fit, mask_t subset) {
    for (const FitTerm& t : fit.terms)
        if (t.subset == subset) return t;
    REQUIRE(false);
    return fit.terms.front();
}

mask_t pair_mask(int s, int t) { return (mask_t{1} << (s - 1)) | (mask_t{1} << (t - 1)); }

}  // namespace

TEST_CASE("symmetrize_2x2") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        std::array<double, 4> cells = {u(rng), u(rng), u(rng), u(rng)};
        std::array<double, 4> sym = symmetrize_2x2(cells);
        // palindromic with uniform margins, normalized
        CHECK(sym[0] == doctest::Approx(sym[3]));
        CHECK(sym[1] == doctest::Approx(sym[2]));
        CHECK(sym[0] + sym[1] + sym[2] + sym[3] == doctest::Approx(1.0));
        CHECK(sym[0] + sym[1] == doctest::Approx(0.5));
        // and the odds-ratio survives
        double before = cells[0] * cells[3] / (cells[1] * cells[2]);
        double after = sym[0] * sym[3] / (sym[1] * sym[2]);
        CHECK(after == testutil::near(before, 1e-12 * before));
    }

    // a palindromic input only gets normalized
    std::array<double, 4> pal = {0.8, 0.4, 0.4, 0.8};
    std::array<double, 4> kept = symmetrize_2x2(pal);
    CHECK(kept[0] == doctest::Approx(1.0 / 3.0));
    CHECK(kept[1] == doctest::Approx(1.0 / 6.0));

    // independence symmetrizes to the uniform table
    std::array<double, 4> ind = {0.28, 0.12, 0.42, 0.18};
    for (double x : symmetrize_2x2(ind)) CHECK(x == doctest::Approx(0.25));

    CHECK_THROWS_AS(symmetrize_2x2({0.5, 0.0, 0.25, 0.25}), domain_error);
}

TEST_CASE("symmetrize_table reproduces the published saturated palindromic matrices") {
    CountTable counts = datasets::counts("achievement.json");
    ProbTable sym = symmetrize_table(counts);

    CHECK(is_palindromic(sym));
    CHECK(is_ising(sym, 1e-6));

    MomentSet m = moments(sym);
    check_pairs_matrix(m.rho, datasets::kAchieveRho, 0.002);
    CorrStack cs = concentration_and_theta(m.rho);
    check_pairs_matrix(cs.theta, datasets::kAchieveTheta, 0.002);

    // every two-way margin equals the symmetrized observed margin
    ProbTable obs = counts.to_probs();
    for (auto [s, t] : all_pairs(counts.d())) {
        ProbTable fitted_margin = marginalize(sym, {s, t});
        ProbTable obs_margin = marginalize(obs, {s, t});
        std::array<double, 4> want =
            symmetrize_2x2({obs_margin[0], obs_margin[1], obs_margin[2], obs_margin[3]});
        for (int k = 0; k < 4; ++k)
            CHECK(fitted_margin[k] == testutil::near(want[k], 1e-8));
    }
}

TEST_CASE("symmetrize_table fixes palindromic Ising tables") {
    std::mt19937 rng(5);
    Graph dia = datasets::graph("diamond_graph.json");
    ProbTable p = oracles::random_edge_ising(dia, rng, -0.6, 0.6);
    ProbTable sym = symmetrize_table(scaled_counts(p, 500.0));
    for (std::size_t k = 0; k < p.size(); ++k) CHECK(sym[k] == testutil::near(p[k], 1e-8));

    // a zero pair margin is rejected
    CHECK_THROWS_AS(symmetrize_table(CountTable(2, {5.0, 0.0, 3.0, 2.0})), domain_error);
}

TEST_CASE("ipf_fit on the achievement data: published deviances") {
    CountTable counts = datasets::counts("achievement.json");

    FitReport full = ipf_fit(counts, all_pairs(5), false);
    CHECK(full.deviance == testutil::near(17.653, 0.02));
    CHECK(full.df == 16);

    FitReport sel = ipf_fit(counts, datasets::kSelectedEdges, false);
    CHECK(sel.deviance == testutil::near(23.428, 0.02));
    CHECK(sel.df == 20);

    CHECK(sel.deviance - full.deviance == testutil::near(5.774, 0.02));
    CHECK(sel.df - full.df == 4);

    CHECK(full.iterations > 0);
    CHECK(sel.final_discrepancy <= 1e-10);
}

TEST_CASE("ipf_fit matches sufficient margins and zeroes the excluded terms") {
    CountTable counts = datasets::counts("achievement.json");
    ProbTable obs = counts.to_probs();
    FitReport sel = ipf_fit(counts, datasets::kSelectedEdges, false);

    for (int s = 1; s <= 5; ++s) {
        ProbTable fm = marginalize(sel.fitted, {s});
        ProbTable om = marginalize(obs, {s});
        CHECK(fm[0] == testutil::near(om[0], 1e-9));
    }
    for (auto [s, t] : datasets::kSelectedEdges) {
        ProbTable fm = marginalize(sel.fitted, {s, t});
        ProbTable om = marginalize(obs, {s, t});
        for (int k = 0; k < 4; ++k) CHECK(fm[k] == testutil::near(om[k], 1e-9));
    }

    // the maximum-entropy form kills every non-free interaction
    std::set<mask_t> free_masks;
    for (const FitTerm& t : sel.terms) free_masks.insert(t.subset);
    for (mask_t m = 1; m < sel.lambda.coef.size(); ++m)
        if (!free_masks.count(m)) CHECK(std::abs(sel.lambda.coef[m]) < 1e-6);

    // the report's lambda is the lambda of its own fitted table
    InteractionSet lam = lambda_of(sel.fitted);
    for (mask_t m = 0; m < lam.coef.size(); ++m)
        CHECK(sel.lambda.coef[m] == testutil::near(lam.coef[m], 1e-12));
    CHECK(sel.lambda_count.coef[0] ==
          testutil::near(lam.coef[0] + std::log(counts.total()), 1e-12));
}

TEST_CASE("ipf_fit reproduces the published lambda rows") {
    CountTable counts = datasets::counts("achievement.json");

    FitReport pal = ipf_fit(counts, datasets::kSelectedEdges, true);
    CHECK(pal.terms[0].subset == 0);
    CHECK(pal.terms[0].lambda_count == testutil::near(datasets::kAchievePalLambda[0], 0.01));
    CHECK(pal.terms.size() == 7);
    CHECK(pal.df == 25);
    for (std::size_t j = 0; j < datasets::kSelectedEdges.size(); ++j) {
        auto [s, t] = datasets::kSelectedEdges[j];
        CHECK(term_of(pal, pair_mask(s, t)).lambda_prob ==
              testutil::near(datasets::kAchievePalLambda[6 + j], 0.005));
    }
    // palindromic fits have no main effects
    for (int s = 1; s <= 5; ++s) CHECK(std::abs(pal.lambda.coef[mask_t{1} << (s - 1)]) < 1e-8);

    FitReport gen = ipf_fit(counts, datasets::kSelectedEdges, false);
    CHECK(gen.terms[0].lambda_count == testutil::near(datasets::kAchieveGenLambda[0], 0.01));
    for (int s = 1; s <= 5; ++s)
        CHECK(term_of(gen, mask_t{1} << (s - 1)).lambda_prob ==
              testutil::near(datasets::kAchieveGenLambda[s], 0.005));
    for (std::size_t j = 0; j < datasets::kSelectedEdges.size(); ++j) {
        auto [s, t] = datasets::kSelectedEdges[j];
        CHECK(term_of(gen, pair_mask(s, t)).lambda_prob ==
              testutil::near(datasets::kAchieveGenLambda[6 + j], 0.005));
    }

    // terms are ordered by size then lexicographically on the node lists,
    // so {2,5} precedes {3,4} even though its mask is larger
    auto nodes_of = [](mask_t m) {
        std::vector<int> out;
        for (int s = 1; m; ++s, m >>= 1)
            if (m & 1) out.push_back(s);
        return out;
    };
    for (std::size_t j = 1; j < gen.terms.size(); ++j) {
        int pa = __builtin_popcount(gen.terms[j - 1].subset);
        int pb = __builtin_popcount(gen.terms[j].subset);
        CHECK(pa <= pb);
        if (pa == pb)
            CHECK(nodes_of(gen.terms[j - 1].subset) < nodes_of(gen.terms[j].subset));
    }
}

TEST_CASE("ipf_fit edge cases") {
    // saturated two-variable fit reproduces the observed table
    CountTable small(2, {10.0, 20.0, 30.0, 40.0});
    FitReport sat = ipf_fit(small, {{1, 2}}, false);
    CHECK(sat.deviance == testutil::near(0.0, 1e-9));
    CHECK(sat.df == 0);

    CountTable counts = datasets::counts("achievement.json");
    CHECK_THROWS_AS(ipf_fit(counts, all_pairs(5), false, 1e-10, 1), convergence_error);
    CHECK_THROWS_AS(ipf_fit(counts, {{1, 6}}, false), input_error);
    CHECK_THROWS_AS(ipf_fit(counts, {{1, 1}}, false), input_error);
    CHECK_THROWS_AS(ipf_fit(counts, {{1, 2}, {2, 1}}, false), input_error);
    CHECK_THROWS_AS(ipf_fit(CountTable(2, {0.0, 0.0, 0.0, 0.0}), {{1, 2}}, false), domain_error);

    // a margin with an empty cell cannot be matched by a positive table
    CountTable degen(2, {6.0, 0.0, 4.0, 0.0});  // variable 2 never at -1
    CHECK_THROWS_AS(ipf_fit(degen, {{1, 2}}, false), domain_error);
}

TEST_CASE("fit_hollow_tree agrees with plain proportional fitting") {
    CountTable counts = datasets::counts("achievement.json");
    Graph sel(5);
    for (auto [s, t] : datasets::kSelectedEdges) sel.add_edge(s, t);

    FitReport prime_route = fit_hollow_tree(counts, sel);
    FitReport ipf_route = ipf_fit(counts, datasets::kSelectedEdges, false);
    CHECK(prime_route.df == ipf_route.df);
    CHECK(prime_route.deviance == testutil::near(ipf_route.deviance, 1e-6));
    for (std::size_t k = 0; k < prime_route.fitted.size(); ++k)
        CHECK(prime_route.fitted[k] == testutil::near(ipf_route.fitted[k], 1e-6));

    // thin trees need no iterations: each prime is saturated in closed form
    Graph path = build_graph(5, {{1, 2}, {2, 3}, {3, 4}, {4, 5}});
    FitReport thin = fit_hollow_tree(counts, path);
    CHECK(thin.iterations == 0);
    FitReport thin_ipf = ipf_fit(counts, path.edges(), false);
    for (std::size_t k = 0; k < thin.fitted.size(); ++k)
        CHECK(thin.fitted[k] == testutil::near(thin_ipf.fitted[k], 1e-6));

    // the diamond table lies exactly in its own model
    CountTable dia_counts = datasets::counts("diamond_counts.json");
    Graph dia = datasets::graph("diamond_graph.json");
    FitReport dia_fit = fit_hollow_tree(dia_counts, dia);
    CHECK(dia_fit.deviance == testutil::near(0.0, 1e-6));

    Graph wheel =
        build_graph(5, {{1, 2}, {2, 3}, {3, 4}, {1, 4}, {1, 5}, {2, 5}, {3, 5}, {4, 5}});
    CHECK_THROWS_AS(fit_hollow_tree(counts, wheel), domain_error);
    CHECK_THROWS_AS(fit_hollow_tree(counts, build_graph(4, {{1, 2}})), input_error);
}

TEST_CASE("both fit routes coincide on every small hollow tree") {
    std::mt19937 rng(7);
    for (int d = 3; d <= 5; ++d) {
        oracles::for_each_connected_graph(d, [&](const oracles::Adjacency& adj) {
            if (!oracles::hollow(adj)) return;
            Graph g = oracles::graph_of(adj);
            CountTable counts = scaled_counts(oracles::random_positive_table(d, rng), 1000.0);
            FitReport a = fit_hollow_tree(counts, g);
            FitReport b = ipf_fit(counts, g.edges(), false);
            for (std::size_t k = 0; k < a.fitted.size(); ++k)
                CHECK(a.fitted[k] == testutil::near(b.fitted[k], 1e-6));
            CHECK(a.deviance == testutil::near(b.deviance, 1e-6));
        });
    }
}

TEST_CASE("lr_test_between") {
    CountTable counts = datasets::counts("achievement.json");
    TestResult t = lr_test_between(counts, {4, 5}, {1}, {2, 3});
    CHECK(t.statistic == testutil::near(16.747, 0.02));
    CHECK(t.df == 12);
    CHECK(t.label == "between primes");

    // the hollow-tree fit factorizes over the cutset, so the statistic
    // vanishes on its own fitted counts
    Graph sel(5);
    for (auto [s, t2] : datasets::kSelectedEdges) sel.add_edge(s, t2);
    FitReport fit = fit_hollow_tree(counts, sel);
    CountTable fitted_counts = scaled_counts(fit.fitted, fit.total);
    TestResult zero = lr_test_between(fitted_counts, {4, 5}, {1}, {2, 3});
    CHECK(std::abs(zero.statistic) < 1e-6);

    // empty conditioning set: the ordinary marginal independence statistic
    TestResult marg = lr_test_between(counts, {1}, {2}, {});
    std::vector<double> m = marginalize(counts.to_probs(), {1, 2}).cells();
    double n = counts.total();
    double want = 0.0;
    std::array<double, 4> cell = {m[0], m[1], m[2], m[3]};
    std::array<double, 4> rowcol = {(cell[0] + cell[2]) * (cell[0] + cell[1]),
                                    (cell[1] + cell[3]) * (cell[0] + cell[1]),
                                    (cell[0] + cell[2]) * (cell[2] + cell[3]),
                                    (cell[1] + cell[3]) * (cell[2] + cell[3])};
    for (int k = 0; k < 4; ++k) want += 2.0 * n * cell[k] * std::log(cell[k] / rowcol[k]);
    CHECK(marg.statistic == testutil::near(want, 1e-8));
    CHECK(marg.df == 1);

    CHECK_THROWS_AS(lr_test_between(counts, {}, {1}, {2}), input_error);
    CHECK_THROWS_AS(lr_test_between(counts, {1}, {1}, {2}), input_error);
    CountTable degen(3, {4.0, 2.0, 3.0, 1.0, 0.0, 0.0, 0.0, 0.0});  // var 3 fixed
    CHECK_THROWS_AS(lr_test_between(degen, {1}, {2}, {3}), domain_error);
}

TEST_CASE("lr_test_within and the additive decomposition") {
    CountTable counts = datasets::counts("achievement.json");

    TestResult tri = lr_test_within(counts, {1, 2, 3}, {{1, 2}, {1, 3}, {2, 3}});
    CHECK(tri.statistic == testutil::near(1.156, 0.02));
    CHECK(tri.df == 1);
    CHECK(tri.label == "within prime");

    TestResult cyc = lr_test_within(counts, {2, 3, 4, 5}, {{2, 3}, {2, 5}, {3, 4}, {4, 5}});
    CHECK(cyc.statistic == testutil::near(5.525, 0.02));
    CHECK(cyc.df == 7);

    // a saturated prime contributes nothing
    TestResult sat = lr_test_within(counts, {4, 5}, {{4, 5}});
    CHECK(std::abs(sat.statistic) < 1e-8);
    CHECK(sat.df == 0);

    // between + within parts add up to the overall model deviance
    TestResult bet = lr_test_between(counts, {4, 5}, {1}, {2, 3});
    FitReport sel = ipf_fit(counts, datasets::kSelectedEdges, false);
    CHECK(bet.statistic + tri.statistic + cyc.statistic ==
          testutil::near(sel.deviance, 1e-6));
    CHECK(bet.df + tri.df + cyc.df == sel.df);

    CHECK_THROWS_AS(lr_test_within(counts, {}, {}), input_error);
    CHECK_THROWS_AS(lr_test_within(counts, {1, 2}, {{1, 3}}), input_error);
}

TEST_CASE("avar_lambda12") {
    CHECK(avar_lambda12(0.0, 0.0, 0.0) == 16.0);

    // n avar equals the sum of reciprocal cell probabilities
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        double l1 = u(rng), l2 = u(rng), l12 = u(rng);
        InteractionSet lam = InteractionSet::zeros(2, CoefKind::lambda);
        lam.coef[1] = l1;
        lam.coef[2] = l2;
        lam.coef[3] = l12;
        ProbTable p = pi_of_lambda(lam);
        double recip = 0.0;
        for (int k = 0; k < 4; ++k) recip += 1.0 / p[k];
        CHECK(avar_lambda12(l1, l2, l12) ==
              testutil::near(recip, 1e-10 * recip));
    }
}

TEST_CASE("lambda_tstats") {
    CountTable counts = datasets::counts("achievement.json");
    FitReport gen = ipf_fit(counts, datasets::kSelectedEdges, false);
    std::vector<double> ts = lambda_tstats(counts, gen);
    REQUIRE(ts.size() == gen.terms.size());
    CHECK(std::isnan(ts[0]));
    for (int s = 1; s <= 5; ++s)
        CHECK(ts[s] == testutil::near(datasets::kAchieveTstatsPinned[s - 1], 0.15));
    for (std::size_t j = 0; j < datasets::kSelectedEdges.size(); ++j)
        CHECK(ts[6 + j] == testutil::near(datasets::kAchieveTstatsPinned[5 + j], 0.15));
    // terms carry the same statistics
    for (std::size_t j = 1; j < gen.terms.size(); ++j) CHECK(gen.terms[j].tstat == ts[j]);

    // two variables, saturated: t of the interaction from the closed-form
    // asymptotic variance
    CountTable small(2, {25.0, 14.0, 19.0, 42.0});
    FitReport sat = ipf_fit(small, {{1, 2}}, false);
    std::vector<double> ts2 = lambda_tstats(small, sat);
    double n = small.total();
    InteractionSet lam = lambda_of(sat.fitted);
    double se = std::sqrt(avar_lambda12(lam.coef[1], lam.coef[2], lam.coef[3]) / (16.0 * n));
    CHECK(ts2[3] == testutil::near(lam.coef[3] / se, 1e-10));

    CHECK_THROWS_AS(lambda_tstats(datasets::counts("diamond_counts.json"), gen), input_error);
}

TEST_CASE("screen_3factor") {
    ScreenResult sr = screen_3factor(datasets::counts("achievement.json"));
    REQUIRE(sr.rows.size() == 10);
    const std::vector<std::pair<std::array<int, 3>, std::pair<double, double>>> want = {
        {{1, 2, 3}, {0.0034, 0.16}},   {{1, 2, 4}, {0.0091, 0.44}},
        {{1, 2, 5}, {-0.0204, -0.99}}, {{1, 3, 4}, {0.0080, 0.39}},
        {{1, 3, 5}, {0.0343, 1.66}},   {{1, 4, 5}, {-0.0179, -0.87}},
        {{2, 3, 4}, {-0.0014, -0.07}}, {{2, 3, 5}, {-0.0144, -0.70}},
        {{2, 4, 5}, {0.0099, 0.48}},   {{3, 4, 5}, {-0.0164, -0.79}},
    };
    for (std::size_t j = 0; j < want.size(); ++j) {
        CHECK(sr.rows[j].triple == want[j].first);
        CHECK(sr.rows[j].xi == testutil::near(want[j].second.first, 1e-4));
        CHECK(sr.rows[j].t == testutil::near(want[j].second.second, 0.01));
    }
    CHECK(sr.ising_close);

    ScreenResult intro = screen_3factor(datasets::counts("intro100.json"));
    REQUIRE(intro.rows.size() == 4);
    CHECK(intro.rows[0].triple == std::array<int, 3>{1, 2, 3});
    CHECK(intro.rows[0].xi == testutil::near(-0.60, 0.005));
    CHECK(intro.rows[0].t == testutil::near(-7.50, 0.01));
    CHECK(intro.rows[1].triple == std::array<int, 3>{1, 2, 4});
    CHECK(intro.rows[1].xi == testutil::near(-0.36, 0.005));
    CHECK(intro.rows[1].t == testutil::near(-3.86, 0.01));
    CHECK_FALSE(intro.ising_close);

    // palindromic data: all centered third moments vanish
    ScreenResult pal = screen_3factor(datasets::counts("intro880.json"));
    for (const ScreenRow& row : pal.rows) {
        CHECK(std::abs(row.xi) < 1e-12);
        CHECK(std::abs(row.t) < 1e-10);
    }
    CHECK(pal.ising_close);

    CountTable degen(3, {5.0, 0.0, 7.0, 0.0, 3.0, 0.0, 9.0, 0.0});  // var 1 never at -1
    CHECK_THROWS_AS(screen_3factor(degen), domain_error);
}

TEST_CASE("select_structure at the published threshold") {
    CountTable counts = datasets::counts("achievement.json");
    SelectResult sel = select_structure(counts, 0.045);

    std::set<std::pair<int, int>> got;
    for (auto e : sel.graph.edges()) got.insert(e);
    std::set<std::pair<int, int>> want(datasets::kSelectedEdges.begin(),
                                       datasets::kSelectedEdges.end());
    CHECK(got == want);
    CHECK(sel.connected);
    REQUIRE(sel.tree_class.has_value());
    CHECK(*sel.tree_class == TreeClass::hollow_tree);

    check_pairs_matrix(sel.rho_before, datasets::kAchieveRho, 0.002);
    check_pairs_matrix(sel.theta_before, datasets::kAchieveTheta, 0.002);
    check_pairs_matrix(sel.rho_after, datasets::kAchieveRhoAfter, 0.002);
    check_pairs_matrix(sel.theta_after, datasets::kAchieveThetaAfter, 0.002);

    // the refit zeroes the removed pairs exactly
    const std::vector<std::pair<int, int>> removed = {{1, 4}, {1, 5}, {2, 4}, {3, 5}};
    for (auto [s, t] : removed) CHECK(std::abs(sel.theta_after(s - 1, t - 1)) < 1e-6);
}

TEST_CASE("select_structure across thresholds") {
    CountTable counts = datasets::counts("achievement.json");

    SelectResult keep_all = select_structure(counts, 0.0);
    CHECK(keep_all.graph.edges().size() == 10);
    REQUIRE(keep_all.tree_class.has_value());
    CHECK(*keep_all.tree_class == TreeClass::complete);

    SelectResult none = select_structure(counts, 1.0);
    CHECK(none.graph.edges().empty());
    CHECK_FALSE(none.connected);
    CHECK_FALSE(none.tree_class.has_value());

    SelectResult strict = select_structure(counts, 0.2);
    CHECK(strict.graph.edges() == std::vector<std::pair<int, int>>{{1, 3}});
    CHECK_FALSE(strict.connected);
}
