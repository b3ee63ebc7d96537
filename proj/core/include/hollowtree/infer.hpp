#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hollowtree/bintab.hpp"
#include "hollowtree/errors.hpp"
#include "hollowtree/graph.hpp"
#include "hollowtree/lincalc.hpp"

// Estimation and testing: odds-ratio-preserving symmetrization, iterative
// proportional fitting of general and palindromic Ising models, per-prime
// hollow-tree fitting, likelihood-ratio test decomposition, asymptotic
// variances, t-statistics, three-factor screening, and partial-correlation
// structure selection.

namespace hollowtree {

struct FitTerm {
    mask_t subset = 0;
    double lambda_prob = 0.0;   // coefficient of the probability-scale table
    double lambda_count = 0.0;  // same with the empty term shifted by log n
    double tstat = 0.0;         // NaN for the empty term
};

struct FitReport {
    Graph model;
    bool palindromic = false;
    ProbTable fitted;
    double total = 0.0;  // n
    // Free terms ordered by subset size then lexicographically.
    std::vector<FitTerm> terms;
    double deviance = 0.0;  // 2 sum n log(n/nhat) over observed-positive cells
    int df = 0;             // 2^d - 1 - #free non-empty terms
    int iterations = 0;
    double final_discrepancy = 0.0;
    InteractionSet lambda;        // full probability-scale lambda of the fitted table
    InteractionSet lambda_count;  // count scale: empty term shifted by log n
};

struct TestResult {
    double statistic = 0.0;
    int df = 0;
    std::string label;  // "between primes" or "within prime"
};

struct ScreenRow {
    std::array<int, 3> triple{};
    double xi = 0.0;
    double t = 0.0;
};

struct ScreenResult {
    std::vector<ScreenRow> rows;  // triples in lexicographic order
    bool ising_close = false;     // all |t| < 2
};

struct SelectResult {
    Graph graph;
    bool connected = false;
    std::optional<TreeClass> tree_class;  // absent when disconnected
    Eigen::MatrixXd rho_before, theta_before;  // saturated palindromic fit
    Eigen::MatrixXd rho_after, theta_after;    // palindromic refit on kept edges
};

// Replaces a positive 2x2 table (cells in lex order --, +-, -+, ++) by the
// palindromic table with the same odds-ratio: cells proportional to
// (sqrt(ad), sqrt(bc), sqrt(bc), sqrt(ad)), normalized to sum one.
std::array<double, 4> symmetrize_2x2(const std::array<double, 4>& cells);

// Saturated palindromic Ising fit: symmetrizes every two-way margin and runs
// IPF over all pairs from the uniform table.  Requires positive pair
// margins.
ProbTable symmetrize_table(const CountTable& counts, double tol = 1e-10, int max_iter = 10000);

// Ising model with free lambda_empty, lambda_s (dropped when palindromic)
// and lambda_st over `edges`; IPF over the sufficient margins (palindromic:
// the symmetrized two-way margins).  Deviance is measured against the
// observed counts; df counts the zeroed non-empty terms of the full
// parametrization, so palindromic fits charge the symmetry constraints too.
FitReport ipf_fit(const CountTable& counts, const std::vector<std::pair<int, int>>& edges,
                  bool palindromic, double tol = 1e-10, int max_iter = 10000);

// Fits each prime margin of a hollow tree separately (edge primes in closed
// form from the observed 2x2 margin; triangle and cycle primes by IPF on the
// margin) and combines joint probabilities as the product of prime fits over
// the product of observed cutset margins.  Agrees with ipf_fit on the same
// edge set.
FitReport fit_hollow_tree(const CountTable& counts, const Graph& g);

// Likelihood-ratio statistic for a independent of b given c in the margin:
// 2 sum n_abc log(n_abc n_c / (n_ac n_bc)), df (2^|a|-1)(2^|b|-1) 2^|c|.
// Cells with n_abc = 0 contribute zero; a zero conditioning margin errors.
TestResult lr_test_between(const CountTable& counts, const NodeSet& a, const NodeSet& b,
                           const NodeSet& c);

// General-Ising fit restricted to the prime margin with the given edges.
TestResult lr_test_within(const CountTable& counts, const NodeSet& prime,
                          const std::vector<std::pair<int, int>>& edges);

// n times the asymptotic variance of the fitted log odds-ratio (4 lambda_12)
// of a saturated 2x2 table, equal to the sum of the reciprocal cell
// probabilities: 4 + 4[cosh(2 l12)(cosh(2 l1) + cosh(2 l2)) + cosh(2 l1)
// cosh(2 l2)].  Divide by 16 n for var(lambda_12).
double avar_lambda12(double l1, double l2, double l12);

// Delta-method standard errors of the free lambda terms evaluated at the
// fitted expected counts: with X the +-1 design over the free terms and
// D = diag(nhat), cov(lambda) = (X' D X)^{-1}; t = lambda / se.  The empty
// term gets NaN.  Order matches fit.terms.
std::vector<double> lambda_tstats(const CountTable& counts, const FitReport& fit);

// Linear three-factor screen: for every triple, the centered standardized
// third moment xi_abc = E{(w_a-mu_a)(w_b-mu_b)(w_c-mu_c)} / sd_a sd_b sd_c
// with t = xi sqrt(n) / sqrt(1 - xi^2).  On a palindromic table the means
// vanish and xi_abc reduces to sum sign(w_a w_b w_c) n_w / n.
ScreenResult screen_3factor(const CountTable& counts);

// Saturated palindromic fit, then keep edges with |theta_ij| >= threshold;
// reports the graph, its class (when connected) and the partial/marginal
// correlation matrices before and after the constrained palindromic refit.
SelectResult select_structure(const CountTable& counts, double threshold,
                              double tol = 1e-10, int max_iter = 10000);

}  // namespace hollowtree
