#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "hollowtree/errors.hpp"
#include "hollowtree/graph.hpp"

// Tables of binary variables in effect coding and their interaction
// parametrizations.
//
// Cells are stored in lexicographic order with the first variable fastest:
// bit (s-1) of cell index k is 1 exactly when variable s sits at level -1,
// so cell 0 has every variable at +1.
// Interaction coefficients are indexed by subset masks with the same bit
// convention.  lambda is the log-linear coefficient vector 2^-d H log p,
// xi the linear one H p, where H is the d-fold Kronecker power of
// [[1,1],[1,-1]] (so xi of the empty set is 1 and xi of a singleton is the
// mean of that variable).

namespace hollowtree {

using mask_t = std::uint32_t;

inline constexpr int kMaxTableDim = 20;

// Sign of the product of levels over subset S at cell k: +1 when the number
// of S-variables at level -1 is even.
inline double subset_sign(mask_t cell, mask_t s) {
    int minus = __builtin_popcount(s & cell);
    return (minus & 1) ? -1.0 : 1.0;
}

class ProbTable {
public:
    ProbTable() = default;
    // Validates 1 <= d <= 20, size 2^d, nonnegative cells, sum within 1e-12
    // of one.
    ProbTable(int d, std::vector<double> cells);

    int d() const { return d_; }
    std::size_t size() const { return cells_.size(); }
    double operator[](std::size_t k) const { return cells_[k]; }
    const std::vector<double>& cells() const { return cells_; }

    // Level (-1 or +1) of variable s at cell k.
    static int level(std::size_t k, int s) { return (k >> (s - 1)) & 1 ? -1 : 1; }

private:
    int d_ = 0;
    std::vector<double> cells_;
};

class CountTable {
public:
    CountTable() = default;
    // Counts may be fractional (fitted tables); they must be finite and >= 0.
    CountTable(int d, std::vector<double> counts);

    int d() const { return d_; }
    std::size_t size() const { return counts_.size(); }
    double operator[](std::size_t k) const { return counts_[k]; }
    const std::vector<double>& counts() const { return counts_; }
    double total() const;
    ProbTable to_probs() const;  // throws domain_error when total is zero

private:
    int d_ = 0;
    std::vector<double> counts_;
};

enum class CoefKind { lambda, xi, tau };

// A full coefficient vector indexed by subset mask.  For kind tau only the
// pair masks carry meaning.
struct InteractionSet {
    int d = 0;
    CoefKind kind = CoefKind::lambda;
    std::vector<double> coef;

    double at(mask_t s) const { return coef[s]; }
    double pair(int s, int t) const { return coef[(mask_t{1} << (s - 1)) | (mask_t{1} << (t - 1))]; }
    void set_pair(int s, int t, double v) { coef[(mask_t{1} << (s - 1)) | (mask_t{1} << (t - 1))] = v; }

    static InteractionSet zeros(int d, CoefKind kind);
};

// Means and the correlation matrix of the +-1 variables.
struct MomentSet {
    int d = 0;
    Eigen::VectorXd mu;
    Eigen::MatrixXd rho;
};

struct TwoByTwoMeasures {
    double odds_ratio = 1.0;
    double lambda = 0.0;              // log odds-ratio over four
    double tau = 0.0;                 // tanh(lambda)
    double chance_difference = 0.0 ;  // Pr(1 at +1 | 2 at +1) - Pr(1 at +1 | 2 at -1)
    double correlation = 0.0;         // product-moment correlation of the +-1 levels
};

// Explicit +-1 transform matrix, the d-fold Kronecker power of [[1,1],[1,-1]].
// Symmetric, H H = 2^d I.  Intended for moderate d; the library itself uses
// the in-place fast transform.
Eigen::MatrixXd hadamard(int d);

// In-place unnormalized transform of a length-2^d vector.
void fast_hadamard(std::vector<double>& v);

// lambda = 2^-d H log p.  Throws domain_error naming the first nonpositive
// cell.  pi_of_lambda inverts: p = exp(H lambda), renormalized so the empty
// coefficient need not be the exact normalizing constant.
InteractionSet lambda_of(const ProbTable& p);
ProbTable pi_of_lambda(const InteractionSet& lam);

// xi = H p.
InteractionSet xi_of(const ProbTable& p);

// Palindromic: p(cell) equals p(complement cell) within tol.
bool is_palindromic(const ProbTable& p, double tol = 1e-12);
// Ising: all log-linear interactions of order >= 3 vanish within tol.
bool is_ising(const ProbTable& p, double tol = 1e-9);

// Margin over `keep` (ascending relabelling to 1..|keep|).
ProbTable marginalize(const ProbTable& p, const NodeSet& keep);
// Conditional table given fixed (variable, level +-1) pairs, over the
// remaining variables relabelled ascending.  Throws domain_error when the
// conditioning event has probability zero.
ProbTable condition(const ProbTable& p, const std::vector<std::pair<int, int>>& fixed);

// Means and correlations; errors when some variable is degenerate (|mu| = 1).
MomentSet moments(const ProbTable& p);

// Dependence measures of a 2x2 table or conditional slice, cells in lex
// order (--, +-, -+, ++) at any positive scale.  All four cells must be
// positive.
TwoByTwoMeasures dependence_measures_2x2(const std::array<double, 4>& cells);

// Trivariate palindromic Ising table with the given pair correlations; the
// inverse of the Hankel relation between (beta, gamma, delta) and the rho's.
// Throws domain_error when the triple is infeasible (a cell would be
// nonpositive).
ProbTable tri_pi_from_rho(double r12, double r13, double r23);

// Palindromic Ising table proportional to the product of (1 + tau_st w_s w_t)
// over the edges of g, which has log-linear pair terms atanh(tau_st).
// Restricted to graphs that are a single prime of hollow-tree shape: one
// node, an edge, a triangle, or a chordless cycle.
ProbTable tau_parametrize(const InteractionSet& taus, const Graph& g);

}  // namespace hollowtree
