#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hollowtree/bintab.hpp"
#include "hollowtree/errors.hpp"

// Linear-algebraic layer: partial matrix inversion, concentration and
// overall partial-correlation matrices, closed-form regression coefficients
// from hyperbolic-tangent interactions, induced correlations by path tracing
// and in matrix form, the four-cycle polynomial system, and the
// block-triangular decomposition of a concentration matrix.
//
// Index subsets are 1-based, matching the graph layer.

namespace hollowtree {

struct CorrStack {
    int d = 0;
    Eigen::MatrixXd sigma;          // correlation/covariance input
    Eigen::MatrixXd concentration;  // sigma^{-1}
    Eigen::MatrixXd theta;          // -conc_ij / sqrt(conc_ii conc_jj), unit diagonal
};

struct RegressionCoefs {
    NodeSet response;    // a
    NodeSet regressors;  // c
    Eigen::MatrixXd pi;  // |a| x |c| coefficient matrix of a on c
};

// Applies the single-pivot sweep update once per index of `a` (order
// immaterial): pivot s = m_kk maps to 1/s, row k to -m_kj/s, column k to
// m_ik/s, and the rest to m_ij - m_ik m_kj / s.  Involution; inverting on a
// then on the complement yields the full inverse.  Throws domain_error on a
// singular pivot.
Eigen::MatrixXd partial_invert(const Eigen::MatrixXd& m, const NodeSet& a);

// Concentration and overall partial correlations of a positive definite
// matrix; rejects non-PD or condition number above 1e12.
CorrStack concentration_and_theta(const Eigen::MatrixXd& sigma);

enum class BetaStructure {
    triangle,              // response 1, coupled regressors 2 and 3
    four_cycle_uncoupled,  // response 1, regressors 2,3,4 with pair (1,2) uncoupled
};

// Closed-form regression coefficients from hyperbolic-tangent interactions.
//   triangle:            beta_{1|2.3} = tau_12 (1 - tau_13^2) / (1 - tau_12^2 tau_13^2)
//   four_cycle_uncoupled: beta_{1|2.34} = 0,
//                         beta_{1|3.24} = tau_13 (1 - tau_14^2) / (1 - tau_13^2 tau_14^2),
//                         beta_{1|4.23} analogous.
// The relevant taus are read as pairs (1,2), (1,3), (1,4) of `taus`.
RegressionCoefs beta_from_tau(const InteractionSet& taus, BetaStructure structure);

// Correlation induced between two cycle nodes after marginalizing a
// palindromic Ising cycle: rho* = (P1 + P2) / (1 + P1 P2) with P1, P2 the
// tau-products along the two connecting paths.  `cycle` lists the nodes in
// cycle order and taus[i] belongs to the edge (cycle[i], cycle[i+1]),
// wrapping around.  For a pair adjacent in the cycle pass adjacent_mode=true
// (the direct edge becomes the one-edge path); otherwise adjacency is an
// error.
double induced_cycle_corr(const NodeSet& cycle, const std::vector<double>& taus,
                          int k, int l, bool adjacent_mode = false);

// Induced covariances in matrix form, sigma*_ab = Pi_{a|c} sigma_cb.  When
// additionally |a| = 1 and |c| = 3 with c = (j,k,l) and sigma_cc given, the
// scalar four-factor linear interaction Pi_{i|c} (rho_kl, rho_jl, rho_jk)^T
// is filled in; otherwise xi is NaN.
struct InducedCovXi {
    Eigen::MatrixXd sigma_ab;
    double xi = 0.0;
};
InducedCovXi induced_cov_and_xi(const Eigen::MatrixXd& pi_ac, const Eigen::MatrixXd& sigma_cb);
InducedCovXi induced_cov_and_xi(const Eigen::MatrixXd& pi_ac, const Eigen::MatrixXd& sigma_cb,
                                const Eigen::MatrixXd& sigma_cc);

// Marginal correlations from overall partial ones: the standardized inverse
// of (2I - theta).  Requires 2I - theta positive definite.
Eigen::MatrixXd theta_to_corr(const Eigen::MatrixXd& theta);

// Solves the coupled cubics for the correlations (x, y) = (rho*_12, rho*_34)
// induced when the chords of a four-cycle with edge correlations rho_13,
// rho_14, rho_23, rho_24 are dropped:
//   x (y^2 - 1) - c1 y + c2 = 0,  y (x^2 - 1) - c1 x + c3 = 0,
//   c1 = r13 r24 + r14 r23, c2 = r13 r23 + r14 r24, c3 = r13 r14 + r23 r24.
// All real solutions with |x|, |y| < 1 are found via the degree-5 resultant;
// exactly one must fall within +-window of the seeds.
std::pair<double, double> solve_4cycle(double rho13, double rho14, double rho23, double rho24,
                                       double seed12, double seed34, double window = 0.2);

// Splits a concentration matrix K into the three rank-block components of
// its block-triangular decomposition over the partition (a, b, c):
//   K[:,a] (K_aa)^{-1} K[a,:]
//   + embedded concentration pieces of the (b,c) margin and the c margin.
// The three components sum to K.
std::array<Eigen::MatrixXd, 3> block_decomposition(const Eigen::MatrixXd& k_mat,
                                                   const NodeSet& a, const NodeSet& b,
                                                   const NodeSet& c);

}  // namespace hollowtree
