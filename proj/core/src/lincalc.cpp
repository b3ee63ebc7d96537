#include "hollowtree/lincalc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hollowtree {

namespace {

std::vector<int> zero_based(const NodeSet& a, int n, const char* who) {
    std::vector<int> out;
    std::vector<char> seen(n, 0);
    for (int s : a) {
        if (s < 1 || s > n)
            throw input_error(std::string(who) + ": index " + std::to_string(s) + " out of range");
        if (seen[s - 1]) throw input_error(std::string(who) + ": duplicate index " + std::to_string(s));
        seen[s - 1] = 1;
        out.push_back(s - 1);
    }
    return out;
}

void check_square(const Eigen::MatrixXd& m, const char* who) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw input_error(std::string(who) + ": matrix must be square and nonempty");
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const std::vector<int>& rows,
                          const std::vector<int>& cols) {
    Eigen::MatrixXd out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
    return out;
}

Eigen::MatrixXd invert_pd(const Eigen::MatrixXd& m, const char* who) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    if (!lu.isInvertible()) throw domain_error(std::string(who) + ": singular block");
    return lu.inverse();
}

// Real roots of a monic polynomial given coefficients low-to-high (without
// the leading 1), via the companion matrix.
std::vector<double> real_roots_monic(const std::vector<double>& coef) {
    const int n = static_cast<int>(coef.size());
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) companion(i, n - 1) = -coef[i];
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion);
    std::vector<double> roots;
    for (int i = 0; i < n; ++i) {
        std::complex<double> z = solver.eigenvalues()(i);
        if (std::abs(z.imag()) < 1e-8 * std::max(1.0, std::abs(z.real())))
            roots.push_back(z.real());
    }
    return roots;
}

}  // namespace

Eigen::MatrixXd partial_invert(const Eigen::MatrixXd& m, const NodeSet& a) {
    check_square(m, "partial_invert");
    const int n = static_cast<int>(m.rows());
    Eigen::MatrixXd out = m;
    for (int k : zero_based(a, n, "partial_invert")) {
        double s = out(k, k);
        if (std::abs(s) < 1e-14) throw domain_error("partial_invert: singular pivot");
        for (int i = 0; i < n; ++i) {
            if (i == k) continue;
            for (int j = 0; j < n; ++j) {
                if (j == k) continue;
                out(i, j) -= out(i, k) * out(k, j) / s;
            }
        }
        for (int j = 0; j < n; ++j)
            if (j != k) out(k, j) = -out(k, j) / s;
        for (int i = 0; i < n; ++i)
            if (i != k) out(i, k) = out(i, k) / s;
        out(k, k) = 1.0 / s;
    }
    return out;
}

CorrStack concentration_and_theta(const Eigen::MatrixXd& sigma) {
    check_square(sigma, "concentration_and_theta");
    const int n = static_cast<int>(sigma.rows());
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw input_error("concentration_and_theta: matrix not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
    double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
    if (lo <= 0.0) throw domain_error("concentration_and_theta: matrix not positive definite");
    if (hi / lo > 1e12) throw domain_error("concentration_and_theta: matrix too ill-conditioned");

    CorrStack out;
    out.d = n;
    out.sigma = sigma;
    out.concentration = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                        eig.eigenvectors().transpose();
    out.theta = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j)
                out.theta(i, j) = -out.concentration(i, j) /
                                  std::sqrt(out.concentration(i, i) * out.concentration(j, j));
    return out;
}

RegressionCoefs beta_from_tau(const InteractionSet& taus, BetaStructure structure) {
    if (taus.kind != CoefKind::tau) throw input_error("beta_from_tau: coefficient kind must be tau");
    int need = structure == BetaStructure::triangle ? 3 : 4;
    if (taus.d < need) throw input_error("beta_from_tau: dimension too small for structure");

    RegressionCoefs out;
    out.response = {1};
    if (structure == BetaStructure::triangle) {
        double t12 = taus.pair(1, 2), t13 = taus.pair(1, 3);
        double den = 1.0 - t12 * t12 * t13 * t13;
        if (std::abs(den) < 1e-14) throw domain_error("beta_from_tau: degenerate taus");
        out.regressors = {2, 3};
        out.pi.resize(1, 2);
        out.pi(0, 0) = t12 * (1.0 - t13 * t13) / den;
        out.pi(0, 1) = t13 * (1.0 - t12 * t12) / den;
    } else {
        double t13 = taus.pair(1, 3), t14 = taus.pair(1, 4);
        double den = 1.0 - t13 * t13 * t14 * t14;
        if (std::abs(den) < 1e-14) throw domain_error("beta_from_tau: degenerate taus");
        out.regressors = {2, 3, 4};
        out.pi.resize(1, 3);
        out.pi(0, 0) = 0.0;
        out.pi(0, 1) = t13 * (1.0 - t14 * t14) / den;
        out.pi(0, 2) = t14 * (1.0 - t13 * t13) / den;
    }
    return out;
}

double induced_cycle_corr(const NodeSet& cycle, const std::vector<double>& taus, int k, int l,
                          bool adjacent_mode) {
    const std::size_t n = cycle.size();
    if (n < 3) throw input_error("induced_cycle_corr: cycle needs at least three nodes");
    if (taus.size() != n) throw input_error("induced_cycle_corr: need one tau per cycle edge");
    for (double t : taus)
        if (std::abs(t) >= 1.0) throw domain_error("induced_cycle_corr: |tau| must be below one");

    std::size_t pk = n, pl = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (cycle[i] == k) pk = i;
        if (cycle[i] == l) pl = i;
    }
    if (pk == n || pl == n || pk == pl)
        throw input_error("induced_cycle_corr: endpoints must be two distinct cycle nodes");

    std::size_t gap = (pl + n - pk) % n;
    if ((gap == 1 || gap == n - 1) && !adjacent_mode)
        throw input_error("induced_cycle_corr: endpoints adjacent in the cycle; "
                          "pass adjacent_mode for the direct-edge split");

    double p1 = 1.0, p2 = 1.0;
    for (std::size_t i = pk; i != pl; i = (i + 1) % n) p1 *= taus[i];
    for (std::size_t i = pl; i != pk; i = (i + 1) % n) p2 *= taus[i];
    return (p1 + p2) / (1.0 + p1 * p2);
}

InducedCovXi induced_cov_and_xi(const Eigen::MatrixXd& pi_ac, const Eigen::MatrixXd& sigma_cb) {
    if (pi_ac.cols() != sigma_cb.rows())
        throw input_error("induced_cov_and_xi: inner dimensions disagree");
    InducedCovXi out;
    out.sigma_ab = pi_ac * sigma_cb;
    out.xi = std::numeric_limits<double>::quiet_NaN();
    return out;
}

InducedCovXi induced_cov_and_xi(const Eigen::MatrixXd& pi_ac, const Eigen::MatrixXd& sigma_cb,
                                const Eigen::MatrixXd& sigma_cc) {
    if (sigma_cc.rows() != sigma_cc.cols() || sigma_cc.rows() != pi_ac.cols())
        throw input_error("induced_cov_and_xi: sigma_cc dimensions disagree with pi");
    InducedCovXi out = induced_cov_and_xi(pi_ac, sigma_cb);
    if (pi_ac.rows() == 1 && pi_ac.cols() == 3) {
        Eigen::Vector3d opposite(sigma_cc(1, 2), sigma_cc(0, 2), sigma_cc(0, 1));
        out.xi = (pi_ac * opposite)(0, 0);
    }
    return out;
}

Eigen::MatrixXd theta_to_corr(const Eigen::MatrixXd& theta) {
    check_square(theta, "theta_to_corr");
    const int n = static_cast<int>(theta.rows());
    for (int i = 0; i < n; ++i)
        if (std::abs(theta(i, i) - 1.0) > 1e-10)
            throw input_error("theta_to_corr: diagonal must be one");
    Eigen::MatrixXd conc = 2.0 * Eigen::MatrixXd::Identity(n, n) - theta;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(conc);
    if (eig.eigenvalues().minCoeff() <= 0.0)
        throw domain_error("theta_to_corr: 2I - theta not positive definite");
    Eigen::MatrixXd sigma = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                            eig.eigenvectors().transpose();
    Eigen::VectorXd scale = sigma.diagonal().cwiseSqrt().cwiseInverse();
    return scale.asDiagonal() * sigma * scale.asDiagonal();
}

std::pair<double, double> solve_4cycle(double rho13, double rho14, double rho23, double rho24,
                                       double seed12, double seed34, double window) {
    for (double r : {rho13, rho14, rho23, rho24})
        if (std::abs(r) >= 1.0) throw domain_error("solve_4cycle: |rho| must be below one");
    const double c1 = rho13 * rho24 + rho14 * rho23;
    const double c2 = rho13 * rho23 + rho14 * rho24;
    const double c3 = rho13 * rho14 + rho23 * rho24;

    // Eliminating x = (c1 y - c2) / (y^2 - 1) leaves the monic quintic
    //   y^5 - c3 y^4 - 2 y^3 + (c1 c2 + 2 c3) y^2 - (c1^2 + c2^2 - 1) y + (c1 c2 - c3).
    std::vector<double> candidates_x, candidates_y;
    for (double y : real_roots_monic(
             {c1 * c2 - c3, -(c1 * c1 + c2 * c2 - 1.0), c1 * c2 + 2.0 * c3, -2.0, -c3})) {
        if (std::abs(y) >= 1.0 || std::abs(y * y - 1.0) < 1e-12) continue;
        double x = (c1 * y - c2) / (y * y - 1.0);
        if (std::abs(x) >= 1.0) continue;
        candidates_x.push_back(x);
        candidates_y.push_back(y);
    }
    // y = +-1 annihilates the first equation only when c1 = +-c2; the second
    // then reduces to a quadratic in x.
    for (double y : {1.0, -1.0}) {
        if (std::abs(c1 * y - c2) > 1e-12) continue;
        double disc = c1 * c1 - 4.0 * c3 * y + 4.0;
        if (disc < 0.0) continue;
        for (double sgn : {1.0, -1.0}) {
            double x = (c1 + sgn * std::sqrt(disc)) / (2.0 * y);
            if (std::abs(x) < 1.0) {
                candidates_x.push_back(x);
                candidates_y.push_back(y);
            }
        }
    }

    std::vector<std::pair<double, double>> admissible;
    for (std::size_t i = 0; i < candidates_x.size(); ++i) {
        double x = candidates_x[i], y = candidates_y[i];
        for (int it = 0; it < 40; ++it) {
            double f1 = x * (y * y - 1.0) - c1 * y + c2;
            double f2 = y * (x * x - 1.0) - c1 * x + c3;
            double j11 = y * y - 1.0, j12 = 2.0 * x * y - c1;
            double j21 = 2.0 * x * y - c1, j22 = x * x - 1.0;
            double det = j11 * j22 - j12 * j21;
            if (std::abs(det) < 1e-14) break;
            double dx = (f1 * j22 - f2 * j12) / det;
            double dy = (f2 * j11 - f1 * j21) / det;
            x -= dx;
            y -= dy;
            if (std::abs(dx) + std::abs(dy) < 1e-15) break;
        }
        if (std::abs(x) >= 1.0 || std::abs(y) >= 1.0) continue;
        bool dup = false;
        for (auto [px, py] : admissible)
            if (std::abs(px - x) < 1e-8 && std::abs(py - y) < 1e-8) dup = true;
        if (!dup) admissible.emplace_back(x, y);
    }

    std::vector<std::pair<double, double>> near;
    for (auto [x, y] : admissible)
        if (std::abs(x - seed12) <= window && std::abs(y - seed34) <= window) near.emplace_back(x, y);
    if (near.empty()) throw domain_error("solve_4cycle: no admissible root near the seeds");
    if (near.size() > 1) throw domain_error("solve_4cycle: several admissible roots near the seeds");
    return near.front();
}

std::array<Eigen::MatrixXd, 3> block_decomposition(const Eigen::MatrixXd& k_mat, const NodeSet& a,
                                                   const NodeSet& b, const NodeSet& c) {
    check_square(k_mat, "block_decomposition");
    const int n = static_cast<int>(k_mat.rows());
    std::vector<char> seen(n, 0);
    for (const NodeSet* part : {&a, &b, &c})
        for (int s : *part) {
            if (s < 1 || s > n)
                throw input_error("block_decomposition: index " + std::to_string(s) + " out of range");
            if (seen[s - 1])
                throw input_error("block_decomposition: blocks overlap at " + std::to_string(s));
            seen[s - 1] = 1;
        }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
        throw input_error("block_decomposition: blocks must partition all indices");

    std::vector<int> ia = zero_based(a, n, "block_decomposition");
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;

    std::array<Eigen::MatrixXd, 3> out;
    out[0] = Eigen::MatrixXd::Zero(n, n);
    out[1] = Eigen::MatrixXd::Zero(n, n);
    out[2] = Eigen::MatrixXd::Zero(n, n);
    if (!ia.empty()) {
        Eigen::MatrixXd kaa_inv = invert_pd(submatrix(k_mat, ia, ia), "block_decomposition");
        out[0] = submatrix(k_mat, all, ia) * kaa_inv * submatrix(k_mat, ia, all);
    }

    Eigen::MatrixXd sigma = invert_pd(k_mat, "block_decomposition");
    NodeSet bc = b;
    bc.insert(bc.end(), c.begin(), c.end());
    std::sort(bc.begin(), bc.end());
    std::vector<int> im = zero_based(bc, n, "block_decomposition");
    std::vector<int> ic = zero_based(c, n, "block_decomposition");
    std::sort(ic.begin(), ic.end());

    Eigen::MatrixXd margin_bc = Eigen::MatrixXd::Zero(n, n);
    if (!im.empty()) {
        Eigen::MatrixXd conc = invert_pd(submatrix(sigma, im, im), "block_decomposition");
        for (std::size_t i = 0; i < im.size(); ++i)
            for (std::size_t j = 0; j < im.size(); ++j) margin_bc(im[i], im[j]) = conc(i, j);
    }
    if (!ic.empty()) {
        Eigen::MatrixXd conc = invert_pd(submatrix(sigma, ic, ic), "block_decomposition");
        for (std::size_t i = 0; i < ic.size(); ++i)
            for (std::size_t j = 0; j < ic.size(); ++j) out[2](ic[i], ic[j]) = conc(i, j);
    }
    out[1] = margin_bc - out[2];
    return out;
}

}  // namespace hollowtree
