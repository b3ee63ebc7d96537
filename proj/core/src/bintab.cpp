#include "hollowtree/bintab.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hollowtree {

namespace {

void check_dim(int d, const char* who) {
    if (d < 1 || d > kMaxTableDim)
        throw input_error(std::string(who) + ": dimension " + std::to_string(d) + " outside 1.." +
                          std::to_string(kMaxTableDim));
}

long double sum_of(const std::vector<double>& v) {
    long double s = 0.0L;
    for (double x : v) s += x;
    return s;
}

void check_cells(int d, const std::vector<double>& v, const char* who) {
    check_dim(d, who);
    if (v.size() != (std::size_t{1} << d))
        throw input_error(std::string(who) + ": expected " + std::to_string(std::size_t{1} << d) +
                          " cells, got " + std::to_string(v.size()));
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!std::isfinite(v[k]) || v[k] < 0.0)
            throw input_error(std::string(who) + ": cell " + std::to_string(k) +
                              " is negative or not finite");
    }
}

}  // namespace

ProbTable::ProbTable(int d, std::vector<double> cells) : d_(d), cells_(std::move(cells)) {
    check_cells(d, cells_, "ProbTable");
    long double s = sum_of(cells_);
    if (std::abs(static_cast<double>(s - 1.0L)) > 1e-12)
        throw input_error("ProbTable: cells sum to " + std::to_string(static_cast<double>(s)) +
                          ", not 1");
}

CountTable::CountTable(int d, std::vector<double> counts) : d_(d), counts_(std::move(counts)) {
    check_cells(d, counts_, "CountTable");
}

double CountTable::total() const { return static_cast<double>(sum_of(counts_)); }

ProbTable CountTable::to_probs() const {
    long double s = sum_of(counts_);
    if (s <= 0.0L) throw domain_error("CountTable::to_probs: total count is zero");
    std::vector<double> p(counts_.size());
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = static_cast<double>(counts_[k] / s);
    return ProbTable(d_, std::move(p));
}

InteractionSet InteractionSet::zeros(int d, CoefKind kind) {
    check_dim(d, "InteractionSet");
    InteractionSet out;
    out.d = d;
    out.kind = kind;
    out.coef.assign(std::size_t{1} << d, 0.0);
    return out;
}

Eigen::MatrixXd hadamard(int d) {
    if (d < 1 || d > 10)
        throw input_error("hadamard: explicit matrix limited to d <= 10; use fast_hadamard");
    std::size_t n = std::size_t{1} << d;
    Eigen::MatrixXd h(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) h(i, j) = subset_sign(i, j);
    return h;
}

void fast_hadamard(std::vector<double>& v) {
    std::size_t n = v.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw input_error("fast_hadamard: length must be a power of two");
    for (std::size_t len = 1; len < n; len <<= 1)
        for (std::size_t block = 0; block < n; block += len << 1)
            for (std::size_t k = block; k < block + len; ++k) {
                double a = v[k], b = v[k + len];
                v[k] = a + b;
                v[k + len] = a - b;
            }
}

InteractionSet lambda_of(const ProbTable& p) {
    std::vector<double> v(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] <= 0.0)
            throw domain_error("lambda_of: nonpositive cell " + std::to_string(k));
        v[k] = std::log(p[k]);
    }
    fast_hadamard(v);
    double scale = static_cast<double>(p.size());
    for (double& x : v) x /= scale;
    InteractionSet out;
    out.d = p.d();
    out.kind = CoefKind::lambda;
    out.coef = std::move(v);
    return out;
}

ProbTable pi_of_lambda(const InteractionSet& lam) {
    check_dim(lam.d, "pi_of_lambda");
    if (lam.coef.size() != (std::size_t{1} << lam.d))
        throw input_error("pi_of_lambda: coefficient vector has wrong length");
    std::vector<double> v = lam.coef;
    fast_hadamard(v);
    double top = *std::max_element(v.begin(), v.end());
    long double total = 0.0L;
    for (double& x : v) {
        x = std::exp(x - top);
        total += x;
    }
    for (double& x : v) x = static_cast<double>(x / total);
    return ProbTable(lam.d, std::move(v));
}

InteractionSet xi_of(const ProbTable& p) {
    std::vector<double> v = p.cells();
    fast_hadamard(v);
    InteractionSet out;
    out.d = p.d();
    out.kind = CoefKind::xi;
    out.coef = std::move(v);
    return out;
}

bool is_palindromic(const ProbTable& p, double tol) {
    std::size_t last = p.size() - 1;
    for (std::size_t k = 0; k < p.size(); ++k)
        if (std::abs(p[k] - p[last - k]) > tol) return false;
    return true;
}

bool is_ising(const ProbTable& p, double tol) {
    InteractionSet lam = lambda_of(p);
    for (mask_t s = 0; s < lam.coef.size(); ++s)
        if (__builtin_popcount(s) >= 3 && std::abs(lam.coef[s]) > tol) return false;
    return true;
}

ProbTable marginalize(const ProbTable& p, const NodeSet& keep) {
    if (keep.empty()) throw input_error("marginalize: empty keep set");
    NodeSet ks = keep;
    std::sort(ks.begin(), ks.end());
    mask_t km = 0;
    for (int s : ks) {
        if (s < 1 || s > p.d())
            throw input_error("marginalize: node " + std::to_string(s) + " out of range");
        if (km & (mask_t{1} << (s - 1)))
            throw input_error("marginalize: duplicate node " + std::to_string(s));
        km |= mask_t{1} << (s - 1);
    }
    std::vector<double> out(std::size_t{1} << ks.size(), 0.0);
    for (std::size_t k = 0; k < p.size(); ++k) {
        std::size_t sub = 0;
        for (std::size_t i = 0; i < ks.size(); ++i)
            if (k >> (ks[i] - 1) & 1) sub |= std::size_t{1} << i;
        out[sub] += p[k];
    }
    return ProbTable(static_cast<int>(ks.size()), std::move(out));
}

ProbTable condition(const ProbTable& p, const std::vector<std::pair<int, int>>& fixed) {
    mask_t fixed_vars = 0, fixed_bits = 0;
    for (auto [s, level] : fixed) {
        if (s < 1 || s > p.d())
            throw input_error("condition: node " + std::to_string(s) + " out of range");
        if (level != 1 && level != -1)
            throw input_error("condition: level must be +1 or -1");
        mask_t bit = mask_t{1} << (s - 1);
        if (fixed_vars & bit) throw input_error("condition: duplicate node " + std::to_string(s));
        fixed_vars |= bit;
        if (level == -1) fixed_bits |= bit;
    }
    NodeSet rest;
    for (int s = 1; s <= p.d(); ++s)
        if (!(fixed_vars >> (s - 1) & 1)) rest.push_back(s);
    if (rest.empty()) throw input_error("condition: no free variables remain");

    std::vector<double> out(std::size_t{1} << rest.size(), 0.0);
    long double total = 0.0L;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if ((k & fixed_vars) != fixed_bits) continue;
        std::size_t sub = 0;
        for (std::size_t i = 0; i < rest.size(); ++i)
            if (k >> (rest[i] - 1) & 1) sub |= std::size_t{1} << i;
        out[sub] += p[k];
        total += p[k];
    }
    if (total <= 0.0L) throw domain_error("condition: conditioning event has probability zero");
    for (double& x : out) x = static_cast<double>(x / total);
    return ProbTable(static_cast<int>(rest.size()), std::move(out));
}

MomentSet moments(const ProbTable& p) {
    InteractionSet xi = xi_of(p);
    int d = p.d();
    MomentSet out;
    out.d = d;
    out.mu.resize(d);
    out.rho = Eigen::MatrixXd::Identity(d, d);
    for (int s = 1; s <= d; ++s) {
        double mu = xi.coef[mask_t{1} << (s - 1)];
        if (std::abs(mu) >= 1.0 - 1e-15)
            throw domain_error("moments: variable " + std::to_string(s) + " is degenerate");
        out.mu(s - 1) = mu;
    }
    for (int s = 1; s <= d; ++s)
        for (int t = s + 1; t <= d; ++t) {
            double est = xi.coef[(mask_t{1} << (s - 1)) | (mask_t{1} << (t - 1))];
            double mus = out.mu(s - 1), mut = out.mu(t - 1);
            double r = (est - mus * mut) / std::sqrt((1.0 - mus * mus) * (1.0 - mut * mut));
            out.rho(s - 1, t - 1) = out.rho(t - 1, s - 1) = r;
        }
    return out;
}

TwoByTwoMeasures dependence_measures_2x2(const std::array<double, 4>& cells) {
    const double a = cells[0], b = cells[1], c = cells[2], d = cells[3];
    for (double x : cells)
        if (!(x > 0.0) || !std::isfinite(x))
            throw domain_error("dependence_measures_2x2: all four cells must be positive");
    TwoByTwoMeasures out;
    out.odds_ratio = (a * d) / (b * c);
    out.lambda = 0.25 * std::log(out.odds_ratio);
    out.tau = std::tanh(out.lambda);
    out.chance_difference = d / (c + d) - b / (a + b);
    out.correlation = (a * d - b * c) / std::sqrt((a + b) * (c + d) * (a + c) * (b + d));
    return out;
}

ProbTable tri_pi_from_rho(double r12, double r13, double r23) {
    std::vector<double> cells(8);
    for (std::size_t k = 0; k < 8; ++k) {
        double w1 = ProbTable::level(k, 1), w2 = ProbTable::level(k, 2), w3 = ProbTable::level(k, 3);
        double v = (1.0 + r12 * w1 * w2 + r13 * w1 * w3 + r23 * w2 * w3) / 8.0;
        if (v <= 0.0)
            throw domain_error("tri_pi_from_rho: infeasible correlations (cell " +
                               std::to_string(k) + " nonpositive)");
        cells[k] = v;
    }
    return ProbTable(3, std::move(cells));
}

ProbTable tau_parametrize(const InteractionSet& taus, const Graph& g) {
    if (taus.kind != CoefKind::tau) throw input_error("tau_parametrize: coefficient kind must be tau");
    if (taus.d != g.d()) throw input_error("tau_parametrize: dimension mismatch");
    check_dim(g.d(), "tau_parametrize");
    auto edges = g.edges();
    for (auto [s, t] : edges)
        if (std::abs(taus.pair(s, t)) >= 1.0)
            throw domain_error("tau_parametrize: |tau| must be below one on every edge");
    PrimeDecomposition dec = prime_decomposition(g);
    if (dec.primes.size() != 1 || !hollow_structure(g, dec))
        throw domain_error("tau_parametrize: graph must be a single hollow prime "
                           "(node, edge, triangle or chordless cycle)");
    std::size_t n = std::size_t{1} << g.d();
    std::vector<double> cells(n);
    long double total = 0.0L;
    for (std::size_t k = 0; k < n; ++k) {
        double v = 1.0;
        for (auto [s, t] : edges)
            v *= 1.0 + taus.pair(s, t) * ProbTable::level(k, s) * ProbTable::level(k, t);
        cells[k] = v;
        total += v;
    }
    for (double& x : cells) x = static_cast<double>(x / total);
    return ProbTable(g.d(), std::move(cells));
}

}  // namespace hollowtree
