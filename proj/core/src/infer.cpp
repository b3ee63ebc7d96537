#include "hollowtree/infer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace hollowtree {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

NodeSet sorted_nodes(const NodeSet& a) {
    NodeSet out = a;
    std::sort(out.begin(), out.end());
    return out;
}

void check_vars(const NodeSet& vars, int d, const char* who) {
    mask_t seen = 0;
    for (int s : vars) {
        if (s < 1 || s > d)
            throw input_error(std::string(who) + ": variable " + std::to_string(s) +
                              " out of range");
        mask_t bit = mask_t{1} << (s - 1);
        if (seen & bit)
            throw input_error(std::string(who) + ": duplicate variable " + std::to_string(s));
        seen |= bit;
    }
}

// Compressed cell index of `k` over the ascending variable list `vars`.
std::size_t compress(std::size_t k, const NodeSet& vars) {
    std::size_t sub = 0;
    for (std::size_t i = 0; i < vars.size(); ++i)
        if (k >> (vars[i] - 1) & 1) sub |= std::size_t{1} << i;
    return sub;
}

std::vector<double> margin_of(const std::vector<double>& cells, const NodeSet& vars) {
    std::vector<double> out(std::size_t{1} << vars.size(), 0.0);
    for (std::size_t k = 0; k < cells.size(); ++k) out[compress(k, vars)] += cells[k];
    return out;
}

std::vector<std::pair<int, int>> normalize_edges(const std::vector<std::pair<int, int>>& edges,
                                                 int d, const char* who) {
    std::vector<std::pair<int, int>> out;
    for (auto [s, t] : edges) {
        if (s < 1 || s > d || t < 1 || t > d)
            throw input_error(std::string(who) + ": edge endpoint out of range");
        if (s == t) throw input_error(std::string(who) + ": self loop");
        out.emplace_back(std::min(s, t), std::max(s, t));
    }
    std::sort(out.begin(), out.end());
    if (std::adjacent_find(out.begin(), out.end()) != out.end())
        throw input_error(std::string(who) + ": duplicate edge");
    return out;
}

struct Margin {
    NodeSet vars;  // ascending
    std::vector<double> target;
};

struct IpfState {
    std::vector<double> table;  // probability scale
    InteractionSet lambda;
    int iterations = 0;
    double discrepancy = 0.0;
};

// Classical IPF from the uniform table, with the log of every update factor
// folded into a running lambda decomposition so the fitted coefficients come
// out alongside the fitted cells.
IpfState run_ipf(int d, const std::vector<Margin>& margins, double tol, int max_iter,
                 const char* who) {
    IpfState st;
    st.table.assign(std::size_t{1} << d, std::ldexp(1.0, -d));
    st.lambda = InteractionSet::zeros(d, CoefKind::lambda);
    st.lambda.coef[0] = -d * std::log(2.0);
    if (margins.empty()) return st;

    for (const Margin& m : margins)
        for (double t : m.target)
            if (t <= 0.0)
                throw domain_error(std::string(who) + ": a sufficient margin has an empty cell");

    for (int sweep = 1; sweep <= max_iter; ++sweep) {
        double disc = 0.0;
        for (const Margin& m : margins) {
            std::vector<double> current = margin_of(st.table, m.vars);
            std::vector<double> logf(current.size());
            for (std::size_t c = 0; c < current.size(); ++c) {
                disc = std::max(disc, std::abs(current[c] - m.target[c]));
                logf[c] = std::log(m.target[c] / current[c]);
            }
            for (std::size_t k = 0; k < st.table.size(); ++k)
                st.table[k] *= std::exp(logf[compress(k, m.vars)]);

            fast_hadamard(logf);
            double scale = static_cast<double>(logf.size());
            for (std::size_t sub = 0; sub < logf.size(); ++sub) {
                mask_t full = 0;
                for (std::size_t i = 0; i < m.vars.size(); ++i)
                    if (sub >> i & 1) full |= mask_t{1} << (m.vars[i] - 1);
                st.lambda.coef[full] += logf[sub] / scale;
            }
        }
        st.iterations = sweep;
        st.discrepancy = disc;
        if (disc <= tol) return st;
    }
    throw convergence_error(std::string(who) + ": proportional fitting did not reach " +
                            std::to_string(tol) + " in " + std::to_string(max_iter) + " sweeps");
}

ProbTable normalized_probs(int d, std::vector<double> cells) {
    long double total = 0.0L;
    for (double x : cells) total += x;
    if (total <= 0.0L) throw domain_error("fit produced an empty table");
    for (double& x : cells) x = static_cast<double>(x / total);
    return ProbTable(d, std::move(cells));
}

bool term_order(mask_t a, mask_t b) {
    int pa = __builtin_popcount(a), pb = __builtin_popcount(b);
    if (pa != pb) return pa < pb;
    while (a && b) {
        int la = __builtin_ctz(a), lb = __builtin_ctz(b);
        if (la != lb) return la < lb;
        a &= a - 1;
        b &= b - 1;
    }
    return a < b;
}

std::vector<mask_t> free_subsets(int d, const std::vector<std::pair<int, int>>& edges,
                                 bool palindromic) {
    std::vector<mask_t> out{0};
    if (!palindromic)
        for (int s = 1; s <= d; ++s) out.push_back(mask_t{1} << (s - 1));
    for (auto [s, t] : edges) out.push_back((mask_t{1} << (s - 1)) | (mask_t{1} << (t - 1)));
    std::sort(out.begin(), out.end(), term_order);
    return out;
}

double deviance_against(const CountTable& counts, const ProbTable& fitted) {
    double n = counts.total();
    double dev = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] <= 0.0) continue;
        dev += counts[k] * std::log(counts[k] / (n * fitted[k]));
    }
    return 2.0 * dev;
}

FitReport assemble_report(const CountTable& counts, Graph model, bool palindromic,
                          ProbTable fitted, const std::vector<std::pair<int, int>>& edges,
                          int iterations, double discrepancy) {
    FitReport rep;
    rep.model = std::move(model);
    rep.palindromic = palindromic;
    rep.fitted = std::move(fitted);
    rep.total = counts.total();
    rep.iterations = iterations;
    rep.final_discrepancy = discrepancy;
    rep.lambda = lambda_of(rep.fitted);
    rep.lambda_count = rep.lambda;
    rep.lambda_count.coef[0] += std::log(rep.total);

    std::vector<mask_t> subsets = free_subsets(counts.d(), edges, palindromic);
    for (mask_t s : subsets) {
        FitTerm t;
        t.subset = s;
        t.lambda_prob = rep.lambda.coef[s];
        t.lambda_count = rep.lambda_count.coef[s];
        rep.terms.push_back(t);
    }
    rep.deviance = deviance_against(counts, rep.fitted);
    rep.df = static_cast<int>((std::size_t{1} << counts.d()) - subsets.size());
    std::vector<double> ts = lambda_tstats(counts, rep);
    for (std::size_t j = 0; j < rep.terms.size(); ++j) rep.terms[j].tstat = ts[j];
    return rep;
}

std::vector<Margin> general_margins(const CountTable& counts,
                                    const std::vector<std::pair<int, int>>& edges) {
    double n = counts.total();
    if (n <= 0.0) throw domain_error("fit: total count is zero");
    std::vector<double> probs(counts.counts());
    for (double& x : probs) x /= n;

    std::vector<Margin> out;
    for (int s = 1; s <= counts.d(); ++s)
        out.push_back({{s}, margin_of(probs, {s})});
    for (auto [s, t] : edges) out.push_back({{s, t}, margin_of(probs, {s, t})});
    return out;
}

std::vector<Margin> palindromic_margins(const CountTable& counts,
                                        const std::vector<std::pair<int, int>>& edges) {
    double n = counts.total();
    if (n <= 0.0) throw domain_error("fit: total count is zero");
    std::vector<double> probs(counts.counts());
    for (double& x : probs) x /= n;

    std::vector<Margin> out;
    for (auto [s, t] : edges) {
        std::vector<double> m = margin_of(probs, {s, t});
        for (double x : m)
            if (x <= 0.0) throw domain_error("fit: pair margin has an empty cell");
        std::array<double, 4> sym = symmetrize_2x2({m[0], m[1], m[2], m[3]});
        out.push_back({{s, t}, {sym[0], sym[1], sym[2], sym[3]}});
    }
    return out;
}

}  // namespace

std::array<double, 4> symmetrize_2x2(const std::array<double, 4>& cells) {
    for (double x : cells)
        if (!(x > 0.0) || !std::isfinite(x))
            throw domain_error("symmetrize_2x2: all four cells must be positive");
    double ad = std::sqrt(cells[0] * cells[3]);
    double bc = std::sqrt(cells[1] * cells[2]);
    double total = 2.0 * (ad + bc);
    return {ad / total, bc / total, bc / total, ad / total};
}

ProbTable symmetrize_table(const CountTable& counts, double tol, int max_iter) {
    std::vector<std::pair<int, int>> pairs;
    for (int s = 1; s <= counts.d(); ++s)
        for (int t = s + 1; t <= counts.d(); ++t) pairs.emplace_back(s, t);
    IpfState st = run_ipf(counts.d(), palindromic_margins(counts, pairs), tol, max_iter,
                          "symmetrize_table");
    return normalized_probs(counts.d(), std::move(st.table));
}

FitReport ipf_fit(const CountTable& counts, const std::vector<std::pair<int, int>>& edges,
                  bool palindromic, double tol, int max_iter) {
    std::vector<std::pair<int, int>> es = normalize_edges(edges, counts.d(), "ipf_fit");
    Graph model(counts.d());
    for (auto [s, t] : es) model.add_edge(s, t);

    std::vector<Margin> margins =
        palindromic ? palindromic_margins(counts, es) : general_margins(counts, es);
    IpfState st = run_ipf(counts.d(), margins, tol, max_iter, "ipf_fit");
    return assemble_report(counts, std::move(model), palindromic,
                           normalized_probs(counts.d(), std::move(st.table)), es, st.iterations,
                           st.discrepancy);
}

FitReport fit_hollow_tree(const CountTable& counts, const Graph& g) {
    if (g.d() != counts.d()) throw input_error("fit_hollow_tree: dimension mismatch");
    PrimeDecomposition dec = prime_decomposition(g);
    if (!hollow_structure(g, dec))
        throw domain_error("fit_hollow_tree: graph is not a hollow tree");

    double n = counts.total();
    if (n <= 0.0) throw domain_error("fit_hollow_tree: total count is zero");
    std::vector<double> probs(counts.counts());
    for (double& x : probs) x /= n;

    std::vector<double> cells(counts.size(), 1.0);
    int iterations = 0;
    double discrepancy = 0.0;

    for (const NodeSet& prime : dec.primes) {
        NodeSet vars = sorted_nodes(prime);
        std::vector<double> margin = margin_of(probs, vars);
        std::vector<double> fitted_margin;
        if (vars.size() <= 2) {
            for (double x : margin)
                if (x <= 0.0)
                    throw domain_error("fit_hollow_tree: a prime margin has an empty cell");
            fitted_margin = margin;  // saturated on a node or an edge
        } else {
            int pd = static_cast<int>(vars.size());
            CountTable sub(pd, margin);
            std::vector<std::pair<int, int>> sub_edges;
            for (std::size_t i = 0; i < vars.size(); ++i)
                for (std::size_t j = i + 1; j < vars.size(); ++j)
                    if (g.has_edge(vars[i], vars[j]))
                        sub_edges.emplace_back(static_cast<int>(i + 1), static_cast<int>(j + 1));
            IpfState st = run_ipf(pd, general_margins(sub, sub_edges), 1e-12, 10000,
                                  "fit_hollow_tree");
            fitted_margin = std::move(st.table);
            iterations += st.iterations;
            discrepancy = std::max(discrepancy, st.discrepancy);
        }
        for (std::size_t k = 0; k < cells.size(); ++k) cells[k] *= fitted_margin[compress(k, vars)];
    }

    for (const NodeSet& cut : dec.cutsets) {
        NodeSet vars = sorted_nodes(cut);
        std::vector<double> margin = margin_of(probs, vars);
        for (double x : margin)
            if (x <= 0.0) throw domain_error("fit_hollow_tree: a cutset margin has an empty cell");
        for (std::size_t k = 0; k < cells.size(); ++k) cells[k] /= margin[compress(k, vars)];
    }

    return assemble_report(counts, g, false, normalized_probs(counts.d(), std::move(cells)),
                           g.edges(), iterations, discrepancy);
}

TestResult lr_test_between(const CountTable& counts, const NodeSet& a, const NodeSet& b,
                           const NodeSet& c) {
    if (a.empty() || b.empty()) throw input_error("lr_test_between: a and b must be nonempty");
    NodeSet all = a;
    all.insert(all.end(), b.begin(), b.end());
    all.insert(all.end(), c.begin(), c.end());
    check_vars(all, counts.d(), "lr_test_between");

    NodeSet ac = sorted_nodes([&] {
        NodeSet v = a;
        v.insert(v.end(), c.begin(), c.end());
        return v;
    }());
    NodeSet bc = sorted_nodes([&] {
        NodeSet v = b;
        v.insert(v.end(), c.begin(), c.end());
        return v;
    }());
    NodeSet cc = sorted_nodes(c);
    NodeSet abc = sorted_nodes(all);

    std::vector<double> n_abc = margin_of(counts.counts(), abc);
    std::vector<double> n_ac = margin_of(counts.counts(), ac);
    std::vector<double> n_bc = margin_of(counts.counts(), bc);
    std::vector<double> n_c = cc.empty() ? std::vector<double>{counts.total()}
                                         : margin_of(counts.counts(), cc);
    for (double x : n_c)
        if (x <= 0.0) throw domain_error("lr_test_between: conditioning margin has an empty cell");

    // Positions of the sub-margins inside a cell of the abc margin.
    auto embed = [&abc](const NodeSet& sub) {
        NodeSet pos;
        for (int s : sub)
            pos.push_back(static_cast<int>(std::lower_bound(abc.begin(), abc.end(), s) -
                                           abc.begin()) +
                          1);
        return pos;
    };
    NodeSet pos_ac = embed(ac), pos_bc = embed(bc), pos_c = embed(cc);

    double stat = 0.0;
    for (std::size_t k = 0; k < n_abc.size(); ++k) {
        if (n_abc[k] <= 0.0) continue;
        double num = n_abc[k] * n_c[compress(k, pos_c)];
        double den = n_ac[compress(k, pos_ac)] * n_bc[compress(k, pos_bc)];
        stat += n_abc[k] * std::log(num / den);
    }

    TestResult out;
    out.statistic = 2.0 * stat;
    out.df = static_cast<int>(((std::size_t{1} << a.size()) - 1) *
                              ((std::size_t{1} << b.size()) - 1) * (std::size_t{1} << c.size()));
    out.label = "between primes";
    return out;
}

TestResult lr_test_within(const CountTable& counts, const NodeSet& prime,
                          const std::vector<std::pair<int, int>>& edges) {
    check_vars(prime, counts.d(), "lr_test_within");
    if (prime.empty()) throw input_error("lr_test_within: empty prime");
    NodeSet vars = sorted_nodes(prime);

    std::map<int, int> relabel;
    for (std::size_t i = 0; i < vars.size(); ++i) relabel[vars[i]] = static_cast<int>(i + 1);
    std::vector<std::pair<int, int>> sub_edges;
    for (auto [s, t] : edges) {
        if (!relabel.count(s) || !relabel.count(t))
            throw input_error("lr_test_within: edge leaves the prime");
        sub_edges.emplace_back(relabel[s], relabel[t]);
    }

    CountTable sub(static_cast<int>(vars.size()), margin_of(counts.counts(), vars));
    FitReport rep = ipf_fit(sub, sub_edges, false);
    TestResult out;
    out.statistic = rep.deviance;
    out.df = rep.df;
    out.label = "within prime";
    return out;
}

double avar_lambda12(double l1, double l2, double l12) {
    return 4.0 + 4.0 * (std::cosh(2.0 * l12) * (std::cosh(2.0 * l1) + std::cosh(2.0 * l2)) +
                        std::cosh(2.0 * l1) * std::cosh(2.0 * l2));
}

std::vector<double> lambda_tstats(const CountTable& counts, const FitReport& fit) {
    const std::size_t cells = counts.size();
    const std::size_t nterms = fit.terms.size();
    if (fit.fitted.size() != cells) throw input_error("lambda_tstats: dimension mismatch");

    Eigen::MatrixXd x(cells, nterms);
    for (std::size_t k = 0; k < cells; ++k)
        for (std::size_t j = 0; j < nterms; ++j) x(k, j) = subset_sign(k, fit.terms[j].subset);
    Eigen::VectorXd w(cells);
    for (std::size_t k = 0; k < cells; ++k) w(k) = fit.total * fit.fitted[k];

    Eigen::MatrixXd info = x.transpose() * w.asDiagonal() * x;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
    if (!lu.isInvertible()) throw domain_error("lambda_tstats: singular information matrix");
    Eigen::MatrixXd cov = lu.inverse();

    std::vector<double> out(nterms);
    for (std::size_t j = 0; j < nterms; ++j) {
        if (fit.terms[j].subset == 0) {
            out[j] = kNaN;
            continue;
        }
        out[j] = fit.terms[j].lambda_prob / std::sqrt(cov(j, j));
    }
    return out;
}

ScreenResult screen_3factor(const CountTable& counts) {
    double n = counts.total();
    if (n <= 0.0) throw domain_error("screen_3factor: total count is zero");
    ProbTable probs = counts.to_probs();
    InteractionSet xi = xi_of(probs);

    // Centered, standardized third moments.  For a palindromic table the means
    // vanish and these coincide with the raw coefficients xi_{stu}.
    int d = counts.d();
    std::vector<double> mu(d), var(d);
    for (int s = 1; s <= d; ++s) {
        mu[s - 1] = xi.coef[mask_t{1} << (s - 1)];
        var[s - 1] = 1.0 - mu[s - 1] * mu[s - 1];
        if (var[s - 1] <= 0.0)
            throw domain_error("screen_3factor: variable " + std::to_string(s) +
                               " is degenerate");
    }

    ScreenResult out;
    out.ising_close = true;
    for (int s = 1; s <= d; ++s)
        for (int t = s + 1; t <= d; ++t)
            for (int u = t + 1; u <= d; ++u) {
                ScreenRow row;
                row.triple = {s, t, u};
                mask_t ms = mask_t{1} << (s - 1);
                mask_t mt = mask_t{1} << (t - 1);
                mask_t mu_ = mask_t{1} << (u - 1);
                // E{(ws-mus)(wt-mut)(wu-muu)} expanded in raw moments
                double cen = xi.coef[ms | mt | mu_]
                           - mu[s - 1] * xi.coef[mt | mu_]
                           - mu[t - 1] * xi.coef[ms | mu_]
                           - mu[u - 1] * xi.coef[ms | mt]
                           + 2.0 * mu[s - 1] * mu[t - 1] * mu[u - 1];
                row.xi = cen / std::sqrt(var[s - 1] * var[t - 1] * var[u - 1]);
                double denom = 1.0 - row.xi * row.xi;
                row.t = denom > 0.0 ? row.xi * std::sqrt(n) / std::sqrt(denom)
                                    : std::copysign(std::numeric_limits<double>::infinity(), row.xi);
                if (!(std::abs(row.t) < 2.0)) out.ising_close = false;
                out.rows.push_back(row);
            }
    return out;
}

SelectResult select_structure(const CountTable& counts, double threshold, double tol,
                              int max_iter) {
    ProbTable saturated = symmetrize_table(counts, tol, max_iter);
    MomentSet before = moments(saturated);
    CorrStack before_stack = concentration_and_theta(before.rho);

    SelectResult out;
    out.rho_before = before.rho;
    out.theta_before = before_stack.theta;

    Graph g(counts.d());
    std::vector<std::pair<int, int>> kept;
    for (int s = 1; s <= counts.d(); ++s)
        for (int t = s + 1; t <= counts.d(); ++t)
            if (std::abs(before_stack.theta(s - 1, t - 1)) >= threshold) {
                g.add_edge(s, t);
                kept.emplace_back(s, t);
            }
    out.graph = g;
    out.connected = g.connected();
    if (out.connected) out.tree_class = classify(g);

    FitReport refit = ipf_fit(counts, kept, true, tol, max_iter);
    MomentSet after = moments(refit.fitted);
    CorrStack after_stack = concentration_and_theta(after.rho);
    out.rho_after = after.rho;
    out.theta_after = after_stack.theta;
    return out;
}

}  // namespace hollowtree
