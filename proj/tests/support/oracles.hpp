#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "hollowtree/bintab.hpp"
#include "hollowtree/graph.hpp"

// Brute-force reference implementations used to validate the library.  All
// graph oracles work on plain adjacency bitmasks (adj[i] bit j set when nodes
// i+1 and j+1 are joined, diagonal clear) so they share no code with the
// graph module.

namespace oracles {

using Adjacency = std::vector<std::uint32_t>;

inline Adjacency adjacency_of(const hollowtree::Graph& g) {
    Adjacency adj(g.d(), 0);
    for (auto [s, t] : g.edges()) {
        adj[s - 1] |= std::uint32_t{1} << (t - 1);
        adj[t - 1] |= std::uint32_t{1} << (s - 1);
    }
    return adj;
}

inline hollowtree::Graph graph_of(const Adjacency& adj) {
    hollowtree::Graph g(static_cast<int>(adj.size()));
    for (int i = 0; i < static_cast<int>(adj.size()); ++i)
        for (int j = i + 1; j < static_cast<int>(adj.size()); ++j)
            if (adj[i] >> j & 1) g.add_edge(i + 1, j + 1);
    return g;
}

// Connectivity of the subgraph induced by `sub` (must be nonzero).
inline bool connected_in(const Adjacency& adj, std::uint32_t sub) {
    std::uint32_t seen = sub & (~sub + 1);  // lowest bit
    for (;;) {
        std::uint32_t grow = seen;
        for (int i = 0; i < static_cast<int>(adj.size()); ++i)
            if (seen >> i & 1) grow |= adj[i] & sub;
        if (grow == seen) break;
        seen = grow;
    }
    return seen == sub;
}

inline bool complete_in(const Adjacency& adj, std::uint32_t sub) {
    for (int i = 0; i < static_cast<int>(adj.size()); ++i)
        if (sub >> i & 1)
            if ((adj[i] & sub) != (sub & ~(std::uint32_t{1} << i))) return false;
    return true;
}

// Chordality by definition: no induced subgraph on >= 4 nodes is a cycle.
// A subset induces a cycle exactly when it is connected and every node has
// induced degree two; induced cycles are chordless by construction.
inline bool chordal(const Adjacency& adj) {
    int d = static_cast<int>(adj.size());
    for (std::uint32_t sub = 0; sub < (std::uint32_t{1} << d); ++sub) {
        if (__builtin_popcount(sub) < 4) continue;
        bool all_deg2 = true;
        for (int i = 0; i < d && all_deg2; ++i)
            if (sub >> i & 1)
                if (__builtin_popcount(adj[i] & sub) != 2) all_deg2 = false;
        if (all_deg2 && connected_in(adj, sub)) return false;
    }
    return true;
}

// Components of sub \ cut, as masks.
inline std::vector<std::uint32_t> components_in(const Adjacency& adj, std::uint32_t sub) {
    std::vector<std::uint32_t> out;
    std::uint32_t left = sub;
    while (left) {
        std::uint32_t seen = left & (~left + 1);
        for (;;) {
            std::uint32_t grow = seen;
            for (int i = 0; i < static_cast<int>(adj.size()); ++i)
                if (seen >> i & 1) grow |= adj[i] & left;
            if (grow == seen) break;
            seen = grow;
        }
        out.push_back(seen);
        left &= ~seen;
    }
    return out;
}

// Recursive decomposition by clique minimal separators.  A complete proper
// subset C of `sub` is a clique minimal separator when at least two
// components of sub \ C see all of C; splitting on any such C and recursing
// on each component plus C yields exactly the maximal prime subgraphs.
inline void primes_rec(const Adjacency& adj, std::uint32_t sub, std::set<std::uint32_t>& out) {
    int d = static_cast<int>(adj.size());
    int size = __builtin_popcount(sub);
    for (int csize = 0; csize <= size - 2; ++csize) {
        for (std::uint32_t c = 0; c < (std::uint32_t{1} << d); ++c) {
            if ((c & sub) != c || __builtin_popcount(c) != csize) continue;
            if (!complete_in(adj, c)) continue;
            auto comps = components_in(adj, sub & ~c);
            if (comps.size() < 2) continue;
            int full = 0;
            for (std::uint32_t comp : comps) {
                std::uint32_t nb = 0;
                for (int i = 0; i < d; ++i)
                    if (comp >> i & 1) nb |= adj[i];
                if ((nb & c) == c) ++full;
            }
            if (full < 2) continue;
            for (std::uint32_t comp : comps) primes_rec(adj, comp | c, out);
            return;
        }
    }
    out.insert(sub);
}

inline std::set<std::uint32_t> primes(const Adjacency& adj) {
    std::set<std::uint32_t> raw;
    std::uint32_t all = (std::uint32_t{1} << adj.size()) - 1;
    primes_rec(adj, all, raw);
    std::set<std::uint32_t> out;  // drop anything covered by a larger prime
    for (std::uint32_t p : raw) {
        bool covered = false;
        for (std::uint32_t q : raw)
            if (q != p && (p & q) == p) covered = true;
        if (!covered) out.insert(p);
    }
    return out;
}

// Hollow-tree structure from the oracle primes alone: every prime is an edge
// or an induced cycle, and primes pairwise share at most two nodes.
inline bool hollow(const Adjacency& adj) {
    auto ps = primes(adj);
    for (std::uint32_t p : ps) {
        int size = __builtin_popcount(p);
        if (size == 2) continue;
        bool cycle = size >= 3;
        for (int i = 0; i < static_cast<int>(adj.size()) && cycle; ++i)
            if (p >> i & 1)
                if (__builtin_popcount(adj[i] & p) != 2) cycle = false;
        if (!cycle) return false;
    }
    for (std::uint32_t p : ps)
        for (std::uint32_t q : ps)
            if (p < q && __builtin_popcount(p & q) > 2) return false;
    return true;
}

// Visits every connected graph on d labelled nodes.
template <typename Fn>
void for_each_connected_graph(int d, Fn&& fn) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) pairs.emplace_back(i, j);
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << pairs.size()); ++bits) {
        Adjacency adj(d, 0);
        for (std::size_t e = 0; e < pairs.size(); ++e)
            if (bits >> e & 1) {
                adj[pairs[e].first] |= std::uint32_t{1} << pairs[e].second;
                adj[pairs[e].second] |= std::uint32_t{1} << pairs[e].first;
            }
        if (connected_in(adj, (std::uint32_t{1} << d) - 1)) fn(adj);
    }
}

inline hollowtree::NodeSet nodes_of(std::uint32_t mask) {
    hollowtree::NodeSet out;
    for (int s = 1; mask; ++s, mask >>= 1)
        if (mask & 1) out.push_back(s);
    return out;
}

inline std::uint32_t mask_of(const hollowtree::NodeSet& nodes) {
    std::uint32_t m = 0;
    for (int s : nodes) m |= std::uint32_t{1} << (s - 1);
    return m;
}

// --- table oracles ---------------------------------------------------------

// Margin by direct summation, keep ascending, relabelled to 1..|keep|.
inline std::vector<double> margin_cells(const std::vector<double>& cells, int d,
                                        const hollowtree::NodeSet& keep) {
    std::vector<double> out(std::size_t{1} << keep.size(), 0.0);
    for (std::size_t k = 0; k < cells.size(); ++k) {
        std::size_t m = 0;
        for (std::size_t i = 0; i < keep.size(); ++i)
            if (k >> (keep[i] - 1) & 1) m |= std::size_t{1} << i;
        out[m] += cells[k];
    }
    return out;
}

inline double g2(const std::vector<double>& obs, const std::vector<double>& fit) {
    double s = 0.0;
    for (std::size_t k = 0; k < obs.size(); ++k)
        if (obs[k] > 0.0) s += obs[k] * std::log(obs[k] / fit[k]);
    return 2.0 * s;
}

// --- random inputs ---------------------------------------------------------

inline Eigen::MatrixXd random_spd(int n, std::mt19937& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = z(rng);
    Eigen::MatrixXd s = a * a.transpose() + n * Eigen::MatrixXd::Identity(n, n);
    return s;
}

inline Eigen::MatrixXd random_correlation(int n, std::mt19937& rng) {
    Eigen::MatrixXd s = random_spd(n, rng);
    Eigen::VectorXd inv_sd = s.diagonal().cwiseSqrt().cwiseInverse();
    return inv_sd.asDiagonal() * s * inv_sd.asDiagonal();
}

inline hollowtree::ProbTable random_positive_table(int d, std::mt19937& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<double> cells(std::size_t{1} << d);
    double tot = 0.0;
    for (double& c : cells) tot += (c = u(rng));
    for (double& c : cells) c /= tot;
    return {d, std::move(cells)};
}

// Palindromic Ising table with random pair terms on the edges of g.
inline hollowtree::ProbTable random_edge_ising(const hollowtree::Graph& g, std::mt19937& rng,
                                               double lo = -0.5, double hi = 0.5) {
    std::uniform_real_distribution<double> u(lo, hi);
    auto lam = hollowtree::InteractionSet::zeros(g.d(), hollowtree::CoefKind::lambda);
    for (auto [s, t] : g.edges()) lam.set_pair(s, t, u(rng));
    return hollowtree::pi_of_lambda(lam);
}

}  // namespace oracles
