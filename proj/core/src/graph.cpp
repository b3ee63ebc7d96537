#include "hollowtree/graph.hpp"

#include <algorithm>
#include <bit>
#include <functional>
#include <map>
#include <set>
#include <tuple>

namespace hollowtree {

namespace {

using mask32 = std::uint32_t;

int popcount(mask32 m) { return std::popcount(m); }

std::vector<int> mask_to_nodes(mask32 m) {
    std::vector<int> out;
    while (m) {
        int b = std::countr_zero(m);
        out.push_back(b + 1);
        m &= m - 1;
    }
    return out;
}

mask32 nodes_to_mask(const NodeSet& nodes, int d, const char* who) {
    mask32 m = 0;
    for (int s : nodes) {
        if (s < 1 || s > d) throw input_error(std::string(who) + ": node " + std::to_string(s) + " out of range");
        mask32 bit = mask32{1} << (s - 1);
        if (m & bit) throw input_error(std::string(who) + ": duplicate node " + std::to_string(s));
        m |= bit;
    }
    return m;
}

// Connected component of `seed` inside `allowed`.
mask32 component_of(const std::vector<mask32>& adj, mask32 allowed, int seed) {
    mask32 comp = mask32{1} << seed;
    mask32 frontier = comp;
    while (frontier) {
        mask32 next = 0;
        mask32 f = frontier;
        while (f) {
            int v = std::countr_zero(f);
            f &= f - 1;
            next |= adj[v] & allowed;
        }
        next &= ~comp;
        comp |= next;
        frontier = next;
    }
    return comp;
}

bool mask_connected(const std::vector<mask32>& adj, mask32 nodes) {
    if (!nodes) return false;
    return component_of(adj, nodes, std::countr_zero(nodes)) == nodes;
}

bool mask_clique(const std::vector<mask32>& adj, mask32 nodes) {
    mask32 m = nodes;
    while (m) {
        int v = std::countr_zero(m);
        m &= m - 1;
        if (((adj[v] | (mask32{1} << v)) & nodes) != nodes) return false;
    }
    return true;
}

std::vector<mask32> graph_adj(const Graph& g) {
    std::vector<mask32> adj(g.d());
    for (int s = 1; s <= g.d(); ++s) adj[s - 1] = g.neighbors(s);
    return adj;
}

bool nodeset_lex_less(const NodeSet& a, const NodeSet& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

void require_connected(const Graph& g, const char* who) {
    if (g.d() < 1) throw input_error(std::string(who) + ": empty graph");
    if (!g.connected()) throw domain_error(std::string(who) + ": graph is disconnected");
}

// Maximum cardinality search; returns the visit order (first visited first).
std::vector<int> mcs_order(const std::vector<mask32>& adj, int d) {
    std::vector<int> weight(d, 0), order;
    mask32 unnumbered = (d == 32) ? ~mask32{0} : ((mask32{1} << d) - 1);
    for (int step = 0; step < d; ++step) {
        int best = -1;
        mask32 m = unnumbered;
        while (m) {
            int v = std::countr_zero(m);
            m &= m - 1;
            if (best < 0 || weight[v] > weight[best]) best = v;
        }
        order.push_back(best);
        unnumbered &= ~(mask32{1} << best);
        mask32 nb = adj[best] & unnumbered;
        while (nb) {
            int u = std::countr_zero(nb);
            nb &= nb - 1;
            ++weight[u];
        }
    }
    return order;
}

// MCS-M minimal triangulation: visit order plus fill edges.
struct McsM {
    std::vector<int> order;       // visit order
    std::vector<mask32> adj_tri;  // input adjacency plus fill
};

McsM mcs_m(const std::vector<mask32>& adj, int d) {
    McsM out;
    out.adj_tri = adj;
    std::vector<int> weight(d, 0);
    mask32 unnumbered = (d == 32) ? ~mask32{0} : ((mask32{1} << d) - 1);
    for (int step = 0; step < d; ++step) {
        int v = -1;
        mask32 m = unnumbered;
        while (m) {
            int u = std::countr_zero(m);
            m &= m - 1;
            if (v < 0 || weight[u] > weight[v]) v = u;
        }
        unnumbered &= ~(mask32{1} << v);
        // u is reachable when some path v..u stays on unnumbered nodes of
        // weight strictly below weight[u] (endpoints excluded).
        std::vector<int> reach;
        mask32 um = unnumbered;
        while (um) {
            int u = std::countr_zero(um);
            um &= um - 1;
            if (adj[u] & (mask32{1} << v)) {
                reach.push_back(u);
                continue;
            }
            mask32 through = 0;
            mask32 cand = unnumbered & ~(mask32{1} << u);
            mask32 cm = cand;
            while (cm) {
                int x = std::countr_zero(cm);
                cm &= cm - 1;
                if (weight[x] < weight[u]) through |= mask32{1} << x;
            }
            mask32 seen = adj[u] & through;
            mask32 frontier = seen;
            bool found = false;
            while (frontier && !found) {
                mask32 next = 0;
                mask32 f = frontier;
                while (f) {
                    int x = std::countr_zero(f);
                    f &= f - 1;
                    if (adj[x] & (mask32{1} << v)) {
                        found = true;
                        break;
                    }
                    next |= adj[x] & through;
                }
                next &= ~seen;
                seen |= next;
                frontier = next;
            }
            if (found) reach.push_back(u);
        }
        for (int u : reach) {
            ++weight[u];
            out.adj_tri[u] |= mask32{1} << v;
            out.adj_tri[v] |= mask32{1} << u;
        }
        out.order.push_back(v);
    }
    return out;
}

struct CliqueForest {
    std::vector<mask32> cliques;
    std::vector<std::pair<int, int>> edges;
};

// Maximal cliques of a chordal graph from a perfect elimination order, plus
// a max-weight spanning clique tree.
CliqueForest clique_tree(const std::vector<mask32>& adj_tri, const std::vector<int>& visit) {
    int d = static_cast<int>(visit.size());
    std::vector<int> pos(d);
    // Perfect elimination order: reverse of the visit order.
    std::vector<int> peo(visit.rbegin(), visit.rend());
    for (int i = 0; i < d; ++i) pos[peo[i]] = i;
    std::vector<mask32> cand;
    for (int i = 0; i < d; ++i) {
        int v = peo[i];
        mask32 c = mask32{1} << v;
        mask32 nb = adj_tri[v];
        while (nb) {
            int u = std::countr_zero(nb);
            nb &= nb - 1;
            if (pos[u] > i) c |= mask32{1} << u;
        }
        cand.push_back(c);
    }
    std::vector<mask32> cliques;
    for (mask32 c : cand) {
        bool maximal = true;
        for (mask32 o : cand)
            if (o != c && (o & c) == c && popcount(o) > popcount(c)) {
                maximal = false;
                break;
            }
        if (maximal && std::find(cliques.begin(), cliques.end(), c) == cliques.end())
            cliques.push_back(c);
    }
    std::sort(cliques.begin(), cliques.end(), [](mask32 a, mask32 b) {
        return mask_to_nodes(a) < mask_to_nodes(b);
    });

    CliqueForest out;
    out.cliques = cliques;
    int m = static_cast<int>(cliques.size());
    std::vector<bool> in_tree(m, false);
    in_tree[0] = true;
    for (int added = 1; added < m; ++added) {
        int bi = -1, bj = -1, bw = -1;
        for (int i = 0; i < m; ++i) {
            if (!in_tree[i]) continue;
            for (int j = 0; j < m; ++j) {
                if (in_tree[j]) continue;
                int w = popcount(cliques[i] & cliques[j]);
                if (w > bw) {
                    bw = w;
                    bi = i;
                    bj = j;
                }
            }
        }
        in_tree[bj] = true;
        out.edges.emplace_back(bi, bj);
    }
    return out;
}

struct RawDecomposition {
    std::vector<mask32> primes;
    std::vector<std::pair<int, int>> tree;
};

RawDecomposition decompose_masks(const std::vector<mask32>& adj, int d) {
    McsM tri = mcs_m(adj, d);
    CliqueForest forest = clique_tree(tri.adj_tri, tri.order);
    std::vector<mask32> sets = forest.cliques;
    std::vector<std::pair<int, int>> edges = forest.edges;
    // Merge across junction-tree separators that are incomplete in the input.
    bool merged = true;
    while (merged) {
        merged = false;
        for (std::size_t e = 0; e < edges.size(); ++e) {
            auto [a, b] = edges[e];
            mask32 sep = sets[a] & sets[b];
            if (mask_clique(adj, sep)) continue;
            sets[a] |= sets[b];
            sets.erase(sets.begin() + b);
            edges.erase(edges.begin() + e);
            for (auto& ed : edges) {
                if (ed.first == b) ed.first = a;
                if (ed.second == b) ed.second = a;
                if (ed.first > b) --ed.first;
                if (ed.second > b) --ed.second;
            }
            merged = true;
            break;
        }
    }
    return {sets, edges};
}

// Scheme generation: peel the lexicographically smallest leaf prime until a
// single prime (or the designated root) remains.
std::vector<NodeSet> peel_scheme(const std::vector<NodeSet>& primes,
                                 const std::vector<std::pair<int, int>>& tree, int root) {
    int m = static_cast<int>(primes.size());
    std::vector<bool> active(m, true);
    std::vector<NodeSet> scheme;
    int remaining = m;
    while (remaining > 1) {
        int pick = -1, pick_nb = -1;
        for (int i = 0; i < m; ++i) {
            if (!active[i] || i == root) continue;
            int deg = 0, nb = -1;
            for (auto [a, b] : tree) {
                if (a == i && active[b]) ++deg, nb = b;
                if (b == i && active[a]) ++deg, nb = a;
            }
            if (deg > 1) continue;
            if (pick < 0 || nodeset_lex_less(primes[i], primes[pick])) {
                pick = i;
                pick_nb = nb;
            }
        }
        NodeSet outer;
        std::set_difference(primes[pick].begin(), primes[pick].end(),
                            primes[pick_nb].begin(), primes[pick_nb].end(),
                            std::back_inserter(outer));
        scheme.push_back(outer);
        active[pick] = false;
        --remaining;
    }
    return scheme;
}

}  // namespace

Graph::Graph(int d) : d_(d), adj_(d, 0) {
    if (d < 1) throw input_error("graph dimension must be positive");
    if (d > 31) throw input_error("graph dimension capped at 31");
}

void Graph::check_node(int s) const {
    if (s < 1 || s > d_) throw input_error("node " + std::to_string(s) + " out of range 1.." + std::to_string(d_));
}

bool Graph::has_edge(int s, int t) const {
    check_node(s);
    check_node(t);
    if (s == t) return false;
    return adj_[s - 1] >> (t - 1) & 1;
}

void Graph::add_edge(int s, int t) {
    check_node(s);
    check_node(t);
    if (s == t) throw input_error("self-loop at node " + std::to_string(s));
    adj_[s - 1] |= mask32{1} << (t - 1);
    adj_[t - 1] |= mask32{1} << (s - 1);
}

std::vector<std::pair<int, int>> Graph::edges() const {
    std::vector<std::pair<int, int>> out;
    for (int s = 1; s <= d_; ++s)
        for (int t = s + 1; t <= d_; ++t)
            if (adj_[s - 1] >> (t - 1) & 1) out.emplace_back(s, t);
    return out;
}

std::size_t Graph::edge_count() const {
    std::size_t n = 0;
    for (auto m : adj_) n += popcount(m);
    return n / 2;
}

bool Graph::connected() const {
    if (d_ == 0) return false;
    mask32 all = (d_ == 32) ? ~mask32{0} : ((mask32{1} << d_) - 1);
    return mask_connected(adj_, all);
}

bool Graph::is_complete() const {
    for (int i = 0; i < d_; ++i) {
        mask32 expect = ((d_ == 32) ? ~mask32{0} : ((mask32{1} << d_) - 1)) & ~(mask32{1} << i);
        if (adj_[i] != expect) return false;
    }
    return true;
}

std::uint32_t Graph::neighbors(int s) const {
    check_node(s);
    return adj_[s - 1];
}

std::vector<std::vector<int>> Graph::edge_matrix() const {
    std::vector<std::vector<int>> m(d_, std::vector<int>(d_, 0));
    for (int i = 0; i < d_; ++i) {
        m[i][i] = 1;
        for (int j = 0; j < d_; ++j)
            if (adj_[i] >> j & 1) m[i][j] = 1;
    }
    return m;
}

std::string to_string(TreeClass c) {
    switch (c) {
        case TreeClass::thin_tree: return "ThinTree";
        case TreeClass::bulged_tree: return "BulgedTree";
        case TreeClass::hollow_tree: return "HollowTree";
        case TreeClass::complete: return "Complete";
        case TreeClass::fattened_tree: return "FattenedTree";
        case TreeClass::other_chordal: return "OtherChordal";
        case TreeClass::other_nonchordal: return "OtherNonChordal";
    }
    return "?";
}

Graph ChainGraph::skeleton() const {
    Graph g(d);
    for (auto [s, t] : arrows) g.add_edge(s, t);
    for (auto [s, t] : lines) g.add_edge(s, t);
    return g;
}

EdgeMatrix EdgeMatrix::from_graph(const Graph& g) {
    EdgeMatrix m;
    m.d = g.d();
    m.rows.resize(g.d());
    for (int s = 1; s <= g.d(); ++s) m.rows[s - 1] = g.neighbors(s) | (mask32{1} << (s - 1));
    return m;
}

Graph build_graph(int d, const std::vector<std::pair<int, int>>& edges) {
    Graph g(d);
    for (auto [s, t] : edges) {
        if (s == t) throw input_error("self-loop at node " + std::to_string(s));
        if (g.has_edge(s, t))
            throw input_error("duplicate edge (" + std::to_string(s) + "," + std::to_string(t) + ")");
        g.add_edge(s, t);
    }
    return g;
}

Chordality is_chordal(const Graph& g) {
    require_connected(g, "is_chordal");
    int d = g.d();
    auto adj = graph_adj(g);
    std::vector<int> visit = mcs_order(adj, d);
    std::vector<int> peo(visit.rbegin(), visit.rend());
    std::vector<int> pos(d);
    for (int i = 0; i < d; ++i) pos[peo[i]] = i;

    int bad_v = -1, bad_x = -1, bad_y = -1;
    for (int i = 0; i < d && bad_v < 0; ++i) {
        int v = peo[i];
        std::vector<int> later;
        mask32 nb = adj[v];
        while (nb) {
            int u = std::countr_zero(nb);
            nb &= nb - 1;
            if (pos[u] > i) later.push_back(u);
        }
        for (std::size_t a = 0; a < later.size() && bad_v < 0; ++a)
            for (std::size_t b = a + 1; b < later.size(); ++b)
                if (!(adj[later[a]] >> later[b] & 1)) {
                    bad_v = v;
                    bad_x = later[a];
                    bad_y = later[b];
                    break;
                }
    }

    Chordality out;
    if (bad_v < 0) {
        out.chordal = true;
        for (int v : peo) out.elimination_order.push_back(v + 1);
        return out;
    }

    // Chordless-cycle witness: a shortest x..y path avoiding the closed
    // neighbourhood of v (minus x, y), closed through v.  Some hub with two
    // non-adjacent neighbours admits one; start from the MCS failure.
    auto witness = [&](int v, int x, int y) -> std::vector<int> {
        mask32 all = (d == 32) ? ~mask32{0} : ((mask32{1} << d) - 1);
        mask32 allowed = all & ~(adj[v] | (mask32{1} << v));
        allowed |= (mask32{1} << x) | (mask32{1} << y);
        std::vector<int> prev(d, -1);
        std::vector<int> queue{x};
        mask32 seen = mask32{1} << x;
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            int u = queue[qi];
            if (u == y) break;
            mask32 nb = adj[u] & allowed & ~seen;
            while (nb) {
                int w = std::countr_zero(nb);
                nb &= nb - 1;
                prev[w] = u;
                seen |= mask32{1} << w;
                queue.push_back(w);
            }
        }
        if (!(seen >> y & 1)) return {};
        std::vector<int> path;
        for (int u = y; u != -1; u = prev[u]) path.push_back(u);
        std::reverse(path.begin(), path.end());
        std::vector<int> cycle{v + 1};
        for (int u : path) cycle.push_back(u + 1);
        return cycle;
    };

    std::vector<int> cyc = witness(bad_v, bad_x, bad_y);
    for (int v = 0; v < d && cyc.empty(); ++v) {
        std::vector<int> nbs;
        mask32 nb = adj[v];
        while (nb) {
            nbs.push_back(std::countr_zero(nb));
            nb &= nb - 1;
        }
        for (std::size_t a = 0; a < nbs.size() && cyc.empty(); ++a)
            for (std::size_t b = a + 1; b < nbs.size() && cyc.empty(); ++b)
                if (!(adj[nbs[a]] >> nbs[b] & 1)) cyc = witness(v, nbs[a], nbs[b]);
    }
    out.chordal = false;
    out.chordless_cycle = cyc;
    return out;
}

PrimeDecomposition prime_decomposition(const Graph& g) {
    require_connected(g, "prime_decomposition");
    auto adj = graph_adj(g);
    RawDecomposition raw = decompose_masks(adj, g.d());

    std::vector<NodeSet> primes;
    for (mask32 m : raw.primes) primes.push_back(mask_to_nodes(m));
    std::vector<int> order(primes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return nodeset_lex_less(primes[a], primes[b]); });
    std::vector<int> rank(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i);

    PrimeDecomposition dec;
    for (int idx : order) dec.primes.push_back(primes[idx]);
    struct Joint {
        NodeSet cut;
        std::pair<int, int> edge;
    };
    std::vector<Joint> joints;
    for (auto [a, b] : raw.tree) {
        int na = rank[a], nb = rank[b];
        NodeSet cut;
        std::set_intersection(dec.primes[std::min(na, nb)].begin(), dec.primes[std::min(na, nb)].end(),
                              dec.primes[std::max(na, nb)].begin(), dec.primes[std::max(na, nb)].end(),
                              std::back_inserter(cut));
        joints.push_back({cut, {std::min(na, nb), std::max(na, nb)}});
    }
    std::sort(joints.begin(), joints.end(), [](const Joint& a, const Joint& b) {
        if (a.cut != b.cut) return nodeset_lex_less(a.cut, b.cut);
        return a.edge < b.edge;
    });
    for (auto& j : joints) {
        dec.cutsets.push_back(j.cut);
        dec.tree.push_back(j.edge);
    }
    dec.scheme = peel_scheme(dec.primes, dec.tree, -1);
    return dec;
}

bool hollow_structure(const Graph& g, const PrimeDecomposition& dec) {
    for (const NodeSet& cut : dec.cutsets)
        if (cut.size() > 2) return false;
    for (const NodeSet& p : dec.primes) {
        if (p.size() <= 3) continue;  // edge, or triangle (3-node primes are complete)
        for (int s : p) {
            int deg = 0;
            for (int t : p)
                if (t != s && g.has_edge(s, t)) ++deg;
            if (deg != 2) return false;
        }
    }
    return true;
}

namespace {

// Tries to rebuild the hollow tree whose cycle completion equals g: inside
// every big prime the pairs shared with other primes must survive, so they
// have to sit on the replacement cycle; everything else is free.
std::optional<Graph> fatten_witness(const Graph& g, const PrimeDecomposition& dec) {
    Graph h(g.d());
    for (std::size_t pi = 0; pi < dec.primes.size(); ++pi) {
        const NodeSet& p = dec.primes[pi];
        if (p.size() == 2) {
            h.add_edge(p[0], p[1]);
            continue;
        }
        if (p.size() == 3) {
            h.add_edge(p[0], p[1]);
            h.add_edge(p[0], p[2]);
            h.add_edge(p[1], p[2]);
            continue;
        }
        // Required pairs: shared with some other prime.
        std::set<std::pair<int, int>> required;
        for (std::size_t qi = 0; qi < dec.primes.size(); ++qi) {
            if (qi == pi) continue;
            NodeSet inter;
            std::set_intersection(p.begin(), p.end(), dec.primes[qi].begin(), dec.primes[qi].end(),
                                  std::back_inserter(inter));
            for (std::size_t a = 0; a < inter.size(); ++a)
                for (std::size_t b = a + 1; b < inter.size(); ++b)
                    required.insert({inter[a], inter[b]});
        }
        std::map<int, std::vector<int>> frag_adj;
        for (int s : p) frag_adj[s] = {};
        for (auto [s, t] : required) {
            frag_adj[s].push_back(t);
            frag_adj[t].push_back(s);
        }
        for (auto& [s, nb] : frag_adj)
            if (nb.size() > 2) return std::nullopt;

        // Walk fragments (paths or one full cycle) deterministically.
        std::set<int> unseen(p.begin(), p.end());
        std::vector<std::vector<int>> fragments;
        bool closed_cycle = false;
        while (!unseen.empty()) {
            int start = -1;
            for (int s : p)
                if (unseen.count(s) && frag_adj[s].size() <= 1) {
                    start = s;
                    break;
                }
            bool cyclic = start < 0;
            if (cyclic) start = *unseen.begin();
            std::vector<int> frag{start};
            unseen.erase(start);
            int cur = start, prev = -1;
            while (true) {
                int next = -1;
                for (int nb : frag_adj[cur])
                    if (nb != prev && unseen.count(nb)) {
                        next = nb;
                        break;
                    }
                if (next < 0) break;
                frag.push_back(next);
                unseen.erase(next);
                prev = cur;
                cur = next;
            }
            if (cyclic) {
                // A cycle fragment must already be the full replacement cycle.
                if (frag.size() != p.size() || required.size() != p.size()) return std::nullopt;
                closed_cycle = true;
            }
            fragments.push_back(frag);
        }
        if (closed_cycle && fragments.size() != 1) return std::nullopt;
        std::sort(fragments.begin(), fragments.end(),
                  [](const std::vector<int>& a, const std::vector<int>& b) { return a[0] < b[0]; });
        std::vector<int> cycle;
        for (auto& f : fragments) cycle.insert(cycle.end(), f.begin(), f.end());
        for (std::size_t i = 0; i < cycle.size(); ++i) {
            int s = cycle[i], t = cycle[(i + 1) % cycle.size()];
            if (!h.has_edge(s, t)) h.add_edge(s, t);
        }
    }
    if (!h.connected()) return std::nullopt;
    PrimeDecomposition hdec = prime_decomposition(h);
    if (!hollow_structure(h, hdec)) return std::nullopt;
    Graph refat = fatten(h);
    if (!(refat == g)) return std::nullopt;
    return h;
}

}  // namespace

TreeClass classify(const Graph& g) {
    require_connected(g, "classify");
    if (g.is_complete()) return TreeClass::complete;
    PrimeDecomposition dec = prime_decomposition(g);

    bool all_edges = true, all_small = true, cut1 = true, cut2 = true, chordal = true;
    for (const NodeSet& p : dec.primes) {
        if (p.size() > 2) all_edges = false;
        if (p.size() > 3) all_small = false;
        if (p.size() > 3) {
            // A prime is a clique exactly when the graph piece is chordal.
            bool clique = true;
            for (std::size_t a = 0; a < p.size() && clique; ++a)
                for (std::size_t b = a + 1; b < p.size(); ++b)
                    if (!g.has_edge(p[a], p[b])) {
                        clique = false;
                        break;
                    }
            if (!clique) chordal = false;
        }
    }
    for (const NodeSet& c : dec.cutsets) {
        if (c.size() > 1) cut1 = false;
        if (c.size() > 2) cut2 = false;
    }

    if (all_edges) return TreeClass::thin_tree;
    if (all_small && cut1) return TreeClass::bulged_tree;
    if (hollow_structure(g, dec)) return TreeClass::hollow_tree;
    if (chordal && cut2 && fatten_witness(g, dec)) return TreeClass::fattened_tree;
    return chordal ? TreeClass::other_chordal : TreeClass::other_nonchordal;
}

std::vector<NodeSet> elimination_scheme(const Graph& g, const std::optional<NodeSet>& start_prime) {
    require_connected(g, "elimination_scheme");
    PrimeDecomposition dec = prime_decomposition(g);
    int root = -1;
    if (start_prime) {
        NodeSet want = *start_prime;
        std::sort(want.begin(), want.end());
        for (std::size_t i = 0; i < dec.primes.size(); ++i)
            if (dec.primes[i] == want) root = static_cast<int>(i);
        if (root < 0) throw domain_error("elimination_scheme: start set is not a prime of the graph");
    }
    return peel_scheme(dec.primes, dec.tree, root);
}

Graph fatten(const Graph& g) {
    require_connected(g, "fatten");
    PrimeDecomposition dec = prime_decomposition(g);
    if (!hollow_structure(g, dec)) throw domain_error("fatten: graph is not a hollow tree");
    Graph out = g;
    for (const NodeSet& p : dec.primes)
        for (std::size_t a = 0; a < p.size(); ++a)
            for (std::size_t b = a + 1; b < p.size(); ++b)
                if (!out.has_edge(p[a], p[b])) out.add_edge(p[a], p[b]);
    return out;
}

ChainGraph orient(const Graph& g, const std::vector<NodeSet>& scheme) {
    require_connected(g, "orient");
    int d = g.d();
    auto adj = graph_adj(g);
    mask32 current = (d == 32) ? ~mask32{0} : ((mask32{1} << d) - 1);

    std::vector<NodeSet> blocks;
    for (const NodeSet& entry_raw : scheme) {
        if (entry_raw.empty()) throw input_error("orient: empty scheme entry");
        NodeSet entry = entry_raw;
        std::sort(entry.begin(), entry.end());
        mask32 em = nodes_to_mask(entry, d, "orient");
        if ((em & current) != em) throw input_error("orient: scheme entry uses removed nodes");

        // Decompose the current induced graph (original labels).
        std::vector<int> labels = mask_to_nodes(current);
        std::vector<int> back(d + 1, 0);
        Graph cur(static_cast<int>(labels.size()));
        for (std::size_t i = 0; i < labels.size(); ++i) back[labels[i]] = static_cast<int>(i) + 1;
        for (std::size_t i = 0; i < labels.size(); ++i)
            for (std::size_t j = i + 1; j < labels.size(); ++j)
                if (adj[labels[i] - 1] >> (labels[j] - 1) & 1)
                    cur.add_edge(static_cast<int>(i) + 1, static_cast<int>(j) + 1);
        if (!cur.connected()) throw input_error("orient: remaining graph is disconnected");
        PrimeDecomposition dec = prime_decomposition(cur);
        int holder = -1;
        for (std::size_t pi = 0; pi < dec.primes.size(); ++pi) {
            mask32 pm = 0;
            for (int s : dec.primes[pi]) pm |= mask32{1} << (labels[s - 1] - 1);
            if (em & pm) {
                if ((em & pm) != em || holder >= 0) holder = -2;
                else if (holder == -1) holder = static_cast<int>(pi);
            }
        }
        if (holder < 0) throw input_error("orient: scheme entry is not an outer set of a single prime");

        // Properness: closing over the entry must not couple any surviving pair.
        mask32 survivors = current & ~em;
        if (!survivors) throw input_error("orient: scheme eliminates every node");
        std::vector<mask32> closure(adj);
        for (int i = 0; i < d; ++i)
            closure[i] = (closure[i] | (mask32{1} << i)) & current;
        mask32 ems = em;
        while (ems) {
            int k = std::countr_zero(ems);
            ems &= ems - 1;
            for (int i = 0; i < d; ++i) {
                if (i == k || !(current >> i & 1)) continue;
                if (closure[i] >> k & 1) closure[i] |= closure[k];
            }
        }
        for (int i = 0; i < d; ++i) {
            if (!(survivors >> i & 1)) continue;
            mask32 before = (adj[i] | (mask32{1} << i)) & survivors;
            if ((closure[i] & survivors) != before)
                throw input_error("orient: scheme entry is not proper (closure induces new edges)");
        }
        mask32 surv_check = survivors;
        std::vector<mask32> sub_adj(d, 0);
        for (int i = 0; i < d; ++i) sub_adj[i] = adj[i] & survivors;
        if (!mask_connected(sub_adj, surv_check)) throw input_error("orient: remaining graph is disconnected");

        blocks.push_back(entry);
        current = survivors;
    }
    blocks.push_back(mask_to_nodes(current));

    std::vector<int> block_of(d + 1, -1);
    for (std::size_t b = 0; b < blocks.size(); ++b)
        for (int s : blocks[b]) block_of[s] = static_cast<int>(b);

    ChainGraph cg;
    cg.d = d;
    cg.blocks = blocks;
    for (auto [s, t] : g.edges()) {
        if (block_of[s] == block_of[t]) cg.lines.emplace_back(s, t);
        else if (block_of[s] < block_of[t]) cg.arrows.emplace_back(t, s);
        else cg.arrows.emplace_back(s, t);
    }
    return cg;
}

namespace {

using Complex = std::tuple<int, std::vector<int>, int>;

std::set<Complex> minimal_complexes(const ChainGraph& c) {
    int d = c.d;
    std::vector<mask32> skel(d, 0), line_adj(d, 0);
    for (auto [s, t] : c.arrows) {
        skel[s - 1] |= mask32{1} << (t - 1);
        skel[t - 1] |= mask32{1} << (s - 1);
    }
    for (auto [s, t] : c.lines) {
        skel[s - 1] |= mask32{1} << (t - 1);
        skel[t - 1] |= mask32{1} << (s - 1);
        line_adj[s - 1] |= mask32{1} << (t - 1);
        line_adj[t - 1] |= mask32{1} << (s - 1);
    }
    std::vector<std::vector<int>> arrows_into(d + 1);
    for (auto [tail, head] : c.arrows) arrows_into[head].push_back(tail);

    std::set<Complex> out;
    auto consider = [&](const std::vector<int>& path) {
        mask32 pm = 0;
        for (int v : path) pm |= mask32{1} << (v - 1);
        // Chordless in the skeleton.
        for (std::size_t i = 0; i < path.size(); ++i)
            for (std::size_t j = i + 2; j < path.size(); ++j)
                if (skel[path[i] - 1] >> (path[j] - 1) & 1) return;
        int v1 = path.front(), vk = path.back();
        for (int a : arrows_into[v1]) {
            if (pm >> (a - 1) & 1) continue;
            bool a_ok = true;
            for (std::size_t i = 1; i < path.size(); ++i)
                if (skel[a - 1] >> (path[i] - 1) & 1) {
                    a_ok = false;
                    break;
                }
            if (!a_ok) continue;
            for (int b : arrows_into[vk]) {
                if (b == a || (pm >> (b - 1) & 1)) continue;
                if (skel[a - 1] >> (b - 1) & 1) continue;
                bool b_ok = true;
                for (std::size_t i = 0; i + 1 < path.size(); ++i)
                    if (skel[b - 1] >> (path[i] - 1) & 1) {
                        b_ok = false;
                        break;
                    }
                if (!b_ok) continue;
                if (a < b) out.insert({a, path, b});
                else {
                    std::vector<int> rev(path.rbegin(), path.rend());
                    out.insert({b, rev, a});
                }
            }
        }
    };

    std::vector<int> path;
    std::function<void(int, mask32)> extend = [&](int cur, mask32 used) {
        consider(path);
        mask32 nb = line_adj[cur - 1] & ~used;
        while (nb) {
            int nxt = std::countr_zero(nb) + 1;
            nb &= nb - 1;
            path.push_back(nxt);
            extend(nxt, used | (mask32{1} << (nxt - 1)));
            path.pop_back();
        }
    };
    for (int v = 1; v <= d; ++v) {
        path = {v};
        extend(v, mask32{1} << (v - 1));
    }
    return out;
}

std::set<std::tuple<int, int, int>> collision_vs(const ChainGraph& c) {
    int d = c.d;
    std::vector<mask32> skel(d, 0);
    for (auto [s, t] : c.arrows) {
        skel[s - 1] |= mask32{1} << (t - 1);
        skel[t - 1] |= mask32{1} << (s - 1);
    }
    for (auto [s, t] : c.lines) {
        skel[s - 1] |= mask32{1} << (t - 1);
        skel[t - 1] |= mask32{1} << (s - 1);
    }
    std::vector<std::vector<int>> arrows_into(d + 1);
    for (auto [tail, head] : c.arrows) arrows_into[head].push_back(tail);
    std::set<std::tuple<int, int, int>> out;
    for (int s = 1; s <= d; ++s) {
        auto& tails = arrows_into[s];
        for (std::size_t i = 0; i < tails.size(); ++i)
            for (std::size_t j = i + 1; j < tails.size(); ++j) {
                int a = std::min(tails[i], tails[j]), b = std::max(tails[i], tails[j]);
                if (!(skel[a - 1] >> (b - 1) & 1)) out.insert({a, b, s});
            }
    }
    return out;
}

}  // namespace

bool is_markov_equivalent(const ChainGraph& c1, const ChainGraph& c2, MarkovCriterion crit) {
    if (c1.d != c2.d || !(c1.skeleton() == c2.skeleton()))
        throw input_error("is_markov_equivalent: skeletons differ");
    if (crit == MarkovCriterion::lwf) return minimal_complexes(c1) == minimal_complexes(c2);
    return collision_vs(c1) == collision_vs(c2);
}

EdgeMatrix partial_closure(EdgeMatrix m, const NodeSet& a) {
    if (m.d < 1 || m.rows.size() != static_cast<std::size_t>(m.d))
        throw input_error("partial_closure: malformed edge matrix");
    for (int i = 0; i < m.d; ++i)
        if (!(m.rows[i] >> i & 1)) throw input_error("partial_closure: diagonal must be one");
    mask32 am = nodes_to_mask(a, m.d, "partial_closure");
    while (am) {
        int k = std::countr_zero(am);
        am &= am - 1;
        for (int i = 0; i < m.d; ++i) {
            if (i == k) continue;
            if (m.rows[i] >> k & 1) m.rows[i] |= m.rows[k];
        }
    }
    return m;
}

}  // namespace hollowtree
