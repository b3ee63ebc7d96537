#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hollowtree/errors.hpp"

// Undirected labelled graphs, clique-separator (prime) decomposition, the
// tree-class taxonomy, node-set elimination schemes, chain-graph orientation
// and Markov equivalence, and partial closure of binary edge matrices.
//
// Node labels are 1-based throughout the public API.  Node subsets are
// passed as sorted-or-unsorted vectors of labels; internally everything is a
// bitmask with bit (s-1) standing for node s, which caps graphs at 31 nodes
// (far above the d <= 20 supported by the table layer).

namespace hollowtree {

using NodeSet = std::vector<int>;

class Graph {
public:
    Graph() = default;
    explicit Graph(int d);

    int d() const { return d_; }
    bool has_edge(int s, int t) const;
    void add_edge(int s, int t);
    // Edges as (s, t) with s < t, sorted lexicographically.
    std::vector<std::pair<int, int>> edges() const;
    std::size_t edge_count() const;
    bool connected() const;
    bool is_complete() const;
    // Neighbour bitmask of s, excluding s itself.
    std::uint32_t neighbors(int s) const;
    // 0/1 adjacency with unit diagonal.
    std::vector<std::vector<int>> edge_matrix() const;

    bool operator==(const Graph& o) const { return d_ == o.d_ && adj_ == o.adj_; }

private:
    void check_node(int s) const;
    int d_ = 0;
    std::vector<std::uint32_t> adj_;  // adj_[i] bit j: edge between i+1 and j+1
};

// One tree per call of prime_decomposition: `primes` are the maximal
// subgraphs without a complete separator, sorted ascending inside and
// lexicographically across.  `tree[k]` joins primes[tree[k].first] and
// primes[tree[k].second]; `cutsets[k]` is their intersection, so the cutset
// list is a multiset with one entry per junction-tree edge.  `scheme` is the
// default proper elimination scheme (see elimination_scheme).
struct PrimeDecomposition {
    std::vector<NodeSet> primes;
    std::vector<NodeSet> cutsets;
    std::vector<std::pair<int, int>> tree;
    std::vector<NodeSet> scheme;
};

enum class TreeClass {
    thin_tree,        // every prime an edge
    bulged_tree,      // edges and triangles, single-node cutsets
    hollow_tree,      // edges and chordless cycles, cutsets of at most two nodes
    complete,         // complete graphs sit outside the tree taxonomy
    fattened_tree,    // a hollow tree with every chordless cycle completed
    other_chordal,
    other_nonchordal,
};

std::string to_string(TreeClass c);

struct Chordality {
    bool chordal = false;
    // When chordal: an order eliminating a simplicial node at each step.
    std::vector<int> elimination_order;
    // When not: the nodes of a chordless cycle of length >= 4, in cycle order.
    std::vector<int> chordless_cycle;
};

// Blocks ordered as eliminated: blocks[0] went first, the last block is the
// surviving past.  Arrows run (tail, head) from later blocks to earlier ones;
// lines are within-block edges stored with smaller label first.
struct ChainGraph {
    int d = 0;
    std::vector<NodeSet> blocks;
    std::vector<std::pair<int, int>> arrows;
    std::vector<std::pair<int, int>> lines;

    Graph skeleton() const;
};

enum class MarkovCriterion { lwf, regression };

// Square binary matrix with unit diagonal; rows[i] bit j is entry (i+1, j+1).
// Need not be symmetric.
struct EdgeMatrix {
    int d = 0;
    std::vector<std::uint32_t> rows;

    static EdgeMatrix from_graph(const Graph& g);
    bool operator==(const EdgeMatrix& o) const = default;
};

// Builds a graph from unordered node pairs.  Throws input_error on d < 1,
// labels outside 1..d, self-loops, or duplicate pairs.
Graph build_graph(int d, const std::vector<std::pair<int, int>>& edges);

// Maximum-cardinality-search chordality test.  Connected input required.
Chordality is_chordal(const Graph& g);

// Decomposition into maximal prime subgraphs via a minimal triangulation
// (MCS-M), a max-weight clique tree, and merging across separators that are
// incomplete in the input graph.  Connected input required.
PrimeDecomposition prime_decomposition(const Graph& g);

// Most specific class first: thin < bulged < hollow among trees; complete
// graphs report complete; chordal graphs obtained by completing the cycles
// of some hollow tree report fattened_tree.
TreeClass classify(const Graph& g);

// True when every prime is an edge, a triangle or a chordless cycle and all
// cutsets have at most two nodes (the structural hollow-tree property,
// independent of the completeness precedence in classify).
bool hollow_structure(const Graph& g, const PrimeDecomposition& dec);

// Ordered outer node-sets peeling leaf primes until one prime remains; the
// smallest leaf (lexicographically) goes first.  When start_prime is given it
// must equal one of the primes and is never eliminated.
std::vector<NodeSet> elimination_scheme(const Graph& g,
                                        const std::optional<NodeSet>& start_prime = std::nullopt);

// Completes every prime of four or more nodes.  Requires hollow structure.
Graph fatten(const Graph& g);

// Orients g along a proper elimination scheme: scheme entries become the
// leading blocks, the survivors the final block; every edge between blocks
// becomes an arrow from the later block to the earlier one.  Valid schemes
// remove outer sets of a single prime without inducing new edges among the
// survivors (checked via partial closure), and leave the rest connected.
ChainGraph orient(const Graph& g, const std::vector<NodeSet>& scheme);

// Equivalence of chain graphs over the same skeleton: identical minimal
// complexes (LWF) or identical two-arrow collisions with uncoupled tails
// (regression).  Throws input_error when skeletons differ.
bool is_markov_equivalent(const ChainGraph& c1, const ChainGraph& c2, MarkovCriterion crit);

// Transitive-closure analogue of partial inversion: for each k in a, every
// row with a 1 in column k absorbs row k; row and column k stay unchanged.
// Commutative in a and idempotent.
EdgeMatrix partial_closure(EdgeMatrix m, const NodeSet& a);

}  // namespace hollowtree
