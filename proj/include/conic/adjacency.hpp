#pragma once

#include "conic/cone_geometry.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace conic {

struct AdjacencyGraph {
    Index node_count = 0;
    std::vector<std::pair<Index, Index>> edges; ///< i < j, lexicographic
    std::vector<IndexList> neighbors;           ///< E_i, sorted

    bool adjacent(Index i, Index j) const;
    /// {i} together with E_i.
    IndexList closed_neighborhood(Index i) const;

    static AdjacencyGraph from_edges(Index node_count, std::vector<std::pair<Index, Index>> edges);
};

/// Maximal cliques, each sorted, the list in lexicographic order.
struct CliqueSet {
    std::vector<IndexList> cliques;

    std::size_t size() const { return cliques.size(); }
    bool empty() const { return cliques.empty(); }
    /// Indices of the cliques containing each node.
    std::vector<IndexList> membership(Index node_count) const;
};

/// rank(rows active at both rays) == n - 2
bool algebraic_adjacency_test(const DDPair& pair, Index i, Index j);

/// No third ray is active on every row active at both i and j.
bool combinatorial_adjacency_test(const DDPair& pair, Index i, Index j);

AdjacencyGraph build_adjacency_graph(const DDPair& pair);

inline constexpr std::size_t kDefaultCliqueCap = 100000;

/// Bron-Kerbosch with Tomita pivoting. Throws CliqueExplosion past `cap`.
CliqueSet enumerate_maximal_cliques(const AdjacencyGraph& graph, std::size_t cap = kDefaultCliqueCap);

/// supp(b) = {i : b_i > tol} is a clique of the graph with at most s nodes.
bool is_conically_sparse(const DDPair& pair, const AdjacencyGraph& graph, const Vector& b, Index s,
                         double tol = kDefaultTolerance);

/// Whether { b' >= 0 : delta b' = mu } is the single point b, decided from the
/// range of every coordinate over that polytope. The ranges come from an
/// exhaustive walk over its vertices (basic feasible solutions), so this is
/// meant for small cones.
bool representation_uniqueness(const DDPair& pair, const Vector& mu, const Vector& b, double tol = 1e-8);

/// {i : b_i > eps} fits inside one closed neighborhood {i} u E_i.
bool is_weakly_eps_sparse(const AdjacencyGraph& graph, const Vector& b, double eps);

} // namespace conic
