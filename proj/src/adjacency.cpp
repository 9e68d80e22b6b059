#include "conic/adjacency.hpp"

#include "conic/error.hpp"

#include <boost/dynamic_bitset.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace conic {

namespace {

using Bits = boost::dynamic_bitset<>;

void check_ray_pair(const DDPair& pair, Index i, Index j) {
    const Index d = pair.vertex.ray_count();
    if (i < 0 || i >= d || j < 0 || j >= d) {
        throw Error(ErrorCode::IndexOutOfRange, "ray pair (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
    if (i == j) {
        throw Error(ErrorCode::InvalidInput, "adjacency needs two distinct rays");
    }
}

Bits zero_bits(const DDPair& pair, Index ray) {
    Bits bits(static_cast<std::size_t>(pair.facet.row_count()));
    for (const Index row : zero_set(pair, ray)) {
        bits.set(static_cast<std::size_t>(row));
    }
    return bits;
}

IndexList to_list(const Bits& bits) {
    IndexList out;
    for (auto b = bits.find_first(); b != Bits::npos; b = bits.find_next(b)) {
        out.push_back(static_cast<Index>(b));
    }
    return out;
}

bool rank_is_n_minus_2(const DDPair& pair, const Bits& common) {
    const Index n = pair.facet.dim();
    if (static_cast<Index>(common.count()) < n - 2) {
        return false;
    }
    const IndexList rows = to_list(common);
    return numeric_rank(select_rows(pair.facet.a, rows), pair.tolerance) == n - 2;
}

} // namespace

bool AdjacencyGraph::adjacent(Index i, Index j) const {
    if (i < 0 || j < 0 || i >= node_count || j >= node_count) {
        throw Error(ErrorCode::IndexOutOfRange, "node index");
    }
    const auto& e = neighbors[static_cast<std::size_t>(i)];
    return std::binary_search(e.begin(), e.end(), j);
}

IndexList AdjacencyGraph::closed_neighborhood(Index i) const {
    if (i < 0 || i >= node_count) {
        throw Error(ErrorCode::IndexOutOfRange, "node index");
    }
    IndexList out = neighbors[static_cast<std::size_t>(i)];
    out.insert(std::upper_bound(out.begin(), out.end(), i), i);
    return out;
}

AdjacencyGraph AdjacencyGraph::from_edges(Index node_count, std::vector<std::pair<Index, Index>> edges) {
    AdjacencyGraph g;
    g.node_count = node_count;
    g.neighbors.assign(static_cast<std::size_t>(node_count), {});
    for (auto& [i, j] : edges) {
        if (i == j) {
            throw Error(ErrorCode::InvalidInput, "self-loop on node " + std::to_string(i));
        }
        if (i < 0 || j < 0 || i >= node_count || j >= node_count) {
            throw Error(ErrorCode::IndexOutOfRange, "edge endpoint");
        }
        if (i > j) {
            std::swap(i, j);
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (const auto& [i, j] : edges) {
        g.neighbors[static_cast<std::size_t>(i)].push_back(j);
        g.neighbors[static_cast<std::size_t>(j)].push_back(i);
    }
    for (auto& e : g.neighbors) {
        std::sort(e.begin(), e.end());
    }
    g.edges = std::move(edges);
    return g;
}

std::vector<IndexList> CliqueSet::membership(Index node_count) const {
    std::vector<IndexList> out(static_cast<std::size_t>(node_count));
    for (std::size_t w = 0; w < cliques.size(); ++w) {
        for (const Index i : cliques[w]) {
            out[static_cast<std::size_t>(i)].push_back(static_cast<Index>(w));
        }
    }
    return out;
}

bool algebraic_adjacency_test(const DDPair& pair, Index i, Index j) {
    check_ray_pair(pair, i, j);
    return rank_is_n_minus_2(pair, zero_bits(pair, i) & zero_bits(pair, j));
}

bool combinatorial_adjacency_test(const DDPair& pair, Index i, Index j) {
    check_ray_pair(pair, i, j);
    const Bits common = zero_bits(pair, i) & zero_bits(pair, j);
    for (Index k = 0; k < pair.vertex.ray_count(); ++k) {
        if (k != i && k != j && common.is_subset_of(zero_bits(pair, k))) {
            return false;
        }
    }
    return true;
}

AdjacencyGraph build_adjacency_graph(const DDPair& pair) {
    const Index d = pair.vertex.ray_count();
    std::vector<Bits> zeros;
    zeros.reserve(static_cast<std::size_t>(d));
    for (Index r = 0; r < d; ++r) {
        zeros.push_back(zero_bits(pair, r));
    }
    std::vector<std::pair<Index, Index>> edges;
    for (Index i = 0; i < d; ++i) {
        for (Index j = i + 1; j < d; ++j) {
            if (rank_is_n_minus_2(pair, zeros[static_cast<std::size_t>(i)] & zeros[static_cast<std::size_t>(j)])) {
                edges.emplace_back(i, j);
            }
        }
    }
    return AdjacencyGraph::from_edges(d, std::move(edges));
}

CliqueSet enumerate_maximal_cliques(const AdjacencyGraph& graph, std::size_t cap) {
    const auto d = static_cast<std::size_t>(graph.node_count);
    std::vector<Bits> adj(d, Bits(d));
    for (const auto& [i, j] : graph.edges) {
        adj[static_cast<std::size_t>(i)].set(static_cast<std::size_t>(j));
        adj[static_cast<std::size_t>(j)].set(static_cast<std::size_t>(i));
    }
    CliqueSet out;
    IndexList current;

    std::function<void(Bits, Bits)> expand = [&](Bits candidates, Bits excluded) {
        if (candidates.none()) {
            if (excluded.none()) {
                if (out.cliques.size() >= cap) {
                    throw Error(ErrorCode::CliqueExplosion,
                                "more than " + std::to_string(cap) + " maximal cliques");
                }
                IndexList clique = current;
                std::sort(clique.begin(), clique.end());
                out.cliques.push_back(std::move(clique));
            }
            return;
        }
        // Pivot maximizing |candidates n N(u)| over candidates u excluded.
        std::size_t pivot = Bits::npos;
        std::size_t best = 0;
        const Bits pool = candidates | excluded;
        for (auto u = pool.find_first(); u != Bits::npos; u = pool.find_next(u)) {
            const std::size_t overlap = (candidates & adj[u]).count();
            if (pivot == Bits::npos || overlap > best) {
                pivot = u;
                best = overlap;
            }
        }
        const Bits branch = candidates - adj[pivot];
        for (auto v = branch.find_first(); v != Bits::npos; v = branch.find_next(v)) {
            current.push_back(static_cast<Index>(v));
            expand(candidates & adj[v], excluded & adj[v]);
            current.pop_back();
            candidates.reset(v);
            excluded.set(v);
        }
    };

    if (d > 0) {
        Bits all(d);
        all.set();
        expand(all, Bits(d));
    }
    std::sort(out.cliques.begin(), out.cliques.end());
    return out;
}

bool is_conically_sparse(const DDPair& pair, const AdjacencyGraph& graph, const Vector& b, Index s, double tol) {
    if (b.size() != pair.vertex.ray_count() || graph.node_count != b.size()) {
        throw Error(ErrorCode::ShapeMismatch, "coefficient vector length must equal the ray count");
    }
    if ((b.array() < -tol).any()) {
        throw Error(ErrorCode::NegativeCoefficient, "conic coefficients must be non-negative");
    }
    IndexList support;
    for (Index i = 0; i < b.size(); ++i) {
        if (b(i) > tol) {
            support.push_back(i);
        }
    }
    if (static_cast<Index>(support.size()) > s) {
        return false;
    }
    for (std::size_t p = 0; p < support.size(); ++p) {
        for (std::size_t q = p + 1; q < support.size(); ++q) {
            if (!graph.adjacent(support[p], support[q])) {
                return false;
            }
        }
    }
    return true;
}

bool representation_uniqueness(const DDPair& pair, const Vector& mu, const Vector& b, double tol) {
    const Matrix& delta = pair.vertex.delta;
    const Index d = delta.cols();
    if (b.size() != d || mu.size() != delta.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "mu/b dimensions do not match the DD pair");
    }
    const double scale = std::max(1.0, mu.norm());
    if ((b.array() < -tol).any()) {
        throw Error(ErrorCode::NegativeCoefficient, "candidate coefficients must be non-negative");
    }
    if ((delta * b - mu).norm() > tol * scale) {
        throw Error(ErrorCode::InfeasibleCertificate, "delta * b does not reproduce mu");
    }

    const Index rank = numeric_rank(delta, pair.tolerance);
    double budget = 0.0;
    {
        double binom = 1.0;
        for (Index s = 1; s <= rank; ++s) {
            binom = binom * static_cast<double>(d - s + 1) / static_cast<double>(s);
            budget += binom;
        }
    }
    if (budget > 5e6) {
        throw Error(ErrorCode::InvalidInput, "too many rays for the exhaustive uniqueness check");
    }

    Vector lo = Vector::Constant(d, std::numeric_limits<double>::infinity());
    Vector hi = Vector::Constant(d, -std::numeric_limits<double>::infinity());
    bool found = false;
    auto visit = [&](const Vector& vertex) {
        lo = lo.cwiseMin(vertex);
        hi = hi.cwiseMax(vertex);
        found = true;
    };
    if (mu.norm() <= tol * scale) {
        visit(Vector::Zero(d));
    }

    IndexList subset;
    std::function<void(Index)> walk = [&](Index start) {
        if (!subset.empty()) {
            const Matrix cols = select_cols(delta, subset);
            const auto qr = cols.colPivHouseholderQr();
            if (qr.rank() < static_cast<Index>(subset.size())) {
                return; // supersets are dependent as well
            }
            const Vector coef = qr.solve(mu);
            if ((cols * coef - mu).norm() <= tol * scale && (coef.array() >= -tol).all()) {
                Vector vertex = Vector::Zero(d);
                vertex(subset) = coef.cwiseMax(0.0);
                visit(vertex);
            }
        }
        if (static_cast<Index>(subset.size()) == rank) {
            return;
        }
        for (Index j = start; j < d; ++j) {
            subset.push_back(j);
            walk(j + 1);
            subset.pop_back();
        }
    };
    walk(0);
    if (!found) {
        throw Error(ErrorCode::InfeasibleCertificate, "no vertex representation found for mu");
    }
    return ((hi - lo).array() <= tol * scale).all();
}

bool is_weakly_eps_sparse(const AdjacencyGraph& graph, const Vector& b, double eps) {
    if (b.size() != graph.node_count) {
        throw Error(ErrorCode::ShapeMismatch, "coefficient vector length must equal the node count");
    }
    if (!(eps >= 0.0)) {
        throw Error(ErrorCode::InvalidInput, "eps must be non-negative");
    }
    IndexList large;
    for (Index i = 0; i < b.size(); ++i) {
        if (b(i) > eps) {
            large.push_back(i);
        }
    }
    if (large.empty()) {
        return true;
    }
    for (Index i = 0; i < graph.node_count; ++i) {
        const IndexList hood = graph.closed_neighborhood(i);
        if (std::includes(hood.begin(), hood.end(), large.begin(), large.end())) {
            return true;
        }
    }
    return false;
}

} // namespace conic
