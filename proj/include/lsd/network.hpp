#pragma once

// Functional map network: topology over shapes and maps on directed edges.

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "lsd/fmaps.hpp"
#include "lsd/linalg.hpp"

namespace lsd
{

enum class TopologyKind { Mst, Knn, Clique, Chain, Custom };

inline std::string to_string(TopologyKind kind)
{
    switch (kind) {
        case TopologyKind::Mst: return "mst";
        case TopologyKind::Knn: return "knn";
        case TopologyKind::Clique: return "clique";
        case TopologyKind::Chain: return "chain";
        case TopologyKind::Custom: return "custom";
    }
    return "custom";
}

struct TopologySpec {
    TopologyKind kind{TopologyKind::Mst};
    int k_nn{10};
    /// Chain order; empty means shape index order.
    std::vector<int> order;
};

/** @brief Undirected edge set (i < j), sorted, plus construction notes */
struct Topology {
    TopologyKind kind{TopologyKind::Custom};
    std::vector<std::pair<int, int>> edges;
    std::vector<std::string> notes;

    [[nodiscard]] std::vector<std::pair<int, int>> directed() const
    {
        std::vector<std::pair<int, int>> out;
        out.reserve(edges.size() * 2);
        for (const auto& [i, j] : edges) {
            out.emplace_back(i, j);
            out.emplace_back(j, i);
        }
        return out;
    }
};

namespace detail
{

struct DisjointSets {
    std::vector<int> parent;
    explicit DisjointSets(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x)
    {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    bool unite(int a, int b)
    {
        a = find(a);
        b = find(b);
        if (a == b) {
            return false;
        }
        parent[std::max(a, b)] = std::min(a, b);
        return true;
    }
};

inline Mat pairwise_distances(const std::vector<Vec>& dnas)
{
    const auto n = static_cast<Index>(dnas.size());
    Mat d = Mat::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            d(i, j) = d(j, i) = (dnas[i] - dnas[j]).norm();
        }
    }
    return d;
}

/// Kruskal over all pairs; ties broken by (i, j).
inline std::vector<std::pair<int, int>> kruskal(const Mat& dist)
{
    const auto n = static_cast<int>(dist.rows());
    std::vector<std::tuple<double, int, int>> cand;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            cand.emplace_back(dist(i, j), i, j);
        }
    }
    std::sort(cand.begin(), cand.end());
    DisjointSets sets(n);
    std::vector<std::pair<int, int>> out;
    for (const auto& [w, i, j] : cand) {
        if (sets.unite(i, j)) {
            out.emplace_back(i, j);
        }
    }
    return out;
}

inline bool is_connected(int n, const std::vector<std::pair<int, int>>& edges)
{
    DisjointSets sets(n);
    int comps = n;
    for (const auto& [i, j] : edges) {
        comps -= sets.unite(i, j) ? 1 : 0;
    }
    return comps == 1;
}

inline void normalize_edges(std::vector<std::pair<int, int>>& edges)
{
    for (auto& e : edges) {
        if (e.first > e.second) {
            std::swap(e.first, e.second);
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

}  // namespace detail

/**
 * @brief Builds a symmetric, connected topology from Shape-DNA distances.
 *
 * kNN neighborhoods are symmetrized by union; a disconnected kNN graph is
 * repaired with MST edges and the repair is noted.
 */
inline Topology build_topology(const std::vector<Vec>& dnas, const TopologySpec& spec)
{
    const auto n = static_cast<int>(dnas.size());
    require(n >= 2, ErrorCode::InsufficientShapes, "a network needs at least 2 shapes");
    for (const auto& d : dnas) {
        require(d.size() == dnas.front().size(), ErrorCode::DimensionMismatch, "Shape-DNA vectors differ in length");
    }
    const Mat dist = detail::pairwise_distances(dnas);
    Topology topo;
    topo.kind = spec.kind;
    switch (spec.kind) {
        case TopologyKind::Mst: topo.edges = detail::kruskal(dist); break;
        case TopologyKind::Clique:
            for (int i = 0; i < n; ++i) {
                for (int j = i + 1; j < n; ++j) {
                    topo.edges.emplace_back(i, j);
                }
            }
            break;
        case TopologyKind::Chain: {
            std::vector<int> order = spec.order;
            if (order.empty()) {
                order.resize(static_cast<std::size_t>(n));
                std::iota(order.begin(), order.end(), 0);
            }
            std::vector<int> sorted = order;
            std::sort(sorted.begin(), sorted.end());
            std::vector<int> expect(static_cast<std::size_t>(n));
            std::iota(expect.begin(), expect.end(), 0);
            require(sorted == expect, ErrorCode::PreconditionViolation, "chain order must be a permutation of shapes");
            for (std::size_t p = 0; p + 1 < order.size(); ++p) {
                topo.edges.emplace_back(order[p], order[p + 1]);
            }
            break;
        }
        case TopologyKind::Knn: {
            require(spec.k_nn >= 1, ErrorCode::PreconditionViolation, "k_nn must be positive");
            if (spec.k_nn >= n - 1) {
                topo.notes.push_back("knn:" + std::to_string(spec.k_nn) + " saturates " + std::to_string(n) +
                                     " shapes; topology equals the clique");
            }
            for (int i = 0; i < n; ++i) {
                std::vector<std::pair<double, int>> nbrs;
                for (int j = 0; j < n; ++j) {
                    if (j != i) {
                        nbrs.emplace_back(dist(i, j), j);
                    }
                }
                std::sort(nbrs.begin(), nbrs.end());
                for (int q = 0; q < std::min<int>(spec.k_nn, static_cast<int>(nbrs.size())); ++q) {
                    topo.edges.emplace_back(i, nbrs[q].second);
                }
            }
            detail::normalize_edges(topo.edges);
            if (!detail::is_connected(n, topo.edges)) {
                std::size_t added = 0;
                for (const auto& e : detail::kruskal(dist)) {
                    if (!std::binary_search(topo.edges.begin(), topo.edges.end(), e)) {
                        topo.edges.push_back(e);
                        ++added;
                    }
                }
                topo.notes.push_back("knn graph was disconnected; added " + std::to_string(added) + " MST edges");
            }
            break;
        }
        case TopologyKind::Custom: fail(ErrorCode::PreconditionViolation, "custom topologies are supplied directly");
    }
    detail::normalize_edges(topo.edges);
    return topo;
}

/** @brief Shapes plus functional maps on both directions of every edge */
struct FMNetwork {
    std::vector<std::string> ids;
    std::vector<Vec> spectra;
    std::map<std::pair<int, int>, FunctionalMap> maps;
    TopologyKind topology{TopologyKind::Custom};

    [[nodiscard]] int size() const { return static_cast<int>(ids.size()); }

    [[nodiscard]] const FunctionalMap& map(int i, int j) const
    {
        auto it = maps.find({i, j});
        require(it != maps.end(), ErrorCode::PreconditionViolation,
                "no map on edge " + std::to_string(i) + "->" + std::to_string(j));
        return it->second;
    }

    [[nodiscard]] std::vector<int> neighbors(int i) const
    {
        std::vector<int> out;
        for (const auto& [key, _] : maps) {
            if (key.first == i) {
                out.push_back(key.second);
            }
        }
        return out;
    }

    [[nodiscard]] Index basis_size(int i) const { return spectra[static_cast<std::size_t>(i)].size(); }

    [[nodiscard]] int index_of(const std::string& id) const
    {
        auto it = std::find(ids.begin(), ids.end(), id);
        if (it == ids.end()) {
            fail(ErrorCode::UnknownShape, "shape '" + id + "' is not in the network");
        }
        return static_cast<int>(it - ids.begin());
    }

    /// Throws unless edges are symmetric, maps sized consistently and the graph connected.
    void validate() const
    {
        std::vector<std::pair<int, int>> undirected;
        for (const auto& [key, fm] : maps) {
            const auto [i, j] = key;
            require(i >= 0 && j >= 0 && i < size() && j < size() && i != j, ErrorCode::PreconditionViolation,
                    "edge references unknown shape index");
            require(maps.count({j, i}) == 1, ErrorCode::PreconditionViolation,
                    "network is not symmetric: missing " + std::to_string(j) + "->" + std::to_string(i));
            require(fm.matrix.rows() == basis_size(j) && fm.matrix.cols() == basis_size(i),
                    ErrorCode::DimensionMismatch, "map " + ids[i] + "->" + ids[j] + " has wrong dimensions");
            require(fm.matrix.allFinite(), ErrorCode::PreconditionViolation, "map has non-finite entries");
            undirected.emplace_back(std::min(i, j), std::max(i, j));
        }
        require(size() == 1 || detail::is_connected(size(), undirected), ErrorCode::PreconditionViolation,
                "network is not connected");
    }
};

using MapProvider = std::function<FunctionalMap(int, int)>;

/**
 * @brief Fills both directions of every topology edge from the provider.
 *
 * Reverse maps come from their own provider call, never from inversion.
 */
inline FMNetwork attach_maps(const std::vector<std::string>& ids, const std::vector<Vec>& spectra,
                             const Topology& topology, const MapProvider& provider)
{
    require(ids.size() == spectra.size(), ErrorCode::DimensionMismatch, "ids and spectra differ in length");
    FMNetwork net;
    net.ids = ids;
    net.spectra = spectra;
    net.topology = topology.kind;
    for (const auto& [i, j] : topology.directed()) {
        try {
            FunctionalMap fm = provider(i, j);
            if (fm.matrix.size() == 0) {
                fail(ErrorCode::ProviderFailure, "empty map");
            }
            net.maps.emplace(std::make_pair(i, j), std::move(fm));
        } catch (const std::exception& e) {
            fail(ErrorCode::ProviderFailure, "edge " + ids[i] + "->" + ids[j] + ": " + e.what());
        }
    }
    net.validate();
    return net;
}

struct CycleResidual {
    int i{0};
    int j{0};
    double residual{0.0};
};

struct ConsistencyReport {
    std::vector<CycleResidual> cycles;
    double min{0.0};
    double mean{0.0};
    double max{0.0};
};

/**
 * @brief Frobenius residual ||composed map - I|| around each fundamental
 * cycle of a BFS spanning tree rooted at shape 0.
 */
inline ConsistencyReport consistency_report(const FMNetwork& net)
{
    const int n = net.size();
    std::vector<int> parent(static_cast<std::size_t>(n), -1);
    std::vector<int> depth(static_cast<std::size_t>(n), -1);
    std::set<std::pair<int, int>> tree;
    std::queue<int> q;
    if (n > 0) {
        depth[0] = 0;
        q.push(0);
    }
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int v : net.neighbors(u)) {
            if (depth[v] < 0) {
                depth[v] = depth[u] + 1;
                parent[v] = u;
                tree.emplace(std::min(u, v), std::max(u, v));
                q.push(v);
            }
        }
    }
    ConsistencyReport report;
    for (const auto& [key, _] : net.maps) {
        const auto [i, j] = key;
        if (i > j || tree.count({i, j}) != 0) {
            continue;
        }
        // Tree path i -> j through the lowest common ancestor.
        std::vector<int> up{i};
        std::vector<int> down{j};
        int a = i;
        int b = j;
        while (a != b) {
            if (depth[a] >= depth[b]) {
                a = parent[a];
                up.push_back(a);
            } else {
                b = parent[b];
                down.push_back(b);
            }
        }
        up.pop_back();
        std::vector<int> path = up;
        path.insert(path.end(), down.rbegin(), down.rend());
        Mat composed = Mat::Identity(net.basis_size(i), net.basis_size(i));
        for (std::size_t s = 0; s + 1 < path.size(); ++s) {
            composed = net.map(path[s], path[s + 1]).matrix * composed;
        }
        composed = net.map(j, i).matrix * composed;
        const double res = (composed - Mat::Identity(composed.rows(), composed.cols())).norm();
        report.cycles.push_back({i, j, res});
    }
    if (!report.cycles.empty()) {
        report.min = report.cycles.front().residual;
        double sum = 0.0;
        for (const auto& c : report.cycles) {
            report.min = std::min(report.min, c.residual);
            report.max = std::max(report.max, c.residual);
            sum += c.residual;
        }
        report.mean = sum / static_cast<double>(report.cycles.size());
    }
    return report;
}

}  // namespace lsd
