#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "asyadmm/random.hpp"

namespace asyadmm {

using NodeId = std::size_t;

/// A directed link: `from` transmits to `to`.
struct Edge {
    NodeId from;
    NodeId to;

    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Fixed communication topology. Self-loops are never stored; every node is
/// implicitly its own neighbor when weights are built.
class Digraph {
 public:
    Digraph() = default;

    Digraph(std::size_t n, std::vector<Edge> edges) : n_(n), out_(n), in_(n) {
        if (n == 0) throw std::invalid_argument("digraph: node count must be positive");
        std::sort(edges.begin(), edges.end());
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const auto [from, to] = edges[e];
            if (from >= n || to >= n)
                throw std::invalid_argument("digraph: edge endpoint out of range");
            if (from == to) throw std::invalid_argument("digraph: self-edges are not stored");
            if (e > 0 && edges[e - 1] == edges[e])
                throw std::invalid_argument("digraph: duplicate edge");
            out_[from].push_back(to);
            in_[to].push_back(from);
        }
        for (auto& v : in_) std::sort(v.begin(), v.end());
        edges_ = std::move(edges);
    }

    std::size_t size() const { return n_; }
    std::size_t edge_count() const { return edges_.size(); }
    std::span<const Edge> edges() const { return edges_; }

    /// Nodes that receive from `j`, ascending.
    std::span<const NodeId> out_neighbors(NodeId j) const { return out_.at(j); }
    /// Nodes that transmit to `j`, ascending.
    std::span<const NodeId> in_neighbors(NodeId j) const { return in_.at(j); }
    std::size_t out_degree(NodeId j) const { return out_.at(j).size(); }

    bool has_edge(NodeId from, NodeId to) const {
        const auto& o = out_.at(from);
        return std::binary_search(o.begin(), o.end(), to);
    }

    Digraph transpose() const {
        std::vector<Edge> rev;
        rev.reserve(edges_.size());
        for (const auto& e : edges_) rev.push_back({e.to, e.from});
        return Digraph(n_, std::move(rev));
    }

    friend bool operator==(const Digraph& a, const Digraph& b) {
        return a.n_ == b.n_ && a.edges_ == b.edges_;
    }

 private:
    std::size_t n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<NodeId>> out_;
    std::vector<std::vector<NodeId>> in_;
};

inline constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

/// Hop distances from `source` along edge directions.
inline std::vector<std::size_t> bfs_distances(const Digraph& g, NodeId source) {
    std::vector<std::size_t> dist(g.size(), kUnreachable);
    std::deque<NodeId> frontier{source};
    dist.at(source) = 0;
    while (!frontier.empty()) {
        const NodeId u = frontier.front();
        frontier.pop_front();
        for (NodeId v : g.out_neighbors(u)) {
            if (dist[v] == kUnreachable) {
                dist[v] = dist[u] + 1;
                frontier.push_back(v);
            }
        }
    }
    return dist;
}

/// Forward reachability from node 0 on the graph and on its transpose.
inline bool is_strongly_connected(const Digraph& g) {
    if (g.size() == 0) return false;
    const auto all_reached = [](const std::vector<std::size_t>& d) {
        return std::none_of(d.begin(), d.end(), [](std::size_t x) { return x == kUnreachable; });
    };
    return all_reached(bfs_distances(g, 0)) && all_reached(bfs_distances(g.transpose(), 0));
}

/// Longest shortest directed path over all ordered pairs (all-pairs BFS).
/// A single node has diameter 0.
inline std::size_t diameter(const Digraph& g) {
    std::size_t d = 0;
    for (NodeId s = 0; s < g.size(); ++s) {
        for (std::size_t x : bfs_distances(g, s)) {
            if (x == kUnreachable)
                throw std::domain_error("diameter: digraph is not strongly connected");
            d = std::max(d, x);
        }
    }
    return d;
}

/// Random Hamiltonian cycle over a shuffled node order, plus every other
/// ordered pair with probability `extra_edge_prob`.
inline Digraph random_strongly_connected(std::size_t n, double extra_edge_prob,
                                         std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("random_strongly_connected: need n >= 2");
    if (!(extra_edge_prob >= 0.0 && extra_edge_prob <= 1.0))
        throw std::invalid_argument("random_strongly_connected: probability outside [0, 1]");

    Rng rng(seed);
    std::vector<NodeId> order(n);
    for (NodeId i = 0; i < n; ++i) order[i] = i;
    detail::fisher_yates(order, rng);

    std::set<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) edges.insert({order[i], order[(i + 1) % n]});

    for (NodeId from = 0; from < n; ++from) {
        for (NodeId to = 0; to < n; ++to) {
            if (from == to) continue;
            // Draw for every pair so the stream does not depend on the cycle.
            const bool take = detail::bernoulli(rng, extra_edge_prob);
            if (take) edges.insert({from, to});
        }
    }
    return Digraph(n, {edges.begin(), edges.end()});
}

/// Column-stochastic push-sum weights: p(l, j) = 1 / (1 + outdeg(j)) for
/// l in out(j) ∪ {j}, zero elsewhere. Indexed (receiver, sender).
class WeightMatrix {
 public:
    explicit WeightMatrix(const Digraph& g) : n_(g.size()), dense_(n_ * n_, 0.0), sender_(n_) {
        for (NodeId j = 0; j < n_; ++j) {
            const double p = 1.0 / (1.0 + static_cast<double>(g.out_degree(j)));
            sender_[j] = p;
            dense_[j * n_ + j] = p;
            for (NodeId l : g.out_neighbors(j)) dense_[l * n_ + j] = p;
        }
    }

    std::size_t size() const { return n_; }

    double operator()(NodeId receiver, NodeId sender) const { return dense_[receiver * n_ + sender]; }

    /// The single nonzero value in column `sender`; what the sender scales its broadcast by.
    double sender_weight(NodeId sender) const { return sender_.at(sender); }

    double column_sum(NodeId sender) const {
        double s = 0.0;
        for (NodeId l = 0; l < n_; ++l) s += (*this)(l, sender);
        return s;
    }

 private:
    std::size_t n_;
    std::vector<double> dense_;
    std::vector<double> sender_;
};

inline WeightMatrix build_weights(const Digraph& g) { return WeightMatrix(g); }

// Edge-list text format: first line `n`, then one `j i` line per edge meaning
// node i transmits to node j. Node ids are 0-based.

inline void write_edge_list(std::ostream& os, const Digraph& g) {
    os << g.size() << '\n';
    for (const auto& e : g.edges()) os << e.to << ' ' << e.from << '\n';
}

inline Digraph read_edge_list(std::istream& is) {
    std::size_t n = 0;
    if (!(is >> n)) throw std::runtime_error("edge list: missing node count");
    std::vector<Edge> edges;
    long long to = 0;
    long long from = 0;
    while (is >> to) {
        if (!(is >> from)) throw std::runtime_error("edge list: dangling endpoint");
        if (to < 0 || from < 0) throw std::runtime_error("edge list: negative node id");
        edges.push_back({static_cast<NodeId>(from), static_cast<NodeId>(to)});
    }
    if (!is.eof()) throw std::runtime_error("edge list: malformed line");
    return Digraph(n, std::move(edges));
}

inline Digraph load_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open topology file: " + path);
    try {
        return read_edge_list(in);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

inline void save_edge_list(const std::string& path, const Digraph& g) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write topology file: " + path);
    write_edge_list(out, g);
}

}  // namespace asyadmm
