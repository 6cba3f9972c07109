#pragma once

#include "graphdict/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace graphdict {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Edge {
    int i = 0;
    int j = 0;
    double w = 0.0;
};

// Undirected, connected, weighted graph without self-loops. Edges are stored
// once per unordered pair with i < j, sorted lexicographically.
class WeightedGraph {
public:
    WeightedGraph(int n_vertices, std::vector<Edge> edges,
                  std::optional<Eigen::MatrixXd> coords = std::nullopt)
        : n_(n_vertices), edges_(std::move(edges)), coords_(std::move(coords)) {
        detail::require(n_ >= 1, ErrorCode::InvalidArgument, "graph needs at least one vertex");
        for (auto& e : edges_) {
            detail::require(e.i >= 0 && e.i < n_ && e.j >= 0 && e.j < n_, ErrorCode::InvalidArgument,
                            "edge endpoint out of range");
            detail::require(e.i != e.j, ErrorCode::InvalidArgument, "self-loop at vertex " + std::to_string(e.i));
            detail::require(std::isfinite(e.w) && e.w > 0.0, ErrorCode::InvalidArgument,
                            "edge weights must be finite and positive");
            if (e.i > e.j) std::swap(e.i, e.j);
        }
        std::sort(edges_.begin(), edges_.end(),
                  [](const Edge& a, const Edge& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
        for (std::size_t k = 1; k < edges_.size(); ++k) {
            detail::require(edges_[k].i != edges_[k - 1].i || edges_[k].j != edges_[k - 1].j,
                            ErrorCode::InvalidArgument,
                            "duplicate edge (" + std::to_string(edges_[k].i) + "," + std::to_string(edges_[k].j) + ")");
        }
        if (coords_) {
            detail::require_dims(coords_->rows() == n_, "coordinate rows must match vertex count");
        }

        neighbors_.assign(n_, {});
        for (const auto& e : edges_) {
            neighbors_[e.i].push_back(e.j);
            neighbors_[e.j].push_back(e.i);
        }
        detail::require(connected(), ErrorCode::DisconnectedGraph, "graph is not connected");
    }

    int num_vertices() const { return n_; }
    std::size_t num_edges() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::optional<Eigen::MatrixXd>& coords() const { return coords_; }
    const std::vector<int>& neighbors(int v) const { return neighbors_.at(v); }

    SparseMatrix adjacency() const {
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(2 * edges_.size());
        for (const auto& e : edges_) {
            t.emplace_back(e.i, e.j, e.w);
            t.emplace_back(e.j, e.i, e.w);
        }
        SparseMatrix w(n_, n_);
        w.setFromTriplets(t.begin(), t.end());
        return w;
    }

    Eigen::VectorXd degrees() const {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(n_);
        for (const auto& e : edges_) {
            d(e.i) += e.w;
            d(e.j) += e.w;
        }
        return d;
    }

    // Unweighted shortest-path (hop) distance from `source`; -1 if unreachable.
    std::vector<int> hop_distances(int source) const {
        std::vector<int> dist(n_, -1);
        std::queue<int> frontier;
        dist.at(source) = 0;
        frontier.push(source);
        while (!frontier.empty()) {
            int v = frontier.front();
            frontier.pop();
            for (int u : neighbors_[v]) {
                if (dist[u] < 0) {
                    dist[u] = dist[v] + 1;
                    frontier.push(u);
                }
            }
        }
        return dist;
    }

private:
    bool connected() const {
        auto d = hop_distances(0);
        return std::none_of(d.begin(), d.end(), [](int x) { return x < 0; });
    }

    int n_;
    std::vector<Edge> edges_;
    std::optional<Eigen::MatrixXd> coords_;
    std::vector<std::vector<int>> neighbors_;
};

namespace detail {

inline bool is_connected(int n, const std::vector<Edge>& edges) {
    std::vector<int> parent(n);
    for (int v = 0; v < n; ++v) parent[v] = v;
    auto find = [&](int v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    int components = n;
    for (const auto& e : edges) {
        int a = find(e.i), b = find(e.j);
        if (a != b) {
            parent[a] = b;
            --components;
        }
    }
    return components == 1;
}

inline std::vector<Edge> gaussian_threshold_edges(const Eigen::MatrixXd& points, double theta, double kappa,
                                                  double min_weight) {
    std::vector<Edge> edges;
    const auto n = static_cast<int>(points.rows());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double d = (points.row(i) - points.row(j)).norm();
            if (d > kappa) continue;
            double w = std::exp(-d * d / (2.0 * theta * theta));
            if (w < min_weight || w <= 0.0) continue;
            edges.push_back({i, j, w});
        }
    }
    return edges;
}

} // namespace detail

struct GeometricGraphParams {
    double theta = 0.9;
    double kappa = 0.5;
    // Optional second pass dropping edges lighter than this; 0 disables it.
    double min_weight = 0.0;
};

// Thresholded Gaussian kernel graph on fixed points (rows of `points`):
// W(i,j) = exp(-d^2 / (2 theta^2)) when d <= kappa.
inline WeightedGraph build_geometric_graph(const Eigen::MatrixXd& points, const GeometricGraphParams& p) {
    detail::require(p.theta > 0.0 && p.kappa > 0.0, ErrorCode::InvalidArgument, "theta and kappa must be positive");
    detail::require(points.rows() >= 2, ErrorCode::InvalidArgument, "need at least two points");
    auto edges = detail::gaussian_threshold_edges(points, p.theta, p.kappa, p.min_weight);
    return WeightedGraph(static_cast<int>(points.rows()), std::move(edges), points);
}

inline constexpr int kGeometricGraphAttempts = 50;

// Places `n` points uniformly in the unit square and builds the thresholded
// Gaussian graph, redrawing from the same seeded stream until connected.
inline WeightedGraph random_geometric_graph(int n, const GeometricGraphParams& p, std::uint64_t seed,
                                            int max_attempts = kGeometricGraphAttempts) {
    detail::require(n >= 2, ErrorCode::InvalidArgument, "need at least two vertices");
    detail::require(p.theta > 0.0 && p.kappa > 0.0, ErrorCode::InvalidArgument, "theta and kappa must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Eigen::MatrixXd pts(n, 2);
        for (int v = 0; v < n; ++v) {
            pts(v, 0) = unit(rng);
            pts(v, 1) = unit(rng);
        }
        auto edges = detail::gaussian_threshold_edges(pts, p.theta, p.kappa, p.min_weight);
        if (detail::is_connected(n, edges)) return WeightedGraph(n, std::move(edges), pts);
    }
    throw Error(ErrorCode::DisconnectedAfterRetries,
                "no connected draw in " + std::to_string(max_attempts) + " attempts (kappa=" +
                    std::to_string(p.kappa) + " too small?)");
}

// Edge iff Euclidean distance <= max_dist, weight 1/distance. Coordinates may
// have any dimension; GPS pairs are treated as plain Euclidean coordinates.
inline WeightedGraph build_distance_graph(const Eigen::MatrixXd& points, double max_dist) {
    detail::require(max_dist > 0.0, ErrorCode::InvalidArgument, "max_dist must be positive");
    const auto n = static_cast<int>(points.rows());
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double d = (points.row(i) - points.row(j)).norm();
            detail::require(d > 0.0, ErrorCode::CoincidentVertices,
                            "vertices " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
            if (d <= max_dist) edges.push_back({i, j, 1.0 / d});
        }
    }
    return WeightedGraph(n, std::move(edges), points);
}

} // namespace graphdict
