#pragma once

#include "graphdict/graph.hpp"
#include "graphdict/laplacian.hpp"

#include <Eigen/Dense>
#include <memory>
#include <numeric>
#include <random>
#include <set>

namespace testing_support {

using namespace graphdict;

// Small connected graph: a random spanning path plus extra random edges.
inline WeightedGraph random_connected_graph(int n, int extra, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> w(0.1, 2.0);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Edge> edges;
    std::set<std::pair<int, int>> seen;
    auto add = [&](int a, int b) {
        if (a == b) return;
        auto key = std::minmax(a, b);
        if (seen.insert(key).second) edges.push_back({a, b, w(rng)});
    };
    for (int i = 1; i < n; ++i) add(perm[i - 1], perm[i]);
    std::uniform_int_distribution<int> v(0, n - 1);
    for (int e = 0; e < extra; ++e) add(v(rng), v(rng));
    return WeightedGraph(n, std::move(edges));
}

inline std::shared_ptr<const LaplacianSpectrum> spectrum_of(const WeightedGraph& g) {
    return std::make_shared<LaplacianSpectrum>(normalized_laplacian(g));
}

// Laplacian built entrywise from the definition, independent of the library path.
inline Eigen::MatrixXd dense_normalized_laplacian(const WeightedGraph& g) {
    const int n = g.num_vertices();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : g.edges()) w(e.i, e.j) = w(e.j, e.i) = e.w;
    Eigen::VectorXd d = w.rowwise().sum();
    Eigen::MatrixXd l(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) l(i, j) = (i == j ? 1.0 : 0.0) - w(i, j) / std::sqrt(d(i) * d(j));
    return l;
}

inline Eigen::MatrixXd dense_power(const Eigen::MatrixXd& a, int k) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    for (int i = 0; i < k; ++i) p = p * a;
    return p;
}

// sum_k alpha_k L^k from explicit dense powers.
inline Eigen::MatrixXd dense_poly(const Eigen::MatrixXd& l, const Eigen::VectorXd& alpha) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(l.rows(), l.cols());
    for (Eigen::Index k = 0; k < alpha.size(); ++k) out += alpha(k) * dense_power(l, static_cast<int>(k));
    return out;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = g(rng);
    return m;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) { return random_matrix(n, 1, rng).col(0); }

} // namespace testing_support
