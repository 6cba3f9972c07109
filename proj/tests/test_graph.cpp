#include <gtest/gtest.h>

#include "graphdict/laplacian.hpp"
#include "support.hpp"

#include <cmath>

using namespace graphdict;
using namespace testing_support;

namespace {

Eigen::MatrixXd points(std::initializer_list<std::pair<double, double>> xy) {
    Eigen::MatrixXd p(static_cast<Eigen::Index>(xy.size()), 2);
    Eigen::Index r = 0;
    for (auto [x, y] : xy) {
        p(r, 0) = x;
        p(r, 1) = y;
        ++r;
    }
    return p;
}

template <class Fn>
ErrorCode error_code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an exception";
    return ErrorCode::InvalidArgument;
}

} // namespace

TEST(GeometricGraph, ThresholdRemovesLongEdges) {
    // Third point keeps the graph connected; the 0.6 pair itself must not be joined.
    auto g = build_geometric_graph(points({{0, 0}, {0.6, 0}, {0.3, 0}}), {0.9, 0.5, 0.0});
    for (const auto& e : g.edges()) EXPECT_FALSE(e.i == 0 && e.j == 1);
    EXPECT_EQ(g.num_edges(), 2u);
    EXPECT_EQ(error_code_of([] { build_geometric_graph(points({{0, 0}, {0.6, 0}}), {0.9, 0.5, 0.0}); }),
              ErrorCode::DisconnectedGraph);
}

TEST(GeometricGraph, GaussianWeights) {
    auto g0 = build_geometric_graph(points({{0.2, 0.2}, {0.2, 0.2}}), {0.9, 0.5, 0.0});
    ASSERT_EQ(g0.num_edges(), 1u);
    EXPECT_DOUBLE_EQ(g0.edges()[0].w, 1.0);

    auto g = build_geometric_graph(points({{0, 0}, {0.3, 0.4}}), {0.9, 0.5, 0.0});
    ASSERT_EQ(g.num_edges(), 1u);
    const double oracle = std::exp(-0.25 / 1.62);
    EXPECT_NEAR(g.edges()[0].w, oracle, 1e-15);
    // The commonly quoted four-digit value 0.8571 is high by 1e-4; exp gives 0.856997.
    EXPECT_NEAR(g.edges()[0].w, 0.8571, 2e-4);
}

TEST(GeometricGraph, MinWeightThresholdIsOptional) {
    auto p = points({{0, 0}, {0.1, 0}, {0.5, 0}});
    auto all = build_geometric_graph(p, {0.2, 0.5, 0.0});
    EXPECT_EQ(all.num_edges(), 3u);
    // exp(-0.16/0.08) ~ 0.135 and exp(-0.25/0.08) ~ 0.044: drop only the latter
    auto pruned = build_geometric_graph(p, {0.2, 0.5, 0.1});
    EXPECT_EQ(pruned.num_edges(), 2u);
}

TEST(GeometricGraph, RandomDrawIsSeededAndConnected) {
    auto a = random_geometric_graph(100, {}, 7);
    auto b = random_geometric_graph(100, {}, 7);
    auto c = random_geometric_graph(100, {}, 8);
    ASSERT_EQ(a.num_edges(), b.num_edges());
    for (std::size_t k = 0; k < a.num_edges(); ++k) {
        EXPECT_EQ(a.edges()[k].i, b.edges()[k].i);
        EXPECT_EQ(a.edges()[k].w, b.edges()[k].w);
    }
    EXPECT_NE(*a.coords(), *c.coords());
    auto d = a.hop_distances(0);
    EXPECT_TRUE(std::all_of(d.begin(), d.end(), [](int x) { return x >= 0; }));
}

TEST(GeometricGraph, TinyRadiusExhaustsRetries) {
    EXPECT_EQ(error_code_of([] { random_geometric_graph(100, {0.9, 0.01, 0.0}, 1); }),
              ErrorCode::DisconnectedAfterRetries);
    EXPECT_EQ(error_code_of([] { random_geometric_graph(10, {-1.0, 0.5, 0.0}, 1); }), ErrorCode::InvalidArgument);
}

TEST(DistanceGraph, InverseDistanceWeights) {
    auto g = build_distance_graph(points({{0, 0}, {2, 0}}), 40);
    ASSERT_EQ(g.num_edges(), 1u);
    EXPECT_DOUBLE_EQ(g.edges()[0].w, 0.5);

    EXPECT_EQ(error_code_of([] { build_distance_graph(points({{0, 0}, {50, 0}}), 40); }),
              ErrorCode::DisconnectedGraph);
    EXPECT_EQ(error_code_of([] { build_distance_graph(points({{1, 1}, {1, 1}, {2, 2}}), 40); }),
              ErrorCode::CoincidentVertices);
}

TEST(DistanceGraph, CollinearPointsGiveAPath) {
    auto g = build_distance_graph(points({{0, 0}, {1, 0}, {2, 0}}), 1.5);
    ASSERT_EQ(g.num_edges(), 2u);
    EXPECT_EQ(g.edges()[0].i, 0);
    EXPECT_EQ(g.edges()[0].j, 1);
    EXPECT_EQ(g.edges()[1].i, 1);
    EXPECT_EQ(g.edges()[1].j, 2);
    EXPECT_DOUBLE_EQ(g.edges()[0].w, 1.0);
    EXPECT_DOUBLE_EQ(g.edges()[1].w, 1.0);
}

TEST(WeightedGraph, RejectsMalformedEdges) {
    EXPECT_EQ(error_code_of([] { WeightedGraph(2, {{0, 0, 1.0}}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(error_code_of([] { WeightedGraph(2, {{0, 1, 0.0}}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(error_code_of([] { WeightedGraph(2, {{0, 1, 1.0}, {1, 0, 2.0}}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(error_code_of([] { WeightedGraph(2, {{0, 2, 1.0}}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(error_code_of([] { WeightedGraph(3, {{0, 1, 1.0}}); }), ErrorCode::DisconnectedGraph);
}

TEST(WeightedGraph, AdjacencyIsSymmetric) {
    auto g = random_geometric_graph(60, {}, 3);
    Eigen::MatrixXd w(g.adjacency());
    EXPECT_EQ((w - w.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Laplacian, SingleEdge) {
    auto spec = normalized_laplacian(WeightedGraph(2, {{0, 1, 1.0}}));
    Eigen::Matrix2d expected;
    expected << 1, -1, -1, 1;
    EXPECT_LT((spec.dense_lap() - expected).norm(), 1e-14);
    EXPECT_NEAR(spec.eigenvalues(0), 0.0, 1e-12);
    EXPECT_NEAR(spec.eigenvalues(1), 2.0, 1e-12);
}

TEST(Laplacian, CompleteGraphOnThreeVertices) {
    auto spec = normalized_laplacian(WeightedGraph(3, {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}}));
    // Independent oracle: closed-form characteristic roots of the 3x3 matrix
    // I - A/2 are 1 - mu/2 for adjacency eigenvalues mu in {2, -1, -1}.
    EXPECT_NEAR(spec.eigenvalues(0), 0.0, 1e-12);
    EXPECT_NEAR(spec.eigenvalues(1), 1.5, 1e-12);
    EXPECT_NEAR(spec.eigenvalues(2), 1.5, 1e-12);
}

TEST(Laplacian, IsolatedVertexRejected) {
    EXPECT_EQ(error_code_of([] { normalized_laplacian(WeightedGraph(1, {})); }), ErrorCode::IsolatedVertex);
}

TEST(Laplacian, MatchesDefinitionAndNullVector) {
    auto g = random_connected_graph(25, 40, 11);
    auto spec = normalized_laplacian(g);
    EXPECT_LT((spec.dense_lap() - dense_normalized_laplacian(g)).norm(), 1e-12);

    Eigen::VectorXd v = g.degrees().cwiseSqrt();
    v.normalize();
    EXPECT_LT((spec.lap * v).norm(), 1e-8);
    EXPECT_NEAR(std::abs(spec.eigenvectors.col(0).dot(v)), 1.0, 1e-8);
    EXPECT_GT(spec.eigenvectors.col(0).minCoeff(), 0.0); // positive by the sign convention
}

TEST(Laplacian, SpectrumInvariantsOverSeededSweep) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto g = random_geometric_graph(40, {}, seed);
        auto spec = normalized_laplacian(g);
        const int n = spec.size();
        EXPECT_NEAR(spec.eigenvalues(0), 0.0, 1e-9);
        EXPECT_LE(spec.lambda_max(), 2.0 + 1e-9);
        for (int i = 1; i < n; ++i) EXPECT_LE(spec.eigenvalues(i - 1), spec.eigenvalues(i));
        const auto& chi = spec.eigenvectors;
        EXPECT_LT((chi.transpose() * chi - Eigen::MatrixXd::Identity(n, n)).norm(), 1e-8);
        EXPECT_LT((chi * spec.eigenvalues.asDiagonal() * chi.transpose() - spec.dense_lap()).norm(), 1e-8);
        for (int c = 0; c < n; ++c) {
            Eigen::Index arg;
            chi.col(c).cwiseAbs().maxCoeff(&arg);
            EXPECT_GT(chi(arg, c), 0.0);
        }
    }
}

TEST(Laplacian, PowerApply) {
    auto g = random_connected_graph(10, 15, 2);
    auto spec = normalized_laplacian(g);
    std::mt19937_64 rng(5);
    Eigen::VectorXd y = random_vector(10, rng);
    EXPECT_EQ(laplacian_power_apply(spec, 0, y), y);
    for (int l = 0; l < 10; ++l) {
        Eigen::VectorXd chi = spec.eigenvectors.col(l);
        EXPECT_LT((laplacian_power_apply(spec, 1, chi) - spec.eigenvalues(l) * chi).norm(), 1e-8);
    }
    Eigen::MatrixXd l = dense_normalized_laplacian(g);
    EXPECT_LT((laplacian_power_apply(spec, 3, y) - l * l * l * y).norm(), 1e-8 * y.norm());
    EXPECT_THROW(laplacian_power_apply(spec, 1, Eigen::VectorXd::Ones(3)), Error);
}

TEST(Laplacian, PowerApplyMatchesDenseUpToTwiceMaxDegree) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto g = random_connected_graph(30, 60, 100 + seed);
        auto spec = normalized_laplacian(g);
        Eigen::MatrixXd l = dense_normalized_laplacian(g);
        std::mt19937_64 rng(seed);
        Eigen::VectorXd y = random_vector(30, rng);
        Eigen::VectorXd dense = y;
        for (int k = 0; k <= 50; ++k) {
            Eigen::VectorXd fast = laplacian_power_apply(spec, k, y);
            EXPECT_LE((fast - dense).norm(), 1e-8 * std::max(1.0, dense.norm())) << "k=" << k;
            dense = l * dense;
        }
    }
}

TEST(HopDistance, PathGraph) {
    auto g = WeightedGraph(5, {{0, 1, 1.0}, {1, 2, 3.0}, {2, 3, 0.5}, {3, 4, 1.0}});
    auto d = g.hop_distances(1);
    EXPECT_EQ(d, (std::vector<int>{1, 0, 1, 2, 3}));
}
