#pragma once

#include "graphdict/graph.hpp"

#include <Eigen/Eigenvalues>

namespace graphdict {

// Normalized Laplacian with its full eigendecomposition. Eigenvalues are
// ascending; each eigenvector's largest-magnitude entry is positive.
struct LaplacianSpectrum {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
    SparseMatrix lap;

    int size() const { return static_cast<int>(eigenvalues.size()); }
    double lambda_max() const { return eigenvalues(eigenvalues.size() - 1); }
    Eigen::MatrixXd dense_lap() const { return Eigen::MatrixXd(lap); }
};

inline SparseMatrix normalized_laplacian_matrix(const WeightedGraph& g) {
    const int n = g.num_vertices();
    Eigen::VectorXd deg = g.degrees();
    for (int v = 0; v < n; ++v) {
        detail::require(deg(v) > 0.0, ErrorCode::IsolatedVertex, "vertex " + std::to_string(v) + " has zero degree");
    }
    Eigen::VectorXd inv_sqrt = deg.cwiseSqrt().cwiseInverse();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(2 * g.num_edges() + n);
    for (int v = 0; v < n; ++v) t.emplace_back(v, v, 1.0);
    for (const auto& e : g.edges()) {
        double v = -e.w * inv_sqrt(e.i) * inv_sqrt(e.j);
        t.emplace_back(e.i, e.j, v);
        t.emplace_back(e.j, e.i, v);
    }
    SparseMatrix lap(n, n);
    lap.setFromTriplets(t.begin(), t.end());
    return lap;
}

inline LaplacianSpectrum normalized_laplacian(const WeightedGraph& g) {
    LaplacianSpectrum spec;
    spec.lap = normalized_laplacian_matrix(g);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(spec.lap));
    detail::require(eig.info() == Eigen::Success, ErrorCode::InvalidArgument, "eigendecomposition failed");
    spec.eigenvalues = eig.eigenvalues();
    spec.eigenvectors = eig.eigenvectors();
    for (Eigen::Index c = 0; c < spec.eigenvectors.cols(); ++c) {
        Eigen::Index arg = 0;
        spec.eigenvectors.col(c).cwiseAbs().maxCoeff(&arg);
        if (spec.eigenvectors(arg, c) < 0.0) spec.eigenvectors.col(c) *= -1.0;
    }
    return spec;
}

// L^k y by k sparse mat-vecs.
inline Eigen::VectorXd laplacian_power_apply(const LaplacianSpectrum& spec, int k, const Eigen::VectorXd& y) {
    detail::require(k >= 0, ErrorCode::InvalidArgument, "power must be nonnegative");
    detail::require_dims(y.size() == spec.size(), "vector length does not match graph size");
    Eigen::VectorXd v = y;
    for (int i = 0; i < k; ++i) v = spec.lap * v;
    return v;
}

} // namespace graphdict
