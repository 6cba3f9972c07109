#pragma once

#include "graphdict/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace graphdict {

// Polynomial kernel coefficients; row s holds alpha_{s,0} .. alpha_{s,K}.
class KernelCoefficients {
public:
    KernelCoefficients() = default;

    explicit KernelCoefficients(Eigen::MatrixXd alpha) : alpha_(std::move(alpha)) {
        detail::require(alpha_.rows() >= 1 && alpha_.cols() >= 1, ErrorCode::InvalidArgument,
                        "kernel coefficients need S >= 1 and K >= 0");
        detail::require(alpha_.allFinite(), ErrorCode::InvalidArgument, "kernel coefficients must be finite");
    }

    static KernelCoefficients zeros(int S, int K) { return KernelCoefficients(Eigen::MatrixXd::Zero(S, K + 1)); }

    // Constant kernels g_s(lambda) = value.
    static KernelCoefficients constant(int S, int K, double value) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(S, K + 1);
        a.col(0).setConstant(value);
        return KernelCoefficients(std::move(a));
    }

    // Inverse of `as_vector`: [alpha_1; ...; alpha_S], each of length K+1.
    static KernelCoefficients from_vector(const Eigen::VectorXd& v, int S, int K) {
        detail::require_dims(v.size() == static_cast<Eigen::Index>(S) * (K + 1), "parameter vector length");
        Eigen::MatrixXd a(S, K + 1);
        for (int s = 0; s < S; ++s) a.row(s) = v.segment(static_cast<Eigen::Index>(s) * (K + 1), K + 1).transpose();
        return KernelCoefficients(std::move(a));
    }

    int num_kernels() const { return static_cast<int>(alpha_.rows()); }
    int degree() const { return static_cast<int>(alpha_.cols()) - 1; }
    const Eigen::MatrixXd& alpha() const { return alpha_; }

    Eigen::VectorXd as_vector() const {
        Eigen::VectorXd v(alpha_.size());
        for (int s = 0; s < num_kernels(); ++s) v.segment(static_cast<Eigen::Index>(s) * alpha_.cols(), alpha_.cols()) = alpha_.row(s).transpose();
        return v;
    }

    bool operator==(const KernelCoefficients& other) const {
        return alpha_.rows() == other.alpha_.rows() && alpha_.cols() == other.alpha_.cols() && alpha_ == other.alpha_;
    }

private:
    Eigen::MatrixXd alpha_;
};

// Spectral constraint constants: 0 <= g_s <= c and c - eps1 <= sum_s g_s <= c + eps2.
struct SpectralBounds {
    double c = 1.0;
    double eps1 = 0.01;
    double eps2 = 0.01;

    void validate() const {
        detail::require(c > 0.0, ErrorCode::InvalidArgument, "c must be positive");
        detail::require(eps1 >= 0.0 && eps1 <= c, ErrorCode::InvalidArgument, "eps1 must lie in [0, c]");
        detail::require(eps2 >= 0.0, ErrorCode::InvalidArgument, "eps2 must be nonnegative");
    }
};

// Horner evaluation of sum_k alpha_{s,k} lambda^k.
inline double eval_kernel(const KernelCoefficients& kc, int s, double lambda) {
    detail::require(s >= 0 && s < kc.num_kernels(), ErrorCode::InvalidArgument, "kernel index out of range");
    const auto& a = kc.alpha();
    double acc = 0.0;
    for (Eigen::Index k = a.cols() - 1; k >= 0; --k) acc = acc * lambda + a(s, k);
    return acc;
}

// Kernel values on a set of eigenvalues: result(l, s) = g_s(lambda_l).
inline Eigen::MatrixXd kernel_values(const KernelCoefficients& kc, const Eigen::VectorXd& lambdas) {
    Eigen::MatrixXd out(lambdas.size(), kc.num_kernels());
    for (int s = 0; s < kc.num_kernels(); ++s)
        for (Eigen::Index l = 0; l < lambdas.size(); ++l) out(l, s) = eval_kernel(kc, s, lambdas(l));
    return out;
}

// Vandermonde matrix B(l, k) = lambda_l^k.
inline Eigen::MatrixXd vandermonde(const Eigen::VectorXd& lambdas, int K) {
    Eigen::MatrixXd b(lambdas.size(), K + 1);
    for (Eigen::Index l = 0; l < lambdas.size(); ++l) {
        double p = 1.0;
        for (int k = 0; k <= K; ++k) {
            b(l, k) = p;
            p *= lambdas(l);
        }
    }
    return b;
}

struct FeasibilityReport {
    double max_violation = 0.0; // largest amount by which any constraint is exceeded
    bool feasible(double tol) const { return max_violation <= tol; }
};

inline FeasibilityReport check_feasibility(const KernelCoefficients& kc, const Eigen::VectorXd& lambdas,
                                           const SpectralBounds& b) {
    FeasibilityReport r;
    Eigen::MatrixXd g = kernel_values(kc, lambdas);
    auto bump = [&](double v) { r.max_violation = std::max(r.max_violation, v); };
    for (Eigen::Index l = 0; l < g.rows(); ++l) {
        double sum = 0.0;
        for (Eigen::Index s = 0; s < g.cols(); ++s) {
            bump(-g(l, s));
            bump(g(l, s) - b.c);
            sum += g(l, s);
        }
        bump((b.c - b.eps1) - sum);
        bump(sum - (b.c + b.eps2));
    }
    return r;
}

} // namespace graphdict
