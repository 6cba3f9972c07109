#pragma once

#include "graphdict/kernels.hpp"
#include "graphdict/laplacian.hpp"

#include <memory>
#include <utility>

namespace graphdict {

namespace detail {

// p(L) y by Horner's rule: K sparse mat-vecs, so the result is supported on
// the K-hop neighbourhood of supp(y).
template <class Coeffs>
Eigen::VectorXd poly_apply(const SparseMatrix& lap, const Coeffs& coeffs, const Eigen::VectorXd& y) {
    const Eigen::Index deg = coeffs.size() - 1;
    Eigen::VectorXd v = coeffs(deg) * y;
    for (Eigen::Index k = deg - 1; k >= 0; --k) v = lap * v + coeffs(k) * y;
    return v;
}

} // namespace detail

struct FrameCertificate {
    double lower = 0.0;
    double upper = 0.0;
    double analytic_lower = 0.0;
    double analytic_upper = 0.0;
};

struct NormalizedAtoms {
    Eigen::MatrixXd columns; // N x SN, unit-norm columns (zero columns where flagged)
    Eigen::VectorXd norms;   // SN; 0 marks a flagged zero atom
};

inline constexpr double kZeroAtomNorm = 1e-12;

// D = [D_1 ... D_S] with D_s = g_s(L). Atom (s, n) has flat index s*N + n.
class PolynomialDictionary {
public:
    PolynomialDictionary(KernelCoefficients kernels, std::shared_ptr<const LaplacianSpectrum> spectrum,
                         SpectralBounds bounds = {})
        : kernels_(std::move(kernels)), spectrum_(std::move(spectrum)), bounds_(bounds) {
        detail::require(spectrum_ != nullptr, ErrorCode::InvalidArgument, "dictionary needs a spectrum");
    }

    const KernelCoefficients& kernels() const { return kernels_; }
    const LaplacianSpectrum& spectrum() const { return *spectrum_; }
    std::shared_ptr<const LaplacianSpectrum> spectrum_ptr() const { return spectrum_; }
    const SpectralBounds& bounds() const { return bounds_; }

    int num_vertices() const { return spectrum_->size(); }
    int num_kernels() const { return kernels_.num_kernels(); }
    int degree() const { return kernels_.degree(); }
    Eigen::Index num_atoms() const { return static_cast<Eigen::Index>(num_kernels()) * num_vertices(); }

    // g_s evaluated on sigma(L): result(l, s).
    Eigen::MatrixXd spectral_response() const { return kernel_values(kernels_, spectrum_->eigenvalues); }

    FeasibilityReport feasibility() const {
        return check_feasibility(kernels_, spectrum_->eigenvalues, bounds_);
    }

    // Dense oracle path: chi g_s(Lambda) chi^T.
    Eigen::MatrixXd subdictionary_dense(int s) const {
        check_kernel(s);
        const auto& chi = spectrum_->eigenvectors;
        Eigen::VectorXd g = kernel_values(kernels_, spectrum_->eigenvalues).col(s);
        Eigen::MatrixXd d = chi * g.asDiagonal() * chi.transpose();
        return 0.5 * (d + d.transpose());
    }

    Eigen::MatrixXd dense() const {
        const int n = num_vertices();
        Eigen::MatrixXd d(n, num_atoms());
        for (int s = 0; s < num_kernels(); ++s) d.middleCols(static_cast<Eigen::Index>(s) * n, n) = subdictionary_dense(s);
        return d;
    }

    Eigen::VectorXd atom(int s, int n) const {
        check_kernel(s);
        detail::require(n >= 0 && n < num_vertices(), ErrorCode::InvalidArgument, "vertex index out of range");
        Eigen::VectorXd delta = Eigen::VectorXd::Zero(num_vertices());
        delta(n) = 1.0;
        return detail::poly_apply(spectrum_->lap, kernels_.alpha().row(s), delta);
    }

    Eigen::VectorXd atom(Eigen::Index flat) const {
        return atom(static_cast<int>(flat / num_vertices()), static_cast<int>(flat % num_vertices()));
    }

    // sum_s D_s x_s, sharing one Horner recurrence across all blocks.
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
        const int n = num_vertices();
        const int S = num_kernels();
        const int K = degree();
        detail::require_dims(x.size() == num_atoms(), "coefficient vector must have S*N entries");
        const auto& a = kernels_.alpha();
        auto mix = [&](int k) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
            for (int s = 0; s < S; ++s)
                if (a(s, k) != 0.0) v += a(s, k) * x.segment(static_cast<Eigen::Index>(s) * n, n);
            return v;
        };
        Eigen::VectorXd v = mix(K);
        for (int k = K - 1; k >= 0; --k) v = spectrum_->lap * v + mix(k);
        return v;
    }

    // D^T y: the powers L^k y are formed once and reused by every block.
    Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& y) const {
        const int n = num_vertices();
        const int K = degree();
        detail::require_dims(y.size() == n, "signal length does not match graph size");
        Eigen::MatrixXd powers(n, K + 1);
        powers.col(0) = y;
        for (int k = 1; k <= K; ++k) powers.col(k) = spectrum_->lap * powers.col(k - 1);
        Eigen::MatrixXd blocks = powers * kernels_.alpha().transpose(); // n x S
        return Eigen::Map<const Eigen::VectorXd>(blocks.data(), blocks.size());
    }

    // D D^T y = sum_s g_s(L)^2 y as one degree-2K polynomial.
    Eigen::VectorXd apply_gram(const Eigen::VectorXd& y) const {
        detail::require_dims(y.size() == num_vertices(), "signal length does not match graph size");
        return detail::poly_apply(spectrum_->lap, gram_coefficients(), y);
    }

    Eigen::VectorXd gram_coefficients() const {
        const int K = degree();
        const auto& a = kernels_.alpha();
        Eigen::VectorXd h = Eigen::VectorXd::Zero(2 * K + 1);
        for (int s = 0; s < num_kernels(); ++s)
            for (int i = 0; i <= K; ++i)
                for (int j = 0; j <= K; ++j) h(i + j) += a(s, i) * a(s, j);
        return h;
    }

    // Frame bounds from the discrete spectrum, plus the (c, eps1, eps2) bounds
    // that hold whenever the kernels are feasible.
    FrameCertificate frame_bounds() const {
        Eigen::VectorXd energy = spectral_response().rowwise().squaredNorm();
        FrameCertificate f;
        f.lower = energy.minCoeff();
        f.upper = energy.maxCoeff();
        double lo = bounds_.c - bounds_.eps1;
        double hi = bounds_.c + bounds_.eps2;
        f.analytic_lower = lo * lo / num_kernels();
        f.analytic_upper = hi * hi;
        return f;
    }

    // ||d_{s,n}||^2 = sum_l g_s(lambda_l)^2 chi_l(n)^2, without materializing D.
    Eigen::VectorXd atom_norms() const {
        const auto& chi = spectrum_->eigenvectors;
        Eigen::MatrixXd g2 = spectral_response().array().square().matrix();     // N x S
        Eigen::MatrixXd sq = chi.array().square().matrix() * g2;                 // N x S
        Eigen::VectorXd norms = Eigen::Map<const Eigen::VectorXd>(sq.data(), sq.size()).cwiseMax(0.0).cwiseSqrt();
        for (Eigen::Index j = 0; j < norms.size(); ++j)
            if (norms(j) < kZeroAtomNorm) norms(j) = 0.0;
        return norms;
    }

    NormalizedAtoms normalize_atoms() const {
        NormalizedAtoms out;
        out.columns = dense();
        out.norms.resize(out.columns.cols());
        for (Eigen::Index j = 0; j < out.columns.cols(); ++j) {
            double nrm = out.columns.col(j).norm();
            if (nrm < kZeroAtomNorm) {
                out.columns.col(j).setZero();
                out.norms(j) = 0.0;
            } else {
                out.columns.col(j) /= nrm;
                out.norms(j) = nrm;
            }
        }
        return out;
    }

private:
    void check_kernel(int s) const {
        detail::require(s >= 0 && s < num_kernels(), ErrorCode::InvalidArgument, "kernel index out of range");
    }

    KernelCoefficients kernels_;
    std::shared_ptr<const LaplacianSpectrum> spectrum_;
    SpectralBounds bounds_;
};

} // namespace graphdict
