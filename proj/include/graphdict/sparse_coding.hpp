#pragma once

#include "graphdict/dictionary.hpp"
#include "graphdict/parallel.hpp"

#include <concepts>
#include <vector>

namespace graphdict {

// Per-signal supports (flat atom indices s*N + n) and aligned coefficients.
struct SparseCode {
    Eigen::Index num_atoms = 0;
    std::vector<std::vector<Eigen::Index>> supports;
    std::vector<std::vector<double>> coeffs;

    SparseCode() = default;
    SparseCode(Eigen::Index atoms, std::size_t signals) : num_atoms(atoms), supports(signals), coeffs(signals) {}

    std::size_t num_signals() const { return supports.size(); }

    Eigen::MatrixXd dense() const {
        Eigen::MatrixXd x = Eigen::MatrixXd::Zero(num_atoms, static_cast<Eigen::Index>(num_signals()));
        for (std::size_t m = 0; m < num_signals(); ++m)
            for (std::size_t t = 0; t < supports[m].size(); ++t) x(supports[m][t], static_cast<Eigen::Index>(m)) = coeffs[m][t];
        return x;
    }

    double mean_sparsity() const {
        if (supports.empty()) return 0.0;
        double total = 0.0;
        for (const auto& s : supports) total += static_cast<double>(s.size());
        return total / static_cast<double>(supports.size());
    }
};

// Anything OMP can select from: unit-norm atoms, with flagged (zero) atoms
// reported through `usable`.
template <class T>
concept AtomSource = requires(const T& src, const Eigen::VectorXd& r, Eigen::Index j) {
    { src.num_atoms() } -> std::convertible_to<Eigen::Index>;
    { src.correlate(r) } -> std::convertible_to<Eigen::VectorXd>;
    { src.column(j) } -> std::convertible_to<Eigen::VectorXd>;
    { src.usable(j) } -> std::convertible_to<bool>;
};

// Atoms held as an explicit matrix of unit-norm columns.
class DenseAtoms {
public:
    DenseAtoms(const Eigen::MatrixXd& columns, const Eigen::VectorXd& norms) : columns_(columns), norms_(norms) {
        detail::require_dims(columns_.cols() == norms_.size(), "one norm per column");
    }

    Eigen::Index num_atoms() const { return columns_.cols(); }
    Eigen::VectorXd correlate(const Eigen::VectorXd& r) const { return columns_.transpose() * r; }
    Eigen::VectorXd column(Eigen::Index j) const { return columns_.col(j); }
    bool usable(Eigen::Index j) const { return norms_(j) > 0.0; }

private:
    const Eigen::MatrixXd& columns_;
    const Eigen::VectorXd& norms_;
};

// Normalized atoms of a polynomial dictionary applied through the sparse
// recurrences; never materializes the N x SN matrix.
class FastAtoms {
public:
    FastAtoms(const PolynomialDictionary& d, const Eigen::VectorXd& norms) : dict_(d), norms_(norms) {
        detail::require_dims(norms_.size() == d.num_atoms(), "one norm per atom");
        inv_.resize(norms_.size());
        for (Eigen::Index j = 0; j < norms_.size(); ++j) inv_(j) = norms_(j) > 0.0 ? 1.0 / norms_(j) : 0.0;
    }

    Eigen::Index num_atoms() const { return norms_.size(); }
    Eigen::VectorXd correlate(const Eigen::VectorXd& r) const { return dict_.apply_adjoint(r).cwiseProduct(inv_); }
    Eigen::VectorXd column(Eigen::Index j) const { return dict_.atom(j) * inv_(j); }
    bool usable(Eigen::Index j) const { return norms_(j) > 0.0; }

private:
    const PolynomialDictionary& dict_;
    const Eigen::VectorXd& norms_;
    Eigen::VectorXd inv_;
};

struct OmpResult {
    std::vector<Eigen::Index> support;
    std::vector<double> coeffs;          // w.r.t. the unit-norm atoms
    std::vector<double> residual_norms;  // ||r|| before the first pick and after each pick
    Eigen::VectorXd residual;
};

inline constexpr double kDefaultOmpTol = 1e-12;

// Orthogonal matching pursuit with a Cholesky-updated least-squares refit.
// The pick is the max |<r, d_j>|; equal magnitudes go to the lowest index.
template <AtomSource Source>
OmpResult omp_encode(const Source& atoms, const Eigen::VectorXd& y, int t0, double tol = kDefaultOmpTol) {
    detail::require(t0 >= 1, ErrorCode::InvalidArgument, "sparsity t0 must be >= 1");
    const Eigen::Index n_atoms = atoms.num_atoms();
    std::vector<char> excluded(n_atoms, 0);
    Eigen::Index usable = 0;
    for (Eigen::Index j = 0; j < n_atoms; ++j) {
        if (!atoms.usable(j)) excluded[j] = 1;
        else ++usable;
    }
    if (usable == 0) throw Error(ErrorCode::EmptyCandidateSet, "every atom is zero-flagged");

    const Eigen::Index n = y.size();
    const Eigen::Index cap = std::min<Eigen::Index>(t0, std::min(usable, n));
    OmpResult out;
    out.residual = y;
    out.residual_norms.push_back(y.norm());

    Eigen::MatrixXd selected(n, cap);
    Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(cap, cap); // lower factor of the support Gram matrix
    Eigen::VectorXd rhs(cap);                               // selected^T y
    Eigen::Index size = 0;
    const double floor = 1e-14 * std::max(1.0, y.norm());

    while (size < cap && out.residual_norms.back() > tol) {
        Eigen::VectorXd corr = atoms.correlate(out.residual);
        Eigen::Index best = -1;
        double best_mag = 0.0;
        for (Eigen::Index j = 0; j < n_atoms; ++j) {
            if (excluded[j]) continue;
            double mag = std::abs(corr(j));
            if (best < 0 || mag > best_mag) {
                best = j;
                best_mag = mag;
            }
        }
        if (best < 0 || best_mag <= floor) break;
        excluded[best] = 1;

        Eigen::VectorXd a = atoms.column(best);
        Eigen::VectorXd v = selected.leftCols(size).transpose() * a;
        Eigen::VectorXd w = chol.topLeftCorner(size, size).template triangularView<Eigen::Lower>().solve(v);
        double pivot = a.squaredNorm() - w.squaredNorm();
        if (pivot <= 1e-12 * a.squaredNorm()) continue; // numerically inside the current span

        selected.col(size) = a;
        chol.row(size).head(size) = w.transpose();
        chol(size, size) = std::sqrt(pivot);
        rhs(size) = a.dot(y);
        ++size;

        auto lower = chol.topLeftCorner(size, size).template triangularView<Eigen::Lower>();
        Eigen::VectorXd z = lower.solve(rhs.head(size));
        Eigen::VectorXd x = lower.transpose().solve(z);
        out.residual = y - selected.leftCols(size) * x;
        out.residual_norms.push_back(out.residual.norm());
        out.support.push_back(best);
        out.coeffs.assign(x.data(), x.data() + size);
    }
    return out;
}

struct EncodeOptions {
    double tol = kDefaultOmpTol;
    // Above this many bytes for the dense N x SN matrix the fast operators are used.
    std::size_t dense_budget_bytes = std::size_t{256} << 20;
    int workers = worker_count();
};

// Sparse approximation step: OMP on unit-norm atoms, then coefficients are
// divided by the atom norms so that D X (unnormalized D) is unchanged.
inline SparseCode encode_batch(const PolynomialDictionary& d, const Eigen::MatrixXd& Y, int t0,
                               const EncodeOptions& opt = {}) {
    detail::require_dims(Y.rows() == d.num_vertices(), "signal rows must match graph size");
    const auto m = static_cast<std::size_t>(Y.cols());
    SparseCode code(d.num_atoms(), m);
    std::size_t dense_bytes = sizeof(double) * static_cast<std::size_t>(d.num_vertices()) * static_cast<std::size_t>(d.num_atoms());

    auto run = [&](const auto& source, const Eigen::VectorXd& norms) {
        parallel_for(static_cast<long>(m), [&](long col) {
            OmpResult r = omp_encode(source, Y.col(col), t0, opt.tol);
            for (std::size_t t = 0; t < r.support.size(); ++t) r.coeffs[t] /= norms(r.support[t]);
            code.supports[col] = std::move(r.support);
            code.coeffs[col] = std::move(r.coeffs);
        }, opt.workers);
    };

    if (dense_bytes <= opt.dense_budget_bytes) {
        NormalizedAtoms na = d.normalize_atoms();
        run(DenseAtoms(na.columns, na.norms), na.norms);
    } else {
        Eigen::VectorXd norms = d.atom_norms();
        run(FastAtoms(d, norms), norms);
    }
    return code;
}

// D X for a sparse code: one matrix Horner recurrence over all signals.
inline Eigen::MatrixXd reconstruct(const PolynomialDictionary& d, const SparseCode& code) {
    detail::require_dims(code.num_atoms == d.num_atoms(), "code size does not match dictionary");
    const int n = d.num_vertices();
    const int K = d.degree();
    const auto& a = d.kernels().alpha();
    Eigen::MatrixXd x = code.dense();
    auto mix = [&](int k) {
        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, x.cols());
        for (int s = 0; s < d.num_kernels(); ++s)
            if (a(s, k) != 0.0) v += a(s, k) * x.middleRows(static_cast<Eigen::Index>(s) * n, n);
        return v;
    };
    Eigen::MatrixXd v = mix(K);
    for (int k = K - 1; k >= 0; --k) v = d.spectrum().lap * v + mix(k);
    return v;
}

} // namespace graphdict
