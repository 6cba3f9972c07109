#pragma once

#include "graphdict/dictionary.hpp"
#include "graphdict/qp.hpp"
#include "graphdict/sparse_coding.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

namespace graphdict {

enum class InitKind { UniformKernels, RandomFeasible, SpectralBands, FromFile };

// mu is left unset to request the default 1e-4 * N / (K + 1).
struct TrainConfig {
    int S = 4;
    int K = 20;
    int t0 = 4;
    int iter = 25;
    SpectralBounds bounds{1.0, 0.01, 0.01};
    std::optional<double> mu;
    std::uint64_t seed = 0;
    InitKind init = InitKind::UniformKernels;
    std::optional<KernelCoefficients> init_kernels; // required for FromFile
    QpSettings qp{};
    EncodeOptions encode{};

    void validate() const {
        detail::require(S >= 1 && K >= 0 && t0 >= 1, ErrorCode::InvalidArgument, "need S >= 1, K >= 0, t0 >= 1");
        detail::require(iter >= 1, ErrorCode::InvalidArgument, "iter must be >= 1");
        bounds.validate();
        if (mu) detail::require(*mu >= 0.0, ErrorCode::InvalidArgument, "mu must be nonnegative");
    }
};

inline double default_mu(int n_vertices, int K) { return 1e-4 * n_vertices / (K + 1); }

inline constexpr double kFeasibilityTol = 1e-6;

struct TraceRecord {
    int iter = 0;
    double fit_error = 0.0;        // ||Y - D X||_F^2 after the dictionary update
    double objective = 0.0;        // fit_error + mu ||alpha||^2 after the update
    double objective_before = 0.0; // same objective with the pre-update alpha and the new X
    double kkt = 0.0;
    double mean_sparsity = 0.0;
    double secs = 0.0;
    int qp_iterations = 0;
    QpStatus qp_status = QpStatus::Solved;
    KernelCoefficients alpha; // kernels after the update
};

using TrainTrace = std::vector<TraceRecord>;

struct TrainResult {
    PolynomialDictionary dictionary;
    SparseCode code;
    TrainTrace trace;
    double mu = 0.0;
};

// Start draw for RandomFeasible: each term contributes O(c/S) at lambda_max
// before projection onto the feasible set.
inline KernelCoefficients random_kernel_draw(int S, int K, double c, double lambda_max, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd a(S, K + 1);
    double base = c / S;
    double scale = 1.0;
    for (int k = 0; k <= K; ++k) {
        for (int s = 0; s < S; ++s) a(s, k) = (k == 0 ? base : 0.0) + 0.5 * base * scale * gauss(rng);
        scale /= std::max(lambda_max, 1e-12);
    }
    return KernelCoefficients(std::move(a));
}

// Pulls slightly infeasible kernels toward the uniform kernels c/S (which
// satisfy every constraint) by the smallest convex step that restores
// feasibility exactly; feasible input is returned unchanged.
inline KernelCoefficients shrink_to_feasible(const LaplacianSpectrum& spec, const KernelCoefficients& kc,
                                             const SpectralBounds& bounds) {
    const int S = kc.num_kernels();
    const double centre = bounds.c / S;
    Eigen::MatrixXd g = kernel_values(kc, spec.eigenvalues);
    double tau = 0.0;
    // value r against bound b, where the uniform point takes value r_u
    auto need = [&](double r, double r_u, double lo, double hi) {
        if (r > hi) tau = std::max(tau, r_u < hi ? (r - hi) / (r - r_u) : 1.0);
        if (r < lo) tau = std::max(tau, r_u > lo ? (lo - r) / (r_u - r) : 1.0);
    };
    for (Eigen::Index l = 0; l < g.rows(); ++l) {
        for (int s = 0; s < S; ++s) need(g(l, s), centre, 0.0, bounds.c);
        need(g.row(l).sum(), bounds.c, bounds.c - bounds.eps1, bounds.c + bounds.eps2);
    }
    if (tau == 0.0) return kc;
    tau = std::min(1.0, tau * (1.0 + 1e-12) + 1e-15);
    Eigen::MatrixXd a = (1.0 - tau) * kc.alpha();
    a.col(0).array() += tau * centre;
    return KernelCoefficients(std::move(a));
}

// Closest feasible kernels (in coefficient space) to `target`.
inline KernelCoefficients project_feasible(const LaplacianSpectrum& spec, const KernelCoefficients& target,
                                           const SpectralBounds& bounds, const QpSettings& settings = {}) {
    QpSolution sol = solve_qp(projection_qp(spec, target, bounds), settings);
    return shrink_to_feasible(spec, sol.alpha, bounds);
}

// Smooth partition of c over eigenvalue rank: kernel s is a Gaussian bump
// centred at rank fraction centres(s), rows renormalized to sum to c.
inline Eigen::MatrixXd rank_partition(const Eigen::VectorXd& lambdas, const Eigen::VectorXd& centres,
                                      const Eigen::VectorXd& widths, double c) {
    const Eigen::Index n = lambdas.size();
    const Eigen::Index S = centres.size();
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return lambdas(a) < lambdas(b); });
    Eigen::MatrixXd g(n, S);
    for (Eigen::Index r = 0; r < n; ++r) {
        const Eigen::Index l = order[r];
        double rank = n == 1 ? 0.5 : static_cast<double>(r) / static_cast<double>(n - 1);
        for (Eigen::Index s = 0; s < S; ++s) {
            double d = (rank - centres(s)) / widths(s);
            g(l, s) = std::exp(-0.5 * d * d);
        }
        g.row(l) *= c / g.row(l).sum();
    }
    return g;
}

// Degree-K kernels whose values on sigma(L) are closest to `targets` (N x S)
// in least squares, subject to the spectral constraints. A small ridge keeps
// the monomial Gram matrix definite.
inline KernelCoefficients fit_feasible(const LaplacianSpectrum& spec, const Eigen::MatrixXd& targets, int K,
                                       const SpectralBounds& bounds, const QpSettings& settings = {},
                                       double ridge = 1e-8) {
    detail::require_dims(targets.rows() == spec.size(), "target rows must match graph size");
    const int S = static_cast<int>(targets.cols());
    const Eigen::Index p = K + 1;
    QuadraticProgram qp = projection_qp(spec, KernelCoefficients::zeros(S, K), bounds);
    Eigen::MatrixXd b = vandermonde(spec.eigenvalues, K);
    Eigen::MatrixXd gram = b.transpose() * b;
    gram.diagonal().array() += ridge;
    qp.Q.setZero();
    for (int s = 0; s < S; ++s) {
        qp.Q.block(s * p, s * p, p, p) = 2.0 * gram;
        qp.q.segment(s * p, p) = -2.0 * b.transpose() * targets.col(s);
    }
    qp.constant = targets.squaredNorm();
    return shrink_to_feasible(spec, solve_qp(qp, settings).alpha, bounds);
}

inline KernelCoefficients spectral_band_kernels(const LaplacianSpectrum& spec, int S, int K,
                                                const SpectralBounds& bounds, const QpSettings& settings = {}) {
    Eigen::VectorXd centres = Eigen::VectorXd::LinSpaced(S, 0.0, 1.0);
    if (S == 1) centres(0) = 0.5;
    Eigen::VectorXd widths = Eigen::VectorXd::Constant(S, 0.9 / (2.0 * S));
    return fit_feasible(spec, rank_partition(spec.eigenvalues, centres, widths, bounds.c), K, bounds, settings);
}

inline PolynomialDictionary initialize(const TrainConfig& cfg, std::shared_ptr<const LaplacianSpectrum> spectrum) {
    cfg.validate();
    switch (cfg.init) {
    case InitKind::UniformKernels:
        return PolynomialDictionary(KernelCoefficients::constant(cfg.S, cfg.K, cfg.bounds.c / cfg.S), spectrum, cfg.bounds);
    case InitKind::RandomFeasible: {
        auto draw = random_kernel_draw(cfg.S, cfg.K, cfg.bounds.c, spectrum->lambda_max(), cfg.seed);
        return PolynomialDictionary(project_feasible(*spectrum, draw, cfg.bounds, cfg.qp), spectrum, cfg.bounds);
    }
    case InitKind::SpectralBands:
        return PolynomialDictionary(spectral_band_kernels(*spectrum, cfg.S, cfg.K, cfg.bounds, cfg.qp), spectrum,
                                    cfg.bounds);
    case InitKind::FromFile: {
        detail::require(cfg.init_kernels.has_value(), ErrorCode::InvalidArgument, "from-file init needs kernels");
        const auto& kc = *cfg.init_kernels;
        detail::require(kc.num_kernels() == cfg.S && kc.degree() == cfg.K, ErrorCode::InvalidArgument,
                        "initial kernels do not match S and K");
        PolynomialDictionary d(kc, spectrum, cfg.bounds);
        auto rep = d.feasibility();
        detail::require(rep.feasible(kFeasibilityTol), ErrorCode::InfeasibleInit,
                        "initial kernels violate the spectral bounds by " + std::to_string(rep.max_violation));
        return d;
    }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown init kind");
}

// Alternates sparse coding and the constrained dictionary update for exactly
// cfg.iter rounds.
inline TrainResult train(const TrainConfig& cfg, std::shared_ptr<const LaplacianSpectrum> spectrum,
                         const Eigen::MatrixXd& Y) {
    cfg.validate();
    detail::require(Y.cols() >= 1, ErrorCode::InvalidArgument, "need at least one training signal");
    detail::require(Y.allFinite(), ErrorCode::InvalidArgument, "training signals must be finite");
    detail::require_dims(Y.rows() == spectrum->size(), "signal rows must match graph size");

    const double mu = cfg.mu.value_or(default_mu(spectrum->size(), cfg.K));
    PolynomialDictionary dict = initialize(cfg, spectrum);
    SparseCode code;
    TrainTrace trace;
    trace.reserve(cfg.iter);

    for (int it = 1; it <= cfg.iter; ++it) {
        auto t_start = std::chrono::steady_clock::now();
        code = encode_batch(dict, Y, cfg.t0, cfg.encode);
        QuadraticProgram qp = assemble_qp(*spectrum, Y, code, mu, cfg.bounds, cfg.K, cfg.S);
        Eigen::VectorXd previous = dict.kernels().as_vector();
        QpSolution sol = solve_qp(qp, cfg.qp, previous);
        // An unconverged solve can leave a visible violation; pull it back inside.
        KernelCoefficients next = sol.primal_residual > 0.1 * kFeasibilityTol
                                      ? shrink_to_feasible(*spectrum, sol.alpha, cfg.bounds)
                                      : sol.alpha;
        Eigen::VectorXd a = next.as_vector();
        dict = PolynomialDictionary(next, spectrum, cfg.bounds);

        TraceRecord rec;
        rec.iter = it;
        rec.objective_before = qp.objective(previous);
        rec.objective = qp.objective(a);
        rec.fit_error = rec.objective - mu * a.squaredNorm();
        rec.kkt = sol.kkt_residual;
        rec.mean_sparsity = code.mean_sparsity();
        rec.qp_iterations = sol.iterations;
        rec.qp_status = sol.status;
        rec.alpha = std::move(next);
        rec.secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        trace.push_back(rec);
    }
    return TrainResult{std::move(dict), std::move(code), std::move(trace), mu};
}

inline constexpr double kSnrCap = 300.0;

// Mean over kernels of -20 log10 ||g_s(Lambda) - g'_pi(s)(Lambda)||_2, maximized
// over matchings pi; exact matches report kSnrCap.
inline double kernel_snr(const KernelCoefficients& learned, const KernelCoefficients& truth,
                         const LaplacianSpectrum& spec) {
    const int S = truth.num_kernels();
    detail::require(learned.num_kernels() == S, ErrorCode::InvalidArgument, "kernel counts differ");
    detail::require(S <= 8, ErrorCode::InvalidArgument, "permutation search supports S <= 8");
    Eigen::MatrixXd gl = kernel_values(learned, spec.eigenvalues);
    Eigen::MatrixXd gt = kernel_values(truth, spec.eigenvalues);
    Eigen::MatrixXd snr(S, S); // snr(s, t): truth s against learned t
    for (int s = 0; s < S; ++s) {
        for (int t = 0; t < S; ++t) {
            double err = (gt.col(s) - gl.col(t)).norm();
            snr(s, t) = err > 0.0 ? std::min(kSnrCap, -20.0 * std::log10(err)) : kSnrCap;
        }
    }
    std::vector<int> perm(S);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int s = 0; s < S; ++s) total += snr(s, perm[s]);
        best = std::max(best, total / S);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

} // namespace graphdict
