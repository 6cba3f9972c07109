#pragma once

#include "graphdict/dictionary.hpp"
#include "graphdict/parallel.hpp"
#include "graphdict/sparse_coding.hpp"

#include <Eigen/Cholesky>

#include <optional>
#include <string>

namespace graphdict {

// Dictionary update as  min 1/2 a^T Q a + q^T a + constant  s.t.  lower <= C a <= upper.
// Rows of C: S*N rows (I_S kron B), one block per kernel, then N rows (1^T kron B).
struct QuadraticProgram {
    Eigen::MatrixXd Q;
    Eigen::VectorXd q;
    double constant = 0.0;
    Eigen::MatrixXd C;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    int S = 0;
    int K = 0;
    SpectralBounds bounds;
    bool degenerate_spectrum = false; // B rank-deficient (repeated eigenvalues); informational

    Eigen::Index dim() const { return Q.rows(); }

    double objective(const Eigen::VectorXd& a) const { return 0.5 * a.dot(Q * a) + q.dot(a) + constant; }

    // One-sided form A_ineq a <= b_ineq: rows +C (upper) stacked over -C (lower).
    std::pair<Eigen::MatrixXd, Eigen::VectorXd> inequality_form() const {
        const Eigen::Index m = C.rows();
        Eigen::MatrixXd a(2 * m, C.cols());
        Eigen::VectorXd b(2 * m);
        a.topRows(m) = C;
        a.bottomRows(m) = -C;
        b.head(m) = upper;
        b.tail(m) = -lower;
        return {a, b};
    }

    double max_violation(const Eigen::VectorXd& a) const {
        Eigen::VectorXd ca = C * a;
        return std::max(0.0, std::max((ca - upper).maxCoeff(), (lower - ca).maxCoeff()));
    }
};

namespace detail {

inline Eigen::MatrixXd constraint_matrix(const Eigen::MatrixXd& b, int S) {
    const Eigen::Index n = b.rows();
    const Eigen::Index k1 = b.cols();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n * (S + 1), k1 * S);
    for (int s = 0; s < S; ++s) {
        c.block(s * n, s * k1, n, k1) = b;
        c.block(S * n, s * k1, n, k1) = b;
    }
    return c;
}

} // namespace detail

// Builds Q, q from trace identities
//   Q[(s,k),(s',k')] = 2 tr(X_s^T L^{k+k'} X_s') + 2 mu [s=s', k=k'],
//   q[(s,k)]         = -2 tr(Y^T L^k X_s),
// forming L^j X_s (j <= 2K) by repeated sparse-times-dense products.
inline QuadraticProgram assemble_qp(const LaplacianSpectrum& spec, const Eigen::MatrixXd& Y, const SparseCode& X,
                                    double mu, const SpectralBounds& bounds, int K, int S) {
    const int n = spec.size();
    const Eigen::Index m = Y.cols();
    detail::require(mu >= 0.0, ErrorCode::InvalidArgument, "mu must be nonnegative");
    detail::require(K >= 0 && S >= 1, ErrorCode::InvalidArgument, "need S >= 1 and K >= 0");
    bounds.validate();
    detail::require_dims(Y.rows() == n, "signal rows must match graph size");
    detail::require_dims(X.num_atoms == static_cast<Eigen::Index>(S) * n, "sparse code must have S*N atoms");
    detail::require_dims(static_cast<Eigen::Index>(X.num_signals()) == m, "sparse code must have one column per signal");

    // Per-block nonzeros (row n, column m, value).
    struct Entry {
        int row;
        Eigen::Index col;
        double value;
    };
    std::vector<std::vector<Entry>> blocks(S);
    for (Eigen::Index col = 0; col < m; ++col) {
        const auto& sup = X.supports[col];
        for (std::size_t t = 0; t < sup.size(); ++t) {
            int s = static_cast<int>(sup[t] / n);
            blocks[s].push_back({static_cast<int>(sup[t] % n), col, X.coeffs[col][t]});
        }
    }

    // traces[s][s'](j) = tr(X_s'^T L^j X_s), lin[s](k) = tr(Y^T L^k X_s)
    std::vector<std::vector<Eigen::VectorXd>> traces(S, std::vector<Eigen::VectorXd>(S, Eigen::VectorXd::Zero(2 * K + 1)));
    std::vector<Eigen::VectorXd> lin(S, Eigen::VectorXd::Zero(K + 1));
    parallel_for(S, [&](long s) {
        if (blocks[s].empty()) return;
        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, m);
        for (const auto& e : blocks[s]) v(e.row, e.col) += e.value;
        for (int j = 0; j <= 2 * K; ++j) {
            for (int t = 0; t < S; ++t) {
                double acc = 0.0;
                for (const auto& e : blocks[t]) acc += v(e.row, e.col) * e.value;
                traces[s][t](j) = acc;
            }
            if (j <= K) lin[s](j) = (v.array() * Y.array()).sum();
            if (j < 2 * K) v = spec.lap * v;
        }
    });

    QuadraticProgram qp;
    qp.S = S;
    qp.K = K;
    qp.bounds = bounds;
    const Eigen::Index dim = static_cast<Eigen::Index>(S) * (K + 1);
    qp.Q = Eigen::MatrixXd::Zero(dim, dim);
    qp.q = Eigen::VectorXd::Zero(dim);
    for (int s = 0; s < S; ++s) {
        for (int t = s; t < S; ++t) {
            for (int k = 0; k <= K; ++k) {
                for (int kk = 0; kk <= K; ++kk) {
                    // tr(X_t^T L^j X_s) = tr(X_s^T L^j X_t); average both routes for exact symmetry.
                    double v = traces[s][t](k + kk) + traces[t][s](k + kk);
                    Eigen::Index r = s * (K + 1) + k;
                    Eigen::Index c = t * (K + 1) + kk;
                    qp.Q(r, c) = v;
                    qp.Q(c, r) = v;
                }
            }
        }
        for (int k = 0; k <= K; ++k) qp.q(s * (K + 1) + k) = -2.0 * lin[s](k);
    }
    qp.Q.diagonal().array() += 2.0 * mu;
    qp.constant = Y.squaredNorm();

    Eigen::MatrixXd b = vandermonde(spec.eigenvalues, K);
    qp.C = detail::constraint_matrix(b, S);
    const Eigen::Index rows = qp.C.rows();
    qp.lower.resize(rows);
    qp.upper.resize(rows);
    qp.lower.head(static_cast<Eigen::Index>(S) * n).setZero();
    qp.upper.head(static_cast<Eigen::Index>(S) * n).setConstant(bounds.c);
    qp.lower.tail(n).setConstant(bounds.c - bounds.eps1);
    qp.upper.tail(n).setConstant(bounds.c + bounds.eps2);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(b);
    qp.degenerate_spectrum = qr.rank() < b.cols();
    return qp;
}

// Projection of `target` onto the feasible kernel set: Q = I, q = -target
// (the same minimizer as ||a - target||^2).
inline QuadraticProgram projection_qp(const LaplacianSpectrum& spec, const KernelCoefficients& target,
                                      const SpectralBounds& bounds) {
    bounds.validate();
    const int S = target.num_kernels();
    const int K = target.degree();
    const int n = spec.size();
    QuadraticProgram qp;
    qp.S = S;
    qp.K = K;
    qp.bounds = bounds;
    Eigen::VectorXd t = target.as_vector();
    qp.Q = Eigen::MatrixXd::Identity(t.size(), t.size());
    qp.q = -t;
    qp.constant = 0.5 * t.squaredNorm();
    qp.C = detail::constraint_matrix(vandermonde(spec.eigenvalues, K), S);
    qp.lower.resize(qp.C.rows());
    qp.upper.resize(qp.C.rows());
    qp.lower.head(static_cast<Eigen::Index>(S) * n).setZero();
    qp.upper.head(static_cast<Eigen::Index>(S) * n).setConstant(bounds.c);
    qp.lower.tail(n).setConstant(bounds.c - bounds.eps1);
    qp.upper.tail(n).setConstant(bounds.c + bounds.eps2);
    return qp;
}

enum class QpStatus { Solved, NotConverged };

inline const char* to_string(QpStatus s) { return s == QpStatus::Solved ? "solved" : "not_converged"; }

struct QpSolution {
    KernelCoefficients alpha;
    Eigen::VectorXd x;
    Eigen::VectorXd duals; // multipliers of lower <= C a <= upper (positive: upper active)
    double objective = 0.0;
    double primal_residual = 0.0; // max constraint violation
    double dual_residual = 0.0;   // ||Q a + q + C^T y||_inf
    double complementarity = 0.0;
    double kkt_residual = 0.0;    // max of the three, each relative to its natural scale
    int iterations = 0;
    bool polished = false;
    QpStatus status = QpStatus::NotConverged;
};

struct QpSettings {
    double tol = 1e-7;
    int max_iter = 20000;
    double rho = 0.1;
    double sigma = 1e-6;
    double relaxation = 1.6;
    int scaling_passes = 15;
    int check_every = 25;
    bool polish = true;
};

namespace detail {

// Relative KKT measures evaluated in the original (unscaled) problem.
inline void kkt_measures(const QuadraticProgram& qp, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                         QpSolution& out) {
    Eigen::VectorXd cx = qp.C * x;
    Eigen::VectorXd qx = qp.Q * x;
    Eigen::VectorXd cty = qp.C.transpose() * y;
    out.primal_residual = qp.max_violation(x);
    out.dual_residual = (qx + qp.q + cty).lpNorm<Eigen::Infinity>();
    double comp = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y(i) > 0.0) comp = std::max(comp, y(i) * std::abs(qp.upper(i) - cx(i)));
        else if (y(i) < 0.0) comp = std::max(comp, -y(i) * std::abs(cx(i) - qp.lower(i)));
    }
    out.complementarity = comp;
    double pscale = 1.0 + cx.lpNorm<Eigen::Infinity>();
    double dscale = 1.0 + std::max({qx.lpNorm<Eigen::Infinity>(), cty.lpNorm<Eigen::Infinity>(),
                                    qp.q.lpNorm<Eigen::Infinity>()});
    double cscale = 1.0 + y.lpNorm<Eigen::Infinity>() * (1.0 + cx.lpNorm<Eigen::Infinity>());
    out.kkt_residual = std::max({out.primal_residual / pscale, out.dual_residual / dscale, comp / cscale});
}

// Ruiz equilibration of the KKT matrix [Q C^T; C 0] followed by cost scaling.
struct Scaling {
    Eigen::VectorXd d; // variables: x = D xs
    Eigen::VectorXd e; // constraints: rows scaled by E
    double cost = 1.0;
};

inline Scaling equilibrate(Eigen::MatrixXd& P, Eigen::VectorXd& q, Eigen::MatrixXd& A, int passes) {
    const Eigen::Index n = P.rows();
    const Eigen::Index m = A.rows();
    Scaling sc{Eigen::VectorXd::Ones(n), Eigen::VectorXd::Ones(m), 1.0};
    auto clamp = [](double v) { return std::clamp(v, 1e-4, 1e4); };
    for (int pass = 0; pass < passes; ++pass) {
        Eigen::VectorXd dv(n), ev(m);
        for (Eigen::Index j = 0; j < n; ++j) {
            double nrm = std::max(P.col(j).lpNorm<Eigen::Infinity>(), m > 0 ? A.col(j).lpNorm<Eigen::Infinity>() : 0.0);
            dv(j) = nrm > 0.0 ? clamp(1.0 / std::sqrt(nrm)) : 1.0;
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            double nrm = A.row(i).lpNorm<Eigen::Infinity>();
            ev(i) = nrm > 0.0 ? clamp(1.0 / std::sqrt(nrm)) : 1.0;
        }
        P = dv.asDiagonal() * P * dv.asDiagonal();
        A = ev.asDiagonal() * A * dv.asDiagonal();
        q = dv.asDiagonal() * q;
        sc.d.array() *= dv.array();
        sc.e.array() *= ev.array();

        double pnorm = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) pnorm += P.col(j).lpNorm<Eigen::Infinity>();
        pnorm /= static_cast<double>(n);
        double gamma = std::max(pnorm, q.lpNorm<Eigen::Infinity>());
        gamma = gamma > 0.0 ? clamp(1.0 / gamma) : 1.0;
        P *= gamma;
        q *= gamma;
        sc.cost *= gamma;
    }
    return sc;
}

} // namespace detail

// Operator-splitting (ADMM) solver for the dictionary-update QP with
// equilibration, adaptive penalty and an active-set polishing step.
inline QpSolution solve_qp(const QuadraticProgram& qp, const QpSettings& settings = {},
                           const std::optional<Eigen::VectorXd>& warm_start = std::nullopt) {
    const Eigen::Index n = qp.dim();
    const Eigen::Index m = qp.C.rows();
    detail::require_dims(qp.q.size() == n && qp.C.cols() == n && qp.lower.size() == m && qp.upper.size() == m,
                         "inconsistent QP dimensions");
    for (Eigen::Index i = 0; i < m; ++i) {
        detail::require(qp.lower(i) <= qp.upper(i), ErrorCode::InfeasibleProblem,
                        "constraint row " + std::to_string(i) + " has lower bound above upper bound");
    }
    // Phase 1: the uniform kernels c/S are feasible whenever the bounds are consistent.
    if (qp.S > 0 && n == static_cast<Eigen::Index>(qp.S) * (qp.K + 1)) {
        Eigen::VectorXd uniform = KernelCoefficients::constant(qp.S, qp.K, qp.bounds.c / qp.S).as_vector();
        detail::require(qp.max_violation(uniform) <= 1e-9, ErrorCode::InfeasibleProblem,
                        "uniform kernels violate the spectral bounds; check c, eps1, eps2");
    }

    Eigen::MatrixXd P = 0.5 * (qp.Q + qp.Q.transpose());
    Eigen::VectorXd q = qp.q;
    Eigen::MatrixXd A = qp.C;
    detail::Scaling sc = detail::equilibrate(P, q, A, settings.scaling_passes);
    Eigen::VectorXd l = sc.e.cwiseProduct(qp.lower);
    Eigen::VectorXd u = sc.e.cwiseProduct(qp.upper);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    if (warm_start) {
        detail::require_dims(warm_start->size() == n, "warm start length");
        x = warm_start->cwiseQuotient(sc.d);
        z = (A * x).cwiseMax(l).cwiseMin(u);
    }

    const double sigma = settings.sigma;
    const double relax = settings.relaxation;
    double rho = settings.rho;
    Eigen::VectorXd rho_vec(m);
    auto set_rho = [&](double r) {
        rho = std::clamp(r, 1e-6, 1e6);
        for (Eigen::Index i = 0; i < m; ++i) rho_vec(i) = (u(i) - l(i) < 1e-12) ? 1e3 * rho : rho;
    };
    set_rho(rho);
    Eigen::LLT<Eigen::MatrixXd> factor;
    auto refactor = [&] {
        Eigen::MatrixXd kkt = P + A.transpose() * rho_vec.asDiagonal() * A;
        kkt.diagonal().array() += sigma;
        factor.compute(kkt);
    };
    refactor();

    auto unscaled_x = [&](const Eigen::VectorXd& xs) { return Eigen::VectorXd(sc.d.cwiseProduct(xs)); };
    auto unscaled_y = [&](const Eigen::VectorXd& ys) { return Eigen::VectorXd(sc.e.cwiseProduct(ys) / sc.cost); };

    QpSolution sol;
    bool converged = false;
    int iter = 0;
    for (iter = 1; iter <= settings.max_iter; ++iter) {
        Eigen::VectorXd rhs = sigma * x - q + A.transpose() * (rho_vec.cwiseProduct(z) - y);
        Eigen::VectorXd xt = factor.solve(rhs);
        Eigen::VectorXd zt = A * xt;
        Eigen::VectorXd x_next = relax * xt + (1.0 - relax) * x;
        Eigen::VectorXd z_relaxed = relax * zt + (1.0 - relax) * z;
        Eigen::VectorXd z_next = (z_relaxed + y.cwiseQuotient(rho_vec)).cwiseMax(l).cwiseMin(u);
        y += rho_vec.cwiseProduct(z_relaxed - z_next);
        x = std::move(x_next);
        z = std::move(z_next);

        if (iter % settings.check_every != 0 && iter != settings.max_iter) continue;

        // Residuals in original units, OSQP-style termination.
        Eigen::VectorXd ax = A * x;
        Eigen::VectorXd px = P * x;
        Eigen::VectorXd aty = A.transpose() * y;
        Eigen::VectorXd einv = sc.e.cwiseInverse();
        Eigen::VectorXd dinv = sc.d.cwiseInverse();
        double prim = einv.cwiseProduct(ax - z).lpNorm<Eigen::Infinity>();
        double dual = dinv.cwiseProduct(px + q + aty).lpNorm<Eigen::Infinity>() / sc.cost;
        double prim_scale = std::max(einv.cwiseProduct(ax).lpNorm<Eigen::Infinity>(), einv.cwiseProduct(z).lpNorm<Eigen::Infinity>());
        double dual_scale = std::max({dinv.cwiseProduct(px).lpNorm<Eigen::Infinity>(), dinv.cwiseProduct(aty).lpNorm<Eigen::Infinity>(),
                                      dinv.cwiseProduct(q).lpNorm<Eigen::Infinity>()}) / sc.cost;
        if (prim <= settings.tol * (1.0 + prim_scale) && dual <= settings.tol * (1.0 + dual_scale)) {
            converged = true;
            break;
        }

        double sp = (ax - z).lpNorm<Eigen::Infinity>() / std::max({ax.lpNorm<Eigen::Infinity>(), z.lpNorm<Eigen::Infinity>(), 1e-12});
        double sd = (px + q + aty).lpNorm<Eigen::Infinity>() /
                    std::max({px.lpNorm<Eigen::Infinity>(), aty.lpNorm<Eigen::Infinity>(), q.lpNorm<Eigen::Infinity>(), 1e-12});
        double ratio = std::sqrt(sp / std::max(sd, 1e-30));
        if (ratio > 5.0 || ratio < 0.2) {
            set_rho(rho * ratio);
            refactor();
        }
    }
    sol.iterations = std::min(iter, settings.max_iter);

    Eigen::VectorXd x_out = unscaled_x(x);
    Eigen::VectorXd y_out = unscaled_y(y);
    detail::kkt_measures(qp, x_out, y_out, sol);
    sol.x = x_out;
    sol.duals = y_out;

    if (settings.polish) {
        // Guess the active set from the ADMM duals and solve the reduced KKT system.
        std::vector<Eigen::Index> active;
        std::vector<double> target;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (z(i) - l(i) < -y(i)) {
                active.push_back(i);
                target.push_back(l(i));
            } else if (u(i) - z(i) < y(i)) {
                active.push_back(i);
                target.push_back(u(i));
            }
        }
        const auto na = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd ar(na, n);
        Eigen::VectorXd br(na);
        for (Eigen::Index r = 0; r < na; ++r) {
            ar.row(r) = A.row(active[r]);
            br(r) = target[r];
        }
        const double delta = 1e-9;
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + na, n + na);
        kkt.topLeftCorner(n, n) = P;
        kkt.topRightCorner(n, na) = ar.transpose();
        kkt.bottomLeftCorner(na, n) = ar;
        Eigen::MatrixXd kkt_reg = kkt;
        kkt_reg.diagonal().head(n).array() += delta;
        kkt_reg.diagonal().tail(na).array() -= delta;
        Eigen::VectorXd rhs(n + na);
        rhs.head(n) = -q;
        rhs.tail(na) = br;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(kkt_reg);
        Eigen::VectorXd sol_vec = ldlt.solve(rhs);
        for (int refine = 0; refine < 20; ++refine) {
            Eigen::VectorXd res = rhs - kkt * sol_vec;
            if (res.lpNorm<Eigen::Infinity>() < 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) break;
            sol_vec += ldlt.solve(res);
        }
        if (sol_vec.allFinite()) {
            Eigen::VectorXd yp = Eigen::VectorXd::Zero(m);
            for (Eigen::Index r = 0; r < na; ++r) yp(active[r]) = sol_vec(n + r);
            QpSolution cand;
            Eigen::VectorXd xp = unscaled_x(sol_vec.head(n));
            Eigen::VectorXd ypu = unscaled_y(yp);
            detail::kkt_measures(qp, xp, ypu, cand);
            bool sign_ok = true;
            for (Eigen::Index r = 0; r < na; ++r) {
                bool is_lower = target[r] == l(active[r]) && l(active[r]) != u(active[r]);
                bool is_upper = target[r] == u(active[r]) && l(active[r]) != u(active[r]);
                if ((is_lower && yp(active[r]) > 1e-9 * (1.0 + std::abs(yp(active[r])))) ||
                    (is_upper && yp(active[r]) < -1e-9 * (1.0 + std::abs(yp(active[r])))))
                    sign_ok = false;
            }
            if (sign_ok && cand.kkt_residual <= std::max(sol.kkt_residual, settings.tol)) {
                sol.x = xp;
                sol.duals = ypu;
                sol.primal_residual = cand.primal_residual;
                sol.dual_residual = cand.dual_residual;
                sol.complementarity = cand.complementarity;
                sol.kkt_residual = cand.kkt_residual;
                sol.polished = true;
            }
        }
    }

    sol.status = (converged || sol.kkt_residual <= settings.tol) ? QpStatus::Solved : QpStatus::NotConverged;
    sol.objective = qp.objective(sol.x);
    sol.alpha = KernelCoefficients::from_vector(sol.x, qp.S, qp.K);
    return sol;
}

} // namespace graphdict
