#pragma once

#include "graphdict/sparse_coding.hpp"
#include "graphdict/trainer.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace graphdict {

// A band is a union of inclusive eigen-index ranges.
using IndexRange = std::pair<int, int>;
using Band = std::vector<IndexRange>;

inline std::vector<Band> four_band_layout() { return {{{0, 24}}, {{25, 39}, {90, 99}}, {{40, 64}}, {{65, 89}}}; }
inline std::vector<Band> two_band_layout() { return {{{0, 9}}, {{89, 99}}}; }

// Maps a layout defined on 100 eigenvalues onto n eigenvalues by proportional
// index rescaling; identity when n == 100.
inline std::vector<Band> rescale_bands(const std::vector<Band>& bands, int n) {
    if (n == 100) return bands;
    auto map = [n](int i) { return static_cast<int>(std::lround(static_cast<double>(i) * (n - 1) / 99.0)); };
    std::vector<Band> out;
    for (const auto& b : bands) {
        Band nb;
        for (auto [lo, hi] : b) nb.emplace_back(map(lo), map(hi));
        out.push_back(nb);
    }
    return out;
}

inline std::vector<int> band_indices(const Band& band) {
    std::vector<int> idx;
    for (auto [lo, hi] : band)
        for (int i = lo; i <= hi; ++i) idx.push_back(i);
    return idx;
}

enum class GeneratorKind { Polynomial, BandedRandom };

struct BandedAtom {
    int vertex = 0;
    int band = 0;
    Eigen::VectorXd mask; // h_j(Lambda), length N, zero outside the band
};

struct GeneratingDictionary {
    GeneratorKind kind = GeneratorKind::Polynomial;
    std::shared_ptr<const LaplacianSpectrum> spectrum;
    std::optional<KernelCoefficients> kernels; // Polynomial
    std::vector<Band> bands;                   // BandedRandom
    std::vector<BandedAtom> atoms;             // BandedRandom

    Eigen::Index num_atoms() const {
        if (kind == GeneratorKind::Polynomial) return static_cast<Eigen::Index>(kernels->num_kernels()) * spectrum->size();
        return static_cast<Eigen::Index>(atoms.size());
    }

    Eigen::VectorXd atom(Eigen::Index j) const {
        if (kind == GeneratorKind::Polynomial) return PolynomialDictionary(*kernels, spectrum).atom(j);
        const auto& a = atoms.at(static_cast<std::size_t>(j));
        const auto& chi = spectrum->eigenvectors;
        return chi * a.mask.cwiseProduct(chi.row(a.vertex).transpose());
    }

    Eigen::MatrixXd dense() const {
        Eigen::MatrixXd out(spectrum->size(), num_atoms());
        if (kind == GeneratorKind::Polynomial) return PolynomialDictionary(*kernels, spectrum).dense();
        for (Eigen::Index j = 0; j < num_atoms(); ++j) out.col(j) = atom(j);
        return out;
    }
};

namespace detail {

// Smooth partition of unity: S Gaussian bumps with jittered, ordered centres,
// laid out over the eigenvalue rank (so every kernel covers a share of
// sigma(L) even when the spectrum is clustered), normalized to sum to c.
inline Eigen::MatrixXd bump_partition(const Eigen::VectorXd& lambdas, int S, double c, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> jitter(-0.2, 0.2);
    std::uniform_real_distribution<double> width(0.7, 1.1);
    Eigen::VectorXd centres(S), widths(S);
    for (int s = 0; s < S; ++s) {
        double pos = S == 1 ? 0.5 : (s + jitter(rng)) / (S - 1);
        centres(s) = std::clamp(pos, 0.0, 1.0);
        widths(s) = width(rng) / (2.0 * S);
    }
    return rank_partition(lambdas, centres, widths, c);
}

} // namespace detail

// Ground-truth polynomial kernels: the feasible degree-K kernels closest (on
// sigma(L)) to a randomly jittered smooth partition of c over eigenvalue rank.
inline GeneratingDictionary make_polynomial_generator(std::shared_ptr<const LaplacianSpectrum> spectrum,
                                                      std::uint64_t seed, int S = 4, int K = 5,
                                                      const SpectralBounds& bounds = {}) {
    bounds.validate();
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd targets = detail::bump_partition(spectrum->eigenvalues, S, bounds.c, rng);
    GeneratingDictionary gen;
    gen.kind = GeneratorKind::Polynomial;
    gen.spectrum = spectrum;
    gen.kernels = fit_feasible(*spectrum, targets, K, bounds);
    return gen;
}

inline GeneratingDictionary make_banded_generator(std::shared_ptr<const LaplacianSpectrum> spectrum,
                                                  const std::vector<Band>& bands, int J, std::uint64_t seed) {
    const int n = spectrum->size();
    detail::require(J >= 1, ErrorCode::InvalidArgument, "J must be >= 1");
    detail::require(!bands.empty(), ErrorCode::InvalidArgument, "need at least one band");
    std::vector<std::vector<int>> indices;
    for (const auto& band : bands) {
        auto idx = band_indices(band);
        detail::require(!idx.empty(), ErrorCode::BandOutOfRange, "empty band");
        for (int i : idx)
            detail::require(i >= 0 && i < n, ErrorCode::BandOutOfRange,
                            "eigen-index " + std::to_string(i) + " outside [0, " + std::to_string(n - 1) + "]");
        indices.push_back(std::move(idx));
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick_band(0, static_cast<int>(bands.size()) - 1);
    std::uniform_int_distribution<int> pick_vertex(0, n - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    GeneratingDictionary gen;
    gen.kind = GeneratorKind::BandedRandom;
    gen.spectrum = spectrum;
    gen.bands = bands;
    gen.atoms.reserve(J);
    for (int j = 0; j < J; ++j) {
        BandedAtom a;
        a.band = pick_band(rng);
        a.mask = Eigen::VectorXd::Zero(n);
        for (int i : indices[a.band]) a.mask(i) = unit(rng);
        a.vertex = pick_vertex(rng);
        gen.atoms.push_back(std::move(a));
    }
    return gen;
}

enum class CoeffDist { Normal, Uniform };

struct SignalSpec {
    int M = 600;
    int t0_max = 4;
    CoeffDist coeff_dist = CoeffDist::Normal;
    double noise_sigma = 0.0;
    bool sigma_is_variance = false; // interpret noise_sigma as a variance instead of a standard deviation
    std::uint64_t seed = 0;
    std::optional<int> fixed_sparsity; // every signal uses exactly this many atoms
    std::optional<double> fixed_coeff;  // every coefficient takes this value
};

struct SynthCorpus {
    Eigen::MatrixXd signals; // noisy, N x M
    Eigen::MatrixXd clean;
    std::vector<std::vector<Eigen::Index>> atoms;
};

template <class AtomFn>
SynthCorpus synth_from_atoms(int n, Eigen::Index n_atoms, AtomFn&& atom, const SignalSpec& spec) {
    detail::require(spec.M >= 0 && spec.t0_max >= 1, ErrorCode::InvalidArgument, "need M >= 0 and t0_max >= 1");
    detail::require(spec.noise_sigma >= 0.0, ErrorCode::InvalidArgument, "noise level must be nonnegative");
    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<int> pick_t(1, spec.t0_max);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const double sd = spec.sigma_is_variance ? std::sqrt(spec.noise_sigma) : spec.noise_sigma;

    SynthCorpus out;
    out.clean = Eigen::MatrixXd::Zero(n, spec.M);
    out.atoms.resize(spec.M);
    std::vector<Eigen::Index> pool(n_atoms);
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    for (int m = 0; m < spec.M; ++m) {
        int t = spec.fixed_sparsity ? *spec.fixed_sparsity : pick_t(rng);
        t = static_cast<int>(std::min<Eigen::Index>(t, n_atoms));
        // partial Fisher-Yates for t distinct atoms
        for (int i = 0; i < t; ++i) {
            std::uniform_int_distribution<Eigen::Index> pick(i, n_atoms - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }
        for (int i = 0; i < t; ++i) {
            double coeff = spec.fixed_coeff ? *spec.fixed_coeff
                                            : (spec.coeff_dist == CoeffDist::Normal ? gauss(rng) : uni(rng));
            out.clean.col(m) += coeff * atom(pool[i]);
            out.atoms[m].push_back(pool[i]);
        }
    }
    out.signals = out.clean;
    if (sd > 0.0) {
        for (Eigen::Index j = 0; j < out.signals.cols(); ++j)
            for (Eigen::Index i = 0; i < out.signals.rows(); ++i) out.signals(i, j) += sd * gauss(rng);
    }
    return out;
}

// Signals as random sparse combinations of generator atoms plus Gaussian noise.
inline SynthCorpus synth_signals(const GeneratingDictionary& gen, const SignalSpec& spec) {
    if (gen.kind == GeneratorKind::Polynomial) {
        PolynomialDictionary d(*gen.kernels, gen.spectrum);
        return synth_from_atoms(gen.spectrum->size(), d.num_atoms(), [&](Eigen::Index j) { return d.atom(j); }, spec);
    }
    return synth_from_atoms(gen.spectrum->size(), gen.num_atoms(), [&](Eigen::Index j) { return gen.atom(j); }, spec);
}

// Same recipe with the atoms of a polynomial dictionary.
inline SynthCorpus synth_signals(const PolynomialDictionary& d, const SignalSpec& spec) {
    return synth_from_atoms(d.num_vertices(), d.num_atoms(), [&](Eigen::Index j) { return d.atom(j); }, spec);
}

// Mean squared approximation error ||Y - D X||_F^2 / M for each sparsity level.
inline std::vector<double> approximation_error(const PolynomialDictionary& d, const Eigen::MatrixXd& Y,
                                               const std::vector<int>& sparsity_grid,
                                               const EncodeOptions& opt = {}) {
    std::vector<double> out;
    out.reserve(sparsity_grid.size());
    const double m = static_cast<double>(std::max<Eigen::Index>(Y.cols(), 1));
    for (int t0 : sparsity_grid) {
        SparseCode code = encode_batch(d, Y, t0, opt);
        out.push_back((Y - reconstruct(d, code)).squaredNorm() / m);
    }
    return out;
}

// Divides every column by the largest column 2-norm.
inline Eigen::MatrixXd normalize_max_energy(const Eigen::MatrixXd& Y) {
    double mx = Y.colwise().norm().maxCoeff();
    if (mx <= 0.0) return Y;
    return Y / mx;
}

inline double snr_db(const Eigen::MatrixXd& clean, const Eigen::MatrixXd& noisy) {
    double noise = (noisy - clean).squaredNorm();
    return 10.0 * std::log10(clean.squaredNorm() / noise);
}

} // namespace graphdict
