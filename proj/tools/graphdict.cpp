// graphdict: generate synthetic corpora, learn polynomial graph dictionaries,
// evaluate them and sample their kernels.
//
// Exit codes: 0 success, 1 unexpected failure, 2 validation error (bad
// parameters, disconnected graph, shape mismatch), 3 I/O error, and CLI11's
// own codes for malformed command lines.

#include <CLI11.hpp>

#include "graphdict/io.hpp"
#include "graphdict/synthdata.hpp"

#include <cstdio>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace graphdict;

namespace {

// Prefixes library errors with the stage that raised them.
template <class Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        std::string msg = e.what();
        std::string prefix = std::string(to_string(e.code())) + ": ";
        if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
        throw Error(e.code(), name + ": " + msg);
    }
}

struct Corpus {
    std::shared_ptr<const LaplacianSpectrum> spectrum;
    Eigen::MatrixXd signals;
};

std::shared_ptr<const LaplacianSpectrum> load_spectrum(const fs::path& dir) {
    auto g = stage("reading graph", [&] { return io::read_graph(dir / "edges.csv", dir / "coords.csv"); });
    return stage("spectrum", [&] { return std::make_shared<const LaplacianSpectrum>(normalized_laplacian(g)); });
}

Corpus load_corpus(const fs::path& dir) {
    Corpus c;
    c.spectrum = load_spectrum(dir);
    c.signals = stage("reading signals", [&] { return io::read_matrix_csv(dir / "signals.csv"); });
    detail::require_dims(c.signals.rows() == c.spectrum->size(),
                         "signals.csv has " + std::to_string(c.signals.rows()) + " rows but the graph has " +
                             std::to_string(c.spectrum->size()) + " vertices");
    return c;
}

std::vector<int> parse_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, "bad sparsity list entry '" + item + "'");
        }
        detail::require(out.back() >= 1, ErrorCode::InvalidArgument, "sparsity levels must be >= 1");
    }
    detail::require(!out.empty(), ErrorCode::InvalidArgument, "empty sparsity list");
    return out;
}

// ---- generate ----------------------------------------------------------

struct GenerateArgs {
    std::uint64_t graph_seed = 0;
    std::uint64_t seed = 0;
    int n = 100;
    double theta = 0.9;
    double kappa = 0.5;
    std::string generator = "poly";
    int J = 400;
    int m = 600;
    int t0 = 4;
    double noise_sigma = 0.0;
    bool sigma_is_variance = false;
    std::string coeff_dist = "normal";
    fs::path out;
};

void cmd_generate(const GenerateArgs& a) {
    GeometricGraphParams gp{a.theta, a.kappa, 0.0};
    auto g = stage("graph", [&] { return random_geometric_graph(a.n, gp, a.graph_seed); });
    auto spectrum = stage("spectrum", [&] { return std::make_shared<const LaplacianSpectrum>(normalized_laplacian(g)); });

    GeneratingDictionary gen;
    std::vector<Band> bands;
    if (a.generator == "poly") {
        gen = stage("generator", [&] { return make_polynomial_generator(spectrum, a.seed); });
    } else {
        bands = rescale_bands(a.generator == "banded" ? four_band_layout() : two_band_layout(), a.n);
        gen = stage("generator", [&] { return make_banded_generator(spectrum, bands, a.J, a.seed); });
    }

    SignalSpec ss;
    ss.M = a.m;
    ss.t0_max = a.t0;
    ss.coeff_dist = a.coeff_dist == "uniform" ? CoeffDist::Uniform : CoeffDist::Normal;
    ss.noise_sigma = a.noise_sigma;
    ss.sigma_is_variance = a.sigma_is_variance;
    ss.seed = a.seed + 1;
    auto corpus = stage("signals", [&] { return synth_signals(gen, ss); });

    io::write_edges(g, a.out / "edges.csv");
    io::write_coords(*g.coords(), a.out / "coords.csv");
    io::write_matrix_csv(corpus.signals, a.out / "signals.csv");
    io::write_matrix_csv(corpus.clean, a.out / "clean.csv");
    if (gen.kernels) io::write_kernels(*gen.kernels, {}, a.out / "truth_kernels.json");

    io::json band_list = io::json::array();
    for (const auto& band : bands) {
        io::json ranges = io::json::array();
        for (auto [lo, hi] : band) ranges.push_back({lo, hi});
        band_list.push_back(ranges);
    }
    io::json manifest{
        {"generator", a.generator},
        {"seed", a.seed},
        {"graph", {{"seed", a.graph_seed}, {"n", a.n}, {"theta", a.theta}, {"kappa", a.kappa}, {"edges", g.num_edges()}}},
        {"signals",
         {{"M", a.m}, {"t0_max", a.t0}, {"coeff_dist", a.coeff_dist}, {"noise_sigma", a.noise_sigma},
          {"sigma_is_variance", a.sigma_is_variance}, {"seed", ss.seed}}},
        {"bands", band_list},
        {"files", {"edges.csv", "coords.csv", "signals.csv", "clean.csv"}},
    };
    if (gen.kind == GeneratorKind::BandedRandom) manifest["J"] = a.J;
    if (gen.kernels) manifest["files"].push_back("truth_kernels.json");
    io::write_json(manifest, a.out / "manifest.json");
}

// ---- learn -------------------------------------------------------------

struct LearnArgs {
    fs::path data;
    fs::path out;
    TrainConfig cfg;
    double mu = -1.0;
    std::string init = "uniform";
    fs::path init_file;
};

void cmd_learn(LearnArgs a) {
    auto corpus = load_corpus(a.data);
    if (a.mu >= 0.0) a.cfg.mu = a.mu;
    if (a.init == "uniform") a.cfg.init = InitKind::UniformKernels;
    else if (a.init == "random") a.cfg.init = InitKind::RandomFeasible;
    else if (a.init == "bands") a.cfg.init = InitKind::SpectralBands;
    else {
        detail::require(!a.init_file.empty(), ErrorCode::InvalidArgument, "--init file needs --init-file");
        a.cfg.init = InitKind::FromFile;
        a.cfg.init_kernels = stage("reading initial kernels", [&] { return io::read_kernels(a.init_file).kernels; });
    }
    auto res = stage("training", [&] { return train(a.cfg, corpus.spectrum, corpus.signals); });
    io::write_kernels(res.dictionary.kernels(), a.cfg.bounds, a.out / "kernels.json");
    io::write_trace(res.trace, a.out / "trace.csv");
    io::write_sparse_code(res.code, a.out / "code.csv");
    const auto& last = res.trace.back();
    std::cerr << "learn: " << res.trace.size() << " iterations, fit error " << io::fmt(last.fit_error)
              << ", objective " << io::fmt(last.objective) << ", mu " << io::fmt(res.mu) << '\n';
}

// ---- eval --------------------------------------------------------------

struct EvalArgs {
    fs::path kernels;
    fs::path data;
    fs::path truth;
    std::string sparsity = "1,2,3,4,5,6,7,8";
    fs::path out;
};

void cmd_eval(const EvalArgs& a) {
    auto corpus = load_corpus(a.data);
    auto kf = stage("reading kernels", [&] { return io::read_kernels(a.kernels); });
    PolynomialDictionary d(kf.kernels, corpus.spectrum, kf.bounds);
    auto grid = parse_list(a.sparsity);
    auto err = stage("evaluation", [&] { return approximation_error(d, corpus.signals, grid); });
    std::optional<double> snr;
    if (!a.truth.empty()) {
        auto truth = stage("reading truth kernels", [&] { return io::read_kernels(a.truth); });
        snr = stage("kernel snr", [&] { return kernel_snr(kf.kernels, truth.kernels, *corpus.spectrum); });
    }
    std::ostringstream csv;
    csv << "sparsity,error" << (snr ? ",kernel_snr_db" : "") << '\n';
    for (std::size_t i = 0; i < grid.size(); ++i) {
        csv << grid[i] << ',' << io::fmt(err[i]);
        if (snr) csv << ',' << io::fmt(*snr);
        csv << '\n';
    }
    if (a.out.empty()) {
        std::cout << csv.str();
    } else {
        auto f = io::detail::open_out(a.out);
        f << csv.str();
    }
}

// ---- kernels -----------------------------------------------------------

struct KernelsArgs {
    fs::path kernels;
    fs::path data;
    fs::path out;
    int grid = 512;
};

// Rows: `grid` uniform samples over [0, lambda_max], then every eigenvalue.
void cmd_kernels(const KernelsArgs& a) {
    auto spectrum = load_spectrum(a.data);
    auto kf = stage("reading kernels", [&] { return io::read_kernels(a.kernels); });
    Eigen::VectorXd lambdas(a.grid + spectrum->size());
    lambdas.head(a.grid) = Eigen::VectorXd::LinSpaced(a.grid, 0.0, spectrum->lambda_max());
    lambdas.tail(spectrum->size()) = spectrum->eigenvalues;
    Eigen::MatrixXd g = kernel_values(kf.kernels, lambdas);
    std::ostringstream csv;
    csv << "lambda";
    for (int s = 1; s <= kf.kernels.num_kernels(); ++s) csv << ",g_" << s;
    csv << '\n';
    for (Eigen::Index l = 0; l < lambdas.size(); ++l) {
        csv << io::fmt(lambdas(l));
        for (Eigen::Index s = 0; s < g.cols(); ++s) csv << ',' << io::fmt(g(l, s));
        csv << '\n';
    }
    if (a.out.empty()) {
        std::cout << csv.str();
    } else {
        auto f = io::detail::open_out(a.out);
        f << csv.str();
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Polynomial dictionary learning for signals on weighted graphs"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Random geometric graph plus a synthetic signal corpus");
    g->add_option("--graph-seed", gen.graph_seed, "Seed for vertex placement");
    g->add_option("--seed", gen.seed, "Seed for the generating dictionary and the signals");
    g->add_option("--n", gen.n, "Number of vertices")->capture_default_str();
    g->add_option("--theta", gen.theta, "Gaussian kernel width")->capture_default_str();
    g->add_option("--kappa", gen.kappa, "Distance threshold")->capture_default_str();
    g->add_option("--generator", gen.generator, "Generating dictionary")
        ->check(CLI::IsMember({"poly", "banded", "banded2"}))
        ->capture_default_str();
    g->add_option("--j", gen.J, "Atoms in a banded generator")->capture_default_str();
    g->add_option("--m", gen.m, "Number of signals")->capture_default_str();
    g->add_option("--t0", gen.t0, "Maximum atoms per signal")->capture_default_str();
    g->add_option("--noise-sigma", gen.noise_sigma, "Gaussian noise standard deviation")->capture_default_str();
    g->add_flag("--sigma-is-variance", gen.sigma_is_variance, "Read --noise-sigma as a variance");
    g->add_option("--coeff-dist", gen.coeff_dist, "Coefficient distribution")
        ->check(CLI::IsMember({"normal", "uniform"}))
        ->capture_default_str();
    g->add_option("--out", gen.out, "Output directory")->required();

    LearnArgs learn;
    auto* l = app.add_subcommand("learn", "Train a polynomial dictionary on a corpus directory");
    l->add_option("--data", learn.data, "Directory with edges.csv, coords.csv, signals.csv")->required();
    l->add_option("--s", learn.cfg.S, "Number of kernels")->capture_default_str();
    l->add_option("--k", learn.cfg.K, "Polynomial degree")->capture_default_str();
    l->add_option("--t0", learn.cfg.t0, "Sparsity level")->capture_default_str();
    l->add_option("--iter", learn.cfg.iter, "Outer iterations")->capture_default_str();
    l->add_option("--c", learn.cfg.bounds.c, "Kernel upper bound")->capture_default_str();
    l->add_option("--eps1", learn.cfg.bounds.eps1, "Lower slack of the kernel sum")->capture_default_str();
    l->add_option("--eps2", learn.cfg.bounds.eps2, "Upper slack of the kernel sum")->capture_default_str();
    l->add_option("--mu", learn.mu, "Ridge weight (default 1e-4 N / (K+1))");
    l->add_option("--init", learn.init, "Initial kernels")
        ->check(CLI::IsMember({"uniform", "random", "bands", "file"}))
        ->capture_default_str();
    l->add_option("--init-file", learn.init_file, "Kernel JSON for --init file");
    l->add_option("--seed", learn.cfg.seed, "Seed for --init random")->capture_default_str();
    l->add_option("--out", learn.out, "Output directory")->required();

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Approximation error per sparsity level");
    e->add_option("--kernels", ev.kernels, "Kernel JSON")->required();
    e->add_option("--data", ev.data, "Corpus directory")->required();
    e->add_option("--sparsity", ev.sparsity, "Comma-separated sparsity levels")->capture_default_str();
    e->add_option("--truth", ev.truth, "Ground-truth kernel JSON; adds a kernel SNR column");
    e->add_option("--out", ev.out, "Output CSV (default stdout)");

    KernelsArgs kr;
    auto* k = app.add_subcommand("kernels", "Sample kernels on a uniform grid and on the spectrum");
    k->add_option("--kernels", kr.kernels, "Kernel JSON")->required();
    k->add_option("--data", kr.data, "Directory with edges.csv (and coords.csv)")->required();
    k->add_option("--grid", kr.grid, "Uniform grid points")->check(CLI::PositiveNumber)->capture_default_str();
    k->add_option("--out", kr.out, "Output CSV (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (g->parsed()) cmd_generate(gen);
        else if (l->parsed()) cmd_learn(learn);
        else if (e->parsed()) cmd_eval(ev);
        else cmd_kernels(kr);
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << '\n';
        return err.code() == ErrorCode::Io ? 3 : 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 0;
}
