#pragma once

#include "graphdict/qp.hpp"
#include "graphdict/sparse_coding.hpp"
#include "graphdict/trainer.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace graphdict::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Shortest text is not required; 17 significant digits always round-trip.
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::ifstream open_in(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + p.string());
    return in;
}

inline std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
    return out;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <class T>
T parse(std::string_view field, const fs::path& p, std::size_t line_no) {
    field = trim(field);
    T v{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw Error(ErrorCode::Io, p.string() + ":" + std::to_string(line_no) + ": bad number '" + std::string(field) + "'");
    return v;
}

inline void expect_header(std::istream& in, std::string_view header, const fs::path& p) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != header)
        throw Error(ErrorCode::Io, p.string() + ": expected header '" + std::string(header) + "'");
}

} // namespace detail

// ---- graph -------------------------------------------------------------

inline void write_edges(const WeightedGraph& g, const fs::path& p) {
    auto out = detail::open_out(p);
    out << "i,j,w\n";
    for (const auto& e : g.edges()) out << e.i << ',' << e.j << ',' << fmt(e.w) << '\n';
}

inline void write_coords(const Eigen::MatrixXd& coords, const fs::path& p) {
    auto out = detail::open_out(p);
    out << (coords.cols() == 2 ? "x,y" : "x,y,z") << '\n';
    for (Eigen::Index r = 0; r < coords.rows(); ++r) {
        for (Eigen::Index c = 0; c < coords.cols(); ++c) out << (c ? "," : "") << fmt(coords(r, c));
        out << '\n';
    }
}

inline Eigen::MatrixXd read_coords(const fs::path& p) {
    auto in = detail::open_in(p);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::Io, p.string() + ": empty file");
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        std::vector<double> row;
        for (auto f : detail::split(line)) row.push_back(detail::parse<double>(f, p, line_no));
        if (!rows.empty() && row.size() != rows.front().size())
            throw Error(ErrorCode::Io, p.string() + ":" + std::to_string(line_no) + ": ragged row");
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return m;
}

// Vertex count is 1 + the largest index unless given (or implied by coords).
inline WeightedGraph read_graph(const fs::path& edges_csv, const std::optional<fs::path>& coords_csv = std::nullopt,
                                std::optional<int> n_vertices = std::nullopt) {
    auto in = detail::open_in(edges_csv);
    detail::expect_header(in, "i,j,w", edges_csv);
    std::vector<Edge> edges;
    std::string line;
    std::size_t line_no = 1;
    int max_index = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto f = detail::split(line);
        if (f.size() != 3) throw Error(ErrorCode::Io, edges_csv.string() + ":" + std::to_string(line_no) + ": expected i,j,w");
        Edge e{detail::parse<int>(f[0], edges_csv, line_no), detail::parse<int>(f[1], edges_csv, line_no),
               detail::parse<double>(f[2], edges_csv, line_no)};
        max_index = std::max({max_index, e.i, e.j});
        edges.push_back(e);
    }
    std::optional<Eigen::MatrixXd> coords;
    if (coords_csv && fs::exists(*coords_csv)) coords = read_coords(*coords_csv);
    int n = n_vertices ? *n_vertices : (coords ? static_cast<int>(coords->rows()) : max_index + 1);
    return WeightedGraph(n, std::move(edges), std::move(coords));
}

// ---- signals -----------------------------------------------------------

inline void write_matrix_csv(const Eigen::MatrixXd& m, const fs::path& p) {
    auto out = detail::open_out(p);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << fmt(m(r, c));
        out << '\n';
    }
}

inline Eigen::MatrixXd read_matrix_csv(const fs::path& p) {
    auto in = detail::open_in(p);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        std::vector<double> row;
        for (auto f : detail::split(line)) row.push_back(detail::parse<double>(f, p, line_no));
        if (!rows.empty() && row.size() != rows.front().size())
            throw Error(ErrorCode::Io, p.string() + ":" + std::to_string(line_no) + ": ragged row");
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return m;
}

inline void write_sparse_code(const SparseCode& code, const fs::path& p) {
    auto out = detail::open_out(p);
    out << "signal,atom_flat_index,coeff\n";
    for (std::size_t m = 0; m < code.num_signals(); ++m)
        for (std::size_t t = 0; t < code.supports[m].size(); ++t)
            out << m << ',' << code.supports[m][t] << ',' << fmt(code.coeffs[m][t]) << '\n';
}

inline SparseCode read_sparse_code(const fs::path& p, Eigen::Index num_atoms, std::size_t num_signals) {
    auto in = detail::open_in(p);
    detail::expect_header(in, "signal,atom_flat_index,coeff", p);
    SparseCode code(num_atoms, num_signals);
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto f = detail::split(line);
        if (f.size() != 3) throw Error(ErrorCode::Io, p.string() + ":" + std::to_string(line_no) + ": expected 3 fields");
        auto m = detail::parse<std::size_t>(f[0], p, line_no);
        auto j = detail::parse<long long>(f[1], p, line_no);
        if (m >= num_signals || j < 0 || j >= num_atoms)
            throw Error(ErrorCode::Io, p.string() + ":" + std::to_string(line_no) + ": index out of range");
        code.supports[m].push_back(static_cast<Eigen::Index>(j));
        code.coeffs[m].push_back(detail::parse<double>(f[2], p, line_no));
    }
    return code;
}

// ---- kernels -----------------------------------------------------------

inline json kernels_to_json(const KernelCoefficients& kc, const SpectralBounds& b) {
    json alpha = json::array();
    for (int s = 0; s < kc.num_kernels(); ++s) {
        json row = json::array();
        for (int k = 0; k <= kc.degree(); ++k) row.push_back(kc.alpha()(s, k));
        alpha.push_back(row);
    }
    return json{{"S", kc.num_kernels()}, {"K", kc.degree()}, {"c", b.c}, {"eps1", b.eps1}, {"eps2", b.eps2}, {"alpha", alpha}};
}

struct KernelFile {
    KernelCoefficients kernels;
    SpectralBounds bounds;
};

inline KernelFile kernels_from_json(const json& j) {
    try {
        int S = j.at("S").get<int>();
        int K = j.at("K").get<int>();
        const auto& rows = j.at("alpha");
        if (S < 1 || K < 0 || rows.size() != static_cast<std::size_t>(S))
            throw Error(ErrorCode::Io, "kernel file: alpha must have S rows");
        Eigen::MatrixXd a(S, K + 1);
        for (int s = 0; s < S; ++s) {
            if (rows[s].size() != static_cast<std::size_t>(K + 1))
                throw Error(ErrorCode::Io, "kernel file: each alpha row needs K+1 entries");
            for (int k = 0; k <= K; ++k) a(s, k) = rows[s][k].get<double>();
        }
        SpectralBounds b{j.at("c").get<double>(), j.at("eps1").get<double>(), j.at("eps2").get<double>()};
        return {KernelCoefficients(std::move(a)), b};
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Io, std::string("kernel file: ") + e.what());
    }
}

inline void write_json(const json& j, const fs::path& p) {
    auto out = detail::open_out(p);
    out << j.dump(2) << '\n';
}

inline json read_json(const fs::path& p) {
    auto in = detail::open_in(p);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Io, p.string() + ": " + e.what());
    }
}

inline void write_kernels(const KernelCoefficients& kc, const SpectralBounds& b, const fs::path& p) {
    write_json(kernels_to_json(kc, b), p);
}

inline KernelFile read_kernels(const fs::path& p) { return kernels_from_json(read_json(p)); }

// ---- trainer trace -----------------------------------------------------

inline void write_trace(const TrainTrace& trace, const fs::path& p) {
    auto out = detail::open_out(p);
    out << "iter,fit_error,objective,kkt,mean_sparsity,secs\n";
    for (const auto& r : trace)
        out << r.iter << ',' << fmt(r.fit_error) << ',' << fmt(r.objective) << ',' << fmt(r.kkt) << ','
            << fmt(r.mean_sparsity) << ',' << fmt(r.secs) << '\n';
}

// ---- QP dump -----------------------------------------------------------

inline constexpr Eigen::Index kQpDumpMaxEntries = 1'000'000;

inline json qp_to_json(const QuadraticProgram& qp) {
    auto [a, b] = qp.inequality_form();
    graphdict::detail::require_dims(a.size() + qp.Q.size() <= kQpDumpMaxEntries, "QP too large to dump");
    auto mat = [](const Eigen::MatrixXd& m) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
            rows.push_back(row);
        }
        return rows;
    };
    auto vec = [](const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); };
    return json{{"S", qp.S}, {"K", qp.K}, {"Q", mat(qp.Q)}, {"q", vec(qp.q)}, {"const", qp.constant},
                {"A_ineq", mat(a)}, {"b_ineq", vec(b)}};
}

} // namespace graphdict::io
