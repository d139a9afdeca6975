// Copyright 2026 The vqdr Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
/**
 * @file io.hpp
 * JSON (de)serialization of models, ensembles, parameters and results, and
 * crash-safe file writes.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ansatz.hpp"
#include "baseline.hpp"
#include "cyclicwalk.hpp"
#include "qcore.hpp"
#include "qfdr.hpp"
#include "rqm.hpp"

namespace vqdr {

using Json = nlohmann::json;

/// Malformed or inconsistent serialized data.
class FormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline const Json &require(const Json &j, const char *key) {
    if (!j.is_object() || !j.contains(key)) {
        throw FormatError(std::string("missing field '") + key + "'");
    }
    return j.at(key);
}

template <class T>
T get_field(const Json &j, const char *key) {
    try {
        return require(j, key).get<T>();
    } catch (const nlohmann::json::exception &e) {
        throw FormatError(std::string("bad field '") + key + "': " + e.what());
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Matrices and vectors: row-major real and imaginary parts.

inline Json to_json(const ComplexMatrix &m) {
    std::vector<double> re;
    std::vector<double> im;
    re.reserve(static_cast<std::size_t>(m.size()));
    im.reserve(static_cast<std::size_t>(m.size()));
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            re.push_back(m(i, j).real());
            im.push_back(m(i, j).imag());
        }
    }
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"re", re}, {"im", im}};
}

inline ComplexMatrix matrix_from_json(const Json &j) {
    const auto rows = detail::get_field<Index>(j, "rows");
    const auto cols = detail::get_field<Index>(j, "cols");
    const auto re = detail::get_field<std::vector<double>>(j, "re");
    const auto im = detail::get_field<std::vector<double>>(j, "im");
    if (rows < 0 || cols < 0 || re.size() != static_cast<std::size_t>(rows * cols) ||
        im.size() != re.size()) {
        throw FormatError("matrix: size mismatch");
    }
    ComplexMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index c = 0; c < cols; ++c) {
            const auto k = static_cast<std::size_t>(i * cols + c);
            m(i, c) = Complex(re[k], im[k]);
        }
    }
    return m;
}

inline Json to_json(const StateVector &v) { return to_json(ComplexMatrix(v)); }

inline StateVector vector_from_json(const Json &j) {
    const ComplexMatrix m = matrix_from_json(j);
    if (m.cols() != 1) {
        throw FormatError("vector: expected one column");
    }
    return m.col(0);
}

inline Json to_json(const RealVector &v) {
    return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline RealVector real_vector_from_json(const Json &j) {
    if (!j.is_array()) {
        throw FormatError("parameter vector: expected an array");
    }
    RealVector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
            throw FormatError("parameter vector: non-numeric entry");
        }
        v(static_cast<Index>(i)) = j[i].get<double>();
    }
    return v;
}

inline Json to_json(const RealMatrix &m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        rows.push_back(std::vector<double>(m.cols()));
        for (Index c = 0; c < m.cols(); ++c) {
            rows.back()[static_cast<std::size_t>(c)] = m(i, c);
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------

inline Json to_json(const AnsatzSpec &s) {
    return Json{{"n_qubits", s.n_qubits}, {"n_layers", s.n_layers}};
}

inline AnsatzSpec ansatz_from_json(const Json &j) {
    AnsatzSpec s{detail::get_field<int>(j, "n_qubits"), detail::get_field<int>(j, "n_layers")};
    if (s.n_qubits < 1 || s.n_layers < 0) {
        throw FormatError("ansatz: invalid qubit or layer count");
    }
    return s;
}

/**
 * @brief Shift distribution from its JSON form.
 *
 * `{"kind": "wrapped-gaussian", "mean": m, "sigma": s}`,
 * `{"kind": "uniform-interval", "a": a, "b": b}`, `{"kind": "point-mass", "x0": x}`,
 * `{"kind": "table", "probs": [...]}`. With `"units": "sites"` every length is
 * given in lattice spacings and divided by N = 2^n_qubits.
 */
inline ShiftDistribution shift_from_json(const Json &j, int n_qubits) {
    const auto kind = detail::get_field<std::string>(j, "kind");
    const std::string units = j.value("units", std::string("ring"));
    if (units != "ring" && units != "sites") {
        throw FormatError("shift: units must be 'ring' or 'sites'");
    }
    const double scale = units == "sites" ? 1.0 / static_cast<double>(Index{1} << n_qubits) : 1.0;
    if (kind == "wrapped-gaussian") {
        return WrappedGaussian{scale * j.value("mean", 0.0), scale * detail::get_field<double>(j, "sigma")};
    }
    if (kind == "uniform-interval") {
        return UniformInterval{scale * detail::get_field<double>(j, "a"),
                               scale * detail::get_field<double>(j, "b")};
    }
    if (kind == "point-mass") {
        return PointMass{scale * detail::get_field<double>(j, "x0")};
    }
    if (kind == "table") {
        return ShiftTable{detail::get_field<std::vector<double>>(j, "probs")};
    }
    throw FormatError("shift: unknown kind '" + kind + "'");
}

inline Json to_json(const ShiftDistribution &q) {
    struct Visitor {
        Json operator()(const WrappedGaussian &g) const {
            return {{"kind", "wrapped-gaussian"}, {"mean", g.mean}, {"sigma", g.sigma}};
        }
        Json operator()(const UniformInterval &u) const {
            return {{"kind", "uniform-interval"}, {"a", u.a}, {"b", u.b}};
        }
        Json operator()(const PointMass &p) const { return {{"kind", "point-mass"}, {"x0", p.x0}}; }
        Json operator()(const ShiftTable &t) const { return {{"kind", "table"}, {"probs", t.probs}}; }
    };
    return std::visit(Visitor{}, q);
}

// ---------------------------------------------------------------------------

inline Json to_json(const Rqm &m) {
    return Json{{"n_mem", m.n_mem()}, {"d_out", m.d_out()}, {"unitary", to_json(m.unitary())}};
}

inline Rqm rqm_from_json(const Json &j) {
    try {
        return Rqm(detail::get_field<int>(j, "n_mem"), detail::get_field<Index>(j, "d_out"),
                   matrix_from_json(detail::require(j, "unitary")));
    } catch (const FormatError &) {
        throw;
    } catch (const std::exception &e) {
        throw FormatError(std::string("model: ") + e.what());
    }
}

inline Json to_json(const MemoryEnsemble &e) {
    Json states = Json::array();
    for (const auto &s : e.states) {
        states.push_back(to_json(s));
    }
    return Json{{"n_mem", e.n_mem},   {"d_out", e.d_out},   {"seed", e.seed},
                {"burn_in", e.burn_in}, {"states", states}, {"histories", e.histories}};
}

inline MemoryEnsemble ensemble_from_json(const Json &j) {
    MemoryEnsemble e;
    e.n_mem = detail::get_field<int>(j, "n_mem");
    e.d_out = detail::get_field<Index>(j, "d_out");
    e.seed = detail::get_field<std::uint64_t>(j, "seed");
    e.burn_in = detail::get_field<int>(j, "burn_in");
    for (const auto &s : detail::require(j, "states")) {
        e.states.push_back(vector_from_json(s));
        if (e.states.back().size() != (Index{1} << e.n_mem)) {
            throw FormatError("ensemble: state dimension mismatch");
        }
    }
    e.histories = j.value("histories", std::vector<std::vector<int>>{});
    return e;
}

inline Json to_json(const QfdrResult &r) {
    Json j{{"lambda_ab", r.lambda_ab},
           {"lambda_aa", r.lambda_aa},
           {"lambda_bb", r.lambda_bb},
           {"degenerate", r.degenerate}};
    if (std::isfinite(r.r_f)) {
        j["r_f"] = r.r_f;
    } else {
        j["r_f"] = "inf";
    }
    return j;
}

inline QfdrResult qfdr_from_json(const Json &j) {
    QfdrResult r;
    r.lambda_ab = detail::get_field<double>(j, "lambda_ab");
    r.lambda_aa = detail::get_field<double>(j, "lambda_aa");
    r.lambda_bb = detail::get_field<double>(j, "lambda_bb");
    r.degenerate = j.value("degenerate", false);
    r.r_f = rate_from_eigenvalues(r.lambda_ab, r.lambda_aa, r.lambda_bb);
    return r;
}

inline Json to_json(const TruncationResult &t) {
    return Json{{"d", t.d},
                {"d_tilde", t.d_tilde},
                {"seed", t.seed},
                {"iterations", t.iterations},
                {"final_delta", t.final_delta},
                {"per_site_overlap", t.per_site_overlap},
                {"converged", t.converged}};
}

inline Json to_json(const UniformMps &m) {
    Json t = Json::array();
    for (const auto &a : m.tensors) {
        t.push_back(to_json(a));
    }
    return Json{{"tensors", t}};
}

inline UniformMps mps_from_json(const Json &j) {
    std::vector<ComplexMatrix> t;
    for (const auto &a : detail::require(j, "tensors")) {
        t.push_back(matrix_from_json(a));
    }
    try {
        return UniformMps(std::move(t));
    } catch (const std::exception &e) {
        throw FormatError(std::string("mps: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

/// 64-bit FNV-1a, as 16 lowercase hex digits.
inline std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

/// Write via a sibling temporary file and rename, so readers never see a torn file.
inline void write_file_atomic(const std::filesystem::path &path, const std::string &content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        }
        out << content;
        out.flush();
        if (!out) {
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Json read_json(const std::filesystem::path &path) {
    const std::string text = read_file(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline void write_json(const std::filesystem::path &path, const Json &j) {
    write_file_atomic(path, j.dump(2) + "\n");
}

} // namespace vqdr
