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
 * @file experiment.hpp
 * Experiment configuration, per-cell runs (trained and baseline), checkpoints
 * and the n × ñ × method × seed sweep with CSV, summary and plot-data output.
 */
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "ansatz.hpp"
#include "baseline.hpp"
#include "cyclicwalk.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "qfdr.hpp"
#include "rqm.hpp"
#include "training.hpp"

namespace vqdr {

/// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    // model
    std::vector<int> ns{2, 3, 4};
    Json shift{{"kind", "wrapped-gaussian"}, {"mean", 0.0}, {"sigma", 0.5}, {"units", "sites"}};
    // reduction
    std::vector<int> n_tildes{1, 2};
    int v_layers = 4;
    int u_layers = 4;
    double alpha = 1.0;
    double beta = 1.0;
    int ensemble_size = 256;
    /// Steps before an ensemble state is recorded; <= 0 selects 16 N.
    int burn_in = 0;
    // optimizer
    int max_iter = 2000;
    double tol = 1e-9;
    int restarts = 3;
    // baseline
    double baseline_delta_thresh = 1e-8;
    int baseline_max_iter = 500;
    int baseline_restarts = 20;
    double baseline_damping = 0.3;
    std::string baseline_rule = "projected";

    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    // run settings, not part of the hash
    std::string output_dir = "results";
    unsigned workers = 1;

    /// Keys taken from the defaults when the config was loaded.
    std::vector<std::string> defaulted;

    [[nodiscard]] int burn_in_for(int n) const { return burn_in > 0 ? burn_in : 16 * (1 << n); }

    [[nodiscard]] ShiftDistribution shift_for(int n) const {
        try {
            return shift_from_json(shift, n);
        } catch (const FormatError &e) {
            throw ConfigError(std::string("model.shift: ") + e.what());
        }
    }

    [[nodiscard]] UpdateRule rule() const {
        return baseline_rule == "literal" ? UpdateRule::Literal : UpdateRule::Projected;
    }

    void validate() const {
        auto positive = [](long long v, const char *what) {
            if (v <= 0) {
                throw ConfigError(std::string(what) + " must be positive");
            }
        };
        if (ns.empty()) {
            throw ConfigError("model.n is empty");
        }
        for (int n : ns) {
            if (n < 1 || n > 6) {
                throw ConfigError("model.n entries must lie in 1..6");
            }
        }
        if (n_tildes.empty()) {
            throw ConfigError("reduction.n_tilde is empty");
        }
        const int n_max = *std::max_element(ns.begin(), ns.end());
        for (int k : n_tildes) {
            if (k < 1 || k >= n_max) {
                throw ConfigError("reduction.n_tilde entries must satisfy 1 <= n_tilde < max(n)");
            }
        }
        if (v_layers < 0 || u_layers < 0) {
            throw ConfigError("layer counts must be non-negative");
        }
        if (!(alpha > 0.0) || !(beta > 0.0)) {
            throw ConfigError("alpha and beta must be positive");
        }
        positive(ensemble_size, "reduction.K");
        positive(max_iter, "optimizer.max_iter");
        if (!(tol > 0.0)) {
            throw ConfigError("optimizer.tol must be positive");
        }
        if (restarts < 0) {
            throw ConfigError("optimizer.restarts must be non-negative");
        }
        if (!(baseline_delta_thresh > 0.0)) {
            throw ConfigError("baseline.delta_thresh must be positive");
        }
        positive(baseline_max_iter, "baseline.max_iter");
        positive(baseline_restarts, "baseline.restarts");
        if (!(baseline_damping >= 0.0 && baseline_damping < 1.0)) {
            throw ConfigError("baseline.damping must lie in [0, 1)");
        }
        if (baseline_rule != "projected" && baseline_rule != "literal") {
            throw ConfigError("baseline.rule must be 'projected' or 'literal'");
        }
        if (seeds.empty()) {
            throw ConfigError("seeds is empty");
        }
        if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
            throw ConfigError("seeds contains duplicates");
        }
        for (int n : ns) {
            try {
                discretize_shift(shift_for(n), Index{1} << n);
            } catch (const ConfigError &) {
                throw;
            } catch (const std::exception &e) {
                throw ConfigError(std::string("model.shift: ") + e.what());
            }
        }
    }
};

/// Everything that determines results; this is what the config hash covers.
inline Json config_snapshot(const ExperimentConfig &c) {
    return Json{{"model", {{"n", c.ns}, {"shift", c.shift}}},
                {"reduction",
                 {{"n_tilde", c.n_tildes},
                  {"v_layers", c.v_layers},
                  {"u_layers", c.u_layers},
                  {"alpha", c.alpha},
                  {"beta", c.beta},
                  {"K", c.ensemble_size},
                  {"burn_in", c.burn_in}}},
                {"optimizer", {{"max_iter", c.max_iter}, {"tol", c.tol}, {"restarts", c.restarts}}},
                {"baseline",
                 {{"delta_thresh", c.baseline_delta_thresh},
                  {"max_iter", c.baseline_max_iter},
                  {"restarts", c.baseline_restarts},
                  {"damping", c.baseline_damping},
                  {"rule", c.baseline_rule}}},
                {"seeds", c.seeds}};
}

inline Json to_json(const ExperimentConfig &c) {
    Json j = config_snapshot(c);
    j["output_dir"] = c.output_dir;
    j["workers"] = c.workers;
    return j;
}

/**
 * @brief FNV-1a of the canonical (key-sorted, compact) snapshot.
 *
 * The seed list is left out: every record and checkpoint carries its own
 * seed, so runs of single seeds and of the full list share one hash.
 */
inline std::string config_hash_of_snapshot(Json snapshot) {
    snapshot.erase("seeds");
    return fnv1a_hex(snapshot.dump());
}

inline std::string config_hash(const ExperimentConfig &c) {
    return config_hash_of_snapshot(config_snapshot(c));
}

namespace detail {

class ConfigReader {
  public:
    explicit ConfigReader(std::vector<std::string> &defaulted) : defaulted_(defaulted) {}

    template <class T>
    void read(const Json &section, const std::string &prefix, const char *key, T &out) {
        const std::string path = prefix + key;
        if (!section.contains(key)) {
            defaulted_.push_back(path);
            return;
        }
        try {
            out = section.at(key).get<T>();
        } catch (const nlohmann::json::exception &) {
            throw ConfigError("bad value for '" + path + "'");
        }
    }

    static void check_keys(const Json &section, const std::string &prefix,
                           std::initializer_list<const char *> allowed) {
        if (!section.is_object()) {
            throw ConfigError("'" + (prefix.empty() ? std::string("<root>") : prefix) +
                              "' must be an object");
        }
        for (const auto &item : section.items()) {
            const bool known = std::any_of(allowed.begin(), allowed.end(),
                                           [&](const char *k) { return item.key() == k; });
            if (!known) {
                throw ConfigError("unknown key '" + prefix + item.key() + "'");
            }
        }
    }

    static Json section(const Json &root, const char *key) {
        return root.contains(key) ? root.at(key) : Json::object();
    }

  private:
    std::vector<std::string> &defaulted_;
};

} // namespace detail

/// Defaults fill every missing key; unknown keys are rejected.
inline ExperimentConfig config_from_json(const Json &j) {
    ExperimentConfig c;
    detail::ConfigReader r(c.defaulted);
    using R = detail::ConfigReader;
    R::check_keys(j, "", {"model", "reduction", "optimizer", "baseline", "seeds", "output_dir", "workers"});

    const Json model = r.section(j, "model");
    R::check_keys(model, "model.", {"n", "shift"});
    r.read(model, "model.", "n", c.ns);
    if (model.contains("shift")) {
        c.shift = model.at("shift");
        if (!c.shift.is_object()) {
            throw ConfigError("model.shift must be an object");
        }
    } else {
        c.defaulted.push_back("model.shift");
    }

    const Json red = r.section(j, "reduction");
    R::check_keys(red, "reduction.", {"n_tilde", "v_layers", "u_layers", "alpha", "beta", "K", "burn_in"});
    r.read(red, "reduction.", "n_tilde", c.n_tildes);
    r.read(red, "reduction.", "v_layers", c.v_layers);
    r.read(red, "reduction.", "u_layers", c.u_layers);
    r.read(red, "reduction.", "alpha", c.alpha);
    r.read(red, "reduction.", "beta", c.beta);
    r.read(red, "reduction.", "K", c.ensemble_size);
    r.read(red, "reduction.", "burn_in", c.burn_in);

    const Json optim = r.section(j, "optimizer");
    R::check_keys(optim, "optimizer.", {"max_iter", "tol", "restarts"});
    r.read(optim, "optimizer.", "max_iter", c.max_iter);
    r.read(optim, "optimizer.", "tol", c.tol);
    r.read(optim, "optimizer.", "restarts", c.restarts);

    const Json base = r.section(j, "baseline");
    R::check_keys(base, "baseline.", {"delta_thresh", "max_iter", "restarts", "damping", "rule"});
    r.read(base, "baseline.", "delta_thresh", c.baseline_delta_thresh);
    r.read(base, "baseline.", "max_iter", c.baseline_max_iter);
    r.read(base, "baseline.", "restarts", c.baseline_restarts);
    r.read(base, "baseline.", "damping", c.baseline_damping);
    r.read(base, "baseline.", "rule", c.baseline_rule);

    r.read(j, "", "seeds", c.seeds);
    r.read(j, "", "output_dir", c.output_dir);
    r.read(j, "", "workers", c.workers);
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path &path) {
    Json j;
    try {
        j = read_json(path);
    } catch (const FormatError &e) {
        throw ConfigError(e.what());
    }
    return config_from_json(j);
}

inline TrainOptions train_options(const ExperimentConfig &c) {
    TrainOptions opt;
    opt.lbfgs.max_iter = c.max_iter;
    opt.lbfgs.tol_cost = c.tol;
    opt.restarts = c.restarts;
    return opt;
}

inline TruncationOptions truncation_options(const ExperimentConfig &c) {
    TruncationOptions opt;
    opt.delta_thresh = c.baseline_delta_thresh;
    opt.max_iter = c.baseline_max_iter;
    opt.restarts = c.baseline_restarts;
    opt.damping = c.baseline_damping;
    opt.rule = c.rule();
    return opt;
}

// ---------------------------------------------------------------------------
// Model files.

struct ModelFile {
    Rqm model;
    TransitionMatrix transitions;
    Json shift; ///< in ring units
    double c_q = 0.0;
    std::string config_hash;
};

inline ModelFile make_model_file(const ExperimentConfig &c, int n) {
    const ShiftDistribution q = c.shift_for(n);
    TransitionMatrix t = walk_transitions(q, n);
    Rqm model = build_model(t);
    const double cq_bits = cq(exact_stationary(kraus_from_unitary(model)).rho);
    return ModelFile{std::move(model), std::move(t), to_json(q), cq_bits, config_hash(c)};
}

inline Json to_json(const ModelFile &m) {
    return Json{{"format", "vqdr-model"},
                {"version", 1},
                {"n_mem", m.model.n_mem()},
                {"d_out", m.model.d_out()},
                {"unitary", to_json(m.model.unitary())},
                {"transitions", to_json(m.transitions.p)},
                {"shift", m.shift},
                {"c_q", m.c_q},
                {"config_hash", m.config_hash}};
}

inline ModelFile model_file_from_json(const Json &j) {
    if (j.value("format", std::string()) != "vqdr-model") {
        throw FormatError("not a vqdr-model file");
    }
    Rqm model = rqm_from_json(j);
    TransitionMatrix t;
    const auto rows = detail::get_field<std::vector<std::vector<double>>>(j, "transitions");
    t.p.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size()) {
            throw FormatError("transitions: not square");
        }
        for (std::size_t k = 0; k < rows.size(); ++k) {
            t.p(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
        }
    }
    if (t.p.rows() != model.mem_dim()) {
        throw FormatError("transitions: size does not match the memory");
    }
    return ModelFile{std::move(model), std::move(t), j.value("shift", Json::object()),
                     detail::get_field<double>(j, "c_q"), j.value("config_hash", std::string())};
}

// ---------------------------------------------------------------------------
// Checkpoints.

struct Checkpoint {
    std::string config_hash;
    int n = 0;
    int n_tilde = 0;
    std::uint64_t seed = 0;
    AnsatzSpec v_spec;
    AnsatzSpec u_spec;
    TrainResult result;
    bool completed = true;
};

inline Json to_json(const Checkpoint &c) {
    const TrainResult &r = c.result;
    return Json{{"format", "vqdr-checkpoint"},
                {"version", 1},
                {"config_hash", c.config_hash},
                {"n", c.n},
                {"n_tilde", c.n_tilde},
                {"seed", c.seed},
                {"v_spec", to_json(c.v_spec)},
                {"u_spec", to_json(c.u_spec)},
                {"theta1", to_json(r.theta1)},
                {"theta2", to_json(r.theta2)},
                {"final_cost", r.final_cost},
                {"d_bar", r.d_bar},
                {"f_bar", r.f_bar},
                {"iterations", r.iterations},
                {"starts", r.starts},
                {"converged", r.converged},
                {"reason", to_string(r.reason)},
                {"cost_trace", r.cost_trace},
                {"completed", c.completed}};
}

inline Checkpoint checkpoint_from_json(const Json &j) {
    if (j.value("format", std::string()) != "vqdr-checkpoint") {
        throw FormatError("not a vqdr-checkpoint file");
    }
    Checkpoint c;
    c.config_hash = detail::get_field<std::string>(j, "config_hash");
    c.n = detail::get_field<int>(j, "n");
    c.n_tilde = detail::get_field<int>(j, "n_tilde");
    c.seed = detail::get_field<std::uint64_t>(j, "seed");
    c.v_spec = ansatz_from_json(detail::require(j, "v_spec"));
    c.u_spec = ansatz_from_json(detail::require(j, "u_spec"));
    c.result.theta1 = real_vector_from_json(detail::require(j, "theta1"));
    c.result.theta2 = real_vector_from_json(detail::require(j, "theta2"));
    if (c.result.theta1.size() != param_count(c.v_spec) || c.result.theta2.size() != param_count(c.u_spec)) {
        throw FormatError("checkpoint: parameter count does not match the ansatz");
    }
    c.result.final_cost = detail::get_field<double>(j, "final_cost");
    c.result.d_bar = detail::get_field<double>(j, "d_bar");
    c.result.f_bar = detail::get_field<double>(j, "f_bar");
    c.result.iterations = detail::get_field<int>(j, "iterations");
    c.result.starts = j.value("starts", 1);
    c.result.converged = detail::get_field<bool>(j, "converged");
    c.result.cost_trace = j.value("cost_trace", std::vector<double>{});
    c.result.seed = c.seed;
    c.completed = j.value("completed", false);
    return c;
}

// ---------------------------------------------------------------------------
// Records.

enum class Method { Trained, Baseline, Reference };

inline std::string to_string(Method m) {
    switch (m) {
    case Method::Trained:
        return "trained";
    case Method::Baseline:
        return "baseline";
    case Method::Reference:
        return "reference";
    }
    return "unknown";
}

struct ExperimentRecord {
    int n = 0;
    int n_tilde = 0;
    Method method = Method::Trained;
    std::uint64_t seed = 0;
    double r_f = std::numeric_limits<double>::quiet_NaN();
    double c_q = std::numeric_limits<double>::quiet_NaN();
    double final_cost = std::numeric_limits<double>::quiet_NaN();
    double d_bar = std::numeric_limits<double>::quiet_NaN();
    double f_bar = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    double wall_time_s = 0.0;
    std::string config_hash;
    /// ok, not-converged, or error: <message>
    std::string status = "ok";
};

inline const std::vector<std::string> &csv_columns() {
    static const std::vector<std::string> cols{"n",          "n_tilde", "method",     "seed",
                                               "r_f",        "c_q",     "final_cost", "d_bar",
                                               "f_bar",      "iterations", "wall_time_s", "config_hash",
                                               "status"};
    return cols;
}

inline std::string csv_header() {
    std::string out;
    for (const auto &c : csv_columns()) {
        out += (out.empty() ? "" : ",") + c;
    }
    return out + "\n";
}

inline std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string csv_row(const ExperimentRecord &r) {
    char wall[32];
    std::snprintf(wall, sizeof wall, "%.3f", r.wall_time_s);
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    return std::to_string(r.n) + "," + std::to_string(r.n_tilde) + "," + to_string(r.method) + "," +
           std::to_string(r.seed) + "," + format_double(r.r_f) + "," + format_double(r.c_q) + "," +
           format_double(r.final_cost) + "," + format_double(r.d_bar) + "," + format_double(r.f_bar) +
           "," + std::to_string(r.iterations) + "," + wall + "," + r.config_hash + "," + status + "\n";
}

/// Append rows to a CSV by rewriting it through a temporary file.
inline void append_csv_atomic(const std::filesystem::path &path, const std::vector<ExperimentRecord> &rows) {
    std::string text;
    if (std::filesystem::exists(path)) {
        text = read_file(path);
        if (text.rfind(csv_header(), 0) != 0) {
            throw FormatError(path.string() + ": unexpected CSV header");
        }
    } else {
        text = csv_header();
    }
    for (const auto &r : rows) {
        text += csv_row(r);
    }
    write_file_atomic(path, text);
}

// ---------------------------------------------------------------------------
// Single cells.

struct WalkContext {
    int n = 0;
    Rqm model;
    UniformMps mps;
    double c_q = 0.0;
};

inline WalkContext make_context(const Rqm &model, double c_q) {
    return WalkContext{model.n_mem(), model, mps_from_model(model), c_q};
}

inline WalkContext make_context(const ExperimentConfig &c, int n) {
    const ModelFile mf = make_model_file(c, n);
    return make_context(mf.model, mf.c_q);
}

inline ReductionProblem walk_problem(const ExperimentConfig &c, const WalkContext &ctx, int n_tilde,
                                     std::uint64_t seed) {
    MemoryEnsemble ens = sample_memory_ensemble(ctx.model, static_cast<std::size_t>(c.ensemble_size),
                                                c.burn_in_for(ctx.n), seed);
    return make_problem(CouplingOracle(ctx.model), std::move(ens), n_tilde, c.v_layers, c.u_layers, c.alpha,
                        c.beta, seed);
}

inline double trained_rate(const WalkContext &ctx, const AnsatzSpec &u_spec, const ParamVector &theta2,
                           int n_tilde) {
    const UniformMps reduced = mps_from_reduced(build_unitary(u_spec, theta2), n_tilde, ctx.model.d_out());
    return qfdr(ctx.mps, reduced).r_f;
}

inline ExperimentRecord record_from_checkpoint(const WalkContext &ctx, const Checkpoint &ck,
                                               const std::string &hash) {
    if (ck.n != ctx.n || ck.v_spec.n_qubits != ctx.n ||
        ck.u_spec.n_qubits != ck.n_tilde + ctx.model.n_out_qubits()) {
        throw DimensionError("checkpoint dimensions do not match the model");
    }
    ExperimentRecord rec;
    rec.n = ctx.n;
    rec.n_tilde = ck.n_tilde;
    rec.method = Method::Trained;
    rec.seed = ck.seed;
    rec.c_q = ctx.c_q;
    rec.final_cost = ck.result.final_cost;
    rec.d_bar = ck.result.d_bar;
    rec.f_bar = ck.result.f_bar;
    rec.iterations = ck.result.iterations;
    rec.config_hash = hash;
    rec.r_f = trained_rate(ctx, ck.u_spec, ck.result.theta2, ck.n_tilde);
    rec.status = ck.result.converged ? "ok" : "not-converged";
    return rec;
}

inline Checkpoint train_cell(const ExperimentConfig &c, const WalkContext &ctx, int n_tilde,
                             std::uint64_t seed) {
    const ReductionProblem p = walk_problem(c, ctx, n_tilde, seed);
    Checkpoint ck;
    ck.config_hash = config_hash(c);
    ck.n = ctx.n;
    ck.n_tilde = n_tilde;
    ck.seed = seed;
    ck.v_spec = p.v_spec;
    ck.u_spec = p.u_spec;
    ck.result = train(p, train_options(c));
    ck.completed = true;
    return ck;
}

inline ExperimentRecord baseline_cell(const ExperimentConfig &c, const WalkContext &ctx, int n_tilde,
                                      std::uint64_t seed) {
    const TruncationResult t = truncate(ctx.mps, Index{1} << n_tilde, seed, truncation_options(c));
    ExperimentRecord rec;
    rec.n = ctx.n;
    rec.n_tilde = n_tilde;
    rec.method = Method::Baseline;
    rec.seed = seed;
    rec.c_q = ctx.c_q;
    rec.iterations = t.iterations;
    rec.config_hash = config_hash(c);
    rec.r_f = qfdr(ctx.mps, t.mps).r_f;
    rec.status = t.converged ? "ok" : "not-converged";
    return rec;
}

struct Cell {
    int n = 0;
    int n_tilde = 0;
    Method method = Method::Trained;
    std::uint64_t seed = 0;
};

/// Grid order: n, ñ, method (trained first), seed. Cells with ñ >= n are skipped.
inline std::vector<Cell> enumerate_cells(const ExperimentConfig &c) {
    std::vector<Cell> cells;
    for (int n : c.ns) {
        for (int k : c.n_tildes) {
            if (k >= n) {
                continue;
            }
            for (Method m : {Method::Trained, Method::Baseline}) {
                for (auto s : c.seeds) {
                    cells.push_back({n, k, m, s});
                }
            }
        }
    }
    return cells;
}

inline ExperimentRecord run_cell(const ExperimentConfig &c, const WalkContext &ctx, const Cell &cell) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentRecord rec;
    try {
        if (cell.method == Method::Trained) {
            rec = record_from_checkpoint(ctx, train_cell(c, ctx, cell.n_tilde, cell.seed), config_hash(c));
        } else {
            rec = baseline_cell(c, ctx, cell.n_tilde, cell.seed);
        }
    } catch (const std::exception &e) {
        rec = ExperimentRecord{};
        rec.n = cell.n;
        rec.n_tilde = cell.n_tilde;
        rec.method = cell.method;
        rec.seed = cell.seed;
        rec.c_q = ctx.c_q;
        rec.config_hash = config_hash(c);
        rec.status = std::string("error: ") + e.what();
    }
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

// ---------------------------------------------------------------------------
// Sweep.

struct CellSummary {
    int n = 0;
    int n_tilde = 0;
    Method method = Method::Trained;
    int count = 0;    ///< rows with a finite r_f
    int failures = 0; ///< rows with status other than ok
    double mean = std::numeric_limits<double>::quiet_NaN();
    double stddev = std::numeric_limits<double>::quiet_NaN();
    double best = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t best_seed = 0;
};

/// Mean, sample standard deviation and minimum of finite r_f per (n, ñ, method).
inline std::vector<CellSummary> summarize(const std::vector<ExperimentRecord> &records) {
    std::map<std::tuple<int, int, int>, std::vector<const ExperimentRecord *>> groups;
    for (const auto &r : records) {
        groups[{r.n, r.n_tilde, static_cast<int>(r.method)}].push_back(&r);
    }
    std::vector<CellSummary> out;
    for (const auto &[key, rows] : groups) {
        CellSummary s;
        s.n = std::get<0>(key);
        s.n_tilde = std::get<1>(key);
        s.method = static_cast<Method>(std::get<2>(key));
        std::vector<double> vals;
        for (const auto *r : rows) {
            if (r->status != "ok") {
                ++s.failures;
            }
            if (std::isfinite(r->r_f)) {
                vals.push_back(r->r_f);
                if (vals.size() == 1 || r->r_f < s.best) {
                    s.best = r->r_f;
                    s.best_seed = r->seed;
                }
            }
        }
        s.count = static_cast<int>(vals.size());
        if (!vals.empty()) {
            double sum = 0.0;
            for (double v : vals) {
                sum += v;
            }
            s.mean = sum / static_cast<double>(vals.size());
            double ss = 0.0;
            for (double v : vals) {
                ss += (v - s.mean) * (v - s.mean);
            }
            s.stddev = vals.size() > 1 ? std::sqrt(ss / static_cast<double>(vals.size() - 1)) : 0.0;
        }
        out.push_back(s);
    }
    return out;
}

inline const CellSummary *find_summary(const std::vector<CellSummary> &s, int n, int n_tilde, Method m) {
    for (const auto &c : s) {
        if (c.n == n && c.n_tilde == n_tilde && c.method == m) {
            return &c;
        }
    }
    return nullptr;
}

inline Json json_number(double v) {
    if (std::isfinite(v)) {
        return v;
    }
    return format_double(v);
}

inline Json summary_json(const ExperimentConfig &c, const std::vector<CellSummary> &cells) {
    Json arr = Json::array();
    for (const auto &s : cells) {
        arr.push_back({{"n", s.n},
                       {"n_tilde", s.n_tilde},
                       {"method", to_string(s.method)},
                       {"count", s.count},
                       {"failures", s.failures},
                       {"mean_r_f", json_number(s.mean)},
                       {"std_r_f", json_number(s.stddev)},
                       {"best_r_f", json_number(s.best)},
                       {"best_seed", s.best_seed}});
    }
    return Json{{"format", "vqdr-summary"},
                {"version", 1},
                {"config", config_snapshot(c)},
                {"config_hash", config_hash(c)},
                {"defaulted", c.defaulted},
                {"cells", arr}};
}

/// gnuplot data: one index block per (method, ñ), columns n mean std best.
inline std::string plot_data(const std::vector<CellSummary> &cells) {
    std::string out = "# r_f versus original memory size n\n";
    std::set<std::pair<int, int>> blocks;
    for (const auto &s : cells) {
        blocks.insert({static_cast<int>(s.method), s.n_tilde});
    }
    bool first = true;
    for (const auto &[m, k] : blocks) {
        if (!first) {
            out += "\n\n";
        }
        first = false;
        out += "# method=" + to_string(static_cast<Method>(m)) + " n_tilde=" + std::to_string(k) + "\n";
        out += "# n mean_r_f std_r_f best_r_f\n";
        for (const auto &s : cells) {
            if (static_cast<int>(s.method) == m && s.n_tilde == k) {
                out += std::to_string(s.n) + " " + format_double(s.mean) + " " + format_double(s.stddev) +
                       " " + format_double(s.best) + "\n";
            }
        }
    }
    return out;
}

struct SweepOutput {
    std::vector<ExperimentRecord> records;
    std::vector<CellSummary> summary;
    std::filesystem::path csv;
    std::filesystem::path summary_path;
    std::filesystem::path dat;
};

using SweepProgress = std::function<void(const ExperimentRecord &, std::size_t done, std::size_t total)>;

/**
 * @brief Runs every cell on a worker pool.
 *
 * Rows reach results.csv in grid order through a single writer that rewrites
 * the file atomically whenever the completed prefix grows.
 */
inline SweepOutput run_sweep(const ExperimentConfig &c, const SweepProgress &progress = {}) {
    c.validate();
    const std::filesystem::path dir(c.output_dir);
    std::filesystem::create_directories(dir);
    write_json(dir / "config.json", to_json(c));

    std::map<int, WalkContext> contexts;
    for (int n : c.ns) {
        if (!contexts.count(n)) {
            contexts.emplace(n, make_context(c, n));
        }
    }
    const std::vector<Cell> cells = enumerate_cells(c);

    SweepOutput out;
    out.csv = dir / "results.csv";
    out.summary_path = dir / "summary.json";
    out.dat = dir / "rf_vs_n.dat";

    std::vector<std::optional<ExperimentRecord>> slots(cells.size());
    std::size_t flushed = 0;
    std::size_t done = 0;
    std::string text = csv_header();
    std::mutex mu;
    write_file_atomic(out.csv, text);

    parallel_for(
        cells.size(),
        [&](std::size_t i) {
            ExperimentRecord rec = run_cell(c, contexts.at(cells[i].n), cells[i]);
            std::lock_guard<std::mutex> lock(mu);
            slots[i] = rec;
            ++done;
            const std::size_t before = flushed;
            while (flushed < slots.size() && slots[flushed]) {
                text += csv_row(*slots[flushed]);
                ++flushed;
            }
            if (flushed != before) {
                write_file_atomic(out.csv, text);
            }
            if (progress) {
                progress(rec, done, cells.size());
            }
        },
        c.workers);

    for (auto &s : slots) {
        out.records.push_back(std::move(*s));
    }
    out.summary = summarize(out.records);
    write_json(out.summary_path, summary_json(c, out.summary));
    write_file_atomic(out.dat, plot_data(out.summary));
    return out;
}

} // namespace vqdr
