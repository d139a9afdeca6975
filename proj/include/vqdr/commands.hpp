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
 * @file commands.hpp
 * Subcommand bodies of the vqdr driver. Argument parsing lives in the tool;
 * everything here reports through an ostream and returns an exit code.
 */
#pragma once

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "experiment.hpp"

namespace vqdr {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitNumerical = 4 };

struct CommonArgs {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
};

/// Config file (or defaults), then VQDR_OUTPUT_DIR, then --seed.
inline ExperimentConfig resolve_config(const CommonArgs &args) {
    ExperimentConfig c = args.config ? load_config(*args.config) : ExperimentConfig{};
    if (const char *dir = std::getenv("VQDR_OUTPUT_DIR"); dir != nullptr && *dir != '\0') {
        c.output_dir = dir;
    }
    if (args.seed) {
        c.seeds = {*args.seed};
    }
    c.validate();
    return c;
}

/// Maps exceptions to exit codes: config/usage 2, data/state 3, numerical 4.
inline int guarded(std::ostream &err, const std::function<int()> &body) {
    try {
        return body();
    } catch (const ConfigError &e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const FormatError &e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const DimensionError &e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericalError &e) {
        err << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument &e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
}

inline std::filesystem::path model_path(const ExperimentConfig &c, int n) {
    return std::filesystem::path(c.output_dir) / ("model_n" + std::to_string(n) + ".json");
}

inline std::filesystem::path checkpoint_path(const ExperimentConfig &c, int n, int n_tilde,
                                             std::uint64_t seed) {
    return std::filesystem::path(c.output_dir) / "checkpoints" /
           ("n" + std::to_string(n) + "_nt" + std::to_string(n_tilde) + "_seed" + std::to_string(seed) +
            ".json");
}

inline ModelFile load_model_file(const std::string &path) {
    if (!std::filesystem::exists(path)) {
        throw ConfigError("model file not found: " + path);
    }
    return model_file_from_json(read_json(path));
}

// ---------------------------------------------------------------------------

struct BuildModelArgs {
    std::vector<int> ns; ///< empty: every n of the config
    std::optional<std::string> output;
};

inline int cmd_build_model(const CommonArgs &common, const BuildModelArgs &args, std::ostream &out,
                           std::ostream &err) {
    return guarded(err, [&] {
        const ExperimentConfig c = resolve_config(common);
        const std::vector<int> ns = args.ns.empty() ? c.ns : args.ns;
        if (args.output && ns.size() != 1) {
            throw ConfigError("--output needs exactly one n");
        }
        for (int n : ns) {
            if (n < 1 || n > 6) {
                throw ConfigError("n must lie in 1..6");
            }
            const ModelFile mf = make_model_file(c, n);
            const std::filesystem::path path = args.output ? std::filesystem::path(*args.output) : model_path(c, n);
            write_json(path, to_json(mf));
            out << "n=" << n << " shift=" << shift_kind(c.shift_for(n)) << " c_q=" << std::fixed
                << std::setprecision(6) << mf.c_q << " bits -> " << path.string() << "\n";
            out.unsetf(std::ios::fixed);
        }
        return kExitOk;
    });
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string model;
};

/**
 * @brief One checkpoint per (ñ, seed); finished checkpoints are skipped.
 *
 * A checkpoint written under a different config hash stops the run with exit
 * code 3 before any training starts.
 */
inline int cmd_train(const CommonArgs &common, const TrainArgs &args, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        const ExperimentConfig c = resolve_config(common);
        const ModelFile mf = load_model_file(args.model);
        const WalkContext ctx = make_context(mf.model, mf.c_q);
        const std::string hash = config_hash(c);

        struct Job {
            int n_tilde;
            std::uint64_t seed;
            std::filesystem::path path;
        };
        std::vector<Job> jobs;
        for (int k : c.n_tildes) {
            if (k >= ctx.n) {
                continue;
            }
            for (auto s : c.seeds) {
                const auto path = checkpoint_path(c, ctx.n, k, s);
                if (std::filesystem::exists(path)) {
                    const Checkpoint ck = checkpoint_from_json(read_json(path));
                    if (ck.config_hash != hash) {
                        err << "checkpoint " << path.string() << " has config hash " << ck.config_hash
                            << ", current config is " << hash << "\n";
                        return static_cast<int>(kExitData);
                    }
                    if (ck.completed) {
                        out << "skip " << path.string() << " (finished)\n";
                        continue;
                    }
                }
                jobs.push_back({k, s, path});
            }
        }
        if (jobs.empty()) {
            out << "nothing to do\n";
            return static_cast<int>(kExitOk);
        }

        std::vector<bool> converged(jobs.size(), false);
        std::mutex mu;
        parallel_for(
            jobs.size(),
            [&](std::size_t i) {
                const Checkpoint ck = train_cell(c, ctx, jobs[i].n_tilde, jobs[i].seed);
                write_json(jobs[i].path, to_json(ck));
                converged[i] = ck.result.converged;
                std::lock_guard<std::mutex> lock(mu);
                out << "n=" << ctx.n << " n_tilde=" << jobs[i].n_tilde << " seed=" << jobs[i].seed
                    << " cost=" << format_double(ck.result.final_cost) << " reason=" << to_string(ck.result.reason)
                    << " -> " << jobs[i].path.string() << "\n";
            },
            c.workers);
        const bool all = std::all_of(converged.begin(), converged.end(), [](bool b) { return b; });
        if (!all) {
            err << "some runs stopped at the iteration cap without converging\n";
            return static_cast<int>(kExitNumerical);
        }
        return static_cast<int>(kExitOk);
    });
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string model;
    std::optional<std::string> checkpoint;
    bool baseline = false;
    std::optional<int> n_tilde;
    /// Compare against a second model file (method "reference").
    std::optional<std::string> reference;
    std::optional<std::string> csv;
};

inline int cmd_evaluate(const CommonArgs &common, const EvaluateArgs &args, std::ostream &out,
                        std::ostream &err) {
    return guarded(err, [&] {
        const int modes = (args.checkpoint ? 1 : 0) + (args.baseline ? 1 : 0) + (args.reference ? 1 : 0);
        if (modes != 1) {
            throw ConfigError("choose exactly one of --checkpoint, --baseline, --reference");
        }
        const ExperimentConfig c = resolve_config(common);
        const ModelFile mf = load_model_file(args.model);
        const WalkContext ctx = make_context(mf.model, mf.c_q);
        const std::string hash = config_hash(c);
        std::vector<ExperimentRecord> rows;
        const auto t0 = std::chrono::steady_clock::now();

        if (args.checkpoint) {
            if (!std::filesystem::exists(*args.checkpoint)) {
                throw ConfigError("checkpoint not found: " + *args.checkpoint);
            }
            rows.push_back(record_from_checkpoint(ctx, checkpoint_from_json(read_json(*args.checkpoint)), hash));
        } else if (args.baseline) {
            if (!args.n_tilde) {
                throw ConfigError("--baseline needs --n-tilde");
            }
            if (*args.n_tilde < 1 || *args.n_tilde > ctx.n) {
                throw ConfigError("--n-tilde must lie in 1..n");
            }
            for (auto s : c.seeds) {
                rows.push_back(baseline_cell(c, ctx, *args.n_tilde, s));
            }
        } else {
            const ModelFile ref = load_model_file(*args.reference);
            if (ref.model.d_out() != mf.model.d_out()) {
                throw DimensionError("reference model has a different output alphabet");
            }
            ExperimentRecord rec;
            rec.n = ctx.n;
            rec.n_tilde = ref.model.n_mem();
            rec.method = Method::Reference;
            rec.c_q = ctx.c_q;
            rec.config_hash = hash;
            rec.r_f = qfdr(ctx.mps, mps_from_model(ref.model)).r_f;
            rows.push_back(rec);
        }
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (auto &r : rows) {
            r.wall_time_s = wall / static_cast<double>(rows.size());
        }
        const std::filesystem::path csv =
            args.csv ? std::filesystem::path(*args.csv) : std::filesystem::path(c.output_dir) / "results.csv";
        append_csv_atomic(csv, rows);
        for (const auto &r : rows) {
            out << csv_row(r);
        }
        return static_cast<int>(kExitOk);
    });
}

// ---------------------------------------------------------------------------

inline int cmd_sweep(const CommonArgs &common, std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        const ExperimentConfig c = resolve_config(common);
        out << "sweep config_hash=" << config_hash(c) << " cells=" << enumerate_cells(c).size()
            << " output_dir=" << c.output_dir << "\n";
        const SweepOutput res = run_sweep(c, [&](const ExperimentRecord &r, std::size_t done, std::size_t total) {
            out << "[" << done << "/" << total << "] n=" << r.n << " n_tilde=" << r.n_tilde
                << " method=" << to_string(r.method) << " seed=" << r.seed << " r_f=" << format_double(r.r_f)
                << " status=" << r.status << "\n";
            out.flush();
        });
        for (const auto &s : res.summary) {
            out << "n=" << s.n << " n_tilde=" << s.n_tilde << " " << to_string(s.method)
                << " mean=" << format_double(s.mean) << " std=" << format_double(s.stddev)
                << " best=" << format_double(s.best) << " failures=" << s.failures << "\n";
        }
        out << "wrote " << res.csv.string() << ", " << res.summary_path.string() << ", " << res.dat.string()
            << "\n";
        const bool all_failed = std::all_of(res.records.begin(), res.records.end(),
                                            [](const ExperimentRecord &r) { return !std::isfinite(r.r_f); });
        return static_cast<int>(all_failed ? kExitNumerical : kExitOk);
    });
}

// ---------------------------------------------------------------------------

struct SelftestCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Fast oracle checks; each compares a library result with an independent route.
inline std::vector<SelftestCheck> run_selftest() {
    std::vector<SelftestCheck> out;
    auto add = [&](std::string name, bool pass, std::string detail) {
        out.push_back({std::move(name), pass, std::move(detail)});
    };
    auto num = [](double v) {
        std::ostringstream os;
        os << std::setprecision(3) << v;
        return os.str();
    };

    // Parameter count equals 3 angles per U3 gate of the generated circuit.
    bool counts_ok = true;
    for (int n = 1; n <= 5; ++n) {
        for (int l = 0; l <= 4; ++l) {
            const AnsatzSpec s{n, l};
            counts_ok = counts_ok && param_count(s) == 3 * count_gates(s).u3;
        }
    }
    add("ansatz parameter count", counts_ok, "n 1..5, L 0..4");

    // Walk model: unitary and orthogonal-memory C_q.
    const Rqm walk = walk_model(PointMass{0.25}, 2);
    const double unit_err = (walk.unitary().adjoint() * walk.unitary() -
                             ComplexMatrix::Identity(walk.dim(), walk.dim()))
                                .norm();
    const double c_q = cq(exact_stationary(kraus_from_unitary(walk)).rho);
    add("point-mass walk model", unit_err < 1e-10 && std::abs(c_q - 2.0) < 1e-9,
        "unitarity " + num(unit_err) + ", C_q " + num(c_q));

    // QFDR: self rate and the explicit doubled transfer operator.
    const UniformMps g = mps_from_model(walk_model(WrappedGaussian{0.0, 0.2}, 1));
    Rng rng(7);
    const UniformMps r = mps_from_reduced(random_unitary(4, rng), 1, 2);
    const QfdrResult self = qfdr(g, g);
    const QfdrResult cross = qfdr(g, r);
    const double doubled = std::abs(leading_eigenpair(doubled_transfer(g, r)).value);
    add("qfdr self rate", std::abs(self.r_f) < 1e-12, "r_f " + num(self.r_f));
    add("qfdr doubled transfer", std::abs(doubled - cross.lambda_ab) < 1e-9,
        "difference " + num(std::abs(doubled - cross.lambda_ab)));

    // Training gradient against central differences.
    const Rqm target(1, 2, random_unitary(4, rng));
    MemoryEnsemble ens = sample_memory_ensemble(target, 8, 4, 3);
    const ReductionProblem p = make_problem(CouplingOracle(target), ens, 0, 1, 1);
    const CostEvaluator eval(p);
    ParamVector joint(eval.n_params());
    for (Index i = 0; i < joint.size(); ++i) {
        joint(i) = rng.uniform() * 6.0;
    }
    ParamVector adj(joint.size());
    eval.cost_and_gradient(joint, adj);
    const ParamVector fd = finite_difference_gradient([&](const ParamVector &x) { return eval.cost(x); }, joint);
    const double grad_err = (adj - fd).norm() / std::max(1e-12, fd.norm());
    add("cost gradient", grad_err < 1e-6, "relative error " + num(grad_err));

    // Full-bond truncation reproduces its input.
    TruncationOptions topt;
    topt.restarts = 2;
    const UniformMps walk_mps = mps_from_model(walk_model(WrappedGaussian{0.0, 0.1}, 2));
    const TruncationResult t = truncate(walk_mps, walk_mps.bond_dim(), 1, topt);
    const double rf = qfdr(walk_mps, t.mps).r_f;
    add("full-bond truncation", t.converged && std::abs(rf) < 1e-10, "r_f " + num(rf));
    return out;
}

inline int cmd_selftest(std::ostream &out, std::ostream &err) {
    return guarded(err, [&] {
        bool ok = true;
        for (const auto &c : run_selftest()) {
            out << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail << "\n";
            ok = ok && c.pass;
        }
        return static_cast<int>(ok ? kExitOk : kExitNumerical);
    });
}

} // namespace vqdr
