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
 * @file training.hpp
 * Decoupling/dynamics cost over a memory ensemble and its optimization.
 *
 * Memory layout after the decoupling unitary V is [retained (ñ qubits),
 * trash (n − ñ qubits)]; the fiducial trash state is |0…0>. The reduced
 * update acts on [retained, output].
 */
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ansatz.hpp"
#include "lbfgs.hpp"
#include "parallel.hpp"
#include "qcore.hpp"
#include "rng.hpp"
#include "rqm.hpp"

namespace vqdr {

struct ReductionProblem {
    CouplingOracle target;
    MemoryEnsemble ensemble;
    int n_reduced = 1;
    AnsatzSpec v_spec;
    AnsatzSpec u_spec;
    double alpha = 1.0;
    double beta = 1.0;
    std::uint64_t seed = 0;

    [[nodiscard]] int n_mem() const { return target.n_mem(); }
    [[nodiscard]] Index d_out() const { return target.d_out(); }
    [[nodiscard]] Index retained_dim() const { return Index{1} << n_reduced; }
    [[nodiscard]] Index trash_dim() const { return Index{1} << (n_mem() - n_reduced); }

    void validate() const {
        if (n_reduced < 0 || n_reduced >= n_mem()) {
            throw std::invalid_argument("ReductionProblem: need 0 <= n_reduced < n_mem");
        }
        if (!(alpha > 0.0) || !(beta > 0.0)) {
            throw std::invalid_argument("ReductionProblem: alpha and beta must be positive");
        }
        if (v_spec.n_qubits != n_mem()) {
            throw DimensionError("ReductionProblem: V must act on the full memory");
        }
        if (u_spec.n_qubits != n_reduced + log2_exact(d_out())) {
            throw DimensionError("ReductionProblem: reduced update must act on retained + output");
        }
        if (ensemble.n_mem != n_mem() || ensemble.d_out != d_out()) {
            throw DimensionError("ReductionProblem: ensemble does not match target");
        }
        if (ensemble.states.empty()) {
            throw std::invalid_argument("ReductionProblem: empty ensemble");
        }
    }
};

inline ReductionProblem make_problem(CouplingOracle target, MemoryEnsemble ensemble, int n_reduced,
                                     int v_layers = 4, int u_layers = 4, double alpha = 1.0,
                                     double beta = 1.0, std::uint64_t seed = 0) {
    const int n = target.n_mem();
    const int out_qubits = log2_exact(target.d_out());
    ReductionProblem p{std::move(target),
                       std::move(ensemble),
                       n_reduced,
                       AnsatzSpec{n, v_layers},
                       AnsatzSpec{n_reduced + out_qubits, u_layers},
                       alpha,
                       beta,
                       seed};
    p.validate();
    return p;
}

// ---------------------------------------------------------------------------
// Per-state quantities, written directly on top of the subsystem primitives.

/// <0|_T Tr_retained[V|s><s|V†] |0>_T
inline double decoupling_fidelity(const ComplexMatrix &v, const StateVector &s, int n_reduced) {
    const int n = log2_exact(s.size());
    const SubsystemLayout layout({Index{1} << n_reduced, Index{1} << (n - n_reduced)});
    const StateVector phi = v * s;
    const DensityMatrix trash = partial_trace(projector(phi), layout, {1});
    return std::clamp(trash(0, 0).real(), 0.0, 1.0);
}

/// Tr_T[(V ⊗ I) U (|s><s| ⊗ |0><0|) U† (V† ⊗ I)] on [retained, output].
inline DensityMatrix reduced_state(const CouplingOracle &target, const ComplexMatrix &v,
                                   const StateVector &s, int n_reduced) {
    const int n = target.n_mem();
    const Index d = target.d_out();
    const StateVector joint = target.apply_fresh_output(s);
    const StateVector moved =
        apply_on_subsystems(v, joint, SubsystemLayout({target.mem_dim(), d}), {0});
    const SubsystemLayout split({Index{1} << n_reduced, Index{1} << (n - n_reduced), d});
    return partial_trace(projector(moved), split, {0, 2});
}

/// Tr_T[V|s><s|V†] ⊗ |0><0|_out
inline DensityMatrix reference_state(const ComplexMatrix &v, const StateVector &s, int n_reduced,
                                     Index d_out) {
    const int n = log2_exact(s.size());
    const SubsystemLayout layout({Index{1} << n_reduced, Index{1} << (n - n_reduced)});
    const DensityMatrix kept = partial_trace(projector(v * s), layout, {0});
    return kron(kept, projector(basis_state(d_out, 0)));
}

/// Cosine similarity between Ũ† ρ Ũ and σ.
inline double dynamical_fidelity(const ComplexMatrix &u_tilde, const DensityMatrix &rho,
                                 const DensityMatrix &sigma) {
    return cosine_similarity(u_tilde.adjoint() * rho * u_tilde, sigma);
}

// ---------------------------------------------------------------------------

struct CostBreakdown {
    double cost = 0.0;
    double d_bar = 0.0; ///< weighted mean decoupling fidelity
    double f_bar = 0.0; ///< weighted mean dynamical fidelity
};

/**
 * @brief Evaluates C = −Σ_i w_i (α D_i + β F_i) and its gradient.
 *
 * The target is queried once per distinct ensemble state at construction
 * (U applied to |s_i>|0>). States equal up to a global phase within
 * `merge_tol` are merged and carry the summed weight, which is the same
 * cost as listing them separately.
 */
class CostEvaluator {
  public:
    explicit CostEvaluator(const ReductionProblem &problem, double merge_tol = 1e-12)
        : v_spec_(problem.v_spec), u_spec_(problem.u_spec), alpha_(problem.alpha),
          beta_(problem.beta), n_reduced_(problem.n_reduced), d_out_(problem.d_out()),
          mem_dim_(problem.target.mem_dim()), r_dim_(problem.retained_dim()),
          t_dim_(problem.trash_dim()) {
        problem.validate();
        const double w = 1.0 / static_cast<double>(problem.ensemble.states.size());
        for (const auto &s : problem.ensemble.states) {
            bool merged = false;
            for (std::size_t u = 0; u < states_.size(); ++u) {
                const Complex ov = states_[u].dot(s);
                const Complex phase = std::abs(ov) > 0.0 ? ov / std::abs(ov) : Complex{1.0, 0.0};
                if ((s - phase * states_[u]).norm() <= merge_tol) {
                    weights_[u] += w;
                    merged = true;
                    break;
                }
            }
            if (!merged) {
                states_.push_back(s);
                weights_.push_back(w);
            }
        }
        outputs_.reserve(states_.size());
        for (const auto &s : states_) {
            const StateVector joint = problem.target.apply_fresh_output(s);
            ComplexMatrix psi(mem_dim_, d_out_);
            for (Index m = 0; m < mem_dim_; ++m) {
                for (Index x = 0; x < d_out_; ++x) {
                    psi(m, x) = joint(m * d_out_ + x);
                }
            }
            outputs_.push_back(std::move(psi));
        }
    }

    [[nodiscard]] std::size_t distinct_states() const { return states_.size(); }
    [[nodiscard]] const std::vector<double> &weights() const { return weights_; }
    [[nodiscard]] Index n_params() const { return param_count(v_spec_) + param_count(u_spec_); }

    /// Split a joint vector [θ1; θ2].
    [[nodiscard]] std::pair<ParamVector, ParamVector> split(const ParamVector &x) const {
        const Index n1 = param_count(v_spec_);
        return {x.head(n1), x.tail(x.size() - n1)};
    }
    [[nodiscard]] ParamVector join(const ParamVector &t1, const ParamVector &t2) const {
        ParamVector x(t1.size() + t2.size());
        x << t1, t2;
        return x;
    }

    [[nodiscard]] CostBreakdown evaluate(const ParamVector &theta1, const ParamVector &theta2) const {
        return run(&theta1, &theta2, nullptr, nullptr, nullptr, nullptr, nullptr);
    }

    /// Same cost with explicit unitaries in place of the circuits.
    [[nodiscard]] CostBreakdown evaluate_unitaries(const ComplexMatrix &v,
                                                   const ComplexMatrix &u_tilde) const {
        return run(nullptr, nullptr, &v, &u_tilde, nullptr, nullptr, nullptr);
    }

    /// Cost plus the exact reverse-mode gradient for both parameter blocks.
    CostBreakdown evaluate_with_gradient(const ParamVector &theta1, const ParamVector &theta2,
                                         ParamVector &grad1, ParamVector &grad2) const {
        return run(&theta1, &theta2, nullptr, nullptr, &grad1, &grad2, nullptr);
    }

    /**
     * @brief Per-state traces (D_i, Tr[ρ_i Ũσ_iŨ†], Tr ρ_i², Tr σ_i²), four per
     * distinct state. Each is a trigonometric polynomial of degree at most 2
     * in any single angle, which is what the shift-rule gradient relies on.
     */
    [[nodiscard]] RealVector traces(const ParamVector &joint) const {
        const auto [t1, t2] = split(joint);
        RealVector out;
        run(&t1, &t2, nullptr, nullptr, nullptr, nullptr, &out);
        return out;
    }

    /// Cost from the output of traces().
    [[nodiscard]] double cost_from_traces(const RealVector &tr) const {
        double c = 0.0;
        for (std::size_t u = 0; u < weights_.size(); ++u) {
            const auto b = static_cast<Index>(4 * u);
            c -= weights_[u] * (alpha_ * tr(b) + beta_ * tr(b + 1) / std::sqrt(tr(b + 2) * tr(b + 3)));
        }
        return c;
    }

    /**
     * @brief Gradient from shifted circuit evaluations only.
     *
     * The degree-2 shift rule differentiates each trace exactly; the
     * quotient rule then assembles dC/dθ.
     */
    [[nodiscard]] ParamVector shift_rule_gradient(const ParamVector &joint) const {
        const RealVector tr = traces(joint);
        const RealMatrix jac = shift_rule_jacobian(
            [this](const ParamVector &p) { return traces(p); }, joint, 2);
        ParamVector grad = ParamVector::Zero(joint.size());
        for (std::size_t u = 0; u < weights_.size(); ++u) {
            const auto b = static_cast<Index>(4 * u);
            const double n = tr(b + 1);
            const double pr = tr(b + 2);
            const double ps = tr(b + 3);
            const double root = std::sqrt(pr * ps);
            const double f = n / root;
            const RealVector df = jac.row(b + 1).transpose() / root -
                                  0.5 * f * (jac.row(b + 2).transpose() / pr + jac.row(b + 3).transpose() / ps);
            grad -= weights_[u] * (alpha_ * jac.row(b).transpose() + beta_ * df);
        }
        return grad;
    }

    [[nodiscard]] double cost(const ParamVector &joint) const {
        const auto [t1, t2] = split(joint);
        return evaluate(t1, t2).cost;
    }

    double cost_and_gradient(const ParamVector &joint, ParamVector &grad) const {
        const auto [t1, t2] = split(joint);
        ParamVector g1, g2;
        const double c = evaluate_with_gradient(t1, t2, g1, g2).cost;
        grad = join(g1, g2);
        return c;
    }

    [[nodiscard]] double alpha() const { return alpha_; }
    [[nodiscard]] double beta() const { return beta_; }

    /// Restrict to the decoupling term only (β contribution dropped).
    [[nodiscard]] CostEvaluator decoupling_only() const {
        CostEvaluator c = *this;
        c.beta_ = 0.0;
        return c;
    }

  private:
    CostBreakdown run(const ParamVector *theta1, const ParamVector *theta2, const ComplexMatrix *v,
                      const ComplexMatrix *u_tilde, ParamVector *grad1, ParamVector *grad2,
                      RealVector *traces) const {
        const auto k = static_cast<Index>(states_.size());
        const Index d = d_out_;
        const Index rd = r_dim_ * d;
        const Index vcols = k * (1 + d);

        // Stack [s_1 … s_k | Ψ_1 … Ψ_k] and push through V.
        ComplexMatrix yv(mem_dim_, vcols);
        for (Index u = 0; u < k; ++u) {
            yv.col(u) = states_[static_cast<std::size_t>(u)];
            yv.middleCols(k + u * d, d) = outputs_[static_cast<std::size_t>(u)];
        }
        if (v != nullptr) {
            yv = (*v) * yv;
        } else {
            apply_circuit(v_spec_, *theta1, yv);
        }

        // Φ̃ blocks (retained ⊗ |0>_out, one column per trash value) through Ũ.
        ComplexMatrix yu = ComplexMatrix::Zero(rd, k * t_dim_);
        for (Index u = 0; u < k; ++u) {
            for (Index r = 0; r < r_dim_; ++r) {
                for (Index t = 0; t < t_dim_; ++t) {
                    yu(r * d, u * t_dim_ + t) = yv(r * t_dim_ + t, u);
                }
            }
        }
        if (u_tilde != nullptr) {
            yu = (*u_tilde) * yu;
        } else {
            apply_circuit(u_spec_, *theta2, yu);
        }

        const bool want_grad = grad1 != nullptr;
        ComplexMatrix gv;
        ComplexMatrix gu;
        if (want_grad) {
            gv = ComplexMatrix::Zero(mem_dim_, vcols);
            gu = ComplexMatrix::Zero(rd, k * t_dim_);
        }

        CostBreakdown out;
        if (traces != nullptr) {
            traces->resize(4 * k);
        }
        for (Index u = 0; u < k; ++u) {
            const double w = weights_[static_cast<std::size_t>(u)];
            // Φ(r, t) = (V s)[r T + t]
            ComplexMatrix phi(r_dim_, t_dim_);
            for (Index r = 0; r < r_dim_; ++r) {
                for (Index t = 0; t < t_dim_; ++t) {
                    phi(r, t) = yv(r * t_dim_ + t, u);
                }
            }
            // W(r d + x, t) = (V Ψ)(r T + t, x); ρ = W W†.
            ComplexMatrix wm(rd, t_dim_);
            for (Index r = 0; r < r_dim_; ++r) {
                for (Index t = 0; t < t_dim_; ++t) {
                    for (Index x = 0; x < d; ++x) {
                        wm(r * d + x, t) = yv(r * t_dim_ + t, k + u * d + x);
                    }
                }
            }
            const auto ycols = yu.middleCols(u * t_dim_, t_dim_);

            const double dec = phi.col(0).squaredNorm();
            const ComplexMatrix wy = wm.adjoint() * ycols;
            const ComplexMatrix ww = wm.adjoint() * wm;
            const ComplexMatrix pp = phi.adjoint() * phi;
            const double overlap = wy.squaredNorm();
            const double p_rho = ww.squaredNorm();
            const double p_sigma = pp.squaredNorm();
            if (p_rho < 1e-300 || p_sigma < 1e-300) {
                throw std::domain_error("CostEvaluator: zero-purity state");
            }
            const double norm = std::sqrt(p_rho * p_sigma);
            const double fid = overlap / norm;

            if (traces != nullptr) {
                (*traces)(4 * u) = dec;
                (*traces)(4 * u + 1) = overlap;
                (*traces)(4 * u + 2) = p_rho;
                (*traces)(4 * u + 3) = p_sigma;
            }
            out.d_bar += w * dec;
            out.f_bar += w * fid;
            out.cost -= w * (alpha_ * dec + beta_ * fid);

            if (!want_grad) {
                continue;
            }
            // ∂F/∂conj(W) = ω W / norm − F ρ W / Tr ρ², with ω = Y Y†
            const ComplexMatrix g_w =
                (ycols * wy.adjoint()) / norm - (fid / p_rho) * (wm * ww);
            // ∂F/∂conj(Y) = ρ Y / norm
            const ComplexMatrix g_y = (wm * wy) / norm;
            gu.middleCols(u * t_dim_, t_dim_) = (-w * beta_) * g_y;
            // σ-purity part of ∂F/∂conj(Φ); the Ũ† g_y part is added after backprop.
            const ComplexMatrix g_phi = (-fid / p_sigma) * (phi * pp);
            for (Index r = 0; r < r_dim_; ++r) {
                for (Index t = 0; t < t_dim_; ++t) {
                    gv(r * t_dim_ + t, u) += (-w * beta_) * g_phi(r, t);
                    for (Index x = 0; x < d; ++x) {
                        gv(r * t_dim_ + t, k + u * d + x) += (-w * beta_) * g_w(r * d + x, t);
                    }
                }
                // ∂D/∂conj(φ) = P_0 φ
                gv(r * t_dim_, u) += (-w * alpha_) * phi(r, 0);
            }
        }

        if (want_grad) {
            ComplexMatrix g_in;
            *grad2 = circuit_backprop(u_spec_, *theta2, yu, gu, &g_in);
            for (Index u = 0; u < k; ++u) {
                for (Index r = 0; r < r_dim_; ++r) {
                    for (Index t = 0; t < t_dim_; ++t) {
                        gv(r * t_dim_ + t, u) += g_in(r * d, u * t_dim_ + t);
                    }
                }
            }
            *grad1 = circuit_backprop(v_spec_, *theta1, yv, gv);
        }
        return out;
    }

    AnsatzSpec v_spec_;
    AnsatzSpec u_spec_;
    double alpha_;
    double beta_;
    int n_reduced_;
    Index d_out_;
    Index mem_dim_;
    Index r_dim_;
    Index t_dim_;
    std::vector<StateVector> states_;
    std::vector<double> weights_;
    std::vector<ComplexMatrix> outputs_;
};

inline double combined_cost(const ReductionProblem &problem, const ParamVector &theta1,
                            const ParamVector &theta2) {
    return CostEvaluator(problem).evaluate(theta1, theta2).cost;
}

// ---------------------------------------------------------------------------

enum class GradientMode { Adjoint, ParameterShift, FiniteDifference };

struct TrainOptions {
    LbfgsOptions lbfgs{};
    InitMode init = InitMode::NearIdentity;
    GradientMode gradient = GradientMode::Adjoint;
    /// Optimize θ1 on the decoupling term first, then θ2 with θ1 fixed.
    bool two_phase = false;
    /// Additional random initializations; the lowest final cost wins.
    /// Stops early once a start reaches lbfgs.target_cost.
    int restarts = 3;
    /// Initialization used by the restarts (the first start uses `init`).
    InitMode restart_init = InitMode::UniformFull;
    /// Perturbed retries after an L-BFGS line-search failure.
    int max_retries = 3;
    double retry_perturbation = 0.05;
    /// Warm start; otherwise drawn from the problem seed.
    std::optional<ParamVector> theta1_init;
    std::optional<ParamVector> theta2_init;
};

struct TrainResult {
    ParamVector theta1;
    ParamVector theta2;
    std::vector<double> cost_trace;
    double final_cost = 0.0;
    double d_bar = 0.0;
    double f_bar = 0.0;
    int iterations = 0;
    int evaluations = 0;
    /// Random initializations tried, including the first.
    int starts = 0;
    int retries = 0;
    bool converged = false;
    StopReason reason = StopReason::IterationCap;
    std::uint64_t seed = 0;
};

namespace detail {

inline ValueAndGradient make_objective(const CostEvaluator &eval, GradientMode mode) {
    switch (mode) {
    case GradientMode::ParameterShift:
        return [&eval](const RealVector &x, RealVector &g) {
            g = eval.shift_rule_gradient(x);
            return eval.cost(x);
        };
    case GradientMode::FiniteDifference:
        return [&eval](const RealVector &x, RealVector &g) {
            g = finite_difference_gradient([&eval](const ParamVector &p) { return eval.cost(p); }, x);
            return eval.cost(x);
        };
    case GradientMode::Adjoint:
        break;
    }
    return [&eval](const RealVector &x, RealVector &g) { return eval.cost_and_gradient(x, g); };
}

// L-BFGS with perturbed retries after line-search failures.
inline LbfgsResult minimize_with_retries(const ValueAndGradient &fg, RealVector x0,
                                         const TrainOptions &opt, Rng &rng, int &retries,
                                         std::vector<double> &trace) {
    LbfgsResult best = lbfgs_minimize(fg, std::move(x0), opt.lbfgs);
    trace.insert(trace.end(), best.trace.begin(), best.trace.end());
    int total_iters = best.iterations;
    int total_evals = best.evaluations;
    while (best.reason == StopReason::LineSearchFailure && retries < opt.max_retries) {
        ++retries;
        RealVector x = best.x;
        for (Index i = 0; i < x.size(); ++i) {
            x(i) += rng.uniform(-opt.retry_perturbation, opt.retry_perturbation);
        }
        LbfgsOptions lo = opt.lbfgs;
        lo.max_iter = std::max(0, opt.lbfgs.max_iter - total_iters);
        LbfgsResult next = lbfgs_minimize(fg, std::move(x), lo);
        total_iters += next.iterations;
        total_evals += next.evaluations;
        trace.insert(trace.end(), next.trace.begin(), next.trace.end());
        if (next.f <= best.f || next.reason != StopReason::LineSearchFailure) {
            const bool keep_old = next.f > best.f;
            if (!keep_old) {
                best = std::move(next);
            } else {
                best.reason = next.reason;
            }
        }
    }
    best.iterations = total_iters;
    best.evaluations = total_evals;
    return best;
}

// One start from (t1, t2); fills the parameter and bookkeeping fields of res.
inline void train_from(const CostEvaluator &eval, const TrainOptions &opt, ParamVector t1,
                       ParamVector t2, Rng &retry_rng, TrainResult &res) {
    LbfgsResult lr;
    if (!opt.two_phase) {
        lr = minimize_with_retries(make_objective(eval, opt.gradient), eval.join(t1, t2), opt,
                                   retry_rng, res.retries, res.cost_trace);
        std::tie(res.theta1, res.theta2) = eval.split(lr.x);
    } else {
        const CostEvaluator dec = eval.decoupling_only();
        const ParamVector fixed2 = t2;
        const ValueAndGradient phase1 = [&](const RealVector &x, RealVector &g) {
            ParamVector g1, g2;
            const double c = dec.evaluate_with_gradient(x, fixed2, g1, g2).cost;
            g = g1;
            return c;
        };
        TrainOptions o1 = opt;
        o1.lbfgs.target_cost = -std::numeric_limits<double>::infinity();
        std::vector<double> trace1;
        const LbfgsResult r1 = minimize_with_retries(phase1, t1, o1, retry_rng, res.retries, trace1);
        const ParamVector fixed1 = r1.x;
        const ValueAndGradient phase2 = [&](const RealVector &x, RealVector &g) {
            ParamVector g1, g2;
            const double c = eval.evaluate_with_gradient(fixed1, x, g1, g2).cost;
            g = g2;
            return c;
        };
        lr = minimize_with_retries(phase2, t2, opt, retry_rng, res.retries, res.cost_trace);
        lr.iterations += r1.iterations;
        lr.evaluations += r1.evaluations;
        res.theta1 = fixed1;
        res.theta2 = lr.x;
    }
    res.final_cost = lr.f;
    res.iterations += lr.iterations;
    res.evaluations += lr.evaluations;
    res.reason = lr.reason;
}

} // namespace detail

/**
 * @brief Minimize the combined cost over (θ1, θ2) with L-BFGS.
 *
 * Joint optimization by default. Runs 1 + `restarts` random starts drawn
 * from the problem seed and keeps the lowest final cost; a line-search
 * failure inside a start is retried from a perturbed copy of its best point.
 * `iterations` and `evaluations` count all starts, `cost_trace` and
 * `reason` belong to the winning start.
 */
inline TrainResult train(const ReductionProblem &problem, const TrainOptions &opt = {}) {
    problem.validate();
    if (opt.restarts < 0) {
        throw std::invalid_argument("train: restarts must be non-negative");
    }
    const CostEvaluator eval(problem);
    const Rng rng(problem.seed);
    Rng retry_rng = rng.split(0);

    TrainResult best;
    int total_iters = 0;
    int total_evals = 0;
    int total_retries = 0;
    int starts = 0;
    for (int attempt = 0; attempt <= opt.restarts; ++attempt) {
        Rng init_rng = rng.split(1 + static_cast<std::uint64_t>(attempt));
        const InitMode mode = attempt == 0 ? opt.init : opt.restart_init;
        ParamVector t1 = init_params(problem.v_spec, init_rng, mode);
        ParamVector t2 = init_params(problem.u_spec, init_rng, mode);
        if (attempt == 0 && opt.theta1_init) {
            t1 = *opt.theta1_init;
        }
        if (attempt == 0 && opt.theta2_init) {
            t2 = *opt.theta2_init;
        }
        if (t1.size() != param_count(problem.v_spec) || t2.size() != param_count(problem.u_spec)) {
            throw DimensionError("train: warm-start parameters do not match the ansatz");
        }
        TrainResult run;
        detail::train_from(eval, opt, std::move(t1), std::move(t2), retry_rng, run);
        ++starts;
        total_iters += run.iterations;
        total_evals += run.evaluations;
        total_retries += run.retries;
        if (attempt == 0 || run.final_cost < best.final_cost) {
            best = std::move(run);
        }
        if (best.final_cost <= opt.lbfgs.target_cost) {
            break;
        }
    }
    const CostBreakdown fin = eval.evaluate(best.theta1, best.theta2);
    best.final_cost = fin.cost;
    best.d_bar = fin.d_bar;
    best.f_bar = fin.f_bar;
    best.iterations = total_iters;
    best.evaluations = total_evals;
    best.retries = total_retries;
    best.starts = starts;
    best.converged = is_converged(best.reason);
    best.seed = problem.seed;
    return best;
}

/// Independent runs, one per seed; result i belongs to seeds[i].
inline std::vector<TrainResult> train_multistart(const ReductionProblem &problem,
                                                 const std::vector<std::uint64_t> &seeds,
                                                 const TrainOptions &opt = {},
                                                 unsigned workers = 1) {
    std::vector<TrainResult> out(seeds.size());
    parallel_for(
        seeds.size(),
        [&](std::size_t i) {
            ReductionProblem p = problem;
            p.seed = seeds[i];
            out[i] = train(p, opt);
        },
        workers);
    return out;
}

// ---------------------------------------------------------------------------

/**
 * @brief Target with a known exact compression, for optimizer ground truth.
 *
 * U = P† (W ⊗ I_T) P with W on [retained, output], P = (X^f · Π) ⊗ I_out
 * where Π permutes memory qubits and f is a random bit pattern.
 * The decoupler that sends every reachable memory state to trash |0…0> is
 * (I ⊗ X^{f_T}) P_mem; with it, Ũ = W attains C = −(α + β).
 */
struct PlantedModel {
    Rqm model;
    ComplexMatrix w;
    ComplexMatrix memory_permutation; ///< X^f · Π on memory
    ComplexMatrix decoupler;          ///< exact V
    std::vector<int> qubit_order;
    std::vector<int> flips;
};

inline ComplexMatrix qubit_permutation_matrix(const std::vector<int> &order) {
    // Output qubit q carries input qubit order[q].
    const int n = static_cast<int>(order.size());
    const Index dim = Index{1} << n;
    ComplexMatrix p = ComplexMatrix::Zero(dim, dim);
    for (Index in = 0; in < dim; ++in) {
        Index out = 0;
        for (int q = 0; q < n; ++q) {
            const Index bit = (in >> (n - 1 - order[static_cast<std::size_t>(q)])) & 1;
            out |= bit << (n - 1 - q);
        }
        p(out, in) = 1.0;
    }
    return p;
}

inline PlantedModel make_planted_model(int n_mem, int n_reduced, Index d_out, Rng &rng,
                                       std::optional<ComplexMatrix> w = std::nullopt,
                                       bool shuffle_qubits = true) {
    if (n_reduced < 0 || n_reduced >= n_mem) {
        throw std::invalid_argument("make_planted_model: need 0 <= n_reduced < n_mem");
    }
    const Index r_dim = Index{1} << n_reduced;
    const Index t_dim = Index{1} << (n_mem - n_reduced);
    const Index mem_dim = Index{1} << n_mem;
    ComplexMatrix wm = w ? *w : random_unitary(r_dim * d_out, rng);
    if (wm.rows() != r_dim * d_out || !is_unitary(wm)) {
        throw DimensionError("make_planted_model: W must be unitary on retained ⊗ output");
    }

    std::vector<int> order(static_cast<std::size_t>(n_mem));
    std::iota(order.begin(), order.end(), 0);
    if (shuffle_qubits) {
        std::shuffle(order.begin(), order.end(), rng.engine());
    }
    std::vector<int> flips(static_cast<std::size_t>(n_mem));
    for (auto &f : flips) {
        f = rng.uniform() < 0.5 ? 0 : 1;
    }
    Index flip_mask = 0;
    for (int q = 0; q < n_mem; ++q) {
        flip_mask |= static_cast<Index>(flips[static_cast<std::size_t>(q)]) << (n_mem - 1 - q);
    }
    ComplexMatrix x_flip = ComplexMatrix::Zero(mem_dim, mem_dim);
    for (Index i = 0; i < mem_dim; ++i) {
        x_flip(i ^ flip_mask, i) = 1.0;
    }
    const ComplexMatrix pm = x_flip * qubit_permutation_matrix(order);

    const SubsystemLayout layout({r_dim, t_dim, d_out});
    const std::vector<std::size_t> targets{0, 2};
    const ComplexMatrix u0 = embed_operator(wm, layout, targets);
    const ComplexMatrix p = kron(pm, ComplexMatrix::Identity(d_out, d_out));
    const ComplexMatrix u = p.adjoint() * u0 * p;

    // Reachable memory states keep trash = f_T (the flips on the trash qubits).
    const Index trash_mask = flip_mask & (t_dim - 1);
    ComplexMatrix clear = ComplexMatrix::Zero(mem_dim, mem_dim);
    for (Index i = 0; i < mem_dim; ++i) {
        clear(i ^ trash_mask, i) = 1.0;
    }
    return PlantedModel{Rqm(n_mem, d_out, u), wm, pm, clear * pm, order, flips};
}

} // namespace vqdr
