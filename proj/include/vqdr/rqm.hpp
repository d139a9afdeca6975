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
 * @file rqm.hpp
 * Recurrent quantum models: a coupling unitary on memory ⊗ output, its
 * Kraus family, measure-and-reset trajectories, and the stationary memory.
 */
#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "parallel.hpp"
#include "qcore.hpp"
#include "rng.hpp"

namespace vqdr {

/**
 * @brief Coupling unitary U acting on (2^n_mem memory) ⊗ (d_out output).
 *
 * Joint index is mem * d_out + x.
 */
class Rqm {
  public:
    Rqm(int n_mem, Index d_out, ComplexMatrix u) : n_mem_(n_mem), d_out_(d_out), u_(std::move(u)) {
        if (n_mem < 0) {
            throw std::invalid_argument("Rqm: negative memory qubit count");
        }
        if (!is_power_of_two(d_out)) {
            throw DimensionError("Rqm: output alphabet must be a power of two");
        }
        if (u_.rows() != dim() || u_.cols() != dim()) {
            throw DimensionError("Rqm: unitary dim does not match 2^n * d_out");
        }
        if (!is_unitary(u_)) {
            throw std::invalid_argument("Rqm: coupling operator is not unitary");
        }
    }

    [[nodiscard]] int n_mem() const { return n_mem_; }
    [[nodiscard]] Index d_out() const { return d_out_; }
    [[nodiscard]] int n_out_qubits() const { return log2_exact(d_out_); }
    [[nodiscard]] Index mem_dim() const { return Index{1} << n_mem_; }
    [[nodiscard]] Index dim() const { return mem_dim() * d_out_; }
    [[nodiscard]] const ComplexMatrix &unitary() const { return u_; }
    [[nodiscard]] SubsystemLayout layout() const {
        return SubsystemLayout({mem_dim(), d_out_});
    }

  private:
    int n_mem_;
    Index d_out_;
    ComplexMatrix u_;
};

/**
 * @brief Apply-only view of a model.
 *
 * Training code receives this instead of an Rqm so it cannot look at the
 * unitary's entries.
 */
class CouplingOracle {
  public:
    explicit CouplingOracle(std::shared_ptr<const Rqm> model) : model_(std::move(model)) {
        if (!model_) {
            throw std::invalid_argument("CouplingOracle: null model");
        }
    }
    explicit CouplingOracle(Rqm model)
        : CouplingOracle(std::make_shared<const Rqm>(std::move(model))) {}

    [[nodiscard]] int n_mem() const { return model_->n_mem(); }
    [[nodiscard]] Index d_out() const { return model_->d_out(); }
    [[nodiscard]] Index mem_dim() const { return model_->mem_dim(); }

    [[nodiscard]] StateVector apply(const StateVector &joint) const {
        if (joint.size() != model_->dim()) {
            throw DimensionError("CouplingOracle::apply: dimension mismatch");
        }
        return model_->unitary() * joint;
    }

    /// U (mem ⊗ |0>_out).
    [[nodiscard]] StateVector apply_fresh_output(const StateVector &mem) const {
        return apply(kron(mem, basis_state(d_out(), 0)));
    }

  private:
    std::shared_ptr<const Rqm> model_;
};

struct KrausFamily {
    std::vector<ComplexMatrix> ops;

    [[nodiscard]] Index dim() const { return ops.empty() ? 0 : ops.front().rows(); }
    [[nodiscard]] Index size() const { return static_cast<Index>(ops.size()); }

    /// ‖Σ_x A^x† A^x − I‖_F
    [[nodiscard]] double completeness_error() const {
        ComplexMatrix acc = ComplexMatrix::Zero(dim(), dim());
        for (const auto &a : ops) {
            acc += a.adjoint() * a;
        }
        return (acc - ComplexMatrix::Identity(dim(), dim())).norm();
    }

    /// Channel rho -> Σ_x A^x rho A^x†.
    [[nodiscard]] DensityMatrix apply_channel(const DensityMatrix &rho) const {
        DensityMatrix out = DensityMatrix::Zero(dim(), dim());
        for (const auto &a : ops) {
            out += a * rho * a.adjoint();
        }
        return out;
    }

    /// Row-major superoperator Σ_x A^x ⊗ conj(A^x).
    [[nodiscard]] ComplexMatrix superoperator() const {
        const Index d = dim();
        ComplexMatrix s = ComplexMatrix::Zero(d * d, d * d);
        for (const auto &a : ops) {
            s += kron(a, a.conjugate());
        }
        return s;
    }
};

/// A^x(i, j) = U((i, x), (j, 0)) for joint layout [memory, output].
inline KrausFamily kraus_from_unitary(const ComplexMatrix &u, Index mem_dim, Index d_out) {
    if (u.rows() != mem_dim * d_out || u.cols() != mem_dim * d_out) {
        throw DimensionError("kraus_from_unitary: dimension mismatch");
    }
    KrausFamily k;
    k.ops.assign(static_cast<std::size_t>(d_out), ComplexMatrix::Zero(mem_dim, mem_dim));
    for (Index x = 0; x < d_out; ++x) {
        auto &a = k.ops[static_cast<std::size_t>(x)];
        for (Index i = 0; i < mem_dim; ++i) {
            for (Index j = 0; j < mem_dim; ++j) {
                a(i, j) = u(i * d_out + x, j * d_out);
            }
        }
    }
    return k;
}

inline KrausFamily kraus_from_unitary(const Rqm &model) {
    return kraus_from_unitary(model.unitary(), model.mem_dim(), model.d_out());
}

struct StepOutcome {
    int symbol = 0;
    StateVector memory;
    double probability = 0.0;
};

namespace detail {

inline int draw_symbol(const std::vector<double> &probs, Rng &rng) {
    double total = 0.0;
    for (double p : probs) {
        total += p;
    }
    if (total < 1e-14) {
        throw NumericalError("step: all outcome probabilities vanish");
    }
    const double u = rng.uniform() * total;
    double acc = 0.0;
    int last_nonzero = 0;
    for (std::size_t x = 0; x < probs.size(); ++x) {
        if (probs[x] > 0.0) {
            last_nonzero = static_cast<int>(x);
        }
        acc += probs[x];
        if (u < acc) {
            return static_cast<int>(x);
        }
    }
    return last_nonzero;
}

} // namespace detail

/// One measure-and-reset step using the Kraus operators.
inline StepOutcome step(const KrausFamily &kraus, const StateVector &mem, Rng &rng) {
    std::vector<StateVector> branches;
    std::vector<double> probs;
    branches.reserve(kraus.ops.size());
    probs.reserve(kraus.ops.size());
    for (const auto &a : kraus.ops) {
        branches.push_back(a * mem);
        probs.push_back(branches.back().squaredNorm());
    }
    const int x = detail::draw_symbol(probs, rng);
    const auto ux = static_cast<std::size_t>(x);
    return {x, branches[ux] / std::sqrt(probs[ux]), probs[ux]};
}

/// One measure-and-reset step through the apply-only oracle.
inline StepOutcome step(const CouplingOracle &model, const StateVector &mem, Rng &rng) {
    const StateVector joint = model.apply_fresh_output(mem);
    const Index d = model.d_out();
    const Index m = model.mem_dim();
    std::vector<double> probs(static_cast<std::size_t>(d), 0.0);
    for (Index i = 0; i < m; ++i) {
        for (Index x = 0; x < d; ++x) {
            probs[static_cast<std::size_t>(x)] += std::norm(joint(i * d + x));
        }
    }
    const int x = detail::draw_symbol(probs, rng);
    StateVector next(m);
    for (Index i = 0; i < m; ++i) {
        next(i) = joint(i * d + x);
    }
    const double p = probs[static_cast<std::size_t>(x)];
    return {x, next / std::sqrt(p), p};
}

struct MemoryEnsemble {
    int n_mem = 0;
    Index d_out = 0;
    std::uint64_t seed = 0;
    int burn_in = 0;
    std::vector<StateVector> states;
    std::vector<std::vector<int>> histories;

    [[nodiscard]] std::size_t size() const { return states.size(); }

    /// (1/K) Σ |s_i><s_i|
    [[nodiscard]] DensityMatrix average_density() const {
        const Index dim = Index{1} << n_mem;
        DensityMatrix rho = DensityMatrix::Zero(dim, dim);
        for (const auto &s : states) {
            rho += s * s.adjoint();
        }
        if (!states.empty()) {
            rho /= static_cast<double>(states.size());
        }
        return rho;
    }
};

/**
 * @brief Sample k memory states by running independent trajectories from |0>.
 *
 * Trajectory t draws from Rng(seed).split(t), so the result does not depend
 * on the worker count.
 */
inline MemoryEnsemble sample_memory_ensemble(const CouplingOracle &model, std::size_t k,
                                             int burn_in, std::uint64_t seed,
                                             unsigned workers = 1) {
    if (burn_in < 1) {
        throw std::invalid_argument("sample_memory_ensemble: burn_in must be >= 1");
    }
    MemoryEnsemble ens;
    ens.n_mem = model.n_mem();
    ens.d_out = model.d_out();
    ens.seed = seed;
    ens.burn_in = burn_in;
    ens.states.resize(k);
    ens.histories.resize(k);
    const Rng root(seed);
    parallel_for(
        k,
        [&](std::size_t t) {
            Rng rng = root.split(t);
            StateVector mem = basis_state(model.mem_dim(), 0);
            std::vector<int> history;
            history.reserve(static_cast<std::size_t>(burn_in));
            for (int s = 0; s < burn_in; ++s) {
                StepOutcome o = step(model, mem, rng);
                history.push_back(o.symbol);
                mem = std::move(o.memory);
            }
            ens.states[t] = std::move(mem);
            ens.histories[t] = std::move(history);
        },
        workers);
    return ens;
}

inline MemoryEnsemble sample_memory_ensemble(const Rqm &model, std::size_t k, int burn_in,
                                             std::uint64_t seed, unsigned workers = 1) {
    return sample_memory_ensemble(CouplingOracle(model), k, burn_in, seed, workers);
}

struct StationaryState {
    DensityMatrix rho;
    /// More than one eigenvalue-1 eigenmatrix; rho is the one reached from |0><0|.
    bool degenerate = false;
    double residual = 0.0;
};

/**
 * @brief Fixed point of rho -> Σ_x A^x rho A^x†.
 *
 * Unique fixed point: eigenvector of the superoperator at eigenvalue 1.
 * Degenerate: lazy power iteration (ε + id)/2 started from `start`, which
 * suppresses the other unit-modulus eigenvalues of periodic channels.
 */
inline StationaryState exact_stationary(const KrausFamily &kraus,
                                        const DensityMatrix *start = nullptr) {
    const Index d = kraus.dim();
    const ComplexMatrix s = kraus.superoperator();
    Eigen::ComplexEigenSolver<ComplexMatrix> es(s, true);
    if (es.info() != Eigen::Success) {
        throw NumericalError("exact_stationary: eigensolve failed");
    }
    std::vector<Index> unit;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
        if (std::abs(es.eigenvalues()(i) - 1.0) < 1e-8) {
            unit.push_back(i);
        }
    }
    StationaryState out;
    if (unit.size() == 1) {
        const StateVector v = es.eigenvectors().col(unit.front());
        out.rho = normalize_density(unvec_rowmajor(v, d, d));
        // One polishing application keeps the residual at round-off level.
        out.rho = normalize_density(kraus.apply_channel(out.rho));
    } else {
        out.degenerate = true;
        DensityMatrix rho = start ? *start : projector(basis_state(d, 0));
        for (int it = 0; it < 200000; ++it) {
            const DensityMatrix next = 0.5 * (rho + kraus.apply_channel(rho));
            const double change = (next - rho).norm();
            rho = next;
            if (change < 1e-15) {
                break;
            }
        }
        out.rho = normalize_density(rho);
    }
    out.residual = (kraus.apply_channel(out.rho) - out.rho).norm();
    return out;
}

/// Quantum statistical complexity: von Neumann entropy of the stationary memory, bits.
inline double cq(const DensityMatrix &rho_m) { return von_neumann_entropy(rho_m); }

} // namespace vqdr
