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
 * @file qfdr.hpp
 * Fidelity divergence rate between two uniform MPS processes.
 *
 * Processes are compared through their output-register density matrices
 * ρ_L, σ_L under the cosine similarity Tr[ρσ]/√(Tr ρ² Tr σ²). The per-step
 * decay of each trace is the leading eigenvalue of a doubled transfer
 * operator, which factorizes as E ⊗ conj(E) with E = Σ_x A^x ⊗ conj(B^x).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qcore.hpp"
#include "rqm.hpp"

namespace vqdr {

struct UniformMps {
    std::vector<ComplexMatrix> tensors;

    UniformMps() = default;
    explicit UniformMps(std::vector<ComplexMatrix> t) : tensors(std::move(t)) {
        if (tensors.empty()) {
            throw DimensionError("UniformMps: no tensors");
        }
        const Index d = tensors.front().rows();
        for (const auto &a : tensors) {
            if (a.rows() != d || a.cols() != d) {
                throw DimensionError("UniformMps: tensors must be square with equal bond");
            }
        }
    }

    [[nodiscard]] Index bond_dim() const { return tensors.empty() ? 0 : tensors.front().rows(); }
    [[nodiscard]] Index d_out() const { return static_cast<Index>(tensors.size()); }

    [[nodiscard]] double completeness_error() const {
        return KrausFamily{tensors}.completeness_error();
    }
    [[nodiscard]] KrausFamily kraus() const { return KrausFamily{tensors}; }
};

inline UniformMps mps_from_model(const Rqm &model) {
    return UniformMps(kraus_from_unitary(model).ops);
}

/// Reduced update on [retained (ñ qubits), output].
inline UniformMps mps_from_reduced(const ComplexMatrix &u_tilde, int n_reduced, Index d_out) {
    return UniformMps(kraus_from_unitary(u_tilde, Index{1} << n_reduced, d_out).ops);
}

/// E = Σ_x A^x ⊗ conj(B^x), dimension bond_A · bond_B.
inline ComplexMatrix mixed_transfer(const UniformMps &a, const UniformMps &b) {
    if (a.d_out() != b.d_out()) {
        throw DimensionError("mixed_transfer: output alphabets differ");
    }
    const Index n = a.bond_dim() * b.bond_dim();
    ComplexMatrix e = ComplexMatrix::Zero(n, n);
    for (Index x = 0; x < a.d_out(); ++x) {
        e += kron(a.tensors[static_cast<std::size_t>(x)],
                  b.tensors[static_cast<std::size_t>(x)].conjugate());
    }
    return e;
}

/// T = Σ_{x,x'} (A^x ⊗ conj A^{x'}) ⊗ (B^{x'} ⊗ conj B^x), dimension (bond_A · bond_B)².
inline ComplexMatrix doubled_transfer(const UniformMps &a, const UniformMps &b) {
    if (a.d_out() != b.d_out()) {
        throw DimensionError("doubled_transfer: output alphabets differ");
    }
    const Index da = a.bond_dim();
    const Index db = b.bond_dim();
    if (da * da * db * db > 4096) {
        throw DimensionError("doubled_transfer: too large for an explicit matrix");
    }
    const Index n = da * da * db * db;
    ComplexMatrix t = ComplexMatrix::Zero(n, n);
    for (Index x = 0; x < a.d_out(); ++x) {
        for (Index y = 0; y < a.d_out(); ++y) {
            const auto &ax = a.tensors[static_cast<std::size_t>(x)];
            const auto &ay = a.tensors[static_cast<std::size_t>(y)];
            const auto &bx = b.tensors[static_cast<std::size_t>(x)];
            const auto &by = b.tensors[static_cast<std::size_t>(y)];
            t += kron(kron(ax, ay.conjugate()), kron(by, bx.conjugate()));
        }
    }
    return t;
}

struct QfdrResult {
    double r_f = 0.0;
    double lambda_ab = 0.0;
    double lambda_aa = 0.0;
    double lambda_bb = 0.0;
    bool degenerate = false;
};

namespace detail {

struct LeadingMagnitude {
    double magnitude_sq = 0.0;
    bool degenerate = false;
};

inline LeadingMagnitude leading_squared(const UniformMps &a, const UniformMps &b) {
    const Eigenpair ep = leading_eigenpair(mixed_transfer(a, b));
    const double m = std::abs(ep.value);
    return {m * m, ep.degenerate_magnitude};
}

} // namespace detail

inline double rate_from_eigenvalues(double lambda_ab, double lambda_aa, double lambda_bb) {
    if (lambda_ab < 1e-300) {
        return std::numeric_limits<double>::infinity();
    }
    // Nonnegative by Cauchy-Schwarz; only rounding can push it below zero.
    return std::max(0.0, -0.5 * (std::log2(lambda_ab) - 0.5 * (std::log2(lambda_aa) + std::log2(lambda_bb))));
}

/**
 * @brief Asymptotic divergence rate in bits per step.
 *
 * λ_AB = |μ_AB|² with μ_AB the leading eigenvalue of E_AB; the leading
 * eigenvalue of the doubled transfer operator is exactly this value.
 * Returns +∞ when λ_AB underflows 1e-300.
 */
inline QfdrResult qfdr(const UniformMps &a, const UniformMps &b) {
    if (a.d_out() != b.d_out()) {
        throw DimensionError("qfdr: output alphabets differ");
    }
    const auto ab = detail::leading_squared(a, b);
    const auto aa = detail::leading_squared(a, a);
    const auto bb = detail::leading_squared(b, b);
    QfdrResult r;
    r.lambda_ab = ab.magnitude_sq;
    r.lambda_aa = aa.magnitude_sq;
    r.lambda_bb = bb.magnitude_sq;
    r.degenerate = ab.degenerate || aa.degenerate || bb.degenerate;
    r.r_f = rate_from_eigenvalues(r.lambda_ab, r.lambda_aa, r.lambda_bb);
    return r;
}

// ---------------------------------------------------------------------------

struct BruteForceRate {
    std::vector<double> fidelity; ///< fidelity[L-1] for L = 1..l_max
    std::vector<double> slope;    ///< slope[L-1] = −½(log₂F_{L+1} − log₂F_L), L = 1..l_max−1
};

namespace detail {

// Columns of M with M M† = rho.
inline ComplexMatrix purification(const DensityMatrix &rho) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (rho + rho.adjoint()));
    std::vector<Index> keep;
    for (Index i = 0; i < rho.rows(); ++i) {
        if (es.eigenvalues()(i) > 1e-14) {
            keep.push_back(i);
        }
    }
    ComplexMatrix m(rho.rows(), static_cast<Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
        const Index i = keep[c];
        m.col(static_cast<Index>(c)) = std::sqrt(es.eigenvalues()(i)) * es.eigenvectors().col(i);
    }
    return m;
}

// Row block for each string x_L … x_1 is A_{x_L} ⋯ A_{x_1} M; returned as
// the d^L × (D·rank) matrix Ψ with ρ_L = Ψ Ψ†.
class StringAmplitudes {
  public:
    StringAmplitudes(const UniformMps &mps, const DensityMatrix &boundary)
        : mps_(mps), blocks_{purification(boundary)} {}

    void extend() {
        std::vector<ComplexMatrix> next;
        next.reserve(blocks_.size() * static_cast<std::size_t>(mps_.d_out()));
        for (const auto &blk : blocks_) {
            for (const auto &a : mps_.tensors) {
                next.push_back(a * blk);
            }
        }
        blocks_ = std::move(next);
    }

    [[nodiscard]] ComplexMatrix psi() const {
        const Index rows = static_cast<Index>(blocks_.size());
        const Index d = blocks_.front().rows();
        const Index r = blocks_.front().cols();
        ComplexMatrix out(rows, d * r);
        for (Index s = 0; s < rows; ++s) {
            const auto &blk = blocks_[static_cast<std::size_t>(s)];
            for (Index i = 0; i < d; ++i) {
                out.block(s, i * r, 1, r) = blk.row(i);
            }
        }
        return out;
    }

  private:
    const UniformMps &mps_;
    std::vector<ComplexMatrix> blocks_;
};

} // namespace detail

/**
 * @brief Finite-L fidelities from explicit output-register states.
 *
 * Boundaries default to each process's own stationary memory state.
 */
inline BruteForceRate brute_force_rate(const UniformMps &a, const UniformMps &b, int l_max,
                                       const DensityMatrix *boundary_a = nullptr,
                                       const DensityMatrix *boundary_b = nullptr) {
    if (a.d_out() != b.d_out()) {
        throw DimensionError("brute_force_rate: output alphabets differ");
    }
    if (l_max < 1) {
        throw std::invalid_argument("brute_force_rate: l_max must be positive");
    }
    const double strings = std::pow(static_cast<double>(a.d_out()), l_max);
    if (strings > 16384.0) {
        throw DimensionError("brute_force_rate: d_out^l_max exceeds 2^14");
    }
    const DensityMatrix rho_a = boundary_a ? *boundary_a : exact_stationary(a.kraus()).rho;
    const DensityMatrix rho_b = boundary_b ? *boundary_b : exact_stationary(b.kraus()).rho;

    detail::StringAmplitudes sa(a, rho_a);
    detail::StringAmplitudes sb(b, rho_b);
    BruteForceRate out;
    for (int l = 1; l <= l_max; ++l) {
        sa.extend();
        sb.extend();
        const ComplexMatrix pa = sa.psi();
        const ComplexMatrix pb = sb.psi();
        const double cross = (pa.adjoint() * pb).squaredNorm();
        const double norm = (pa.adjoint() * pa).norm() * (pb.adjoint() * pb).norm();
        out.fidelity.push_back(cross / norm);
    }
    for (std::size_t l = 0; l + 1 < out.fidelity.size(); ++l) {
        out.slope.push_back(-0.5 * (std::log2(out.fidelity[l + 1]) - std::log2(out.fidelity[l])));
    }
    return out;
}

} // namespace vqdr
