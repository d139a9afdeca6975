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
 * @file qcore.hpp
 * Dense complex linear algebra shared by every other module: Kronecker
 * products, subsystem embedding, partial traces, spectral helpers.
 *
 * Tensor factors are ordered most-significant first, so for a layout with
 * factor dims {d0, d1, d2} the flat index of (i0, i1, i2) is
 * (i0 * d1 + i1) * d2 + i2. Qubit 0 of a register is its leading factor.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vqdr {

using Complex = std::complex<double>;
using Index = Eigen::Index;
using ComplexMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;
using DensityMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr double kNormTol = 1e-10;

/// Thrown when operand shapes are incompatible.
class DimensionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine cannot produce a trustworthy answer.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

inline int log2_exact(Index n) {
    if (!is_power_of_two(n)) {
        throw DimensionError("dimension " + std::to_string(n) +
                             " is not a power of two");
    }
    int k = 0;
    while ((Index{1} << k) < n) {
        ++k;
    }
    return k;
}

/**
 * @brief Partition of a Hilbert space into tensor factors.
 *
 * Factor order is explicit; nothing in the library assumes a convention
 * beyond "first factor is most significant".
 */
struct SubsystemLayout {
    std::vector<Index> dims;

    SubsystemLayout() = default;
    explicit SubsystemLayout(std::vector<Index> factor_dims)
        : dims(std::move(factor_dims)) {
        for (Index d : dims) {
            if (d < 1) {
                throw DimensionError("subsystem dims must be positive");
            }
        }
    }

    [[nodiscard]] Index total() const {
        return std::accumulate(dims.begin(), dims.end(), Index{1},
                               std::multiplies<>());
    }
    [[nodiscard]] std::size_t size() const { return dims.size(); }

    /// Stride of factor k in the flat index.
    [[nodiscard]] Index stride(std::size_t k) const {
        Index s = 1;
        for (std::size_t j = k + 1; j < dims.size(); ++j) {
            s *= dims[j];
        }
        return s;
    }

    /// Layout of `n` qubits.
    static SubsystemLayout qubits(int n) {
        return SubsystemLayout(std::vector<Index>(static_cast<std::size_t>(n), 2));
    }
};

inline ComplexMatrix kron(const ComplexMatrix &a, const ComplexMatrix &b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
                a(i, j) * b;
        }
    }
    return out;
}

inline StateVector kron(const StateVector &a, const StateVector &b) {
    StateVector out(a.size() * b.size());
    for (Index i = 0; i < a.size(); ++i) {
        out.segment(i * b.size(), b.size()) = a(i) * b;
    }
    return out;
}

inline StateVector basis_state(Index dim, Index k) {
    StateVector v = StateVector::Zero(dim);
    v(k) = 1.0;
    return v;
}

inline DensityMatrix projector(const StateVector &psi) {
    return psi * psi.adjoint();
}

namespace detail {

// Flat offsets of every assignment of the listed factors, enumerated
// with the first listed factor most significant.
inline std::vector<Index> factor_offsets(const SubsystemLayout &layout,
                                         std::span<const std::size_t> factors) {
    std::vector<Index> offsets{0};
    for (std::size_t f : factors) {
        const Index stride = layout.stride(f);
        std::vector<Index> next;
        next.reserve(offsets.size() * static_cast<std::size_t>(layout.dims[f]));
        for (Index base : offsets) {
            for (Index v = 0; v < layout.dims[f]; ++v) {
                next.push_back(base + v * stride);
            }
        }
        offsets = std::move(next);
    }
    return offsets;
}

inline std::vector<std::size_t> complement(const SubsystemLayout &layout,
                                           std::span<const std::size_t> chosen) {
    std::vector<bool> used(layout.size(), false);
    for (std::size_t f : chosen) {
        if (f >= layout.size()) {
            throw DimensionError("factor index out of range");
        }
        if (used[f]) {
            throw DimensionError("factor index listed twice");
        }
        used[f] = true;
    }
    std::vector<std::size_t> rest;
    for (std::size_t f = 0; f < layout.size(); ++f) {
        if (!used[f]) {
            rest.push_back(f);
        }
    }
    return rest;
}

} // namespace detail

/**
 * @brief Apply `u` to the listed factors of `state`, identity elsewhere.
 *
 * The target factors are taken in the order given, so `u` acts on the
 * product space targets[0] ⊗ targets[1] ⊗ ...
 */
inline StateVector apply_on_subsystems(const ComplexMatrix &u,
                                       const StateVector &state,
                                       const SubsystemLayout &layout,
                                       std::span<const std::size_t> targets) {
    if (state.size() != layout.total()) {
        throw DimensionError("state dim does not match layout");
    }
    const auto rest = detail::complement(layout, targets);
    const auto inner = detail::factor_offsets(layout, targets);
    const auto outer = detail::factor_offsets(layout, rest);
    const auto block = static_cast<Index>(inner.size());
    if (u.rows() != block || u.cols() != block) {
        throw DimensionError("operator dim does not match target factors");
    }
    StateVector out(state.size());
    StateVector gathered(block);
    for (Index base : outer) {
        for (Index k = 0; k < block; ++k) {
            gathered(k) = state(base + inner[static_cast<std::size_t>(k)]);
        }
        const StateVector moved = u * gathered;
        for (Index k = 0; k < block; ++k) {
            out(base + inner[static_cast<std::size_t>(k)]) = moved(k);
        }
    }
    return out;
}

inline StateVector apply_on_subsystems(const ComplexMatrix &u,
                                       const StateVector &state,
                                       const SubsystemLayout &layout,
                                       std::initializer_list<std::size_t> targets) {
    const std::vector<std::size_t> t(targets);
    return apply_on_subsystems(u, state, layout, std::span<const std::size_t>(t));
}

/// Dense embedding of `u` on `targets`; the reference the fast path is tested against.
inline ComplexMatrix embed_operator(const ComplexMatrix &u,
                                    const SubsystemLayout &layout,
                                    std::span<const std::size_t> targets) {
    const Index dim = layout.total();
    ComplexMatrix full(dim, dim);
    for (Index j = 0; j < dim; ++j) {
        full.col(j) = apply_on_subsystems(u, basis_state(dim, j), layout, targets);
    }
    return full;
}

/// Reduced density matrix on `keep` (in the listed order).
inline DensityMatrix partial_trace(const DensityMatrix &rho,
                                   const SubsystemLayout &layout,
                                   std::span<const std::size_t> keep) {
    if (rho.rows() != layout.total() || rho.cols() != layout.total()) {
        throw DimensionError("density matrix dim does not match layout");
    }
    const auto traced = detail::complement(layout, keep);
    const auto kept = detail::factor_offsets(layout, keep);
    const auto summed = detail::factor_offsets(layout, traced);
    const auto dk = static_cast<Index>(kept.size());
    DensityMatrix out = DensityMatrix::Zero(dk, dk);
    for (Index i = 0; i < dk; ++i) {
        for (Index j = 0; j < dk; ++j) {
            Complex acc{0.0, 0.0};
            const Index ri = kept[static_cast<std::size_t>(i)];
            const Index cj = kept[static_cast<std::size_t>(j)];
            for (Index t : summed) {
                acc += rho(ri + t, cj + t);
            }
            out(i, j) = acc;
        }
    }
    return out;
}

inline DensityMatrix partial_trace(const DensityMatrix &rho,
                                   const SubsystemLayout &layout,
                                   std::initializer_list<std::size_t> keep) {
    const std::vector<std::size_t> k(keep);
    return partial_trace(rho, layout, std::span<const std::size_t>(k));
}

inline double purity(const DensityMatrix &rho) {
    // Tr[rho^2] = sum |rho_ij|^2 for Hermitian rho.
    return rho.squaredNorm();
}

/// Tr[rho sigma] / sqrt(Tr[rho^2] Tr[sigma^2]), clamped into [0, 1].
inline double cosine_similarity(const DensityMatrix &rho,
                                const DensityMatrix &sigma) {
    if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols()) {
        throw DimensionError("cosine_similarity: dimension mismatch");
    }
    const double pr = purity(rho);
    const double ps = purity(sigma);
    if (pr < 1e-300 || ps < 1e-300) {
        throw std::domain_error("cosine_similarity: zero-purity input");
    }
    const double overlap = (rho.transpose().cwiseProduct(sigma)).sum().real();
    return std::clamp(overlap / std::sqrt(pr * ps), 0.0, 1.0);
}

/// Eigenvalues of a Hermitian matrix, ascending, with [-1e-9, 0) clamped to 0.
inline RealVector hermitian_eigenvalues(const DensityMatrix &rho) {
    const DensityMatrix h = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h, Eigen::EigenvaluesOnly);
    RealVector ev = es.eigenvalues();
    for (Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < 0.0 && ev(i) >= -1e-9) {
            ev(i) = 0.0;
        }
    }
    return ev;
}

/// Von Neumann entropy in bits.
inline double von_neumann_entropy(const DensityMatrix &rho) {
    const RealVector ev = hermitian_eigenvalues(rho);
    double s = 0.0;
    for (Index i = 0; i < ev.size(); ++i) {
        if (ev(i) > 1e-12) {
            s -= ev(i) * std::log2(ev(i));
        }
    }
    return std::max(s, 0.0);
}

/// Half the trace norm of rho - sigma.
inline double trace_distance(const DensityMatrix &rho, const DensityMatrix &sigma) {
    const ComplexMatrix diff = rho - sigma;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (diff + diff.adjoint()),
                                                    Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline double unitarity_error(const ComplexMatrix &u) {
    return (u.adjoint() * u - ComplexMatrix::Identity(u.cols(), u.cols())).norm();
}

inline bool is_unitary(const ComplexMatrix &u, double tol = kNormTol) {
    return u.rows() == u.cols() && unitarity_error(u) <= tol;
}

enum class EigenMethod { Dense, Power };

struct Eigenpair {
    Complex value;
    StateVector vector;
    /// Another eigenvalue shares the leading magnitude within 1e-9.
    bool degenerate_magnitude = false;
};

namespace detail {

inline Eigenpair leading_dense(const ComplexMatrix &m) {
    Eigen::ComplexEigenSolver<ComplexMatrix> es(m, true);
    if (es.info() != Eigen::Success) {
        throw NumericalError("leading_eigenpair: dense eigensolve failed");
    }
    const auto &vals = es.eigenvalues();
    Index best = 0;
    for (Index i = 1; i < vals.size(); ++i) {
        if (std::abs(vals(i)) > std::abs(vals(best))) {
            best = i;
        }
    }
    Eigenpair out{vals(best), es.eigenvectors().col(best).normalized(), false};
    const double top = std::abs(vals(best));
    for (Index i = 0; i < vals.size(); ++i) {
        if (i != best && std::abs(std::abs(vals(i)) - top) <= 1e-9 * std::max(1.0, top)) {
            out.degenerate_magnitude = true;
        }
    }
    return out;
}

inline std::optional<Eigenpair> leading_power(const ComplexMatrix &m,
                                              int max_iter) {
    StateVector v = StateVector::Constant(m.rows(), Complex(1.0, 0.3));
    v.normalize();
    Complex lambda{0.0, 0.0};
    for (int it = 0; it < max_iter; ++it) {
        StateVector w = m * v;
        const double nw = w.norm();
        if (nw == 0.0) {
            return Eigenpair{Complex{0.0, 0.0}, v, false};
        }
        lambda = v.dot(w);
        w /= nw;
        const double residual = (m * w - w.dot(m * w) * w).norm();
        v = w;
        if (residual <= 1e-11 * std::max(1.0, std::abs(lambda))) {
            lambda = v.dot(m * v);
            return Eigenpair{lambda, v, false};
        }
    }
    return std::nullopt;
}

} // namespace detail

/**
 * @brief Eigenvalue of largest magnitude and a unit right eigenvector.
 *
 * The dense route is the default. The power route falls back to the dense
 * one when it does not converge (typically a degenerate leading magnitude).
 */
inline Eigenpair leading_eigenpair(const ComplexMatrix &m,
                                   EigenMethod method = EigenMethod::Dense,
                                   int max_iter = 20000) {
    if (m.rows() != m.cols()) {
        throw DimensionError("leading_eigenpair: matrix not square");
    }
    if (m.rows() == 0) {
        throw DimensionError("leading_eigenpair: empty matrix");
    }
    if (method == EigenMethod::Power) {
        if (auto p = detail::leading_power(m, max_iter)) {
            return *p;
        }
    }
    return detail::leading_dense(m);
}

/// Full spectrum (unsorted), for oracles and diagnostics.
inline Eigen::VectorXcd eigenvalues(const ComplexMatrix &m) {
    Eigen::ComplexEigenSolver<ComplexMatrix> es(m, false);
    return es.eigenvalues();
}

/**
 * @brief Extend orthonormal columns to a full unitary.
 *
 * The first k columns of the result equal the inputs; the rest span their
 * orthogonal complement.
 */
inline ComplexMatrix complete_isometry(std::span<const StateVector> columns,
                                       Index dim = -1) {
    if (columns.empty()) {
        if (dim < 1) {
            throw DimensionError("complete_isometry: empty input without dim");
        }
        return ComplexMatrix::Identity(dim, dim);
    }
    const Index d = columns.front().size();
    const auto k = static_cast<Index>(columns.size());
    if (k > d) {
        throw DimensionError("complete_isometry: more columns than dimension");
    }
    ComplexMatrix q(d, k);
    for (Index j = 0; j < k; ++j) {
        if (columns[static_cast<std::size_t>(j)].size() != d) {
            throw DimensionError("complete_isometry: ragged columns");
        }
        q.col(j) = columns[static_cast<std::size_t>(j)];
    }
    const double err = (q.adjoint() * q - ComplexMatrix::Identity(k, k)).norm();
    if (err > kNormTol) {
        throw std::invalid_argument("complete_isometry: columns not orthonormal");
    }
    Eigen::HouseholderQR<ComplexMatrix> qr(q);
    const ComplexMatrix full_q = qr.householderQ() * ComplexMatrix::Identity(d, d);
    ComplexMatrix out(d, d);
    out.leftCols(k) = q;
    out.rightCols(d - k) = full_q.rightCols(d - k);
    return out;
}

inline ComplexMatrix complete_isometry(const std::vector<StateVector> &columns,
                                       Index dim = -1) {
    return complete_isometry(std::span<const StateVector>(columns), dim);
}

/// Unitary factor of the polar decomposition m = U P.
inline ComplexMatrix polar_unitary(const ComplexMatrix &m) {
    Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

/// Hermitian square root of a positive semidefinite matrix.
inline ComplexMatrix psd_sqrt(const ComplexMatrix &m) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (m + m.adjoint()));
    RealVector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

/// Row-major vectorization: vec(X)[i * cols + j] = X(i, j).
inline StateVector vec_rowmajor(const ComplexMatrix &x) {
    StateVector v(x.size());
    for (Index i = 0; i < x.rows(); ++i) {
        for (Index j = 0; j < x.cols(); ++j) {
            v(i * x.cols() + j) = x(i, j);
        }
    }
    return v;
}

inline ComplexMatrix unvec_rowmajor(const StateVector &v, Index rows, Index cols) {
    if (v.size() != rows * cols) {
        throw DimensionError("unvec: size mismatch");
    }
    ComplexMatrix x(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            x(i, j) = v(i * cols + j);
        }
    }
    return x;
}

/// Scale a Hermitian-up-to-phase matrix to a unit-trace density matrix.
inline DensityMatrix normalize_density(const ComplexMatrix &x) {
    const Complex tr = x.trace();
    if (std::abs(tr) < 1e-300) {
        throw NumericalError("normalize_density: zero trace");
    }
    DensityMatrix rho = x / tr;
    return 0.5 * (rho + rho.adjoint());
}

} // namespace vqdr
