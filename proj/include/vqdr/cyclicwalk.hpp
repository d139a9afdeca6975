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
 * @file cyclicwalk.hpp
 * Discretized random walk on a unit ring and its exact quantum model.
 *
 * Positions are in ring units (circumference 1). Site k sits at k/N and
 * collects the arc |y - k/N| < 1/(2N).
 */
#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "qcore.hpp"
#include "rqm.hpp"

namespace vqdr {

struct WrappedGaussian {
    double mean = 0.0;
    double sigma = 0.1;
};
/// Uniform density on the arc [a, b), with 0 <= a < 1 and a < b <= a + 1.
struct UniformInterval {
    double a = 0.0;
    double b = 1.0;
};
struct PointMass {
    double x0 = 0.0;
};
/// Offset masses given directly, one per site.
struct ShiftTable {
    std::vector<double> probs;
};

using ShiftDistribution = std::variant<WrappedGaussian, UniformInterval, PointMass, ShiftTable>;

inline std::string shift_kind(const ShiftDistribution &q) {
    struct Visitor {
        std::string operator()(const WrappedGaussian &) const { return "wrapped-gaussian"; }
        std::string operator()(const UniformInterval &) const { return "uniform-interval"; }
        std::string operator()(const PointMass &) const { return "point-mass"; }
        std::string operator()(const ShiftTable &) const { return "table"; }
    };
    return std::visit(Visitor{}, q);
}

namespace detail {

inline double frac(double y) { return y - std::floor(y); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Gaussian mass of the ring arc [lo, hi), summed over integer images.
inline double wrapped_gaussian_mass(const WrappedGaussian &g, double lo, double hi) {
    const int images = static_cast<int>(std::ceil(12.0 * g.sigma)) + 2;
    double mass = 0.0;
    for (int j = -images; j <= images; ++j) {
        const double za = (lo + j - g.mean) / g.sigma;
        const double zb = (hi + j - g.mean) / g.sigma;
        if (zb < 0.0) {
            mass += normal_cdf(zb) - normal_cdf(za);
        } else {
            // Upper-tail form keeps precision when both bounds are large.
            mass += normal_cdf(-za) - normal_cdf(-zb);
        }
    }
    return mass;
}

inline double overlap(double a0, double a1, double b0, double b1) {
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

inline double uniform_interval_mass(const UniformInterval &u, double lo, double hi) {
    double len = 0.0;
    for (int j = -2; j <= 2; ++j) {
        len += overlap(u.a, u.b, lo + j, hi + j);
    }
    return len / (u.b - u.a);
}

} // namespace detail

/**
 * @brief Probability that frac(X) lands in the arc of each site offset.
 *
 * Closed forms throughout: erfc differences for the Gaussian (summed over
 * enough images to put the truncation below 1e-30), arc overlap for the
 * uniform interval.
 */
inline std::vector<double> discretize_shift(const ShiftDistribution &q, Index n_sites) {
    if (n_sites < 2 || !is_power_of_two(n_sites)) {
        throw std::invalid_argument("discretize_shift: site count must be a power of two >= 2");
    }
    const auto n = static_cast<std::size_t>(n_sites);
    const double half = 0.5 / static_cast<double>(n_sites);
    std::vector<double> masses(n, 0.0);

    if (const auto *g = std::get_if<WrappedGaussian>(&q)) {
        if (!(g->sigma > 0.0)) {
            throw std::invalid_argument("wrapped-gaussian: sigma must be positive");
        }
        for (std::size_t m = 0; m < n; ++m) {
            const double c = static_cast<double>(m) / static_cast<double>(n_sites);
            masses[m] = detail::wrapped_gaussian_mass(*g, c - half, c + half);
        }
    } else if (const auto *u = std::get_if<UniformInterval>(&q)) {
        if (!(u->a >= 0.0 && u->a < 1.0 && u->b > u->a && u->b <= u->a + 1.0)) {
            throw std::invalid_argument("uniform-interval: need 0 <= a < 1 and a < b <= a + 1");
        }
        for (std::size_t m = 0; m < n; ++m) {
            const double c = static_cast<double>(m) / static_cast<double>(n_sites);
            masses[m] = detail::uniform_interval_mass(*u, c - half, c + half);
        }
    } else if (const auto *p = std::get_if<PointMass>(&q)) {
        const double y = detail::frac(p->x0);
        const auto m = static_cast<std::size_t>(
                           std::floor(y * static_cast<double>(n_sites) + 0.5)) %
                       n;
        masses[m] = 1.0;
    } else {
        const auto &t = std::get<ShiftTable>(q);
        if (t.probs.size() != n) {
            throw std::invalid_argument("table: expected one mass per site");
        }
        double total = 0.0;
        for (double v : t.probs) {
            if (v < 0.0) {
                throw std::invalid_argument("table: negative mass");
            }
            total += v;
        }
        if (std::abs(total - 1.0) > 1e-12) {
            throw std::invalid_argument("table: masses do not sum to 1");
        }
        masses = t.probs;
    }
    return masses;
}

/// Column-stochastic circulant transitions, p(k, j) = P(next = k | current = j).
struct TransitionMatrix {
    RealMatrix p;

    [[nodiscard]] Index n_sites() const { return p.rows(); }

    [[nodiscard]] double column_sum_error() const {
        return (p.colwise().sum().array() - 1.0).abs().maxCoeff();
    }
    [[nodiscard]] double circulant_error() const {
        const Index n = n_sites();
        double err = 0.0;
        for (Index k = 0; k < n; ++k) {
            for (Index j = 0; j < n; ++j) {
                err = std::max(err, std::abs(p(k, j) - p((k - j + n) % n, 0)));
            }
        }
        return err;
    }
};

inline TransitionMatrix transition_matrix(const std::vector<double> &offset_masses) {
    const auto n = static_cast<Index>(offset_masses.size());
    if (n < 1) {
        throw std::invalid_argument("transition_matrix: empty masses");
    }
    TransitionMatrix t{RealMatrix(n, n)};
    for (Index k = 0; k < n; ++k) {
        for (Index j = 0; j < n; ++j) {
            t.p(k, j) = offset_masses[static_cast<std::size_t>((k - j + n) % n)];
        }
    }
    return t;
}

/// Overlaps of the quantum memory states, G_ij = Σ_k sqrt(p_ki p_kj).
inline ComplexMatrix gram_matrix(const TransitionMatrix &t) {
    const RealMatrix root = t.p.cwiseSqrt();
    return (root.transpose() * root).cast<Complex>();
}

/**
 * @brief Vectors whose overlap matrix is `g`.
 *
 * Column j of Λ^{1/2} W† for g = W Λ W†, eigenvalues descending, so the
 * leading components carry the most weight.
 */
inline std::vector<StateVector> memory_states(const ComplexMatrix &g) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (g + g.adjoint()));
    const RealVector ev = es.eigenvalues();
    if (ev.minCoeff() < -1e-9) {
        throw std::invalid_argument("memory_states: Gram matrix is not PSD");
    }
    const Index n = g.rows();
    // Eigenvalues at rounding level are zero; their square roots would be ~1e-8.
    const double floor = 1e-13 * std::max(1.0, ev.maxCoeff());
    ComplexMatrix b(n, n);
    for (Index r = 0; r < n; ++r) {
        const Index src = n - 1 - r;
        const double lam = ev(src) > floor ? ev(src) : 0.0;
        b.row(r) = std::sqrt(lam) * es.eigenvectors().col(src).adjoint();
    }
    std::vector<StateVector> out;
    out.reserve(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) {
        out.emplace_back(b.col(j));
    }
    return out;
}

/**
 * @brief Exact unitary model: U|σ_j>|0> = Σ_k sqrt(p_kj) |σ_k>|k>.
 *
 * The map is defined on span{|σ_j>|0>} (orthonormalized by pivoted QR with
 * rank tolerance 1e-9) and completed to a unitary on the full space.
 */
inline Rqm build_model(const TransitionMatrix &t) {
    const Index n_sites = t.n_sites();
    const int n_qubits = log2_exact(n_sites);
    const auto states = memory_states(gram_matrix(t));
    const Index dim = n_sites * n_sites;

    ComplexMatrix domain = ComplexMatrix::Zero(dim, n_sites);
    ComplexMatrix image = ComplexMatrix::Zero(dim, n_sites);
    for (Index j = 0; j < n_sites; ++j) {
        const auto &sj = states[static_cast<std::size_t>(j)];
        for (Index m = 0; m < n_sites; ++m) {
            domain(m * n_sites, j) = sj(m);
        }
        for (Index k = 0; k < n_sites; ++k) {
            const double amp = std::sqrt(t.p(k, j));
            if (amp == 0.0) {
                continue;
            }
            const auto &sk = states[static_cast<std::size_t>(k)];
            for (Index m = 0; m < n_sites; ++m) {
                image(m * n_sites + k, j) += amp * sk(m);
            }
        }
    }

    const double gram_mismatch = (image.adjoint() * image - domain.adjoint() * domain).norm();
    if (gram_mismatch > 1e-9) {
        throw NumericalError("build_model: isometry condition violated");
    }

    Eigen::ColPivHouseholderQR<ComplexMatrix> qr(domain);
    qr.setThreshold(1e-9);
    const Index rank = qr.rank();
    const ComplexMatrix q_full = qr.householderQ() * ComplexMatrix::Identity(dim, dim);
    // domain * P = Q_r * R_r, so U Q_r = image * P * pinv(R_r).
    const ComplexMatrix r_r =
        qr.matrixR().topRows(rank).triangularView<Eigen::Upper>().toDenseMatrix();
    const ComplexMatrix yp = image * qr.colsPermutation();
    const ComplexMatrix r_pinv = r_r.adjoint() * (r_r * r_r.adjoint()).inverse();
    ComplexMatrix z = yp * r_pinv;
    const double ortho_err = (z.adjoint() * z - ComplexMatrix::Identity(rank, rank)).norm();
    if (ortho_err > 1e-8) {
        throw NumericalError("build_model: extension is not an isometry");
    }
    z = polar_unitary(z);

    std::vector<StateVector> cols;
    cols.reserve(static_cast<std::size_t>(rank));
    for (Index c = 0; c < rank; ++c) {
        cols.emplace_back(z.col(c));
    }
    const ComplexMatrix z_full = complete_isometry(cols);
    // q_full is unitary and its leading columns are q_r.
    const ComplexMatrix u = z_full * q_full.adjoint();
    return Rqm(n_qubits, n_sites, u);
}

inline TransitionMatrix walk_transitions(const ShiftDistribution &q, int n_qubits) {
    return transition_matrix(discretize_shift(q, Index{1} << n_qubits));
}

inline Rqm walk_model(const ShiftDistribution &q, int n_qubits) {
    return build_model(walk_transitions(q, n_qubits));
}

/// Default walk family of the sweep: wrapped Gaussian, σ = 1/(2N).
inline ShiftDistribution default_walk_shift(int n_qubits) {
    return WrappedGaussian{0.0, 0.5 / static_cast<double>(Index{1} << n_qubits)};
}

} // namespace vqdr
