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
 * @file baseline.hpp
 * Variational bond-dimension truncation of a uniform MPS in mixed gauge.
 *
 * Conventions: left-canonical means Σ_x A^x† A^x = I, right-canonical means
 * Σ_x A^x A^x† = I, and A_c^x = A_l^x C = C A_r^x.
 */
#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "parallel.hpp"
#include "qcore.hpp"
#include "qfdr.hpp"
#include "rng.hpp"

namespace vqdr {

struct CanonicalForms {
    std::vector<ComplexMatrix> a_l;
    std::vector<ComplexMatrix> a_r;
    std::vector<ComplexMatrix> a_c;
    ComplexMatrix c;
    /// A_l^x = gauge · A^x · gauge⁻¹ / √λ
    ComplexMatrix gauge;
    double lambda = 1.0;
    bool degenerate = false;

    [[nodiscard]] Index bond_dim() const { return c.rows(); }
    [[nodiscard]] Index d_out() const { return static_cast<Index>(a_l.size()); }

    [[nodiscard]] double left_error() const {
        ComplexMatrix acc = ComplexMatrix::Zero(bond_dim(), bond_dim());
        for (const auto &a : a_l) {
            acc += a.adjoint() * a;
        }
        return (acc - ComplexMatrix::Identity(bond_dim(), bond_dim())).norm();
    }
    [[nodiscard]] double right_error() const {
        ComplexMatrix acc = ComplexMatrix::Zero(bond_dim(), bond_dim());
        for (const auto &a : a_r) {
            acc += a * a.adjoint();
        }
        return (acc - ComplexMatrix::Identity(bond_dim(), bond_dim())).norm();
    }
    /// max_x max(‖A_c − A_l C‖, ‖A_c − C A_r‖)
    [[nodiscard]] double center_error() const {
        double err = 0.0;
        for (std::size_t x = 0; x < a_c.size(); ++x) {
            err = std::max(err, (a_c[x] - a_l[x] * c).norm());
            err = std::max(err, (a_c[x] - c * a_r[x]).norm());
        }
        return err;
    }
};

namespace detail {

inline ComplexMatrix stack_vertical(const std::vector<ComplexMatrix> &ms) {
    const Index r = ms.front().rows();
    ComplexMatrix out(r * static_cast<Index>(ms.size()), ms.front().cols());
    for (std::size_t x = 0; x < ms.size(); ++x) {
        out.middleRows(static_cast<Index>(x) * r, r) = ms[x];
    }
    return out;
}

inline ComplexMatrix stack_horizontal(const std::vector<ComplexMatrix> &ms) {
    const Index c = ms.front().cols();
    ComplexMatrix out(ms.front().rows(), c * static_cast<Index>(ms.size()));
    for (std::size_t x = 0; x < ms.size(); ++x) {
        out.middleCols(static_cast<Index>(x) * c, c) = ms[x];
    }
    return out;
}

inline std::vector<ComplexMatrix> split_vertical(const ComplexMatrix &m, Index parts) {
    const Index r = m.rows() / parts;
    std::vector<ComplexMatrix> out;
    for (Index x = 0; x < parts; ++x) {
        out.emplace_back(m.middleRows(x * r, r));
    }
    return out;
}

inline std::vector<ComplexMatrix> split_horizontal(const ComplexMatrix &m, Index parts) {
    const Index c = m.cols() / parts;
    std::vector<ComplexMatrix> out;
    for (Index x = 0; x < parts; ++x) {
        out.emplace_back(m.middleCols(x * c, c));
    }
    return out;
}

/// Left isometry closest to the stacked family: polar factor of [M^1; …; M^d].
inline std::vector<ComplexMatrix> left_polar(const std::vector<ComplexMatrix> &ms) {
    return split_vertical(polar_unitary(stack_vertical(ms)), static_cast<Index>(ms.size()));
}

/// Right isometry closest to the stacked family: polar factor of [M^1 … M^d].
inline std::vector<ComplexMatrix> right_polar(const std::vector<ComplexMatrix> &ms) {
    return split_horizontal(polar_unitary(stack_horizontal(ms)), static_cast<Index>(ms.size()));
}

// Fixed point of X ↦ Σ A X A† for a left-canonical family, trace 1.
inline ComplexMatrix right_fixed_point(const std::vector<ComplexMatrix> &a_l, bool &degenerate) {
    const KrausFamily k{a_l};
    const Index d = k.dim();
    ComplexMatrix s = ComplexMatrix::Zero(d * d, d * d);
    for (const auto &a : a_l) {
        s += kron(a, a.conjugate());
    }
    Eigen::ComplexEigenSolver<ComplexMatrix> es(s, true);
    std::vector<Index> unit;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
        if (std::abs(es.eigenvalues()(i) - 1.0) < 1e-8) {
            unit.push_back(i);
        }
    }
    if (unit.size() == 1) {
        degenerate = false;
        return normalize_density(unvec_rowmajor(es.eigenvectors().col(unit.front()), d, d));
    }
    degenerate = true;
    return exact_stationary(k, nullptr).rho;
}

} // namespace detail

/**
 * @brief Left, right and mixed canonical forms.
 *
 * Inputs that are not left-canonical are first brought to left-canonical
 * form through the left fixed point of X ↦ Σ A† X A. The right fixed point
 * is then diagonalized, which fixes the gauge up to phases.
 */
inline CanonicalForms canonicalize(const UniformMps &a) {
    const Index d = a.bond_dim();
    const Index n_sym = a.d_out();
    CanonicalForms cf;
    cf.gauge = ComplexMatrix::Identity(d, d);
    std::vector<ComplexMatrix> al = a.tensors;

    if (a.completeness_error() > 1e-10) {
        // Left fixed point of X ↦ Σ A† X A, via the superoperator of the A†.
        ComplexMatrix s = ComplexMatrix::Zero(d * d, d * d);
        for (const auto &t : a.tensors) {
            s += kron(ComplexMatrix(t.adjoint()), ComplexMatrix(t.transpose()));
        }
        const Eigenpair ep = leading_eigenpair(s);
        cf.degenerate = ep.degenerate_magnitude;
        ComplexMatrix l = unvec_rowmajor(ep.vector, d, d);
        l = normalize_density(l) * static_cast<double>(d);
        cf.lambda = std::abs(ep.value);
        const ComplexMatrix root = psd_sqrt(l);
        Eigen::FullPivLU<ComplexMatrix> lu(root);
        if (!lu.isInvertible()) {
            throw NumericalError("canonicalize: singular left fixed point");
        }
        const ComplexMatrix inv = lu.inverse();
        for (auto &t : al) {
            t = root * t * inv / std::sqrt(cf.lambda);
        }
        // Remove the residual non-isometry left by round-off.
        al = detail::left_polar(al);
        cf.gauge = root;
    }

    bool degenerate = false;
    const ComplexMatrix r = detail::right_fixed_point(al, degenerate);
    cf.degenerate = cf.degenerate || degenerate;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (r + r.adjoint()));
    // Descending Schmidt values.
    const ComplexMatrix w = es.eigenvectors().rowwise().reverse();
    const RealVector s = es.eigenvalues().reverse().cwiseMax(0.0);
    const double norm = std::sqrt(s.sum());
    cf.c = (s.cwiseSqrt() / norm).cast<Complex>().asDiagonal();
    cf.gauge = w.adjoint() * cf.gauge;
    for (auto &t : al) {
        t = w.adjoint() * t * w;
    }
    cf.a_l = al;
    cf.a_c.reserve(static_cast<std::size_t>(n_sym));
    std::vector<ComplexMatrix> ca;
    for (const auto &t : al) {
        cf.a_c.push_back(t * cf.c);
        ca.push_back(cf.c.adjoint() * cf.a_c.back());
    }
    cf.a_r = detail::right_polar(ca);
    return cf;
}

/**
 * @brief Mixed transfer Σ_x A^x ⊗ conj(Ã^x) between two canonical families.
 *
 * Left side uses the left-canonical tensors, right side the right-canonical ones.
 */
enum class Side { Left, Right };

inline ComplexMatrix mixed_transfer(const CanonicalForms &a, const CanonicalForms &b, Side side) {
    const auto &fa = side == Side::Left ? a.a_l : a.a_r;
    const auto &fb = side == Side::Left ? b.a_l : b.a_r;
    return mixed_transfer(UniformMps(fa), UniformMps(fb));
}

enum class UpdateRule {
    /// Ã_c ← G_l A_c G_r, C̃ ← G_l C G_r.
    Projected,
    /// Ã_c ← G_l Ã_c G_r, C̃ ← G_l C̃ G_r; only shape-consistent when d̃ = d.
    Literal,
};

struct TruncationState {
    std::vector<ComplexMatrix> a_l;
    std::vector<ComplexMatrix> a_r;
    std::vector<ComplexMatrix> a_c;
    ComplexMatrix c;
    Complex eta{1.0, 0.0};
    ComplexMatrix g_l; ///< d̃ × d
    ComplexMatrix g_r; ///< d × d̃
    double delta = std::numeric_limits<double>::infinity();
    int iteration = 0;
};

/// Frobenius norm of the stacked family Ã_c/η − Ã_l C̃.
inline double delta(const TruncationState &s) {
    double acc = 0.0;
    for (std::size_t x = 0; x < s.a_c.size(); ++x) {
        acc += (s.a_c[x] / s.eta - s.a_l[x] * s.c).squaredNorm();
    }
    return std::sqrt(acc);
}

struct TruncationOptions {
    double delta_thresh = 1e-8;
    int max_iter = 500;
    int restarts = 20;
    UpdateRule rule = UpdateRule::Projected;
    /// Weight of the previous center in each update; 0 is the undamped iteration.
    double damping = 0.3;
    unsigned workers = 1;
};

struct TruncationRun {
    std::uint64_t seed = 0;
    int iterations = 0;
    double final_delta = 0.0;
    double per_site_overlap = 0.0;
    bool converged = false;
    /// Overlap decreased by more than 1e-8 between consecutive iterations.
    int overlap_decreases = 0;
    std::vector<double> overlap_trace;
    UniformMps result;
};

struct TruncationResult {
    Index d = 0;
    Index d_tilde = 0;
    std::uint64_t seed = 0;
    int iterations = 0;
    double final_delta = 0.0;
    double per_site_overlap = 0.0;
    bool converged = false;
    bool degenerate_input = false;
    std::size_t best_restart = 0;
    std::vector<TruncationRun> runs;
    UniformMps mps;
};

namespace detail {

inline TruncationState init_state(const CanonicalForms &guess) {
    TruncationState s;
    s.a_l = guess.a_l;
    s.a_r = guess.a_r;
    s.a_c = guess.a_c;
    s.c = guess.c;
    return s;
}

// Leading eigenpair by power iteration from `start`, dense fallback when the
// iteration stalls (small spectral gap or a tied leading magnitude).
inline Eigenpair leading_warm(const ComplexMatrix &m, const StateVector &start) {
    if (start.size() == m.rows() && start.norm() > 0.0) {
        StateVector v = start.normalized();
        for (int it = 0; it < 300; ++it) {
            StateVector w = m * v;
            const Complex lambda = v.dot(w);
            const double residual = (w - lambda * v).norm();
            if (residual <= 1e-13 * std::max(1.0, std::abs(lambda))) {
                return Eigenpair{lambda, v, false};
            }
            const double nw = w.norm();
            if (nw == 0.0) {
                break;
            }
            v = w / nw;
        }
    }
    return leading_eigenpair(m);
}

// Left gauge G_l (d̃ × d) from Σ Ã_l† G A_l = η G, right gauge G_r (d × d̃)
// from Σ A_r G Ã_r† = η' G.
inline void gauge_step(const CanonicalForms &big, TruncationState &s) {
    const Index d = big.bond_dim();
    const Index dt = s.c.rows();
    const ComplexMatrix el = mixed_transfer(UniformMps(big.a_l), UniformMps(s.a_l));
    const StateVector start_l = s.g_l.size() == d * dt ? vec_rowmajor(s.g_l.transpose()) : StateVector();
    const Eigenpair left = leading_warm(el.transpose(), start_l);
    s.g_l = unvec_rowmajor(left.vector, d, dt).transpose();
    s.eta = left.value;
    const ComplexMatrix er = mixed_transfer(UniformMps(big.a_r), UniformMps(s.a_r));
    const StateVector start_r = s.g_r.size() == d * dt ? vec_rowmajor(s.g_r) : StateVector();
    const Eigenpair right = leading_warm(er, start_r);
    s.g_r = unvec_rowmajor(right.vector, d, dt);
}

inline void center_step(const CanonicalForms &big, TruncationState &s, UpdateRule rule,
                        double damping) {
    std::vector<ComplexMatrix> ac;
    ComplexMatrix c;
    if (rule == UpdateRule::Projected) {
        c = s.g_l * big.c * s.g_r;
        for (const auto &t : big.a_c) {
            ac.push_back(s.g_l * t * s.g_r);
        }
    } else {
        c = s.g_l * s.c * s.g_r;
        for (const auto &t : s.a_c) {
            ac.push_back(s.g_l * t * s.g_r);
        }
    }
    const double scale = c.norm();
    if (scale < 1e-300) {
        throw NumericalError("truncate: vanishing center matrix");
    }
    c /= scale;
    for (auto &t : ac) {
        t /= scale;
    }
    if (damping > 0.0) {
        // Mix with the previous center, phase-aligned; both live in the same
        // small-bond gauge because G_l, G_r were built from the previous tensors.
        const Complex ov = s.c.cwiseProduct(c.conjugate()).sum();
        const Complex ph = std::abs(ov) > 0.0 ? ov / std::abs(ov) : Complex{1.0, 0.0};
        c = (1.0 - damping) * ph * c + damping * s.c;
        for (std::size_t x = 0; x < ac.size(); ++x) {
            ac[x] = (1.0 - damping) * ph * ac[x] + damping * s.a_c[x];
        }
        const double rescale = c.norm();
        c /= rescale;
        for (auto &t : ac) {
            t /= rescale;
        }
    }
    s.c = std::move(c);
    s.a_c = std::move(ac);

    std::vector<ComplexMatrix> left;
    std::vector<ComplexMatrix> right;
    for (const auto &t : s.a_c) {
        left.push_back(t * s.c.adjoint());
        right.push_back(s.c.adjoint() * t);
    }
    s.a_l = left_polar(left);
    s.a_r = right_polar(right);
}

inline TruncationRun truncate_once(const CanonicalForms &big, Index d_tilde, std::uint64_t seed,
                                   const TruncationOptions &opt) {
    Rng rng(seed);
    std::vector<ComplexMatrix> init;
    for (Index x = 0; x < big.d_out(); ++x) {
        init.push_back(random_complex_matrix(d_tilde, d_tilde, rng));
    }
    TruncationState s = init_state(canonicalize(UniformMps(init)));

    TruncationRun run;
    run.seed = seed;
    TruncationState best = s;
    double prev_overlap = -1.0;
    for (int it = 1; it <= opt.max_iter; ++it) {
        gauge_step(big, s);
        center_step(big, s, opt.rule, opt.damping);
        s.iteration = it;
        s.delta = delta(s);
        const double overlap = std::abs(s.eta);
        run.overlap_trace.push_back(overlap);
        if (prev_overlap >= 0.0 && overlap < prev_overlap - 1e-8) {
            ++run.overlap_decreases;
        }
        prev_overlap = overlap;
        if (s.delta < best.delta) {
            best = s;
        }
        if (s.delta < opt.delta_thresh) {
            break;
        }
    }
    // A converged final iterate is also the best; otherwise fall back to it.
    const TruncationState &out = s.delta < opt.delta_thresh ? s : best;
    run.iterations = s.iteration;
    run.final_delta = out.delta;
    run.converged = out.delta < opt.delta_thresh;
    run.result = UniformMps(out.a_l);
    run.per_site_overlap = std::abs(leading_eigenpair(mixed_transfer(UniformMps(big.a_l), run.result)).value);
    return run;
}

} // namespace detail

/**
 * @brief Reduce the bond dimension of `a` to d̃ by alternating gauge updates.
 *
 * Each restart starts from a random complex Gaussian family (canonicalized)
 * drawn from `seed` split by restart index. The restart with the largest
 * per-site overlap wins; its left-canonical tensors are the result.
 */
inline TruncationResult truncate(const UniformMps &a, Index d_tilde, std::uint64_t seed,
                                 const TruncationOptions &opt = {}) {
    if (d_tilde < 1 || d_tilde > a.bond_dim()) {
        throw std::invalid_argument("truncate: need 1 <= d_tilde <= bond dimension");
    }
    if (!(opt.damping >= 0.0 && opt.damping < 1.0)) {
        throw std::invalid_argument("truncate: damping must lie in [0, 1)");
    }
    if (opt.restarts < 1 || opt.max_iter < 1) {
        throw std::invalid_argument("truncate: restarts and max_iter must be positive");
    }
    if (opt.rule == UpdateRule::Literal && d_tilde != a.bond_dim()) {
        throw DimensionError("truncate: literal update needs d_tilde equal to the bond dimension");
    }
    const CanonicalForms big = canonicalize(a);
    const Rng root(seed);
    std::vector<TruncationRun> runs(static_cast<std::size_t>(opt.restarts));
    parallel_for(
        runs.size(),
        [&](std::size_t r) {
            runs[r] = detail::truncate_once(big, d_tilde, root.split(r).seed(), opt);
        },
        opt.workers);

    TruncationResult res;
    res.d = a.bond_dim();
    res.d_tilde = d_tilde;
    res.seed = seed;
    res.degenerate_input = big.degenerate;
    for (std::size_t r = 1; r < runs.size(); ++r) {
        if (runs[r].per_site_overlap > runs[res.best_restart].per_site_overlap) {
            res.best_restart = r;
        }
    }
    const auto &best = runs[res.best_restart];
    res.iterations = best.iterations;
    res.final_delta = best.final_delta;
    res.per_site_overlap = best.per_site_overlap;
    res.converged = best.converged;
    res.mps = best.result;
    res.runs = std::move(runs);
    return res;
}

} // namespace vqdr
