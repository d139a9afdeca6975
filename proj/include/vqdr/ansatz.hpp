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
 * @file ansatz.hpp
 * Layered U3 + CNOT circuit used for both the decoupling and the reduced
 * update unitaries.
 *
 * Structure: one U3 row on every qubit, then per layer a U3 row followed by
 * a nearest-neighbour chain of blocks CNOT(c, t) · (U3_c ⊗ U3_t). Odd layers
 * run the chain (0,1), (1,2), ...; even layers run (n-1,n-2), ..., (1,0).
 * Each U3 consumes three consecutive angles (θ, φ, λ) in gate order.
 */
#pragma once

#include <array>
#include <functional>
#include <numbers>
#include <vector>

#include "qcore.hpp"
#include "rng.hpp"

namespace vqdr {

using ParamVector = RealVector;

struct AnsatzSpec {
    int n_qubits = 1;
    int n_layers = 0;

    [[nodiscard]] Index dim() const { return Index{1} << n_qubits; }
    bool operator==(const AnsatzSpec &) const = default;
};

/// n(3 + 9L) − 6L
constexpr Index param_count(const AnsatzSpec &spec) {
    return static_cast<Index>(spec.n_qubits) * (3 + 9 * static_cast<Index>(spec.n_layers)) -
           6 * static_cast<Index>(spec.n_layers);
}

struct Gate {
    enum class Kind { U3, CNOT };
    Kind kind;
    int q0;         // U3 target, or CNOT control
    int q1 = -1;    // CNOT target
    Index offset = -1; // first angle for U3
};

inline std::vector<Gate> circuit_gates(const AnsatzSpec &spec) {
    if (spec.n_qubits < 1 || spec.n_layers < 0) {
        throw std::invalid_argument("AnsatzSpec: need n_qubits >= 1 and n_layers >= 0");
    }
    std::vector<Gate> gates;
    Index offset = 0;
    auto u3 = [&](int q) {
        gates.push_back({Gate::Kind::U3, q, -1, offset});
        offset += 3;
    };
    const int n = spec.n_qubits;
    for (int q = 0; q < n; ++q) {
        u3(q);
    }
    for (int layer = 1; layer <= spec.n_layers; ++layer) {
        for (int q = 0; q < n; ++q) {
            u3(q);
        }
        const bool ascending = (layer % 2) == 1;
        for (int b = 0; b + 1 < n; ++b) {
            const int c = ascending ? b : n - 1 - b;
            const int t = ascending ? b + 1 : n - 2 - b;
            gates.push_back({Gate::Kind::CNOT, c, t, -1});
            u3(c);
            u3(t);
        }
    }
    return gates;
}

using Mat2 = Eigen::Matrix2cd;

/// U3(θ,φ,λ) = [[cos θ/2, −e^{iλ} sin θ/2], [e^{iφ} sin θ/2, e^{i(φ+λ)} cos θ/2]]
inline Mat2 u3_matrix(double theta, double phi, double lambda) {
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    const Complex el = std::polar(1.0, lambda);
    const Complex ep = std::polar(1.0, phi);
    Mat2 m;
    m << c, -el * s, ep * s, ep * el * c;
    return m;
}

/// Derivatives of U3 with respect to (θ, φ, λ).
inline std::array<Mat2, 3> u3_derivatives(double theta, double phi, double lambda) {
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    const Complex el = std::polar(1.0, lambda);
    const Complex ep = std::polar(1.0, phi);
    const Complex i{0.0, 1.0};
    std::array<Mat2, 3> d;
    d[0] << -0.5 * s, -0.5 * el * c, 0.5 * ep * c, -0.5 * ep * el * s;
    d[1] << 0.0, 0.0, i * ep * s, i * ep * el * c;
    d[2] << 0.0, -i * el * s, 0.0, i * ep * el * c;
    return d;
}

namespace detail {

// Rows of `m` are basis states of n qubits, qubit 0 most significant.
inline void apply_1q(ComplexMatrix &m, const Mat2 &g, int q, int n) {
    const Index stride = Index{1} << (n - 1 - q);
    const Index rows = m.rows();
    const Complex g00 = g(0, 0), g01 = g(0, 1), g10 = g(1, 0), g11 = g(1, 1);
    for (Index c = 0; c < m.cols(); ++c) {
        Complex *col = m.col(c).data();
        for (Index i = 0; i < rows; ++i) {
            if (i & stride) {
                continue;
            }
            const Complex a = col[i];
            const Complex b = col[i + stride];
            col[i] = g00 * a + g01 * b;
            col[i + stride] = g10 * a + g11 * b;
        }
    }
}

inline void apply_cnot(ComplexMatrix &m, int control, int target, int n) {
    const Index cbit = Index{1} << (n - 1 - control);
    const Index tbit = Index{1} << (n - 1 - target);
    for (Index c = 0; c < m.cols(); ++c) {
        Complex *col = m.col(c).data();
        for (Index i = 0; i < m.rows(); ++i) {
            if ((i & cbit) && !(i & tbit)) {
                std::swap(col[i], col[i | tbit]);
            }
        }
    }
}

// m(a, b) = Σ_rest Σ_j lam((rest,a), j) conj(q((rest,b), j)) for qubit `qb`.
inline Mat2 local_contraction(const ComplexMatrix &lam, const ComplexMatrix &q, int qb, int n) {
    const Index stride = Index{1} << (n - 1 - qb);
    Mat2 out = Mat2::Zero();
    for (Index c = 0; c < lam.cols(); ++c) {
        const Complex *l = lam.col(c).data();
        const Complex *p = q.col(c).data();
        for (Index i = 0; i < lam.rows(); ++i) {
            if (i & stride) {
                continue;
            }
            const Index j = i + stride;
            out(0, 0) += l[i] * std::conj(p[i]);
            out(0, 1) += l[i] * std::conj(p[j]);
            out(1, 0) += l[j] * std::conj(p[i]);
            out(1, 1) += l[j] * std::conj(p[j]);
        }
    }
    return out;
}

inline void check_params(const AnsatzSpec &spec, const ParamVector &theta) {
    if (theta.size() != param_count(spec)) {
        throw DimensionError("ansatz: parameter vector has length " +
                             std::to_string(theta.size()) + ", expected " +
                             std::to_string(param_count(spec)));
    }
}

} // namespace detail

/// Left-multiply the columns of `x` by the circuit unitary, in place.
inline void apply_circuit(const AnsatzSpec &spec, const ParamVector &theta, ComplexMatrix &x) {
    detail::check_params(spec, theta);
    if (x.rows() != spec.dim()) {
        throw DimensionError("apply_circuit: row count does not match register");
    }
    for (const Gate &g : circuit_gates(spec)) {
        if (g.kind == Gate::Kind::U3) {
            detail::apply_1q(x, u3_matrix(theta(g.offset), theta(g.offset + 1), theta(g.offset + 2)),
                             g.q0, spec.n_qubits);
        } else {
            detail::apply_cnot(x, g.q0, g.q1, spec.n_qubits);
        }
    }
}

inline ComplexMatrix build_unitary(const AnsatzSpec &spec, const ParamVector &theta) {
    ComplexMatrix u = ComplexMatrix::Identity(spec.dim(), spec.dim());
    apply_circuit(spec, theta, u);
    return u;
}

/**
 * @brief Reverse-mode gradient through the circuit.
 *
 * Given outputs y = U(θ) x (columns) and g = ∂C/∂conj(y) for a real cost C,
 * returns dC/dθ_k = 2 Re Tr[g† ∂y/∂θ_k]. Exact, and equal to the
 * parameter-shift gradient up to round-off. If `input_grad` is given it
 * receives ∂C/∂conj(x).
 */
inline ParamVector circuit_backprop(const AnsatzSpec &spec, const ParamVector &theta,
                                    ComplexMatrix y, ComplexMatrix g,
                                    ComplexMatrix *input_grad = nullptr) {
    detail::check_params(spec, theta);
    if (y.rows() != spec.dim() || g.rows() != y.rows() || g.cols() != y.cols()) {
        throw DimensionError("circuit_backprop: shape mismatch");
    }
    const int n = spec.n_qubits;
    ParamVector grad = ParamVector::Zero(theta.size());
    const auto gates = circuit_gates(spec);
    for (auto it = gates.rbegin(); it != gates.rend(); ++it) {
        const Gate &gate = *it;
        if (gate.kind == Gate::Kind::CNOT) {
            detail::apply_cnot(y, gate.q0, gate.q1, n);
            detail::apply_cnot(g, gate.q0, gate.q1, n);
            continue;
        }
        const double t = theta(gate.offset);
        const double p = theta(gate.offset + 1);
        const double l = theta(gate.offset + 2);
        const Mat2 inv = u3_matrix(t, p, l).adjoint();
        // y now holds the state just before this gate.
        detail::apply_1q(y, inv, gate.q0, n);
        const Mat2 m = detail::local_contraction(g, y, gate.q0, n);
        const auto d = u3_derivatives(t, p, l);
        for (int k = 0; k < 3; ++k) {
            grad(gate.offset + k) = 2.0 * (m.conjugate().cwiseProduct(d[static_cast<std::size_t>(k)])).sum().real();
        }
        detail::apply_1q(g, inv, gate.q0, n);
    }
    if (input_grad != nullptr) {
        // g is now U† g_out, the gradient with respect to conj(x).
        *input_grad = std::move(g);
    }
    return grad;
}

using CostCallback = std::function<double(const ParamVector &)>;

using MultiCallback = std::function<RealVector(const ParamVector &)>;

/**
 * @brief Shift-rule Jacobian, column k = ∂f/∂θ_k.
 *
 * Exact when every component of f is a trigonometric polynomial of degree
 * at most `max_frequency` in each single angle. Uses the 2R equidistant
 * shifts x_μ = (2μ − 1)π/(2R) with weights (−1)^{μ−1} / (4R sin²(x_μ/2)).
 * For R = 1 this is the familiar ±π/2 rule.
 */
inline RealMatrix shift_rule_jacobian(const MultiCallback &f, const ParamVector &theta,
                                      int max_frequency = 1) {
    if (max_frequency < 1) {
        throw std::invalid_argument("shift_rule_jacobian: max_frequency must be positive");
    }
    const int r = max_frequency;
    std::vector<double> shifts;
    std::vector<double> weights;
    for (int mu = 1; mu <= 2 * r; ++mu) {
        const double x = (2.0 * mu - 1.0) * std::numbers::pi / (2.0 * r);
        const double s = std::sin(0.5 * x);
        shifts.push_back(x);
        weights.push_back((mu % 2 == 1 ? 1.0 : -1.0) / (4.0 * r * s * s));
    }
    RealMatrix jac;
    ParamVector probe = theta;
    for (Index k = 0; k < theta.size(); ++k) {
        RealVector col;
        for (std::size_t m = 0; m < shifts.size(); ++m) {
            probe(k) = theta(k) + shifts[m];
            const RealVector v = f(probe);
            if (col.size() == 0) {
                col = RealVector::Zero(v.size());
            }
            col += weights[m] * v;
        }
        probe(k) = theta(k);
        if (jac.size() == 0) {
            jac.resize(col.size(), theta.size());
        }
        jac.col(k) = col;
    }
    return jac;
}

/// Shift-rule gradient of a scalar cost (R = 1 gives shifts ±π/2).
inline ParamVector parameter_shift_gradient(const CostCallback &cost, const ParamVector &theta,
                                            int max_frequency = 1) {
    if (theta.size() == 0) {
        return {};
    }
    const MultiCallback wrapped = [&cost](const ParamVector &p) {
        return RealVector::Constant(1, cost(p));
    };
    return shift_rule_jacobian(wrapped, theta, max_frequency).row(0).transpose();
}

inline ParamVector finite_difference_gradient(const CostCallback &cost, const ParamVector &theta,
                                              double h = 1e-5) {
    ParamVector grad(theta.size());
    ParamVector probe = theta;
    for (Index k = 0; k < theta.size(); ++k) {
        probe(k) = theta(k) + h;
        const double up = cost(probe);
        probe(k) = theta(k) - h;
        const double down = cost(probe);
        probe(k) = theta(k);
        grad(k) = (up - down) / (2.0 * h);
    }
    return grad;
}

/// Parameter-shift gradient of a cost defined on this ansatz's parameters.
inline ParamVector gradient(const AnsatzSpec &spec, const ParamVector &theta,
                            const CostCallback &cost) {
    detail::check_params(spec, theta);
    return parameter_shift_gradient(cost, theta);
}

enum class InitMode { NearIdentity, UniformFull };

/// NearIdentity: i.i.d. uniform on [−0.1, 0.1]; UniformFull: uniform on [0, 2π).
inline ParamVector init_params(const AnsatzSpec &spec, Rng &rng,
                               InitMode mode = InitMode::NearIdentity) {
    ParamVector theta(param_count(spec));
    for (Index k = 0; k < theta.size(); ++k) {
        theta(k) = mode == InitMode::NearIdentity ? rng.uniform(-0.1, 0.1)
                                                  : rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    return theta;
}

/// Gate tallies, for structure checks.
struct GateCounts {
    Index u3 = 0;
    Index cnot = 0;
};

inline GateCounts count_gates(const AnsatzSpec &spec) {
    GateCounts c;
    for (const Gate &g : circuit_gates(spec)) {
        (g.kind == Gate::Kind::U3 ? c.u3 : c.cnot) += 1;
    }
    return c;
}

} // namespace vqdr
