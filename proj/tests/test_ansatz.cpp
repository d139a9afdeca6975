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

#include <numbers>

#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "vqdr/ansatz.hpp"

using namespace vqdr;
using Catch::Matchers::WithinAbs;

namespace {

ParamVector random_angles(Index n, Rng &rng) {
    ParamVector t(n);
    for (Index i = 0; i < n; ++i) {
        t(i) = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    return t;
}

} // namespace

TEST_CASE("parameter count table", "[ansatz]") {
    // n(3 + 9L) - 6L, tabulated by hand for a few entries.
    CHECK(param_count({1, 0}) == 3);
    CHECK(param_count({1, 4}) == 15);
    CHECK(param_count({2, 1}) == 18);
    CHECK(param_count({3, 2}) == 51);
    CHECK(param_count({5, 4}) == 171);
    for (int n = 1; n <= 5; ++n) {
        for (int l = 0; l <= 4; ++l) {
            CHECK(param_count({n, l}) == n * (3 + 9 * l) - 6 * l);
            const GateCounts g = count_gates({n, l});
            CHECK(3 * g.u3 == param_count({n, l}));
            CHECK(g.cnot == static_cast<Index>(l) * (n - 1));
        }
    }
}

TEST_CASE("circuit unitary matches the gate-by-gate oracle", "[ansatz]") {
    Rng rng(1);
    for (int n = 1; n <= 4; ++n) {
        for (int l = 0; l <= 3; ++l) {
            const AnsatzSpec spec{n, l};
            const ParamVector theta = random_angles(param_count(spec), rng);
            const ComplexMatrix u = build_unitary(spec, theta);
            CHECK(is_unitary(u));
            CHECK((u - oracle::circuit(n, l, theta)).norm() < 1e-12);
        }
    }
}

TEST_CASE("zero angles give the identity only without entanglers", "[ansatz]") {
    const AnsatzSpec flat{3, 0};
    CHECK((build_unitary(flat, ParamVector::Zero(param_count(flat))) - ComplexMatrix::Identity(8, 8)).norm() <
          1e-15);
}

TEST_CASE("parameter vector length is checked", "[ansatz]") {
    const AnsatzSpec spec{2, 1};
    CHECK_THROWS_AS(build_unitary(spec, ParamVector::Zero(4)), DimensionError);
}

TEST_CASE("adjoint backprop equals finite differences", "[ansatz]") {
    Rng rng(2);
    const AnsatzSpec spec{3, 2};
    const ParamVector theta = random_angles(param_count(spec), rng);
    const ComplexMatrix x = random_complex_matrix(8, 2, rng);
    const ComplexMatrix target = random_complex_matrix(8, 2, rng);
    // C = |Tr[T† y]|² with y = U x has ∂C/∂conj(y) = T · Tr[T† y].
    auto cost = [&](const ParamVector &t) {
        ComplexMatrix y = x;
        apply_circuit(spec, t, y);
        return std::norm((target.adjoint() * y).trace());
    };
    ComplexMatrix y = x;
    apply_circuit(spec, theta, y);
    const Complex tr = (target.adjoint() * y).trace();
    const ComplexMatrix g = target * tr;
    const ParamVector adj = circuit_backprop(spec, theta, y, g);
    const ParamVector fd = finite_difference_gradient(cost, theta, 1e-6);
    CHECK((adj - fd).norm() / fd.norm() < 1e-7);
}

TEST_CASE("two-term shift rule is exact on single-frequency costs", "[ansatz]") {
    Rng rng(3);
    const AnsatzSpec spec{2, 2};
    const ParamVector theta = random_angles(param_count(spec), rng);
    const ComplexMatrix obs = [&] {
        const ComplexMatrix m = random_complex_matrix(4, 4, rng);
        return ComplexMatrix(m + m.adjoint());
    }();
    const StateVector psi0 = basis_state(4, 0);
    auto expval = [&](const ParamVector &t) {
        const StateVector psi = build_unitary(spec, t) * psi0;
        return psi.dot(obs * psi).real();
    };
    const ParamVector shift = parameter_shift_gradient(expval, theta);
    const ParamVector fd = finite_difference_gradient(expval, theta);
    CHECK((shift - fd).norm() / fd.norm() < 1e-8);
    CHECK((gradient(spec, theta, expval) - shift).norm() < 1e-14);
}

TEST_CASE("generalized shift rule handles degree-two terms", "[ansatz]") {
    // f(θ) = cos(2θ) + sin θ needs R = 2.
    auto f = [](const ParamVector &t) { return std::cos(2.0 * t(0)) + std::sin(t(0)) * std::cos(t(1)); };
    ParamVector theta(2);
    theta << 0.7, -1.3;
    ParamVector exact(2);
    exact << -2.0 * std::sin(1.4) + std::cos(0.7) * std::cos(-1.3), -std::sin(0.7) * std::sin(-1.3);
    CHECK((parameter_shift_gradient(f, theta, 2) - exact).norm() < 1e-13);
    CHECK((parameter_shift_gradient(f, theta, 1) - exact).norm() > 1e-2);
}

TEST_CASE("initializations stay in their ranges", "[ansatz]") {
    Rng rng(4);
    const AnsatzSpec spec{3, 3};
    const ParamVector near = init_params(spec, rng, InitMode::NearIdentity);
    const ParamVector full = init_params(spec, rng, InitMode::UniformFull);
    CHECK(near.size() == param_count(spec));
    CHECK(near.cwiseAbs().maxCoeff() <= 0.1);
    CHECK(full.minCoeff() >= 0.0);
    CHECK(full.maxCoeff() < 2.0 * std::numbers::pi);
    CHECK(full.cwiseAbs().maxCoeff() > 0.1);
}
