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

#include "vqdr/cyclicwalk.hpp"

using namespace vqdr;
using Catch::Matchers::WithinAbs;

namespace {

// Wrapped normal density integrated with composite Simpson on [lo, hi].
double gaussian_arc_quadrature(double mean, double sigma, double lo, double hi) {
    auto pdf = [&](double y) {
        double acc = 0.0;
        for (int j = -40; j <= 40; ++j) {
            const double z = (y - mean + j) / sigma;
            acc += std::exp(-0.5 * z * z);
        }
        return acc / (sigma * std::sqrt(2.0 * std::numbers::pi));
    };
    const int steps = 4000;
    const double h = (hi - lo) / steps;
    double s = pdf(lo) + pdf(hi);
    for (int i = 1; i < steps; ++i) {
        s += (i % 2 == 1 ? 4.0 : 2.0) * pdf(lo + i * h);
    }
    return s * h / 3.0;
}

std::vector<ShiftDistribution> suite() {
    return {WrappedGaussian{0.0, 0.08}, WrappedGaussian{0.3, 0.25}, UniformInterval{0.1, 0.6},
            PointMass{0.25}};
}

} // namespace

TEST_CASE("gaussian masses agree with quadrature", "[cyclicwalk]") {
    for (const auto &g : {WrappedGaussian{0.0, 0.05}, WrappedGaussian{0.2, 0.3}, WrappedGaussian{0.0, 2.0}}) {
        const auto m = discretize_shift(g, 8);
        for (std::size_t k = 0; k < 8; ++k) {
            const double c = static_cast<double>(k) / 8.0;
            CHECK_THAT(m[k], WithinAbs(gaussian_arc_quadrature(g.mean, g.sigma, c - 1.0 / 16, c + 1.0 / 16), 1e-10));
        }
    }
}

TEST_CASE("discretized masses form a distribution", "[cyclicwalk]") {
    for (const auto &q : suite()) {
        for (Index n : {2, 4, 8, 16}) {
            const auto m = discretize_shift(q, n);
            double total = 0.0;
            for (double v : m) {
                CHECK(v >= 0.0);
                total += v;
            }
            CHECK_THAT(total, WithinAbs(1.0, 1e-12));
        }
    }
}

TEST_CASE("uniform interval covering the ring is flat", "[cyclicwalk]") {
    const auto m = discretize_shift(UniformInterval{0.0, 1.0}, 8);
    for (double v : m) {
        CHECK_THAT(v, WithinAbs(0.125, 1e-14));
    }
    // [0, 0.25) covers site 0 half, sites 1 full, site 2 half.
    const auto q = discretize_shift(UniformInterval{0.0, 0.25}, 8);
    CHECK_THAT(q[0], WithinAbs(0.25, 1e-14));
    CHECK_THAT(q[1], WithinAbs(0.5, 1e-14));
    CHECK_THAT(q[2], WithinAbs(0.25, 1e-14));
}

TEST_CASE("invalid shift parameters are rejected", "[cyclicwalk]") {
    CHECK_THROWS(discretize_shift(WrappedGaussian{0.0, 0.0}, 4));
    CHECK_THROWS(discretize_shift(UniformInterval{0.5, 0.2}, 4));
    CHECK_THROWS(discretize_shift(ShiftTable{{0.5, 0.5}}, 4));
    CHECK_THROWS(discretize_shift(ShiftTable{{0.5, 0.6, -0.1, 0.0}}, 4));
    CHECK_THROWS(discretize_shift(PointMass{0.0}, 3));
}

TEST_CASE("transition matrices are column-stochastic circulants", "[cyclicwalk]") {
    for (const auto &q : suite()) {
        const TransitionMatrix t = walk_transitions(q, 3);
        CHECK(t.column_sum_error() < 1e-12);
        CHECK(t.circulant_error() < 1e-15);
        const auto m = discretize_shift(q, 8);
        for (Index k = 0; k < 8; ++k) {
            for (Index j = 0; j < 8; ++j) {
                CHECK(t.p(k, j) == m[static_cast<std::size_t>((k - j + 8) % 8)]);
            }
        }
    }
}

TEST_CASE("memory states reproduce the Gram matrix", "[cyclicwalk]") {
    const TransitionMatrix t = walk_transitions(WrappedGaussian{0.0, 0.1}, 3);
    const auto states = memory_states(gram_matrix(t));
    for (Index i = 0; i < 8; ++i) {
        for (Index j = 0; j < 8; ++j) {
            double g = 0.0;
            for (Index k = 0; k < 8; ++k) {
                g += std::sqrt(t.p(k, i) * t.p(k, j));
            }
            CHECK_THAT(std::abs(states[static_cast<std::size_t>(i)].dot(states[static_cast<std::size_t>(j)]) - g),
                       WithinAbs(0.0, 1e-12));
        }
    }
}

TEST_CASE("built model realizes the walk on every sector", "[cyclicwalk]") {
    for (int n : {1, 2, 3}) {
        for (const auto &q : suite()) {
            const TransitionMatrix t = walk_transitions(q, n);
            const Rqm model = build_model(t);
            const Index sites = Index{1} << n;
            CHECK(unitarity_error(model.unitary()) < 1e-10);
            const auto states = memory_states(gram_matrix(t));
            for (Index j = 0; j < sites; ++j) {
                StateVector expect = StateVector::Zero(sites * sites);
                for (Index k = 0; k < sites; ++k) {
                    expect += std::sqrt(t.p(k, j)) * kron(states[static_cast<std::size_t>(k)], basis_state(sites, k));
                }
                const StateVector got =
                    model.unitary() * kron(states[static_cast<std::size_t>(j)], basis_state(sites, 0));
                CHECK((got - expect).norm() < 1e-9);
            }
        }
    }
}

TEST_CASE("complexity of limiting walks", "[cyclicwalk]") {
    // Deterministic shift: orthogonal memory states, C_q = n.
    const Rqm perm = walk_model(PointMass{0.25}, 2);
    CHECK_THAT(cq(exact_stationary(kraus_from_unitary(perm)).rho), WithinAbs(2.0, 1e-9));
    // Uniform shift: a single memory state, C_q = 0.
    for (int n : {1, 2, 3}) {
        const Rqm flat = walk_model(UniformInterval{0.0, 1.0}, n);
        CHECK_THAT(cq(exact_stationary(kraus_from_unitary(flat)).rho), WithinAbs(0.0, 1e-9));
    }
}

TEST_CASE("sampled symbol pairs follow the transition matrix", "[cyclicwalk]") {
    const TransitionMatrix t = walk_transitions(WrappedGaussian{0.0, 0.2}, 2);
    const Rqm model = build_model(t);
    const KrausFamily k = kraus_from_unitary(model);
    Rng rng(11);
    StateVector mem = memory_states(gram_matrix(t))[0];
    RealMatrix counts = RealMatrix::Zero(4, 4);
    int prev = -1;
    const int steps = 20000;
    for (int s = 0; s < steps; ++s) {
        const StepOutcome o = step(k, mem, rng);
        if (prev >= 0) {
            counts(o.symbol, prev) += 1.0;
        }
        prev = o.symbol;
        mem = o.memory;
    }
    const RealMatrix freq = counts / counts.sum();
    const RealMatrix expect = t.p / 4.0;
    CHECK(0.5 * (freq - expect).cwiseAbs().sum() < 0.05);
}
