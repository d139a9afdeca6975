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

#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "vqdr/rqm.hpp"

using namespace vqdr;
using Catch::Matchers::WithinAbs;

TEST_CASE("Rqm rejects malformed couplings", "[rqm]") {
    Rng rng(1);
    CHECK_THROWS_AS(Rqm(2, 3, random_unitary(12, rng)), DimensionError);
    CHECK_THROWS_AS(Rqm(2, 2, random_unitary(4, rng)), DimensionError);
    CHECK_THROWS_AS(Rqm(1, 2, random_complex_matrix(4, 4, rng)), std::invalid_argument);
    CHECK_NOTHROW(Rqm(1, 2, random_unitary(4, rng)));
}

TEST_CASE("Kraus operators are the output-resolved blocks of U", "[rqm]") {
    Rng rng(2);
    const Rqm model(2, 2, random_unitary(8, rng));
    const KrausFamily k = kraus_from_unitary(model);
    REQUIRE(k.ops.size() == 2);
    CHECK(k.completeness_error() < 1e-12);
    // (I ⊗ <x|) U (I ⊗ |0>) by explicit contraction.
    for (Index x = 0; x < 2; ++x) {
        oracle::Mat bra = oracle::Mat::Zero(1, 2);
        bra(0, x) = 1.0;
        oracle::Mat ket = oracle::Mat::Zero(2, 1);
        ket(0, 0) = 1.0;
        const oracle::Mat ref =
            oracle::kron(oracle::eye(4), bra) * model.unitary() * oracle::kron(oracle::eye(4), ket);
        CHECK((k.ops[static_cast<std::size_t>(x)] - ref).norm() < 1e-13);
    }
}

TEST_CASE("memory channel preserves trace and matches its superoperator", "[rqm]") {
    Rng rng(3);
    const Rqm model(2, 4, random_unitary(16, rng));
    const KrausFamily k = kraus_from_unitary(model);
    const DensityMatrix rho = random_density(4, rng);
    const DensityMatrix out = k.apply_channel(rho);
    CHECK_THAT(out.trace().real(), WithinAbs(1.0, 1e-12));
    const StateVector via_super = k.superoperator() * vec_rowmajor(rho);
    CHECK((unvec_rowmajor(via_super, 4, 4) - out).norm() < 1e-12);
}

TEST_CASE("exact stationary state agrees with iterated channel", "[rqm]") {
    Rng rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        const Rqm model(2, 2, random_unitary(8, rng));
        const KrausFamily k = kraus_from_unitary(model);
        const StationaryState st = exact_stationary(k);
        CHECK_FALSE(st.degenerate);
        CHECK(st.residual < 1e-10);
        const oracle::Mat ref = oracle::stationary(k.ops);
        CHECK((st.rho - ref).norm() < 1e-8);
        CHECK_THAT(cq(st.rho), WithinAbs(von_neumann_entropy(ref), 1e-7));
    }
}

TEST_CASE("ensembles are deterministic, normalized, independent of workers", "[rqm]") {
    Rng rng(5);
    const Rqm model(2, 2, random_unitary(8, rng));
    const MemoryEnsemble a = sample_memory_ensemble(model, 16, 10, 42, 1);
    const MemoryEnsemble b = sample_memory_ensemble(model, 16, 10, 42, 3);
    const MemoryEnsemble c = sample_memory_ensemble(model, 16, 10, 43, 1);
    REQUIRE(a.states.size() == 16);
    bool differs = false;
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK_THAT(a.states[i].norm(), WithinAbs(1.0, 1e-12));
        CHECK((a.states[i] - b.states[i]).norm() == 0.0);
        CHECK(a.histories[i] == b.histories[i]);
        CHECK(a.histories[i].size() == 10);
        differs = differs || a.histories[i] != c.histories[i];
    }
    CHECK(differs);
    CHECK_THROWS(sample_memory_ensemble(model, 4, 0, 1));
}

TEST_CASE("ensemble average approaches the stationary state", "[rqm]") {
    Rng rng(6);
    const Rqm model(1, 2, random_unitary(4, rng));
    const MemoryEnsemble ens = sample_memory_ensemble(model, 4000, 30, 7);
    const DensityMatrix avg = ens.average_density();
    const DensityMatrix rho = exact_stationary(kraus_from_unitary(model)).rho;
    CHECK(trace_distance(avg, rho) < 0.05);
}

TEST_CASE("oracle view applies the coupling", "[rqm]") {
    Rng rng(8);
    const Rqm model(1, 2, random_unitary(4, rng));
    const CouplingOracle o(model);
    const StateVector mem = random_state(2, rng);
    const StateVector ref = model.unitary() * oracle::kron(mem, basis_state(2, 0));
    CHECK((o.apply_fresh_output(mem) - ref).norm() < 1e-14);
    CHECK_THROWS_AS(o.apply(StateVector::Zero(3)), DimensionError);
}
