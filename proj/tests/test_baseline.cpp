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

#include <cmath>

#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "vqdr/baseline.hpp"
#include "vqdr/cyclicwalk.hpp"

using namespace vqdr;
using Catch::Matchers::WithinAbs;

namespace {

UniformMps random_mps(Index bond, Index d, Rng &rng) {
    return UniformMps(kraus_from_unitary(random_unitary(bond * d, rng), bond, d).ops);
}

} // namespace

TEST_CASE("canonical forms satisfy their gauge conditions", "[baseline]") {
    Rng rng(1);
    for (int trial = 0; trial < 5; ++trial) {
        const UniformMps a = random_mps(2 + trial % 3, 2, rng);
        const CanonicalForms cf = canonicalize(a);
        CHECK(cf.left_error() < 1e-10);
        CHECK(cf.right_error() < 1e-10);
        CHECK(cf.center_error() < 1e-10);
        CHECK_THAT(cf.c.norm(), WithinAbs(1.0, 1e-10));
        // The left-canonical tensors describe the same process.
        CHECK(qfdr(a, UniformMps(cf.a_l)).r_f < 1e-10);
        CHECK(qfdr(a, UniformMps(cf.a_r)).r_f < 1e-10);
    }
}

TEST_CASE("full-bond truncation reproduces its input", "[baseline]") {
    Rng rng(2);
    TruncationOptions opt;
    opt.restarts = 3;
    for (const auto &a : {random_mps(3, 2, rng), mps_from_model(walk_model(WrappedGaussian{0.0, 0.125}, 2))}) {
        const TruncationResult t = truncate(a, a.bond_dim(), 4, opt);
        CHECK(t.converged);
        CHECK(t.final_delta < opt.delta_thresh);
        CHECK(qfdr(a, t.mps).r_f <= 1e-10);
        CHECK_THAT(t.per_site_overlap, WithinAbs(1.0, 1e-10));
    }
}

TEST_CASE("reduced truncation converges to a local fidelity maximum", "[baseline]") {
    Rng rng(3);
    const UniformMps a = random_mps(4, 2, rng);
    TruncationOptions opt;
    opt.restarts = 6;
    const TruncationResult t = truncate(a, 2, 9, opt);
    REQUIRE(t.converged);
    CHECK(t.mps.bond_dim() == 2);
    CHECK(t.mps.completeness_error() < 1e-10);
    // Reported overlap equals the oracle per-site fidelity.
    const double f0 = oracle::per_site_fidelity(a.tensors, t.mps.tensors);
    CHECK_THAT(t.per_site_overlap, WithinAbs(f0, 1e-8));
    CHECK_THAT(qfdr(a, t.mps).r_f, WithinAbs(-std::log2(f0), 1e-8));
    // No small perturbation of the truncated tensors does better.
    double gain = -1.0;
    for (int k = 0; k < 30; ++k) {
        std::vector<oracle::Mat> up = t.mps.tensors;
        std::vector<oracle::Mat> down = t.mps.tensors;
        for (std::size_t x = 0; x < up.size(); ++x) {
            const ComplexMatrix d = 1e-4 * random_complex_matrix(2, 2, rng);
            up[x] += d;
            down[x] -= d;
        }
        gain = std::max({gain, oracle::per_site_fidelity(a.tensors, up) - f0,
                         oracle::per_site_fidelity(a.tensors, down) - f0});
    }
    CHECK(gain < 1e-9);
}

TEST_CASE("restarts converge on a random bond-4 input", "[baseline]") {
    Rng rng(4);
    const UniformMps a = random_mps(4, 2, rng);
    const TruncationResult t = truncate(a, 3, 1);
    int converged = 0;
    for (const auto &r : t.runs) {
        converged += r.converged ? 1 : 0;
        CHECK(r.per_site_overlap <= t.per_site_overlap + 1e-12);
    }
    CHECK(converged >= 18);
    CHECK(t.runs.size() == 20);
}

TEST_CASE("more bond dimension never lowers the best overlap", "[baseline]") {
    Rng rng(5);
    const UniformMps a = random_mps(4, 2, rng);
    TruncationOptions opt;
    opt.restarts = 6;
    double prev = 0.0;
    for (Index dt = 1; dt <= 4; ++dt) {
        const double f = truncate(a, dt, 2, opt).per_site_overlap;
        CHECK(f >= prev - 1e-9);
        CHECK(f <= 1.0 + 1e-10);
        prev = f;
    }
    CHECK_THAT(prev, WithinAbs(1.0, 1e-10));
}

TEST_CASE("truncation is deterministic and independent of workers", "[baseline]") {
    Rng rng(6);
    const UniformMps a = random_mps(3, 2, rng);
    TruncationOptions serial;
    serial.restarts = 4;
    TruncationOptions threaded = serial;
    threaded.workers = 3;
    const TruncationResult x = truncate(a, 2, 5, serial);
    const TruncationResult y = truncate(a, 2, 5, threaded);
    CHECK(x.best_restart == y.best_restart);
    CHECK(x.per_site_overlap == y.per_site_overlap);
    for (std::size_t s = 0; s < x.mps.tensors.size(); ++s) {
        CHECK((x.mps.tensors[s] - y.mps.tensors[s]).norm() == 0.0);
    }
}

TEST_CASE("truncation argument checks", "[baseline]") {
    Rng rng(7);
    const UniformMps a = random_mps(3, 2, rng);
    CHECK_THROWS(truncate(a, 0, 1));
    CHECK_THROWS(truncate(a, 4, 1));
    TruncationOptions literal;
    literal.rule = UpdateRule::Literal;
    CHECK_THROWS_AS(truncate(a, 2, 1, literal), DimensionError);
    literal.restarts = 2;
    // The literal update never reads the target's center tensors, so unlike
    // the projected rule it is not expected to recover the input.
    const TruncationResult lit = truncate(a, 3, 1, literal);
    CHECK(lit.runs.size() == 2);
    CHECK(std::isfinite(lit.final_delta));
    CHECK(qfdr(a, truncate(a, 3, 1).mps).r_f < 1e-8);
    TruncationOptions bad;
    bad.damping = 1.0;
    CHECK_THROWS(truncate(a, 2, 1, bad));
}
