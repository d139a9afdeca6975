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

#include "vqdr/lbfgs.hpp"

using namespace vqdr;
using Catch::Matchers::WithinAbs;

TEST_CASE("quadratic bowl converges to the exact minimizer", "[lbfgs]") {
    RealMatrix a(3, 3);
    a << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
    RealVector b(3);
    b << 1, -2, 0.5;
    auto fg = [&](const RealVector &x, RealVector &g) {
        g = a * x - b;
        return 0.5 * x.dot(a * x) - b.dot(x);
    };
    const LbfgsResult r = lbfgs_minimize(fg, RealVector::Zero(3));
    CHECK(is_converged(r.reason));
    CHECK((r.x - a.ldlt().solve(b)).norm() < 1e-6);
}

TEST_CASE("Rosenbrock valley", "[lbfgs]") {
    auto fg = [](const RealVector &x, RealVector &g) {
        const double a = 1.0 - x(0);
        const double b = x(1) - x(0) * x(0);
        g.resize(2);
        g(0) = -2.0 * a - 400.0 * x(0) * b;
        g(1) = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
    RealVector x0(2);
    x0 << -1.2, 1.0;
    LbfgsOptions opt;
    opt.tol_cost = 1e-14;
    const LbfgsResult r = lbfgs_minimize(fg, x0, opt);
    CHECK(is_converged(r.reason));
    CHECK_THAT(r.x(0), WithinAbs(1.0, 1e-4));
    CHECK_THAT(r.x(1), WithinAbs(1.0, 1e-4));
    // The recorded trace never increases.
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
        CHECK(r.trace[i] <= r.trace[i - 1]);
    }
}

TEST_CASE("stopping rules", "[lbfgs]") {
    auto fg = [](const RealVector &x, RealVector &g) {
        g = 2.0 * x;
        return x.squaredNorm();
    };
    RealVector x0 = RealVector::Constant(4, 3.0);

    LbfgsOptions target;
    target.target_cost = 1.0;
    CHECK(lbfgs_minimize(fg, x0, target).reason == StopReason::TargetReached);

    LbfgsOptions cap;
    cap.max_iter = 0;
    const LbfgsResult capped = lbfgs_minimize(fg, x0, cap);
    CHECK(capped.reason == StopReason::IterationCap);
    CHECK_FALSE(is_converged(capped.reason));
    CHECK(to_string(capped.reason) == "iteration-cap");
}

TEST_CASE("line search failure is reported", "[lbfgs]") {
    // Gradient points the wrong way: no descent step exists along -g.
    auto fg = [](const RealVector &x, RealVector &g) {
        g = -2.0 * x;
        return x.squaredNorm();
    };
    const LbfgsResult r = lbfgs_minimize(fg, RealVector::Constant(2, 1.0));
    CHECK(r.reason == StopReason::LineSearchFailure);
    CHECK_FALSE(is_converged(r.reason));
}
