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
#include "vqdr/training.hpp"

using namespace vqdr;
using Catch::Matchers::WithinAbs;

namespace {

struct Instance {
    Rqm target;
    ReductionProblem problem;
};

Instance random_instance(Rng &rng, int n, int n_tilde, Index d_out, int v_layers, int u_layers, double alpha,
                         double beta, std::size_t k = 12) {
    Rqm target(n, d_out, random_unitary((Index{1} << n) * d_out, rng));
    MemoryEnsemble ens = sample_memory_ensemble(target, k, 3, rng.split(9).seed());
    ReductionProblem p =
        make_problem(CouplingOracle(target), std::move(ens), n_tilde, v_layers, u_layers, alpha, beta, 5);
    return {std::move(target), std::move(p)};
}

ParamVector angles(Index n, Rng &rng) {
    ParamVector t(n);
    for (Index i = 0; i < n; ++i) {
        t(i) = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    return t;
}

std::vector<oracle::Vec> states_of(const ReductionProblem &p) {
    return {p.ensemble.states.begin(), p.ensemble.states.end()};
}

} // namespace

TEST_CASE("combined cost equals the dense oracle pipeline", "[training]") {
    Rng rng(1);
    for (int trial = 0; trial < 12; ++trial) {
        const int n = 1 + trial % 3;
        const int n_tilde = trial % n;
        const Index d_out = trial % 2 == 0 ? 2 : 4;
        const double alpha = rng.uniform(0.2, 2.0);
        const double beta = rng.uniform(0.2, 2.0);
        const auto inst = random_instance(rng, n, n_tilde, d_out, 1 + trial % 2, 1, alpha, beta);
        const auto &p = inst.problem;
        const ParamVector t1 = angles(param_count(p.v_spec), rng);
        const ParamVector t2 = angles(param_count(p.u_spec), rng);
        const double mine = combined_cost(p, t1, t2);
        const double ref = oracle::combined_cost(
            inst.target.unitary(), states_of(p), n, n_tilde, d_out,
            oracle::circuit(p.v_spec.n_qubits, p.v_spec.n_layers, t1),
            oracle::circuit(p.u_spec.n_qubits, p.u_spec.n_layers, t2), alpha, beta);
        CHECK_THAT(mine, WithinAbs(ref, 1e-10));
    }
}

TEST_CASE("explicit-unitary evaluation agrees with the oracle", "[training]") {
    Rng rng(2);
    const auto inst = random_instance(rng, 3, 1, 2, 2, 2, 1.0, 1.0);
    const auto &p = inst.problem;
    const ComplexMatrix v = random_unitary(8, rng);
    const ComplexMatrix ut = random_unitary(4, rng);
    const CostEvaluator eval(p);
    const CostBreakdown b = eval.evaluate_unitaries(v, ut);
    CHECK_THAT(b.cost, WithinAbs(oracle::combined_cost(inst.target.unitary(), states_of(p), 3, 1, 2, v, ut, 1, 1), 1e-10));
    CHECK_THAT(b.cost, WithinAbs(-(b.d_bar + b.f_bar), 1e-12));
    CHECK(b.d_bar >= 0.0);
    CHECK(b.d_bar <= 1.0);
    CHECK(b.f_bar >= 0.0);
    CHECK(b.f_bar <= 1.0 + 1e-12);
}

TEST_CASE("per-state helpers match the oracle pieces", "[training]") {
    Rng rng(3);
    const ComplexMatrix v = random_unitary(8, rng);
    const StateVector s = random_state(8, rng);
    const StateVector phi = v * s;
    double dec = 0.0;
    for (Index i = 0; i < 2; ++i) {
        dec += std::norm(phi(i * 4));
    }
    CHECK_THAT(decoupling_fidelity(v, s, 1), WithinAbs(dec, 1e-13));
    const DensityMatrix ref = reference_state(v, s, 1, 2);
    const oracle::Mat kept = oracle::trace_middle(phi * phi.adjoint(), 2, 4, 1);
    oracle::Mat p0 = oracle::Mat::Zero(2, 2);
    p0(0, 0) = 1.0;
    CHECK((ref - oracle::kron(kept, p0)).norm() < 1e-13);

    const ComplexMatrix u_tilde = random_unitary(4, rng);
    const StateVector w = random_state(4, rng);
    const DensityMatrix rho = w * w.adjoint() * 0.7 + ref * 0.3;
    CHECK_THAT(dynamical_fidelity(u_tilde, rho, ref),
               WithinAbs(oracle::cosine(rho, u_tilde * ref * u_tilde.adjoint()), 1e-13));
}

TEST_CASE("duplicate and phase-shifted states are merged without changing the cost", "[training]") {
    Rng rng(4);
    Rqm target(2, 2, random_unitary(8, rng));
    MemoryEnsemble ens;
    ens.n_mem = 2;
    ens.d_out = 2;
    const StateVector a = random_state(4, rng);
    const StateVector b = random_state(4, rng);
    ens.states = {a, b, a * std::polar(1.0, 0.7), a, b * std::polar(1.0, -2.0), random_state(4, rng)};
    const ReductionProblem p = make_problem(CouplingOracle(target), ens, 1, 1, 1);
    const CostEvaluator eval(p);
    CHECK(eval.distinct_states() == 3);
    double wsum = 0.0;
    for (double w : eval.weights()) {
        wsum += w;
    }
    CHECK_THAT(wsum, WithinAbs(1.0, 1e-14));
    const ParamVector t1 = angles(param_count(p.v_spec), rng);
    const ParamVector t2 = angles(param_count(p.u_spec), rng);
    const double ref = oracle::combined_cost(target.unitary(), states_of(p), 2, 1, 2,
                                             build_unitary(p.v_spec, t1), build_unitary(p.u_spec, t2), 1, 1);
    CHECK_THAT(eval.evaluate(t1, t2).cost, WithinAbs(ref, 1e-12));
}

TEST_CASE("adjoint, shift-rule and finite-difference gradients agree", "[training]") {
    Rng rng(5);
    for (int trial = 0; trial < 4; ++trial) {
        const auto inst = random_instance(rng, 2 + trial % 2, 1, 2, 1, 1, rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5));
        const CostEvaluator eval(inst.problem);
        const ParamVector x = angles(eval.n_params(), rng);
        ParamVector adj(x.size());
        const double c = eval.cost_and_gradient(x, adj);
        CHECK_THAT(c, WithinAbs(eval.cost(x), 1e-13));
        const ParamVector shift = eval.shift_rule_gradient(x);
        const ParamVector fd = finite_difference_gradient([&](const ParamVector &y) { return eval.cost(y); }, x);
        CHECK((adj - fd).norm() / fd.norm() < 1e-7);
        CHECK((shift - adj).norm() / adj.norm() < 1e-10);
    }
}

TEST_CASE("problem validation", "[training]") {
    Rng rng(6);
    Rqm target(2, 2, random_unitary(8, rng));
    MemoryEnsemble ens = sample_memory_ensemble(target, 4, 2, 1);
    CHECK_THROWS(make_problem(CouplingOracle(target), ens, 2));
    CHECK_THROWS(make_problem(CouplingOracle(target), ens, 1, 1, 1, 0.0));
    MemoryEnsemble empty = ens;
    empty.states.clear();
    CHECK_THROWS(make_problem(CouplingOracle(target), empty, 1));
    MemoryEnsemble wrong = sample_memory_ensemble(Rqm(1, 2, random_unitary(4, rng)), 4, 2, 1);
    CHECK_THROWS_AS(make_problem(CouplingOracle(target), wrong, 1), DimensionError);
}

TEST_CASE("planted models attain the exact optimum with their known decoupler", "[training]") {
    Rng rng(7);
    for (auto [n, k] : {std::pair{2, 1}, std::pair{3, 1}, std::pair{3, 2}}) {
        const AnsatzSpec u_spec{k + 1, 2};
        const ComplexMatrix w = build_unitary(u_spec, angles(param_count(u_spec), rng));
        const PlantedModel pm = make_planted_model(n, k, 2, rng, w);
        CHECK(is_unitary(pm.model.unitary()));
        MemoryEnsemble ens = sample_memory_ensemble(pm.model, 32, 8, 3);
        const ReductionProblem p = make_problem(CouplingOracle(pm.model), ens, k, 2, 2, 1.0, 1.0);
        const CostEvaluator eval(p);
        CHECK_THAT(eval.evaluate_unitaries(pm.decoupler, w).cost, WithinAbs(-2.0, 1e-10));
        CHECK(eval.evaluate_unitaries(ComplexMatrix::Identity(1 << n, 1 << n), w).cost > -2.0 + 1e-6);
    }
}

TEST_CASE("training recovers a small planted compression", "[training]") {
    Rng rng(8);
    const AnsatzSpec u_spec{2, 2};
    const ComplexMatrix w = build_unitary(u_spec, angles(param_count(u_spec), rng));
    const PlantedModel pm = make_planted_model(2, 1, 2, rng, w);
    MemoryEnsemble ens = sample_memory_ensemble(pm.model, 32, 8, 3);
    const ReductionProblem p = make_problem(CouplingOracle(pm.model), ens, 1, 2, 2, 1.0, 1.0, 11);
    TrainOptions opt;
    opt.lbfgs.target_cost = -2.0 + 1e-6;
    const TrainResult r = train(p, opt);
    CHECK(r.final_cost <= -2.0 + 1e-4);
    CHECK(r.converged);
    CHECK(r.starts >= 1);
    CHECK_THAT(r.final_cost, WithinAbs(combined_cost(p, r.theta1, r.theta2), 1e-12));
}

TEST_CASE("training is deterministic and seed-dependent", "[training]") {
    Rng rng(9);
    const auto inst = random_instance(rng, 2, 1, 2, 1, 1, 1.0, 1.0);
    TrainOptions opt;
    opt.lbfgs.max_iter = 40;
    opt.restarts = 1;
    const TrainResult a = train(inst.problem, opt);
    const TrainResult b = train(inst.problem, opt);
    CHECK((a.theta1 - b.theta1).norm() == 0.0);
    CHECK((a.theta2 - b.theta2).norm() == 0.0);
    CHECK(a.cost_trace == b.cost_trace);
    const auto multi = train_multistart(inst.problem, {inst.problem.seed, 77}, opt, 2);
    CHECK((multi[0].theta1 - a.theta1).norm() == 0.0);
    CHECK((multi[1].theta1 - a.theta1).norm() > 0.0);
}

TEST_CASE("iteration cap is not reported as convergence", "[training]") {
    Rng rng(10);
    const auto inst = random_instance(rng, 2, 1, 2, 2, 2, 1.0, 1.0);
    TrainOptions opt;
    opt.lbfgs.max_iter = 2;
    opt.restarts = 0;
    const TrainResult r = train(inst.problem, opt);
    CHECK(r.reason == StopReason::IterationCap);
    CHECK_FALSE(r.converged);
    CHECK(r.cost_trace.size() <= 3);
}

TEST_CASE("all gradient modes drive the same descent", "[training]") {
    Rng rng(11);
    const auto inst = random_instance(rng, 2, 1, 2, 1, 1, 1.0, 1.0, 6);
    TrainOptions opt;
    opt.lbfgs.max_iter = 15;
    opt.restarts = 0;
    opt.gradient = GradientMode::Adjoint;
    const TrainResult adj = train(inst.problem, opt);
    opt.gradient = GradientMode::ParameterShift;
    const TrainResult shift = train(inst.problem, opt);
    CHECK_THAT(adj.final_cost, WithinAbs(shift.final_cost, 1e-8));
    CHECK(adj.final_cost < adj.cost_trace.front());
}
