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

#include <sstream>

#include <catch_amalgamated.hpp>

#include "test_util.hpp"
#include "vqdr/commands.hpp"

using namespace vqdr;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

struct Env {
    testutil::TempDir dir;
    CommonArgs common;
    std::ostringstream out;
    std::ostringstream err;

    explicit Env(const std::string &tag, Json config) : dir(tag) {
        config["output_dir"] = dir.str("out");
        write_json(dir.path() / "config.json", config);
        common.config = dir.str("config.json");
    }
};

Json point_mass_config() {
    return Json::parse(R"({
        "model": {"n": [2], "shift": {"kind": "point-mass", "x0": 1, "units": "sites"}},
        "reduction": {"n_tilde": [1], "v_layers": 1, "u_layers": 1, "K": 8},
        "optimizer": {"max_iter": 40, "restarts": 0},
        "baseline": {"restarts": 2},
        "seeds": [0]
    })");
}

} // namespace

TEST_CASE("build-model writes a loadable model", "[commands]") {
    Env env("build", point_mass_config());
    REQUIRE(cmd_build_model(env.common, {}, env.out, env.err) == kExitOk);
    CHECK_THAT(env.out.str(), ContainsSubstring("n=2 shift=point-mass c_q=2.000000 bits"));
    const ModelFile mf = load_model_file(env.dir.str("out/model_n2.json"));
    CHECK_THAT(mf.c_q, WithinAbs(2.0, 1e-9));
    CHECK(mf.model.n_mem() == 2);
    CHECK(mf.model.d_out() == 4);
}

TEST_CASE("build-model on a flat shift has zero memory", "[commands]") {
    Env env("flat", Json::parse(R"({"model": {"n": [2], "shift": {"kind": "uniform-interval", "a": 0.0, "b": 1.0}},
                                    "reduction": {"n_tilde": [1]}})"));
    BuildModelArgs args;
    args.ns = {1};
    REQUIRE(cmd_build_model(env.common, args, env.out, env.err) == kExitOk);
    CHECK_THAT(env.out.str(), ContainsSubstring("n=1 shift=uniform-interval c_q=0.000000"));
}

TEST_CASE("malformed shift exits with the config code", "[commands]") {
    Env env("badshift", Json::parse(R"({"model": {"shift": {"kind": "cauchy", "sigma": 0.1}}})"));
    CHECK(cmd_build_model(env.common, {}, env.out, env.err) == kExitUsage);
    CHECK_THAT(env.err.str(), ContainsSubstring("model.shift"));
}

TEST_CASE("train: missing model, resume and hash mismatch", "[commands]") {
    Env env("train", point_mass_config());
    TrainArgs missing{env.dir.str("nope.json")};
    CHECK(cmd_train(env.common, missing, env.out, env.err) == kExitUsage);
    CHECK_THAT(env.err.str(), ContainsSubstring("model file not found"));

    REQUIRE(cmd_build_model(env.common, {}, env.out, env.err) == kExitOk);
    TrainArgs args{env.dir.str("out/model_n2.json")};
    const int first = cmd_train(env.common, args, env.out, env.err);
    CHECK((first == kExitOk || first == kExitNumerical));
    const auto ck_path = env.dir.path() / "out" / "checkpoints" / "n2_nt1_seed0.json";
    REQUIRE(std::filesystem::exists(ck_path));
    const std::string before = read_file(ck_path);

    std::ostringstream again;
    CHECK(cmd_train(env.common, args, again, env.err) == kExitOk);
    CHECK_THAT(again.str(), ContainsSubstring("nothing to do"));
    CHECK(read_file(ck_path) == before);

    // Same output directory, different hyperparameters.
    Json other = point_mass_config();
    other["reduction"]["alpha"] = 0.5;
    other["output_dir"] = env.dir.str("out");
    write_json(env.dir.path() / "other.json", other);
    CommonArgs oc;
    oc.config = env.dir.str("other.json");
    std::ostringstream err2;
    CHECK(cmd_train(oc, args, env.out, err2) == kExitData);
    CHECK_THAT(err2.str(), ContainsSubstring("config hash"));
    CHECK(read_file(ck_path) == before);
}

TEST_CASE("evaluate modes", "[commands]") {
    Env env("eval", point_mass_config());
    REQUIRE(cmd_build_model(env.common, {}, env.out, env.err) == kExitOk);
    const std::string model = env.dir.str("out/model_n2.json");
    const std::string csv = env.dir.str("eval.csv");

    SECTION("self reference has zero rate") {
        EvaluateArgs a;
        a.model = model;
        a.reference = model;
        a.csv = csv;
        REQUIRE(cmd_evaluate(env.common, a, env.out, env.err) == kExitOk);
        const std::string text = read_file(csv);
        CHECK_THAT(text, ContainsSubstring(",reference,0,0,"));
    }
    SECTION("exactly one mode") {
        EvaluateArgs a;
        a.model = model;
        CHECK(cmd_evaluate(env.common, a, env.out, env.err) == kExitUsage);
        a.baseline = true;
        a.reference = model;
        CHECK(cmd_evaluate(env.common, a, env.out, env.err) == kExitUsage);
    }
    SECTION("missing and corrupt checkpoints") {
        EvaluateArgs a;
        a.model = model;
        a.checkpoint = env.dir.str("none.json");
        CHECK(cmd_evaluate(env.common, a, env.out, env.err) == kExitUsage);
        write_file_atomic(env.dir.path() / "bad.json", "{\"format\": \"vqdr-checkpoint\", ");
        a.checkpoint = env.dir.str("bad.json");
        CHECK(cmd_evaluate(env.common, a, env.out, env.err) == kExitData);
    }
    SECTION("checkpoint from a different model size") {
        BuildModelArgs b;
        b.ns = {3};
        REQUIRE(cmd_build_model(env.common, b, env.out, env.err) == kExitOk);
        const ExperimentConfig c = resolve_config(env.common);
        const WalkContext ctx3 = make_context(c, 3);
        const Checkpoint ck = train_cell(c, ctx3, 1, 0);
        write_json(env.dir.path() / "ck3.json", to_json(ck));
        EvaluateArgs a;
        a.model = model;
        a.checkpoint = env.dir.str("ck3.json");
        CHECK(cmd_evaluate(env.common, a, env.out, env.err) == kExitData);
    }
    SECTION("rows reproduce the library values") {
        const ExperimentConfig c = resolve_config(env.common);
        const ModelFile mf = load_model_file(model);
        const WalkContext ctx = make_context(mf.model, mf.c_q);

        EvaluateArgs a;
        a.model = model;
        a.baseline = true;
        a.n_tilde = 1;
        a.csv = csv;
        REQUIRE(cmd_evaluate(env.common, a, env.out, env.err) == kExitOk);
        const ExperimentRecord expect = baseline_cell(c, ctx, 1, 0);
        CHECK_THAT(read_file(csv), ContainsSubstring("2,1,baseline,0," + format_double(expect.r_f) + ","));

        const Checkpoint ck = train_cell(c, ctx, 1, 0);
        write_json(env.dir.path() / "ck.json", to_json(ck));
        EvaluateArgs t;
        t.model = model;
        t.checkpoint = env.dir.str("ck.json");
        t.csv = csv;
        REQUIRE(cmd_evaluate(env.common, t, env.out, env.err) == kExitOk);
        const double rate = trained_rate(ctx, ck.u_spec, ck.result.theta2, 1);
        CHECK_THAT(read_file(csv), ContainsSubstring("2,1,trained,0," + format_double(rate) + ","));
    }
}

TEST_CASE("sweep rejects an empty seed list", "[commands]") {
    Env env("sweep", Json::parse(R"({"seeds": []})"));
    CHECK(cmd_sweep(env.common, env.out, env.err) == kExitUsage);
}

TEST_CASE("selftest passes", "[commands]") {
    std::ostringstream out;
    std::ostringstream err;
    CHECK(cmd_selftest(out, err) == kExitOk);
    CHECK_THAT(out.str(), !ContainsSubstring("FAIL"));
}
