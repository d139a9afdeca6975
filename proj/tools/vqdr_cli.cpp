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

// Command-line driver: build-model, train, evaluate, sweep, selftest.

#include <iostream>

#include <CLI11.hpp>

#include "vqdr/commands.hpp"

int main(int argc, char **argv) {
    using namespace vqdr;
    CLI::App app{"Variational dimension reduction of recurrent quantum models"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string config;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--config", config, "JSON experiment config (defaults when omitted)")
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Run a single seed instead of the config's seed list");
    };

    BuildModelArgs build;
    auto *build_cmd = app.add_subcommand("build-model", "Write the cyclic-walk model file(s)");
    add_common(build_cmd);
    build_cmd->add_option("--n", build.ns, "Memory qubit counts (default: the config's list)");
    build_cmd->add_option("-o,--output", build.output, "Output path (single n only)");

    TrainArgs train;
    auto *train_cmd = app.add_subcommand("train", "Train reduced models, one checkpoint per seed");
    add_common(train_cmd);
    train_cmd->add_option("--model", train.model, "Model file")->required();

    EvaluateArgs eval;
    auto *eval_cmd = app.add_subcommand("evaluate", "Append r_f rows for a checkpoint or the baseline");
    add_common(eval_cmd);
    eval_cmd->add_option("--model", eval.model, "Model file")->required();
    eval_cmd->add_option("--checkpoint", eval.checkpoint, "Trained checkpoint");
    eval_cmd->add_flag("--baseline", eval.baseline, "Evaluate the MPS-truncation baseline");
    eval_cmd->add_option("--n-tilde", eval.n_tilde, "Reduced memory qubits for --baseline");
    eval_cmd->add_option("--reference", eval.reference, "Second model file to compare against");
    eval_cmd->add_option("--csv", eval.csv, "CSV to append to (default: <output_dir>/results.csv)");

    auto *sweep_cmd = app.add_subcommand("sweep", "Run the full n x n_tilde x method x seed grid");
    add_common(sweep_cmd);

    auto *selftest_cmd = app.add_subcommand("selftest", "Run the built-in oracle checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    auto *active = app.get_subcommands().front();
    if (active != selftest_cmd) {
        if (active->count("--config") > 0) {
            common.config = config;
        }
        if (active->count("--seed") > 0) {
            common.seed = seed;
        }
    }

    if (active == build_cmd) {
        return cmd_build_model(common, build, std::cout, std::cerr);
    }
    if (active == train_cmd) {
        return cmd_train(common, train, std::cout, std::cerr);
    }
    if (active == eval_cmd) {
        return cmd_evaluate(common, eval, std::cout, std::cerr);
    }
    if (active == sweep_cmd) {
        return cmd_sweep(common, std::cout, std::cerr);
    }
    return cmd_selftest(std::cout, std::cerr);
}
