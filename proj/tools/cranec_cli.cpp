// SPDX-License-Identifier: Apache-2.0
//
// cranec: delay-QoS-aware power allocation for multi-point downlinks
// Copyright (C) 2026 The cranec authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// cranec_cli: batch front-end for the C-RAN power-allocation experiments.
//
//   cranec_cli solve     --config configs/fig3.json --step-a 0.4 --step-a 1 --out out/trace.csv
//   cranec_cli sweep     --config configs/fig3.json --samples 100000 --out out/sweep.csv
//   cranec_cli audit     --config configs/fig3.json --out out/audit.csv
//   cranec_cli outage    --config configs/fig3.json --out out/outage.csv
//   cranec_cli multiuser --config configs/fig10.json --out out/multiuser.csv
//
// Thread count comes from CRANEC_THREADS (default: hardware concurrency).

#include <cranec/experiments.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv)
{
    CLI::App app{"C-RAN QoS-aware power allocation experiments"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out;
    cranec::experiments::Overrides ov;
    std::uint64_t seed = 0;
    std::size_t samples = 0, max_iter = 0;
    double tol = 0.0;
    std::string mode;

    app.add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    auto *o_seed = app.add_option("--seed", seed, "top-level random seed");
    auto *o_samples = app.add_option("--samples", samples, "Monte Carlo samples per estimate")->check(CLI::PositiveNumber);
    app.add_option("--step-a", ov.step_a, "subgradient step parameter a (repeatable)")->check(CLI::PositiveNumber);
    auto *o_iter = app.add_option("--max-iter", max_iter, "dual iteration cap")->check(CLI::PositiveNumber);
    auto *o_tol = app.add_option("--tol", tol, "relative constraint tolerance")->check(CLI::PositiveNumber);
    auto *o_mode = app.add_option("--mode", mode, "average-power mode")
                       ->check(CLI::IsMember({"online", "analytic", "batch-mc", "auto"}));
    app.add_option("--out", out, "output CSV path (default <command>.csv)");

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"solve", "dual solve with convergence traces"},
        {"sweep", "effective capacity versus theta for several policies"},
        {"audit", "closed-form average power against Monte Carlo"},
        {"outage", "delay-outage probability versus theta"},
        {"multiuser", "multiuser sum EC against the ergodic baseline"},
    };
    for (const auto &[name, help] : commands)
        app.add_subcommand(name, help);

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();
    if (out.empty())
        out = command + ".csv";
    if (*o_seed)
        ov.seed = seed;
    if (*o_samples)
        ov.samples = samples;
    if (*o_iter)
        ov.max_iter = max_iter;
    if (*o_tol)
        ov.tol = tol;
    if (*o_mode)
        ov.mode = mode;

    try
    {
        auto cfg = cranec::config::load(config_path);
        cranec::experiments::apply(cfg, ov);
        const auto result = cranec::experiments::run(command, cfg, out);
        cranec::experiments::write(result);
        std::cout << result.summary;
        for (const auto &f : result.files)
            std::cout << "wrote " << f.first << '\n';
        return 0;
    }
    catch (const std::exception &e)
    {
        std::cerr << "cranec_cli " << command << ": " << e.what() << '\n';
        return 2;
    }
}
