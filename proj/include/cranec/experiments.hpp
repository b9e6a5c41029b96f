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

#pragma once

// Experiment drivers behind the command-line tool. Each driver returns the
// files it would write (path, contents) so callers and tests can compare
// output without touching the disk.

#include <cranec/analytics.hpp>
#include <cranec/config.hpp>
#include <cranec/csv.hpp>
#include <cranec/dual_solver.hpp>
#include <cranec/metrics.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace cranec::experiments
{

/// Command-line overrides; unset fields keep the config value.
struct Overrides
{
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::vector<double> step_a;
    std::optional<std::size_t> max_iter;
    std::optional<double> tol;
    std::optional<std::string> mode;
};

/// Folds overrides into the raw document too, so the provenance hash
/// describes what actually ran.
inline void apply(config::ExperimentConfig &cfg, const Overrides &o)
{
    auto &j = cfg.raw;
    if (o.seed)
    {
        cfg.seed = *o.seed;
        j["seed"] = *o.seed;
    }
    if (o.samples)
    {
        cfg.samples = *o.samples;
        j["samples"] = *o.samples;
    }
    if (!j.contains("solve"))
        j["solve"] = config::json::object();
    auto &s = j["solve"];
    if (!o.step_a.empty())
        s["a"] = o.step_a;
    if (o.max_iter)
        s["max_iter"] = *o.max_iter;
    if (o.tol)
        s["tol"] = *o.tol;
    if (o.mode)
        s["mode"] = *o.mode;
}

struct RunOutput
{
    std::vector<std::pair<std::string, std::string>> files;
    std::string summary; ///< human-readable, for stdout
};

/// `<dir>/<stem><suffix><ext>` next to `out`.
inline std::string sibling(const std::string &out, const std::string &suffix)
{
    const std::filesystem::path p(out);
    auto name = p.stem().string() + suffix + (p.has_extension() ? p.extension().string() : std::string(".csv"));
    return (p.parent_path() / name).string();
}

inline std::string format_a(double a)
{
    std::ostringstream os;
    os << a;
    return os.str();
}

inline void write(const RunOutput &out)
{
    for (const auto &[path, text] : out.files)
    {
        const std::filesystem::path p(path);
        if (p.has_parent_path())
            std::filesystem::create_directories(p.parent_path());
        std::ofstream f(p, std::ios::binary);
        if (!f)
            throw ConfigError("cannot write '" + path + "'");
        f << text;
        if (!f)
            throw ConfigError("write failed for '" + path + "'");
    }
}

namespace detail
{

inline std::vector<double> theta_grid(const config::json &block, const char *where, double fallback)
{
    auto grid = config::detail::get_vector(block, "theta", {fallback}, where);
    if (grid.empty())
        throw ConfigError(std::string(where) + ".theta: grid must be nonempty");
    for (double t : grid)
        if (!(t > 0.0) || !std::isfinite(t))
            throw ConfigError(std::string(where) + ".theta: every entry must be positive and finite");
    return grid;
}

inline dual::SolveConfig solve_config(const config::ExperimentConfig &cfg, const Scenario &sc)
{
    auto c = config::resolve_mode(cfg.solve(), sc);
    c.seed = cfg.seed;
    c.record_trace = false;
    return c;
}

} // namespace detail

// ---------------------------------------------------------------------------

/// Dual solve, one convergence trace per step parameter plus a summary.
inline RunOutput run_solve(const config::ExperimentConfig &cfg, const std::string &out)
{
    const auto sc = cfg.scenario();
    const auto block = cfg.solve();
    const auto hash = config::config_hash(cfg);
    const std::size_t n = sc.size();

    RunOutput res;
    csv::Table summary(csv::concat(csv::concat({"a", "mode", "iterations", "converged"}, csv::numbered("lambda", n)),
                                   csv::concat(csv::numbered("pbar", n), {"max_violation"})));
    std::ostringstream msg;
    for (double a : block.step_a_list)
    {
        auto c = config::resolve_mode(block, sc);
        c.a = a;
        c.seed = cfg.seed;
        const auto rep = dual::solve(sc, c);

        csv::Table trace(csv::concat(csv::concat({"iter"}, csv::numbered("lambda", n)),
                                     csv::concat(csv::numbered("pbar", n), {"subgrad_norm"})));
        for (const auto &row : rep.trace)
            trace.row().add(row.iter).add_all(row.lambda).add_all(row.pbar).add(row.subgrad_norm);
        const auto path = block.step_a_list.size() == 1 ? out : sibling(out, "_a" + format_a(a));
        res.files.emplace_back(path, trace.render("solve", hash, cfg.seed));

        const double viol = dual::constraint_violation(rep.lambda, rep.avg_power, sc);
        summary.row()
            .add(a)
            .add(dual::mode_name(c.mode))
            .add(rep.iterations)
            .add(rep.converged)
            .add_all(rep.lambda)
            .add_all(rep.avg_power)
            .add(viol);
        msg << "a=" << a << " mode=" << dual::mode_name(c.mode) << " iterations=" << rep.iterations
            << (rep.converged ? " converged" : " NOT converged") << " lambda=(";
        for (std::size_t i = 0; i < n; ++i)
            msg << (i ? ", " : "") << csv::number(rep.lambda[i]);
        msg << ")\n";
    }
    res.files.emplace_back(sibling(out, "_summary"), summary.render("solve", hash, cfg.seed));
    res.summary = msg.str();
    return res;
}

/// EC versus theta for each policy. All policies share the channel stream.
inline RunOutput run_sweep(const config::ExperimentConfig &cfg, const std::string &out)
{
    const auto base = cfg.scenario();
    const auto &block = cfg.block("sweep");
    config::detail::check_keys(block, {"theta", "policies", "d_max", "d_t", "d_f", "prefactor"}, "sweep");
    const auto grid = detail::theta_grid(block, "sweep", base.theta);
    const auto names = config::detail::get_or<std::vector<std::string>>(
        block, "policies", {"proposed", "nearest", "constant", "independent", "ergodic", "inversion"}, "sweep");
    if (names.empty())
        throw ConfigError("sweep.policies: list must be nonempty");
    std::vector<metrics::PolicyKind> kinds;
    for (const auto &p : names)
        kinds.push_back(metrics::parse_policy(p));
    metrics::OutageSpec ospec;
    ospec.d_max = config::detail::get_or<double>(block, "d_max", ospec.d_max, "sweep");
    ospec.d_t = config::detail::get_or<double>(block, "d_t", ospec.d_t, "sweep");
    ospec.d_f = config::detail::get_or<double>(block, "d_f", ospec.d_f, "sweep");
    ospec.epsilon_prefactor = config::detail::get_or<double>(block, "prefactor", 1.0, "sweep");
    ospec.validate();

    const std::size_t n = base.size();
    csv::Table table(csv::concat(csv::concat({"theta", "policy", "ec_norm", "stderr", "ec_bits_per_frame"},
                                             csv::numbered("pbar", n)),
                                 {"outage"}));
    std::optional<metrics::PolicyDuals> ergodic_duals; // theta-independent
    std::ostringstream msg;
    for (double theta : grid)
    {
        const Scenario sc = base.with_theta(theta);
        const auto scfg = detail::solve_config(cfg, sc);
        for (auto kind : kinds)
        {
            metrics::PolicyDuals duals;
            if (kind == metrics::PolicyKind::ergodic)
            {
                if (!ergodic_duals)
                    ergodic_duals = metrics::prepare_duals(kind, sc, scfg);
                duals = *ergodic_duals;
            }
            else
                duals = metrics::prepare_duals(kind, sc, scfg);
            const auto est = metrics::estimate_ec(metrics::baseline_policy(kind, sc, duals), sc, cfg.samples,
                                                  channel::substream_seed(cfg.seed, "sweep-ec"));
            const double mu = est.ec_bits_per_frame / sc.t_f;
            const double outage = mu > 0.0 ? metrics::delay_outage(theta, mu, ospec) : 1.0;
            table.row()
                .add(theta)
                .add(metrics::policy_name(kind))
                .add(est.normalized_ec)
                .add(est.std_error)
                .add(est.ec_bits_per_frame)
                .add_all(est.avg_power)
                .add(outage);
            msg << "theta=" << theta << ' ' << metrics::policy_name(kind) << " ec=" << csv::number(est.normalized_ec)
                << " bit/s/Hz\n";
        }
    }
    RunOutput res;
    res.files.emplace_back(out, table.render("sweep", config::config_hash(cfg), cfg.seed));
    res.summary = msg.str();
    return res;
}

/// Closed-form average powers against Monte Carlo at random prices.
inline RunOutput run_audit(const config::ExperimentConfig &cfg, const std::string &out)
{
    const auto sc = cfg.scenario();
    const auto &block = cfg.block("audit");
    config::detail::check_keys(block, {"lambda_samples", "lambda_scale"}, "audit");
    const auto count = config::detail::get_or<std::size_t>(block, "lambda_samples", 50, "audit");
    const auto scale = config::detail::get_vector(block, "lambda_scale", {0.25, 4.0}, "audit");
    if (count == 0 || scale.size() != 2 || !(scale[0] > 0.0) || !(scale[1] >= scale[0]))
        throw ConfigError("audit: lambda_samples must be positive and lambda_scale a range [lo, hi] with 0 < lo <= hi");
    if (sc.size() > 2)
        throw DomainError("analytic average power for " + std::to_string(sc.size()) +
                          " RRHs: there is a challenge to obtain the expression in closed form; "
                          "use the online or batch-mc modes instead");
    if (!(sc.theta > 0.0))
        throw ConfigError("audit: theta must be positive");

    const std::size_t n = sc.size();
    // Prices are drawn around the level at which each RRH alone would spend
    // exactly its budget, where the powers are neither negligible nor clamped.
    DualVariables ref(n);
    for (std::size_t i = 0; i < n; ++i)
        ref[i] = std::max(metrics::single_rrh_price(metrics::single_rrh(sc, i)), 1e-6);
    std::mt19937_64 rng(channel::substream_seed(cfg.seed, "audit-lambda"));
    std::uniform_real_distribution<double> u(std::log(scale[0]), std::log(scale[1]));

    csv::Table table(csv::concat(csv::concat(csv::concat({"sample"}, csv::numbered("lambda", n)),
                                             csv::concat(csv::numbered("analytic", n), csv::numbered("mc", n))),
                                 csv::numbered("rel_err", n)));
    csv::Table terms(std::vector<std::string>{"sample", analytics::diagnostics_csv_header()});
    double worst = 0.0;
    for (std::size_t j = 0; j < count; ++j)
    {
        DualVariables lambda(n);
        for (std::size_t i = 0; i < n; ++i)
            lambda[i] = ref[i] * std::exp(u(rng));
        PowerVector analytic;
        if (n == 2)
        {
            const auto d = analytics::avg_power_two_detail(lambda, sc);
            analytic = {d.power.p_rrh1, d.power.p_rrh2};
            for (int b = 0; b < 2; ++b)
                terms.row().add(j).add(analytics::diagnostics_csv_row(d.flags[b], d.terms[b]));
        }
        else
            analytic = analytics::avg_power(lambda, sc);
        const auto mc = dual::detail::batch_mean_power(lambda, sc, cfg.samples,
                                                       channel::substream_seed(cfg.seed, "audit-mc", j));
        std::vector<double> rel(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            rel[i] = std::abs(mc[i] - analytic[i]) / std::max(analytic[i], 1e-9);
            worst = std::max(worst, rel[i]);
        }
        table.row().add(j).add_all(lambda).add_all(analytic).add_all(mc).add_all(rel);
    }
    const auto hash = config::config_hash(cfg);
    RunOutput res;
    res.files.emplace_back(out, table.render("audit", hash, cfg.seed));
    if (n == 2)
        res.files.emplace_back(sibling(out, "_terms"), terms.render("audit", hash, cfg.seed));
    res.summary = "audited " + std::to_string(count) + " price vectors, max relative error " + csv::number(worst) + "\n";
    return res;
}

/// Delay-outage probability of the proposed policy with mu = EC(theta).
inline RunOutput run_outage(const config::ExperimentConfig &cfg, const std::string &out)
{
    const auto base = cfg.scenario();
    const auto &block = cfg.block("outage");
    config::detail::check_keys(block, {"theta", "d_max", "d_t", "d_f", "prefactor"}, "outage");
    const auto grid = detail::theta_grid(block, "outage", base.theta);
    const auto d_max = config::detail::get_vector(block, "d_max", {1e-3}, "outage");
    if (d_max.empty())
        throw ConfigError("outage.d_max: list must be nonempty");
    std::vector<metrics::OutageSpec> specs;
    for (double d : d_max)
    {
        metrics::OutageSpec s;
        s.d_max = d;
        s.d_t = config::detail::get_or<double>(block, "d_t", s.d_t, "outage");
        s.d_f = config::detail::get_or<double>(block, "d_f", s.d_f, "outage");
        s.epsilon_prefactor = config::detail::get_or<double>(block, "prefactor", 1.0, "outage");
        s.validate(); // rejects D_q <= 0 before any work is done
        specs.push_back(s);
    }

    csv::Table table({"theta", "d_max", "d_q", "ec_norm", "ec_bits_per_frame", "outage"});
    std::ostringstream msg;
    for (double theta : grid)
    {
        const Scenario sc = base.with_theta(theta);
        const auto duals = metrics::prepare_duals(metrics::PolicyKind::proposed, sc, detail::solve_config(cfg, sc));
        const auto est = metrics::estimate_ec(metrics::baseline_policy(metrics::PolicyKind::proposed, sc, duals), sc,
                                              cfg.samples, channel::substream_seed(cfg.seed, "outage-ec"));
        for (const auto &s : specs)
        {
            const double p = metrics::delay_outage(theta, est.ec_bits_per_frame / sc.t_f, s);
            table.row().add(theta).add(s.d_max).add(s.d_q()).add(est.normalized_ec).add(est.ec_bits_per_frame).add(p);
            msg << "theta=" << theta << " d_max=" << s.d_max << " outage=" << csv::number(p) << '\n';
        }
    }
    RunOutput res;
    res.files.emplace_back(out, table.render("outage", config::config_hash(cfg), cfg.seed));
    res.summary = msg.str();
    return res;
}

/// Sum EC of the multiuser policy against the sum-ergodic-capacity design.
inline RunOutput run_multiuser(const config::ExperimentConfig &cfg, const std::string &out)
{
    const auto &block = cfg.block("multiuser");
    config::detail::check_keys(block, {"scenario", "theta"}, "multiuser");
    if (!block.contains("scenario"))
        throw ConfigError("multiuser.scenario: required");
    const auto base = config::parse_multiuser(block.at("scenario"), cfg.seed);
    std::vector<double> grid;
    if (block.contains("theta"))
        grid = detail::theta_grid(block, "multiuser", 0.0);

    auto sc_cfg = cfg.solve();
    auto scfg = sc_cfg.solve;
    if (sc_cfg.mode_auto)
        scfg.mode = dual::AvgPowerMode::batch_mc;
    scfg.seed = cfg.seed;
    scfg.record_trace = false;

    const std::size_t n = base.rrhs(), users = base.users();
    csv::Table table(csv::concat(
        csv::concat({"theta", "policy", "sum_ec"}, csv::concat(csv::numbered("ec_user", users), csv::numbered("pbar", n))),
        {"iterations", "converged"}));
    std::optional<dual::MultiuserReport> ergodic;
    std::ostringstream msg;
    const std::vector<double> thetas = grid.empty() ? std::vector<double>{analytics::kNaN} : grid;
    for (double theta : thetas)
    {
        auto sc = base;
        if (!std::isnan(theta))
            std::fill(sc.theta.begin(), sc.theta.end(), theta);
        const auto prop = dual::solve_multiuser(sc, scfg);
        if (!ergodic)
            ergodic = dual::solve_multiuser(sc, scfg, /*ergodic=*/true);
        const auto seed = channel::substream_seed(cfg.seed, "multiuser-ec");
        const auto ec_prop = metrics::estimate_ec_multiuser(
            [&](const auto &a) { return allocator::allocate_multiuser(prop.lambda, prop.kappa, a, sc); }, sc,
            cfg.samples, seed);
        const auto ec_erg = metrics::estimate_ec_multiuser(
            [&](const auto &a) { return allocator::allocate_multiuser_ergodic(ergodic->lambda, a, sc); }, sc,
            cfg.samples, seed);
        const double theta_out = std::isnan(theta) ? sc.theta.front() : theta;
        for (const auto &[name, rep, ec] : {std::tuple{"proposed", &prop, &ec_prop},
                                            std::tuple{"ergodic", &std::as_const(*ergodic), &ec_erg}})
        {
            table.row()
                .add(theta_out)
                .add(name)
                .add(ec->sum_normalized_ec)
                .add_all(ec->normalized_ec)
                .add_all(ec->avg_power)
                .add(rep->iterations)
                .add(rep->converged);
            msg << "theta=" << theta_out << ' ' << name << " sum_ec=" << csv::number(ec->sum_normalized_ec)
                << " bit/s/Hz\n";
        }
    }
    RunOutput res;
    res.files.emplace_back(out, table.render("multiuser", config::config_hash(cfg), cfg.seed));
    res.summary = msg.str();
    return res;
}

inline RunOutput run(const std::string &command, const config::ExperimentConfig &cfg, const std::string &out)
{
    if (command == "solve")
        return run_solve(cfg, out);
    if (command == "sweep")
        return run_sweep(cfg, out);
    if (command == "audit")
        return run_audit(cfg, out);
    if (command == "outage")
        return run_outage(cfg, out);
    if (command == "multiuser")
        return run_multiuser(cfg, out);
    throw ConfigError("unknown command '" + command + "'");
}

} // namespace cranec::experiments
