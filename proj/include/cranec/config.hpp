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

// JSON experiment configuration.
//
// A config holds a network description under "scenario" (or a path to one
// under "scenario_file") plus one block per command. Every field has a
// default; unknown keys are rejected so typos surface as errors. The full
// schema is documented in README.md.

#include <cranec/allocator.hpp>
#include <cranec/channel.hpp>
#include <cranec/dual_solver.hpp>
#include <cranec/error.hpp>
#include <cranec/metrics.hpp>
#include <cranec/scenario.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace cranec::config
{

using json = nlohmann::json;

namespace detail
{

inline void check_keys(const json &obj, const std::set<std::string> &allowed, const std::string &where)
{
    if (!obj.is_object())
        throw ConfigError(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <class T>
T get_or(const json &obj, const char *key, T fallback, const std::string &where)
{
    if (!obj.contains(key) || obj.at(key).is_null())
        return fallback;
    try
    {
        return obj.at(key).get<T>();
    }
    catch (const json::exception &e)
    {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

// Numbers, or the strings "inf" / "infinity" for an absent limit.
inline double get_limit(const json &obj, const char *key, double fallback, const std::string &where)
{
    if (!obj.contains(key) || obj.at(key).is_null())
        return fallback;
    const auto &v = obj.at(key);
    if (v.is_string())
    {
        const auto s = v.get<std::string>();
        if (s == "inf" || s == "infinity")
            return std::numeric_limits<double>::infinity();
        throw ConfigError(where + "." + key + ": expected a number or \"inf\"");
    }
    return get_or<double>(obj, key, fallback, where);
}

inline std::vector<double> get_vector(const json &obj, const char *key, std::vector<double> fallback,
                                      const std::string &where)
{
    if (!obj.contains(key))
        return fallback;
    const auto &v = obj.at(key);
    if (v.is_number())
        return {v.get<double>()};
    return get_or<std::vector<double>>(obj, key, fallback, where);
}

inline std::array<double, 2> get_point(const json &obj, const char *key, const std::string &where)
{
    const auto v = get_or<std::vector<double>>(obj, key, {}, where);
    if (v.size() != 2)
        throw ConfigError(where + "." + key + ": expected [x, y] in metres");
    return {v[0], v[1]};
}

} // namespace detail

/// Propagation settings shared by all links of a scenario.
struct Propagation
{
    double noise_dbm_per_hz = -174.0;
    double noise_bandwidth = 0.0; ///< Hz; 0 means "use the system bandwidth"
    double shadow_std_db = 0.0;   ///< drawn per link when no explicit shadow_db is given
};

inline Propagation parse_propagation(const json &j, double bandwidth, const std::string &where)
{
    Propagation p;
    p.noise_dbm_per_hz = detail::get_or<double>(j, "noise_dbm_per_hz", p.noise_dbm_per_hz, where);
    p.noise_bandwidth = detail::get_or<double>(j, "noise_bandwidth", bandwidth, where);
    p.shadow_std_db = detail::get_or<double>(j, "shadow_std_db", 0.0, where);
    if (!(p.noise_bandwidth > 0.0) || !(p.shadow_std_db >= 0.0))
        throw ConfigError(where + ": noise_bandwidth must be positive and shadow_std_db >= 0");
    return p;
}

// Mean CPNR of one link: explicit override first, then geometry.
inline double link_cpnr(const json &link, const std::array<double, 2> &rx, const Propagation &prop,
                        std::mt19937_64 &shadow_rng, const std::string &where)
{
    if (link.contains("mean_cpnr") && !link.at("mean_cpnr").is_null())
        return detail::get_or<double>(link, "mean_cpnr", 0.0, where);
    if (!link.contains("position"))
        throw ConfigError(where + ": needs either mean_cpnr or position");
    const auto tx = detail::get_point(link, "position", where);
    double shadow = 0.0;
    if (link.contains("shadow_db"))
        shadow = detail::get_or<double>(link, "shadow_db", 0.0, where);
    else if (prop.shadow_std_db > 0.0)
        shadow = std::normal_distribution<double>(0.0, prop.shadow_std_db)(shadow_rng);
    return channel::mean_cpnr_from_geometry(channel::distance_km(tx, rx), shadow, prop.noise_dbm_per_hz,
                                            prop.noise_bandwidth);
}

/// Single-user scenario. CPNR overrides take precedence over geometry.
inline Scenario parse_scenario(const json &j, std::uint64_t seed)
{
    const std::string where = "scenario";
    detail::check_keys(j,
                       {"m", "t_f", "bandwidth", "theta", "noise_dbm_per_hz", "noise_bandwidth", "shadow_std_db",
                        "user_position", "rrhs", "description"},
                       where);
    Scenario sc;
    sc.m = detail::get_or<double>(j, "m", sc.m, where);
    sc.t_f = detail::get_or<double>(j, "t_f", sc.t_f, where);
    sc.bandwidth = detail::get_or<double>(j, "bandwidth", sc.bandwidth, where);
    sc.theta = detail::get_or<double>(j, "theta", 0.05, where);
    const auto prop = parse_propagation(j, sc.bandwidth, where);
    std::array<double, 2> user{0.0, 0.0};
    if (j.contains("user_position"))
        user = detail::get_point(j, "user_position", where);
    if (!j.contains("rrhs") || !j.at("rrhs").is_array() || j.at("rrhs").empty())
        throw ConfigError("scenario.rrhs: nonempty array required");
    std::mt19937_64 shadow_rng(channel::substream_seed(seed, "shadowing"));
    std::size_t idx = 0;
    for (const auto &r : j.at("rrhs"))
    {
        const std::string w = where + ".rrhs[" + std::to_string(idx++) + "]";
        detail::check_keys(r, {"position", "mean_cpnr", "shadow_db", "p_avg", "p_peak", "name"}, w);
        RrhSpec spec;
        spec.p_avg = detail::get_or<double>(r, "p_avg", 0.5, w);
        spec.p_peak = detail::get_limit(r, "p_peak", 1.0, w);
        spec.mean_cpnr = link_cpnr(r, user, prop, shadow_rng, w);
        sc.rrhs.push_back(spec);
    }
    sc.validate();
    return sc;
}

/// Multiuser network: per-user QoS exponents and per-(user, RRH) CPNRs.
inline allocator::MultiuserScenario parse_multiuser(const json &j, std::uint64_t seed)
{
    const std::string where = "multiuser.scenario";
    detail::check_keys(j,
                       {"m", "t_f", "bandwidth", "theta", "noise_dbm_per_hz", "noise_bandwidth", "shadow_std_db",
                        "users", "rrhs", "description"},
                       where);
    allocator::MultiuserScenario mu;
    mu.m = detail::get_or<double>(j, "m", mu.m, where);
    mu.t_f = detail::get_or<double>(j, "t_f", mu.t_f, where);
    mu.bandwidth = detail::get_or<double>(j, "bandwidth", mu.bandwidth, where);
    const double default_theta = detail::get_or<double>(j, "theta", 0.4, where);
    const auto prop = parse_propagation(j, mu.bandwidth, where);
    if (!j.contains("rrhs") || !j.at("rrhs").is_array() || j.at("rrhs").empty())
        throw ConfigError(where + ".rrhs: nonempty array required");
    if (!j.contains("users") || !j.at("users").is_array() || j.at("users").empty())
        throw ConfigError(where + ".users: nonempty array required");
    const auto &rrhs = j.at("rrhs");
    std::vector<std::array<double, 2>> rrh_pos;
    std::size_t idx = 0;
    for (const auto &r : rrhs)
    {
        const std::string w = where + ".rrhs[" + std::to_string(idx++) + "]";
        detail::check_keys(r, {"position", "p_avg", "name"}, w);
        mu.p_avg.push_back(detail::get_or<double>(r, "p_avg", 0.5, w));
        rrh_pos.push_back(r.contains("position") ? detail::get_point(r, "position", w)
                                                 : std::array<double, 2>{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()});
    }
    std::mt19937_64 shadow_rng(channel::substream_seed(seed, "shadowing"));
    idx = 0;
    for (const auto &u : j.at("users"))
    {
        const std::string w = where + ".users[" + std::to_string(idx++) + "]";
        detail::check_keys(u, {"position", "theta", "mean_cpnr", "shadow_db", "name"}, w);
        mu.theta.push_back(detail::get_or<double>(u, "theta", default_theta, w));
        std::vector<double> row;
        if (u.contains("mean_cpnr"))
            row = detail::get_or<std::vector<double>>(u, "mean_cpnr", {}, w);
        else
        {
            const auto rx = detail::get_point(u, "position", w);
            const auto shadows = detail::get_vector(u, "shadow_db", {}, w);
            for (std::size_t i = 0; i < rrh_pos.size(); ++i)
            {
                if (std::isnan(rrh_pos[i][0]))
                    throw ConfigError(w + ": RRH " + std::to_string(i + 1) + " has no position");
                double shadow = 0.0;
                if (i < shadows.size())
                    shadow = shadows[i];
                else if (prop.shadow_std_db > 0.0)
                    shadow = std::normal_distribution<double>(0.0, prop.shadow_std_db)(shadow_rng);
                row.push_back(channel::mean_cpnr_from_geometry(channel::distance_km(rrh_pos[i], rx), shadow,
                                                               prop.noise_dbm_per_hz, prop.noise_bandwidth));
            }
        }
        mu.mean_cpnr.push_back(row);
    }
    mu.validate();
    return mu;
}

/// Solver block (shared by solve, sweep and outage).
struct SolveBlock
{
    dual::SolveConfig solve;
    std::vector<double> step_a_list; ///< solve command: one trace per entry
    bool mode_auto = true;           ///< analytic when available, else batch-mc
};

inline SolveBlock parse_solve(const json &j)
{
    const std::string where = "solve";
    detail::check_keys(j,
                       {"a", "max_iter", "tol", "mode", "burn_in", "batch_samples", "window", "lambda_rel_tol",
                        "init", "initial_lambda", "step_scale"},
                       where);
    SolveBlock b;
    auto &c = b.solve;
    b.step_a_list = detail::get_vector(j, "a", {1.0}, where);
    if (b.step_a_list.empty())
        throw ConfigError("solve.a: at least one step parameter required");
    c.a = b.step_a_list.back(); // other commands use the last (typically largest) step
    c.max_iter = detail::get_or<std::size_t>(j, "max_iter", c.max_iter, where);
    c.tol = detail::get_or<double>(j, "tol", c.tol, where);
    const auto mode = detail::get_or<std::string>(j, "mode", "auto", where);
    b.mode_auto = mode == "auto";
    if (!b.mode_auto)
        c.mode = dual::parse_mode(mode);
    c.burn_in = detail::get_or<std::size_t>(j, "burn_in", c.burn_in, where);
    c.batch_samples = detail::get_or<std::size_t>(j, "batch_samples", c.batch_samples, where);
    c.window = detail::get_or<std::size_t>(j, "window", c.window, where);
    c.lambda_rel_tol = detail::get_or<double>(j, "lambda_rel_tol", c.lambda_rel_tol, where);
    c.init = dual::parse_init(detail::get_or<std::string>(j, "init", "auto", where));
    const auto scale = detail::get_or<std::string>(j, "step_scale", "none", where);
    if (scale != "none" && scale != "marginal")
        throw ConfigError("solve.step_scale: expected none or marginal, got '" + scale + "'");
    c.scaled_steps = scale == "marginal";
    if (j.contains("initial_lambda"))
        c.initial_lambda = detail::get_or<std::vector<double>>(j, "initial_lambda", {}, where);
    return b;
}

/// Resolves "auto" mode for a concrete scenario.
inline dual::SolveConfig resolve_mode(const SolveBlock &b, const Scenario &sc)
{
    auto c = b.solve;
    if (b.mode_auto)
    {
        const bool analytic_ok = sc.epsilon() > 0.0 && (sc.size() == 1 || (sc.size() == 2 && sc.m == std::floor(sc.m)));
        c.mode = analytic_ok ? dual::AvgPowerMode::analytic : dual::AvgPowerMode::batch_mc;
    }
    return c;
}

/// A whole experiment file with command-line overrides already applied.
struct ExperimentConfig
{
    json raw;                ///< canonical form (hashed for provenance)
    std::uint64_t seed = 1;
    std::size_t samples = 100000;
    std::string base_dir = "."; ///< directory of the config file, for relative paths

    const json &block(const char *name) const
    {
        static const json empty = json::object();
        return raw.contains(name) ? raw.at(name) : empty;
    }
    Scenario scenario() const
    {
        if (!raw.contains("scenario"))
            throw ConfigError("config: missing 'scenario' (or 'scenario_file')");
        return parse_scenario(raw.at("scenario"), seed);
    }
    SolveBlock solve() const { return parse_solve(block("solve")); }
};

inline json read_json_file(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path.string() + "'");
    try
    {
        return json::parse(in, nullptr, true, /*ignore_comments=*/true);
    }
    catch (const json::exception &e)
    {
        throw ConfigError("config file '" + path.string() + "': " + e.what());
    }
}

/// Parses a config document; `scenario_file` is resolved against `base_dir`
/// and inlined so the canonical form (and its hash) covers it.
inline ExperimentConfig from_json(json j, const std::string &base_dir = ".")
{
    detail::check_keys(j,
                       {"scenario", "scenario_file", "seed", "samples", "solve", "sweep", "audit", "outage",
                        "multiuser", "description"},
                       "config");
    ExperimentConfig cfg;
    cfg.base_dir = base_dir;
    if (j.contains("scenario_file"))
    {
        if (j.contains("scenario"))
            throw ConfigError("config: give either 'scenario' or 'scenario_file', not both");
        const std::filesystem::path p = std::filesystem::path(base_dir) / j.at("scenario_file").get<std::string>();
        if (!std::filesystem::exists(p))
            throw ConfigError("config: scenario_file '" + p.string() + "' does not exist");
        auto sj = read_json_file(p);
        j["scenario"] = sj.contains("scenario") ? sj.at("scenario") : sj;
        j.erase("scenario_file");
    }
    cfg.seed = detail::get_or<std::uint64_t>(j, "seed", 1, "config");
    cfg.samples = detail::get_or<std::size_t>(j, "samples", 100000, "config");
    cfg.raw = std::move(j);
    return cfg;
}

inline ExperimentConfig load(const std::filesystem::path &path)
{
    return from_json(read_json_file(path), path.has_parent_path() ? path.parent_path().string() : ".");
}

/// FNV-1a of the canonical JSON dump, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig &cfg)
{
    const auto text = cfg.raw.dump();
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << channel::label_hash(text);
    return os.str();
}

} // namespace cranec::config
