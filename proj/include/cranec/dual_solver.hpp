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

// Outer loop: projected subgradient ascent on the average-power prices.
//
// Each iteration evaluates the expected per-transmitter power under the
// current prices (one of three estimators), forms the subgradient
// E[p] - P^avg, and steps the prices by a/k with projection onto lambda >= 0.

#include <cranec/allocator.hpp>
#include <cranec/analytics.hpp>
#include <cranec/channel.hpp>
#include <cranec/error.hpp>
#include <cranec/parallel.hpp>
#include <cranec/scenario.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace cranec::dual
{

/// Prices, iteration counter and running average power.
struct DualState
{
    DualVariables lambda;
    std::size_t k = 0;
    std::vector<double> avg_power;
    double step_a = 1.0;
    std::vector<double> step_scale; ///< per-RRH step multipliers; empty means 1
};

/// d_i = Pbar_i - P_i^avg.
inline std::vector<double> subgradient(std::span<const double> avg_power_estimate, const Scenario &scenario)
{
    if (avg_power_estimate.size() != scenario.size())
        throw DomainError("subgradient: length mismatch");
    std::vector<double> d(scenario.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = avg_power_estimate[i] - scenario.rrhs[i].p_avg;
    return d;
}

/// lambda' = max(0, lambda + (a / k) s d), s = 1 unless step_scale is set.
inline DualVariables update_duals(const DualState &state, std::span<const double> d)
{
    if (state.k < 1)
        throw DomainError("update_duals: iteration counter must be >= 1");
    if (d.size() != state.lambda.size())
        throw DomainError("update_duals: length mismatch");
    const double step = state.step_a / static_cast<double>(state.k);
    DualVariables out(state.lambda.size());
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        const double s = state.step_scale.empty() ? 1.0 : state.step_scale[i];
        out[i] = std::max(0.0, state.lambda[i] + step * s * d[i]);
    }
    return out;
}

/// Running mean over iterations 1..k: (p + (k - 1) Pbar) / k.
inline std::vector<double> online_track(const DualState &state, std::span<const double> p_state)
{
    if (state.k < 1)
        throw DomainError("online_track: iteration counter must be >= 1");
    const double k = static_cast<double>(state.k);
    std::vector<double> out(p_state.size());
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        const double prev = i < state.avg_power.size() ? state.avg_power[i] : 0.0;
        out[i] = (p_state[i] + (k - 1.0) * prev) / k;
    }
    return out;
}

enum class AvgPowerMode
{
    online,
    analytic,
    batch_mc
};

inline AvgPowerMode parse_mode(const std::string &name)
{
    if (name == "online")
        return AvgPowerMode::online;
    if (name == "analytic")
        return AvgPowerMode::analytic;
    if (name == "batch-mc" || name == "batch_mc")
        return AvgPowerMode::batch_mc;
    throw ConfigError("unknown avg_power_mode '" + name + "' (expected online, analytic or batch-mc)");
}

inline std::string mode_name(AvgPowerMode m)
{
    switch (m)
    {
    case AvgPowerMode::online:
        return "online";
    case AvgPowerMode::analytic:
        return "analytic";
    case AvgPowerMode::batch_mc:
        return "batch-mc";
    }
    return "?";
}

/// Starting prices. `marginal` is eps / (1 + P^avg mean); `zero` starts from
/// the free-power corner, whose first subgradient P^peak - P^avg is bounded
/// and lands the prices near their optimum in one step. `automatic` picks
/// `zero` when every peak is finite (otherwise zero prices mean unbounded
/// power) and `marginal` otherwise.
enum class InitRule
{
    automatic,
    zero,
    marginal
};

inline InitRule parse_init(const std::string &name)
{
    if (name == "auto")
        return InitRule::automatic;
    if (name == "zero")
        return InitRule::zero;
    if (name == "marginal")
        return InitRule::marginal;
    throw ConfigError("unknown init rule '" + name + "' (expected auto, zero or marginal)");
}

struct SolveConfig
{
    double a = 1.0;
    std::size_t max_iter = 2000;
    double tol = 0.02;
    std::uint64_t seed = 1;
    AvgPowerMode mode = AvgPowerMode::online;
    std::size_t burn_in = 0;            ///< online mode: iterations dropped from the running mean
    std::size_t batch_samples = 20000;  ///< batch-mc mode: fresh samples per iteration
    std::size_t window = 50;            ///< price-stability window
    double lambda_rel_tol = 1e-3;       ///< allowed relative price movement over the window
    InitRule init = InitRule::automatic;
    std::optional<DualVariables> initial_lambda; ///< overrides `init`
    bool scaled_steps = false;          ///< multiply each RRH's step by its marginal_slopes() entry
    bool record_trace = true;
};

struct TraceRow
{
    std::size_t iter = 0;
    DualVariables lambda;
    std::vector<double> pbar;
    double subgrad_norm = 0.0;
};

struct SolveReport
{
    DualVariables lambda;
    std::vector<double> avg_power;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<TraceRow> trace;
};

/// lambda_i^(0) = eps / (1 + P_i^avg mean_i), the marginal-utility scale at
/// the average operating point. The delay-tolerant problem uses the log2-rate
/// marginal 1 / (ln 2 (1 + P^avg mean)) instead.
inline DualVariables marginal_prices(const Scenario &scenario)
{
    const double eps = scenario.epsilon();
    DualVariables out(scenario.size());
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        const auto &r = scenario.rrhs[i];
        const double base = 1.0 + r.p_avg * r.mean_cpnr;
        out[i] = eps > 0.0 ? eps / base : 1.0 / (std::numbers::ln2 * base);
    }
    return out;
}

/// Slope of the utility in each RRH's power at the network's average
/// operating point 1 + sum_j P_j^avg mean_j: eps mean_i (...)^(-eps-1), or
/// mean_i / (ln 2 (...)) when theta = 0. Optimal prices sit within a small
/// factor of it, and they span orders of magnitude across RRHs and theta,
/// which no single step parameter a can follow.
inline std::vector<double> marginal_slopes(const Scenario &scenario)
{
    const double eps = scenario.epsilon();
    double base = 1.0;
    for (const auto &r : scenario.rrhs)
        base += r.p_avg * r.mean_cpnr;
    std::vector<double> out(scenario.size());
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        const double mean = scenario.rrhs[i].mean_cpnr;
        out[i] = eps > 0.0 ? eps * mean * std::exp(-(eps + 1.0) * std::log(base)) : mean / (std::numbers::ln2 * base);
    }
    return out;
}

inline DualVariables initial_prices(const Scenario &scenario, InitRule rule = InitRule::automatic)
{
    if (rule == InitRule::automatic)
    {
        const bool finite = std::all_of(scenario.rrhs.begin(), scenario.rrhs.end(),
                                        [](const RrhSpec &r) { return std::isfinite(r.p_peak); });
        rule = finite ? InitRule::zero : InitRule::marginal;
    }
    if (rule == InitRule::zero)
        return DualVariables(scenario.size(), 0.0);
    return marginal_prices(scenario);
}

/// Constraint check: active prices need |Pbar - P^avg| <= tol P^avg, zero
/// prices only need Pbar <= (1 + tol) P^avg (complementary slackness).
inline double constraint_violation(std::span<const double> lambda, std::span<const double> pbar,
                                   const Scenario &scenario)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < pbar.size(); ++i)
    {
        const double cap = scenario.rrhs[i].p_avg;
        const double rel = (pbar[i] - cap) / cap;
        worst = std::max(worst, lambda[i] > 0.0 ? std::abs(rel) : rel);
    }
    return worst;
}

namespace detail
{

// Mean power over `samples` fresh states, split into fixed chunks with
// independent substreams and summed in chunk order.
inline std::vector<double> batch_mean_power(const DualVariables &lambda, const Scenario &scenario,
                                            std::size_t samples, std::uint64_t seed)
{
    constexpr std::size_t kChunk = 4096;
    const std::size_t n_chunks = (samples + kChunk - 1) / kChunk;
    const std::size_t n = scenario.size();
    std::vector<std::vector<double>> partial(n_chunks, std::vector<double>(n, 0.0));
    parallel::for_each_chunk(n_chunks, [&](std::size_t c) {
        channel::FadingSampler sampler(scenario, channel::substream_seed(seed, "batch-chunk", c));
        const std::size_t count = std::min(kChunk, samples - c * kChunk);
        FadingState alpha(n);
        for (std::size_t s = 0; s < count; ++s)
        {
            sampler.sample_into(alpha);
            const auto p = allocator::allocate_state(lambda, alpha, scenario);
            for (std::size_t i = 0; i < n; ++i)
                partial[c][i] += p[i];
        }
    });
    std::vector<double> mean(n, 0.0);
    for (const auto &row : partial)
        for (std::size_t i = 0; i < n; ++i)
            mean[i] += row[i];
    for (double &v : mean)
        v /= static_cast<double>(samples);
    return mean;
}

inline double norm2(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v)
        s += x * x;
    return std::sqrt(s);
}

// Relative price movement between two iterates; prices that are both
// essentially zero count as stationary.
inline double relative_move(std::span<const double> now, std::span<const double> then)
{
    double worst = 0.0;
    for (std::size_t i = 0; i < now.size(); ++i)
    {
        const double scale = std::max(std::abs(now[i]), std::abs(then[i]));
        if (scale < 1e-300)
            continue;
        worst = std::max(worst, std::abs(now[i] - then[i]) / scale);
    }
    return worst;
}

} // namespace detail

/// Algorithm loop for one single-user scenario. theta == 0 solves the
/// delay-tolerant (ergodic) problem with the water-filling allocator.
inline SolveReport solve(const Scenario &scenario, const SolveConfig &config)
{
    scenario.validate();
    if (!(config.a > 0.0))
        throw ConfigError("step parameter a must be positive");
    if (config.max_iter < 1)
        throw ConfigError("max_iter must be >= 1");
    if (!(config.tol > 0.0))
        throw ConfigError("tol must be positive");
    if (config.mode == AvgPowerMode::analytic)
    {
        if (scenario.size() > 2)
            throw ConfigError("analytic average power is available for 1 or 2 RRHs only; with " +
                              std::to_string(scenario.size()) +
                              " RRHs it is a challenge to obtain the expression in closed form");
        if (!(scenario.epsilon() > 0.0))
            throw ConfigError("analytic mode needs theta > 0");
        if (scenario.size() == 2 && scenario.m != std::floor(scenario.m))
            throw ConfigError("analytic mode with two RRHs needs integer m");
    }
    if (config.mode == AvgPowerMode::batch_mc && config.batch_samples < 1)
        throw ConfigError("batch_samples must be >= 1");

    const std::size_t n = scenario.size();
    DualState state;
    state.lambda = config.initial_lambda ? *config.initial_lambda : initial_prices(scenario, config.init);
    if (state.lambda.size() != n)
        throw ConfigError("initial lambda length must equal the RRH count");
    state.avg_power.assign(n, 0.0);
    state.step_a = config.a;
    if (config.scaled_steps)
        state.step_scale = marginal_slopes(scenario);

    channel::FadingSampler sampler(scenario, channel::substream_seed(config.seed, "solve-online"));
    FadingState alpha(n);
    std::size_t tracked = 0; // iterations contributing to the running mean

    SolveReport report;
    if (config.record_trace)
        report.trace.reserve(std::min<std::size_t>(config.max_iter, 1u << 20));
    std::deque<DualVariables> history; // lambda at the end of each recent iteration

    for (std::size_t k = 1; k <= config.max_iter; ++k)
    {
        state.k = k;
        std::vector<double> pbar;
        switch (config.mode)
        {
        case AvgPowerMode::online: {
            sampler.sample_into(alpha);
            const auto p = allocator::allocate_state(state.lambda, alpha, scenario);
            if (k <= config.burn_in)
            {
                pbar = p;
                break;
            }
            ++tracked;
            DualState tracker = state;
            tracker.k = tracked;
            state.avg_power = online_track(tracker, p);
            pbar = state.avg_power;
            break;
        }
        case AvgPowerMode::analytic:
            pbar = analytics::avg_power(state.lambda, scenario);
            break;
        case AvgPowerMode::batch_mc:
            pbar = detail::batch_mean_power(state.lambda, scenario, config.batch_samples,
                                            channel::substream_seed(config.seed, "solve-batch", k));
            break;
        }
        state.avg_power = pbar;
        const auto d = subgradient(pbar, scenario);
        const double violation = constraint_violation(state.lambda, pbar, scenario);
        if (config.record_trace)
            report.trace.push_back({k, state.lambda, pbar, detail::norm2(d)});

        state.lambda = update_duals(state, d);
        history.push_back(state.lambda);
        if (history.size() > config.window + 1)
            history.pop_front();

        report.iterations = k;
        const bool settled = history.size() == config.window + 1 &&
                             detail::relative_move(history.back(), history.front()) <= config.lambda_rel_tol;
        if (violation <= config.tol && settled && k > config.burn_in)
        {
            report.converged = true;
            break;
        }
    }
    report.lambda = state.lambda;
    report.avg_power = state.avg_power;
    return report;
}

/// Delay-tolerant counterpart: solve() on the same network with theta = 0.
inline SolveReport solve_ergodic(const Scenario &scenario, SolveConfig config)
{
    if (config.mode == AvgPowerMode::analytic)
        config.mode = AvgPowerMode::batch_mc;
    return solve(scenario.with_theta(0.0), config);
}

/// Trace as CSV: iter, lambda_1..I, pbar_1..I, subgrad_norm.
inline std::string trace_csv(const SolveReport &report, std::size_t n_rrh)
{
    std::ostringstream os;
    os << "iter";
    for (std::size_t i = 1; i <= n_rrh; ++i)
        os << ",lambda_" << i;
    for (std::size_t i = 1; i <= n_rrh; ++i)
        os << ",pbar_" << i;
    os << ",subgrad_norm\n";
    os.precision(12);
    for (const auto &row : report.trace)
    {
        os << row.iter;
        for (double l : row.lambda)
            os << ',' << l;
        for (double p : row.pbar)
            os << ',' << p;
        os << ',' << row.subgrad_norm << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Multiuser.

struct MultiuserReport
{
    DualVariables lambda;
    std::vector<double> kappa;
    std::vector<double> avg_power;       ///< per RRH
    std::vector<double> mean_utility;    ///< per user, running E[Z_k^-eps_k]
    std::vector<double> serve_fraction;  ///< per user, fraction of states with nonzero power
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<TraceRow> trace;
};

/// Draws one fading state per user (rows) for all RRHs (columns).
class MultiuserSampler
{
  public:
    MultiuserSampler(const allocator::MultiuserScenario &sc, std::uint64_t seed)
    {
        for (std::size_t k = 0; k < sc.users(); ++k)
            rows_.emplace_back(sc.mean_cpnr[k], sc.m, channel::substream_seed(seed, "mu-user", k));
    }
    void sample_into(std::vector<std::vector<double>> &alpha)
    {
        alpha.resize(rows_.size());
        for (std::size_t k = 0; k < rows_.size(); ++k)
        {
            alpha[k].resize(rows_[k].size());
            rows_[k].sample_into(alpha[k]);
        }
    }

  private:
    std::vector<channel::FadingSampler> rows_;
};

/// Prices and kappa for the sum-EC problem. Prices are floored at 1e-3 of
/// their initial value: without peak limits a zero price means unbounded
/// power, and at the optimum every budget binds anyway.
///
/// With `ergodic` set the same loop prices the sum-ergodic-capacity baseline
/// (cheapest transmitter, water-filling power); kappa is then unused.
inline MultiuserReport solve_multiuser(const allocator::MultiuserScenario &sc, const SolveConfig &config,
                                       bool ergodic = false)
{
    sc.validate();
    if (config.mode == AvgPowerMode::analytic)
        throw ConfigError("multiuser solve supports online and batch-mc modes only");
    if (!(config.a > 0.0) || config.max_iter < 1 || !(config.tol > 0.0))
        throw ConfigError("invalid step parameter, max_iter or tol");
    const std::size_t n = sc.rrhs(), users = sc.users();

    DualVariables lambda(n), floor(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        double best = 0.0;
        for (std::size_t k = 0; k < users; ++k)
            best = std::max(best, sc.mean_cpnr[k][i]);
        lambda[i] = 1.0 / (std::numbers::ln2 * (1.0 / best + sc.p_avg[i]));
        floor[i] = 1e-3 * lambda[i];
    }
    if (config.initial_lambda)
        lambda = *config.initial_lambda;
    std::vector<double> kappa(users);
    for (std::size_t k = 0; k < users; ++k)
    {
        double best = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            best = std::max(best, sc.mean_cpnr[k][i] * sc.p_avg[i]);
        kappa[k] = sc.t_f * sc.bandwidth * sc.theta[k] * std::exp(-sc.epsilon(k) * std::log1p(best));
    }

    MultiuserReport rep;
    rep.avg_power.assign(n, 0.0);
    rep.mean_utility.assign(users, 0.0);
    rep.serve_fraction.assign(users, 0.0);
    MultiuserSampler sampler(sc, channel::substream_seed(config.seed, "mu-online"));
    std::vector<std::vector<double>> alpha;
    std::deque<DualVariables> history;
    std::size_t tracked = 0;

    // Accumulates power and utility over `count` states into the outputs.
    auto accumulate = [&](MultiuserSampler &src, std::size_t count, std::vector<double> &power,
                          std::vector<double> &util, std::vector<double> &served) {
        for (std::size_t s = 0; s < count; ++s)
        {
            src.sample_into(alpha);
            const auto asg = ergodic ? allocator::allocate_multiuser_ergodic(lambda, alpha, sc)
                                     : allocator::allocate_multiuser(lambda, kappa, alpha, sc);
            for (std::size_t k = 0; k < users; ++k)
            {
                power[asg[k].rrh] += asg[k].power;
                util[k] += std::exp(-sc.epsilon(k) * std::log1p(asg[k].power * alpha[k][asg[k].rrh]));
                served[k] += asg[k].power > 0.0 ? 1.0 : 0.0;
            }
        }
    };

    for (std::size_t k = 1; k <= config.max_iter; ++k)
    {
        std::vector<double> pbar(n, 0.0), util(users, 0.0), served(users, 0.0);
        if (config.mode == AvgPowerMode::online)
        {
            accumulate(sampler, 1, pbar, util, served);
            const bool track = k > config.burn_in;
            if (track)
                ++tracked;
            const double w = track ? 1.0 / static_cast<double>(tracked) : 1.0;
            for (std::size_t i = 0; i < n; ++i)
                rep.avg_power[i] = track ? rep.avg_power[i] + w * (pbar[i] - rep.avg_power[i]) : pbar[i];
            for (std::size_t u = 0; u < users; ++u)
            {
                rep.mean_utility[u] = track ? rep.mean_utility[u] + w * (util[u] - rep.mean_utility[u]) : util[u];
                rep.serve_fraction[u] =
                    track ? rep.serve_fraction[u] + w * (served[u] - rep.serve_fraction[u]) : served[u];
            }
        }
        else
        {
            // Common random numbers across iterations keep the map smooth.
            MultiuserSampler batch(sc, channel::substream_seed(config.seed, "mu-batch"));
            accumulate(batch, config.batch_samples, pbar, util, served);
            const double inv = 1.0 / static_cast<double>(config.batch_samples);
            for (std::size_t i = 0; i < n; ++i)
                rep.avg_power[i] = pbar[i] * inv;
            for (std::size_t u = 0; u < users; ++u)
            {
                rep.mean_utility[u] = util[u] * inv;
                rep.serve_fraction[u] = served[u] * inv;
            }
        }

        // Damped fixed point on kappa_k = T_f B theta_k E[Z_k^-eps_k].
        if (!ergodic)
            for (std::size_t u = 0; u < users; ++u)
                kappa[u] = 0.5 * kappa[u] + 0.5 * sc.t_f * sc.bandwidth * sc.theta[u] * rep.mean_utility[u];

        std::vector<double> d(n);
        double violation = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            d[i] = rep.avg_power[i] - sc.p_avg[i];
            violation = std::max(violation, std::abs(d[i]) / sc.p_avg[i]);
        }
        if (config.record_trace)
            rep.trace.push_back({k, lambda, rep.avg_power, detail::norm2(d)});
        const double step = config.a / static_cast<double>(k);
        for (std::size_t i = 0; i < n; ++i)
            lambda[i] = std::max(floor[i], lambda[i] + step * d[i]);

        history.push_back(lambda);
        if (history.size() > config.window + 1)
            history.pop_front();
        rep.iterations = k;
        const bool settled = history.size() == config.window + 1 &&
                             detail::relative_move(history.back(), history.front()) <= config.lambda_rel_tol;
        if (violation <= config.tol && settled && k > config.burn_in)
        {
            rep.converged = true;
            break;
        }
    }
    rep.lambda = lambda;
    rep.kappa = kappa;
    return rep;
}

} // namespace cranec::dual
