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

// Monte Carlo effective capacity, the delay-outage approximation, and the
// comparison policies.

#include <cranec/allocator.hpp>
#include <cranec/analytics.hpp>
#include <cranec/channel.hpp>
#include <cranec/dual_solver.hpp>
#include <cranec/error.hpp>
#include <cranec/parallel.hpp>
#include <cranec/scenario.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace cranec::metrics
{

/// Maps one fading state to transmit powers. Must be safe to call
/// concurrently (all policies built here are pure).
using Policy = std::function<PowerVector(std::span<const double>)>;

struct EcEstimate
{
    double ec_bits_per_frame = 0.0;
    double normalized_ec = 0.0; ///< bits/s/Hz = ec_bits_per_frame / (T_f B)
    double std_error = 0.0;     ///< of normalized_ec
    std::size_t samples = 0;
    std::vector<double> avg_power;   ///< per RRH, W
    std::vector<double> power_stderr; ///< per RRH
    double max_peak_excess = 0.0;    ///< largest p_i - P_i^peak seen (<= 0 when the peak is respected)
};

namespace detail
{

struct ChunkStats
{
    double shift = -std::numeric_limits<double>::infinity(); // max of x
    double sum = 0.0;   // sum exp(x - shift)
    double sum2 = 0.0;  // sum exp(2 (x - shift))
    double rate_sum = 0.0;
    double rate_sum2 = 0.0;
    std::vector<double> p_sum, p_sum2;
    double peak_excess = -std::numeric_limits<double>::infinity();
};

inline void rescale(ChunkStats &c, double new_shift)
{
    if (c.shift == new_shift || c.sum == 0.0)
    {
        c.shift = new_shift;
        return;
    }
    const double f = std::exp(c.shift - new_shift);
    c.sum *= f;
    c.sum2 *= f * f;
    c.shift = new_shift;
}

} // namespace detail

/// EC = -(1/theta) ln mean(exp(-theta R)), evaluated in log-sum-exp form.
/// The standard error comes from the delta method on the inner mean. With
/// theta == 0 the estimator is the mean rate (ergodic capacity). States are
/// drawn from substreams of `seed`, so two policies evaluated with the same
/// seed see the same channels.
inline EcEstimate estimate_ec(const Policy &policy, const Scenario &scenario, std::size_t n_samples,
                              std::uint64_t seed)
{
    if (n_samples < 1000)
        throw DomainError("estimate_ec: at least 1000 samples required");
    if (!(scenario.theta >= 0.0))
        throw DomainError("estimate_ec: theta must be >= 0");
    const std::size_t n = scenario.size();
    const double theta = scenario.theta;
    const double frame = scenario.frame_capacity();
    constexpr std::size_t kChunk = 8192;
    const std::size_t n_chunks = (n_samples + kChunk - 1) / kChunk;

    // First pass per chunk keeps -theta R in memory to shift exactly.
    std::vector<detail::ChunkStats> stats(n_chunks);
    parallel::for_each_chunk(n_chunks, [&](std::size_t c) {
        auto &st = stats[c];
        st.p_sum.assign(n, 0.0);
        st.p_sum2.assign(n, 0.0);
        channel::FadingSampler sampler(scenario, channel::substream_seed(seed, "ec-chunk", c));
        const std::size_t count = std::min(kChunk, n_samples - c * kChunk);
        std::vector<double> xs(count);
        FadingState alpha(n);
        for (std::size_t s = 0; s < count; ++s)
        {
            sampler.sample_into(alpha);
            const PowerVector p = policy(alpha);
            double snr = 0.0;
            for (std::size_t i = 0; i < n; ++i)
            {
                snr += p[i] * alpha[i];
                st.p_sum[i] += p[i];
                st.p_sum2[i] += p[i] * p[i];
                st.peak_excess = std::max(st.peak_excess, p[i] - scenario.rrhs[i].p_peak);
            }
            const double rate = frame * std::log2(1.0 + snr);
            st.rate_sum += rate;
            st.rate_sum2 += rate * rate;
            xs[s] = -theta * rate;
        }
        st.shift = *std::max_element(xs.begin(), xs.end());
        for (double x : xs)
        {
            const double e = std::exp(x - st.shift);
            st.sum += e;
            st.sum2 += e * e;
        }
    });

    detail::ChunkStats total;
    total.p_sum.assign(n, 0.0);
    total.p_sum2.assign(n, 0.0);
    for (const auto &st : stats)
        total.shift = std::max(total.shift, st.shift);
    for (auto &st : stats)
    {
        detail::rescale(st, total.shift);
        total.sum += st.sum;
        total.sum2 += st.sum2;
        total.rate_sum += st.rate_sum;
        total.rate_sum2 += st.rate_sum2;
        total.peak_excess = std::max(total.peak_excess, st.peak_excess);
        for (std::size_t i = 0; i < n; ++i)
        {
            total.p_sum[i] += st.p_sum[i];
            total.p_sum2[i] += st.p_sum2[i];
        }
    }

    const double count = static_cast<double>(n_samples);
    EcEstimate out;
    out.samples = n_samples;
    out.max_peak_excess = total.peak_excess;
    out.avg_power.resize(n);
    out.power_stderr.resize(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        const double mean = total.p_sum[i] / count;
        const double var = std::max(0.0, total.p_sum2[i] / count - mean * mean);
        out.avg_power[i] = mean;
        out.power_stderr[i] = std::sqrt(var / count);
    }
    if (theta == 0.0)
    {
        const double mean = total.rate_sum / count;
        const double var = std::max(0.0, total.rate_sum2 / count - mean * mean);
        out.ec_bits_per_frame = mean;
        out.normalized_ec = mean / frame;
        out.std_error = std::sqrt(var / count) / frame;
        return out;
    }
    const double mean_e = total.sum / count;
    const double var_e = std::max(0.0, total.sum2 / count - mean_e * mean_e);
    out.ec_bits_per_frame = -(total.shift + std::log(mean_e)) / theta;
    out.normalized_ec = out.ec_bits_per_frame / frame;
    out.std_error = std::sqrt(var_e / count) / (mean_e * theta * frame);
    return out;
}

/// Per-user effective capacity in a multiuser network.
struct MultiuserEc
{
    std::vector<double> normalized_ec; ///< per user, bits/s/Hz
    std::vector<double> avg_power;     ///< per RRH
    double sum_normalized_ec = 0.0;
};

using MultiuserPolicy = std::function<std::vector<allocator::UserAssignment>(const std::vector<std::vector<double>> &)>;

/// Same estimator as estimate_ec, one log-sum-exp per user. Users are
/// interference-free, so each user's rate depends on its own link only.
inline MultiuserEc estimate_ec_multiuser(const MultiuserPolicy &policy, const allocator::MultiuserScenario &sc,
                                         std::size_t n_samples, std::uint64_t seed)
{
    if (n_samples < 1000)
        throw DomainError("estimate_ec_multiuser: at least 1000 samples required");
    sc.validate();
    const std::size_t users = sc.users(), n = sc.rrhs();
    const double frame = sc.t_f * sc.bandwidth;
    constexpr std::size_t kChunk = 8192;
    const std::size_t n_chunks = (n_samples + kChunk - 1) / kChunk;

    struct Partial
    {
        std::vector<double> shift, sum, power;
    };
    std::vector<Partial> parts(n_chunks);
    parallel::for_each_chunk(n_chunks, [&](std::size_t c) {
        auto &pt = parts[c];
        pt.power.assign(n, 0.0);
        dual::MultiuserSampler sampler(sc, channel::substream_seed(seed, "mu-ec-chunk", c));
        const std::size_t count = std::min(kChunk, n_samples - c * kChunk);
        std::vector<std::vector<double>> xs(users, std::vector<double>(count));
        std::vector<std::vector<double>> alpha;
        for (std::size_t s = 0; s < count; ++s)
        {
            sampler.sample_into(alpha);
            const auto asg = policy(alpha);
            for (std::size_t k = 0; k < users; ++k)
            {
                pt.power[asg[k].rrh] += asg[k].power;
                const double rate = frame * std::log2(1.0 + asg[k].power * alpha[k][asg[k].rrh]);
                xs[k][s] = -sc.theta[k] * rate;
            }
        }
        for (std::size_t k = 0; k < users; ++k)
        {
            const double sh = *std::max_element(xs[k].begin(), xs[k].end());
            double acc = 0.0;
            for (double x : xs[k])
                acc += std::exp(x - sh);
            pt.shift.push_back(sh);
            pt.sum.push_back(acc);
        }
    });

    MultiuserEc out;
    out.avg_power.assign(n, 0.0);
    for (const auto &pt : parts)
        for (std::size_t i = 0; i < n; ++i)
            out.avg_power[i] += pt.power[i] / static_cast<double>(n_samples);
    for (std::size_t k = 0; k < users; ++k)
    {
        double shift = -std::numeric_limits<double>::infinity();
        for (const auto &pt : parts)
            shift = std::max(shift, pt.shift[k]);
        double acc = 0.0;
        for (const auto &pt : parts)
            acc += pt.sum[k] * std::exp(pt.shift[k] - shift);
        const double ec = -(shift + std::log(acc / static_cast<double>(n_samples))) / sc.theta[k];
        out.normalized_ec.push_back(ec / frame);
        out.sum_normalized_ec += ec / frame;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Delay outage.

struct OutageSpec
{
    double d_max = 1e-3;            ///< s
    double d_t = 1e-4;              ///< s, transmission delay
    double d_f = 1e-4;              ///< s, fronthaul delay
    double epsilon_prefactor = 1.0; ///< probability of a nonempty buffer, in (0, 1]

    double d_q() const { return d_max - d_t - d_f; }

    void validate() const
    {
        if (!(d_q() > 0.0))
            throw DomainError("outage: queueing budget d_max - d_t - d_f must be positive, got " +
                              std::to_string(d_q()) + " s");
        if (!(epsilon_prefactor > 0.0) || epsilon_prefactor > 1.0)
            throw DomainError("outage: prefactor must lie in (0, 1]");
    }
};

/// Pr{delay >= D_q} ~ prefactor * exp(-theta mu D_q), clamped to [0, 1].
/// theta in 1/bit, mu in bit/s.
inline double delay_outage(double theta, double mu, const OutageSpec &spec)
{
    spec.validate();
    if (!(mu > 0.0))
        throw DomainError("delay_outage: arrival rate must be positive");
    if (!(theta >= 0.0))
        throw DomainError("delay_outage: theta must be >= 0");
    return std::clamp(spec.epsilon_prefactor * std::exp(-theta * mu * spec.d_q()), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Policies.

enum class PolicyKind
{
    proposed,
    nearest,
    constant,
    independent,
    ergodic,
    inversion
};

inline PolicyKind parse_policy(const std::string &name)
{
    if (name == "proposed")
        return PolicyKind::proposed;
    if (name == "nearest")
        return PolicyKind::nearest;
    if (name == "constant")
        return PolicyKind::constant;
    if (name == "independent")
        return PolicyKind::independent;
    if (name == "ergodic")
        return PolicyKind::ergodic;
    if (name == "inversion")
        return PolicyKind::inversion;
    throw ConfigError("unknown policy '" + name +
                      "' (expected proposed, nearest, constant, independent, ergodic or inversion)");
}

inline std::string policy_name(PolicyKind k)
{
    switch (k)
    {
    case PolicyKind::proposed:
        return "proposed";
    case PolicyKind::nearest:
        return "nearest";
    case PolicyKind::constant:
        return "constant";
    case PolicyKind::independent:
        return "independent";
    case PolicyKind::ergodic:
        return "ergodic";
    case PolicyKind::inversion:
        return "inversion";
    }
    return "?";
}

/// One-transmitter copy of RRH `i`.
inline Scenario single_rrh(const Scenario &scenario, std::size_t i)
{
    Scenario s = scenario;
    s.rrhs = {scenario.rrhs.at(i)};
    return s;
}

/// Index of the RRH with the largest mean CPNR (the nearest one when all
/// links share the same shadowing); ties go to the lower index.
inline std::size_t nearest_rrh(const Scenario &scenario)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < scenario.size(); ++i)
        if (scenario.rrhs[i].mean_cpnr > scenario.rrhs[best].mean_cpnr)
            best = i;
    return best;
}

/// Price that makes the one-transmitter policy spend exactly P^avg on
/// average (closed-form expectation, bisection in log lambda).
inline double single_rrh_price(const Scenario &single)
{
    if (single.size() != 1)
        throw DomainError("single_rrh_price: one RRH expected");
    const double target = single.rrhs[0].p_avg;
    if (analytics::avg_power_single(0.0, single) <= target)
        return 0.0;
    double lo = 1e-12, hi = 1.0;
    while (analytics::avg_power_single(hi, single) > target)
        hi *= 2.0;
    for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-13; ++it)
    {
        const double mid = std::sqrt(lo * hi);
        if (analytics::avg_power_single(mid, single) > target)
            lo = mid;
        else
            hi = mid;
    }
    return std::sqrt(lo * hi);
}

/// Prices a policy needs, computed once per scenario.
struct PolicyDuals
{
    DualVariables lambda;     ///< proposed / ergodic: one per RRH
    std::size_t serving = 0;  ///< nearest: the serving RRH
};

/// Computes the prices each policy needs. The proposed policy reuses
/// dual::solve with `solve_cfg`; the delay-tolerant one solves the theta = 0
/// problem with Monte Carlo batches.
inline PolicyDuals prepare_duals(PolicyKind kind, const Scenario &scenario, const dual::SolveConfig &solve_cfg)
{
    PolicyDuals d;
    switch (kind)
    {
    case PolicyKind::proposed:
        d.lambda = dual::solve(scenario, solve_cfg).lambda;
        break;
    case PolicyKind::nearest:
        d.serving = nearest_rrh(scenario);
        d.lambda = {single_rrh_price(single_rrh(scenario, d.serving))};
        break;
    case PolicyKind::independent:
        for (std::size_t i = 0; i < scenario.size(); ++i)
            d.lambda.push_back(single_rrh_price(single_rrh(scenario, i)));
        break;
    case PolicyKind::ergodic: {
        auto cfg = solve_cfg;
        if (cfg.mode != dual::AvgPowerMode::online)
            cfg.mode = dual::AvgPowerMode::batch_mc;
        d.lambda = dual::solve_ergodic(scenario, cfg).lambda;
        break;
    }
    case PolicyKind::constant:
    case PolicyKind::inversion:
        break;
    }
    return d;
}

/// Builds the state -> power map for `kind`.
inline Policy baseline_policy(PolicyKind kind, const Scenario &scenario, const PolicyDuals &duals)
{
    const std::size_t n = scenario.size();
    switch (kind)
    {
    case PolicyKind::proposed:
        if (duals.lambda.size() != n)
            throw DomainError("proposed policy needs one price per RRH");
        return [scenario, lambda = duals.lambda](std::span<const double> a) {
            return allocator::allocate_state(lambda, a, scenario);
        };
    case PolicyKind::ergodic:
        if (duals.lambda.size() != n)
            throw DomainError("ergodic policy needs one price per RRH");
        return [scenario, lambda = duals.lambda](std::span<const double> a) {
            return allocator::allocate_ergodic(lambda, a, scenario);
        };
    case PolicyKind::constant: {
        PowerVector p = scenario.p_avg();
        return [p](std::span<const double>) { return p; };
    }
    case PolicyKind::nearest: {
        if (duals.lambda.size() != 1 || duals.serving >= n)
            throw DomainError("nearest policy needs the serving RRH and its price");
        const Scenario single = single_rrh(scenario, duals.serving);
        return [single, n, i = duals.serving, l = duals.lambda[0]](std::span<const double> a) {
            PowerVector p(n, 0.0);
            p[i] = allocator::allocate_single(l, a[i], single);
            return p;
        };
    }
    case PolicyKind::independent: {
        if (duals.lambda.size() != n)
            throw DomainError("independent policy needs one price per RRH");
        std::vector<Scenario> singles;
        for (std::size_t i = 0; i < n; ++i)
            singles.push_back(single_rrh(scenario, i));
        return [singles, lambda = duals.lambda](std::span<const double> a) {
            PowerVector p(singles.size());
            for (std::size_t i = 0; i < p.size(); ++i)
                p[i] = allocator::allocate_single(lambda[i], a[i], singles[i]);
            return p;
        };
    }
    case PolicyKind::inversion: {
        const auto inv = allocator::channel_inversion_policy(scenario);
        return [inv](std::span<const double> a) { return inv.power(a); };
    }
    }
    throw ConfigError("unknown policy kind");
}

} // namespace cranec::metrics
