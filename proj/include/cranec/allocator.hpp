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

// Per-fading-state power allocation.
//
// For fixed prices lambda, each fading state solves
//
//     min_p  (1 + sum_i p_i alpha_i)^(-eps) + sum_i lambda_i p_i,   0 <= p_i <= P_i^peak,
//
// whose optimum fills transmitters in increasing lambda_i / alpha_i order:
// the leading ones at peak, at most one in the interior, the rest silent.
// Also here: the single-transmitter form, the delay-tolerant (ergodic) and
// zero-delay (channel inversion) limits, the orthogonal multiuser rule, and
// a brute-force search used as an independent oracle.

#include <cranec/error.hpp>
#include <cranec/scenario.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace cranec::allocator
{

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// lambda / alpha, with zero-gain links priced at +inf.
inline double price_ratio(double lambda, double alpha) { return alpha > 0.0 ? lambda / alpha : kInf; }

/// Indices ordered by nondecreasing lambda_i / alpha_i; ties keep index order.
inline std::vector<std::size_t> sort_by_price_ratio(std::span<const double> lambda, std::span<const double> alpha)
{
    if (lambda.size() != alpha.size())
        throw DomainError("sort_by_price_ratio: length mismatch");
    std::vector<std::size_t> order(lambda.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return price_ratio(lambda[a], alpha[a]) < price_ratio(lambda[b], alpha[b]);
    });
    return order;
}

namespace detail
{

// (1 + s)^(-(eps + 1)) without overflow for large exponents.
inline double marginal_threshold(double s, double eps)
{
    if (std::isinf(s))
        return 0.0;
    return std::exp(-(eps + 1.0) * std::log1p(s));
}

// Optimal 1 + sum p alpha for the marginal link with price ratio
// lambda / (eps alpha): ratio^(-1/(eps+1)).
inline double interior_level(double ratio, double eps) { return std::exp(-std::log(ratio) / (eps + 1.0)); }

inline void check_sizes(std::span<const double> lambda, std::span<const double> alpha, const Scenario &sc)
{
    if (lambda.size() != sc.size() || alpha.size() != sc.size())
        throw DomainError("allocator: lambda/alpha length must equal the number of RRHs (" +
                          std::to_string(sc.size()) + ")");
}

} // namespace detail

/// Number of active transmitters: the largest x with
/// lambda_pi(x) / (eps alpha_pi(x)) < (1 + sum_{b<x} P^peak_pi(b) alpha_pi(b))^(-eps-1).
inline std::size_t active_set_size(std::span<const std::size_t> order, std::span<const double> lambda,
                                   std::span<const double> alpha, const Scenario &scenario)
{
    const double eps = scenario.epsilon();
    if (!(eps > 0.0))
        throw DomainError("active_set_size: requires theta > 0");
    double filled = 0.0;
    std::size_t count = 0;
    for (std::size_t x = 0; x < order.size(); ++x)
    {
        const std::size_t i = order[x];
        if (!(alpha[i] > 0.0))
            break;
        const double lhs = lambda[i] / (eps * alpha[i]);
        if (!(lhs < detail::marginal_threshold(filled, eps)))
            break;
        count = x + 1;
        filled += scenario.rrhs[i].p_peak * alpha[i];
    }
    return count;
}

/// Full result of one per-state allocation.
struct Allocation
{
    PowerVector power;
    std::vector<std::size_t> order;
    std::size_t active_count = 0;
    /// The interior power formula came out negative and was clamped to zero.
    bool clamped = false;
};

/// Optimal per-state powers for prices `lambda` (requires theta > 0).
inline Allocation allocate_state_detailed(std::span<const double> lambda, std::span<const double> alpha,
                                          const Scenario &scenario)
{
    detail::check_sizes(lambda, alpha, scenario);
    const double eps = scenario.epsilon();
    if (!(eps > 0.0))
        throw DomainError("allocate_state_detailed: requires theta > 0; use allocate_ergodic");

    Allocation out;
    out.power.assign(scenario.size(), 0.0);
    out.order = sort_by_price_ratio(lambda, alpha);
    out.active_count = active_set_size(out.order, lambda, alpha, scenario);
    if (out.active_count == 0)
        return out;

    double filled = 0.0;
    for (std::size_t a = 0; a + 1 < out.active_count; ++a)
    {
        const std::size_t i = out.order[a];
        out.power[i] = scenario.rrhs[i].p_peak;
        filled += scenario.rrhs[i].p_peak * alpha[i];
    }
    const std::size_t last = out.order[out.active_count - 1];
    const double target = detail::interior_level(lambda[last] / (eps * alpha[last]), eps);
    double t = (target - filled - 1.0) / alpha[last];
    if (t < 0.0)
    {
        out.clamped = true;
        t = 0.0;
    }
    out.power[last] = std::min(scenario.rrhs[last].p_peak, t);
    return out;
}

/// Optimal per-state powers. theta == 0 is routed to the ergodic allocator.
inline PowerVector allocate_state(std::span<const double> lambda, std::span<const double> alpha,
                                  const Scenario &scenario);

/// Delay-tolerant limit (ergodic-capacity water-filling across transmitters).
inline PowerVector allocate_ergodic(std::span<const double> lambda, std::span<const double> alpha,
                                    const Scenario &scenario)
{
    detail::check_sizes(lambda, alpha, scenario);
    PowerVector p(scenario.size(), 0.0);
    const auto order = sort_by_price_ratio(lambda, alpha);
    double filled = 0.0;
    std::size_t count = 0;
    for (std::size_t x = 0; x < order.size(); ++x)
    {
        const std::size_t i = order[x];
        if (!(alpha[i] > 0.0))
            break;
        const double level = alpha[i] / (lambda[i] * std::numbers::ln2);
        if (!(level > 1.0 + filled))
            break;
        count = x + 1;
        filled += scenario.rrhs[i].p_peak * alpha[i];
    }
    if (count == 0)
        return p;
    filled = 0.0;
    for (std::size_t a = 0; a + 1 < count; ++a)
    {
        const std::size_t i = order[a];
        p[i] = scenario.rrhs[i].p_peak;
        filled += p[i] * alpha[i];
    }
    const std::size_t last = order[count - 1];
    const double level = alpha[last] / (lambda[last] * std::numbers::ln2);
    p[last] = std::clamp((level - filled - 1.0) / alpha[last], 0.0, scenario.rrhs[last].p_peak);
    return p;
}

inline PowerVector allocate_state(std::span<const double> lambda, std::span<const double> alpha,
                                  const Scenario &scenario)
{
    if (!(scenario.epsilon() > 0.0))
        return allocate_ergodic(lambda, alpha, scenario);
    return allocate_state_detailed(lambda, alpha, scenario).power;
}

/// Prices of the delay-tolerant problem that correspond to delay-aware prices
/// `lambda` as eps -> 0: the ergodic objective is the first-order term
/// eps * ln(1 + x) of 1 - (1 + x)^(-eps), rescaled to log2.
inline DualVariables ergodic_prices(std::span<const double> lambda, double eps)
{
    DualVariables out(lambda.begin(), lambda.end());
    for (double &l : out)
        l /= eps * std::numbers::ln2;
    return out;
}

/// Single-transmitter closed form (threshold / interior / peak).
inline double allocate_single(double lambda1, double alpha1, const Scenario &scenario)
{
    if (scenario.size() != 1)
        throw DomainError("allocate_single: scenario must have exactly one RRH");
    const double eps = scenario.epsilon();
    if (!(eps > 0.0))
        throw DomainError("allocate_single: requires theta > 0");
    const double peak = scenario.rrhs[0].p_peak;
    if (!(alpha1 > 0.0) || alpha1 < lambda1 / eps)
        return 0.0;
    const double v = 1.0 / (1.0 + eps);
    const double f = 1.0 / (std::pow(lambda1 / eps, v) * std::pow(alpha1, eps * v)) - 1.0 / alpha1;
    return f < peak ? std::max(f, 0.0) : peak;
}

/// Zero-delay limit: constant-rate channel inversion p_i = beta_i / alpha_i.
struct InversionPolicy
{
    std::vector<double> beta;
    double ec_bits_per_frame = 0.0;

    PowerVector power(std::span<const double> alpha) const
    {
        PowerVector p(beta.size(), 0.0);
        for (std::size_t i = 0; i < beta.size(); ++i)
            p[i] = alpha[i] > 0.0 ? beta[i] / alpha[i] : 0.0;
        return p;
    }
};

inline InversionPolicy channel_inversion_policy(const Scenario &scenario)
{
    InversionPolicy out;
    out.beta.assign(scenario.size(), 0.0);
    if (scenario.m <= 1.0)
        return out;
    double total = 0.0;
    for (std::size_t i = 0; i < scenario.size(); ++i)
    {
        const auto &r = scenario.rrhs[i];
        out.beta[i] = (scenario.m - 1.0) * r.mean_cpnr * r.p_avg / scenario.m;
        total += out.beta[i];
    }
    out.ec_bits_per_frame = scenario.frame_capacity() * std::log2(1.0 + total);
    return out;
}

// ---------------------------------------------------------------------------
// Per-state objective, KKT residual and Hessian.

inline double received_snr(std::span<const double> alpha, std::span<const double> p)
{
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        s += p[i] * alpha[i];
    return s;
}

/// (1 + sum p alpha)^(-eps) + sum lambda p.
inline double state_objective(std::span<const double> lambda, std::span<const double> alpha,
                              const Scenario &scenario, std::span<const double> p)
{
    const double eps = scenario.epsilon();
    double lin = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        lin += lambda[i] * p[i];
    return std::exp(-eps * std::log1p(received_snr(alpha, p))) + lin;
}

/// Largest violation of the per-state KKT system at `p`. Multipliers of the
/// box constraints are recovered from stationarity: at p_i = 0 the gradient
/// is the lower multiplier, at p_i = P^peak its negative is the upper one,
/// and interior points must have zero gradient.
inline double kkt_residual(std::span<const double> lambda, std::span<const double> alpha, const Scenario &scenario,
                           std::span<const double> p)
{
    const double eps = scenario.epsilon();
    const double marginal = eps * detail::marginal_threshold(received_snr(alpha, p), eps);
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
    {
        const double peak = scenario.rrhs[i].p_peak;
        const double grad = lambda[i] - marginal * alpha[i];
        worst = std::max({worst, -p[i], p[i] - peak});
        if (p[i] <= 0.0)
            worst = std::max(worst, -grad); // lower multiplier must be >= 0
        else if (p[i] >= peak)
            worst = std::max(worst, grad); // upper multiplier = -grad >= 0
        else
            worst = std::max(worst, std::abs(grad));
    }
    return worst;
}

/// Scalar factor s of the per-state Hessian s * alpha alpha^T.
inline double hessian_scale(std::span<const double> alpha, const Scenario &scenario, std::span<const double> p)
{
    const double eps = scenario.epsilon();
    return eps * (eps + 1.0) * std::exp(-(eps + 2.0) * std::log1p(received_snr(alpha, p)));
}

/// Row-major I x I Hessian of (1 + sum p alpha)^(-eps) in p.
inline std::vector<double> hessian(std::span<const double> alpha, const Scenario &scenario,
                                   std::span<const double> p)
{
    const double s = hessian_scale(alpha, scenario, p);
    const std::size_t n = alpha.size();
    std::vector<double> h(n * n);
    // Fill one triangle and mirror it, so the result is exactly symmetric.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            h[i * n + j] = h[j * n + i] = s * alpha[i] * alpha[j];
    return h;
}

// ---------------------------------------------------------------------------
// Brute-force oracle.

/// Minimizes the per-state objective over the peak-power box by a uniform
/// grid followed by cyclic exact coordinate minimization (golden section).
/// The objective is smooth, convex and strictly convex along each
/// coordinate with alpha_i > 0, so the coordinate sweep converges to the
/// global optimum. Tractable only for I <= 5.
inline PowerVector brute_force_state(std::span<const double> lambda, std::span<const double> alpha,
                                     const Scenario &scenario, int grid_resolution = 9)
{
    detail::check_sizes(lambda, alpha, scenario);
    const std::size_t n = scenario.size();
    if (n > 5)
        throw DomainError("brute_force_state: at most 5 RRHs supported, got " + std::to_string(n));
    if (grid_resolution < 2)
        throw DomainError("brute_force_state: grid_resolution must be >= 2");
    for (const auto &r : scenario.rrhs)
        if (!std::isfinite(r.p_peak))
            throw DomainError("brute_force_state: peak powers must be finite");

    auto f = [&](std::span<const double> p) { return state_objective(lambda, alpha, scenario, p); };

    PowerVector best(n, 0.0), cur(n, 0.0);
    double best_val = f(best);
    std::vector<int> idx(n, 0);
    const int g = grid_resolution;
    for (;;)
    {
        for (std::size_t i = 0; i < n; ++i)
            cur[i] = scenario.rrhs[i].p_peak * idx[i] / (g - 1);
        const double v = f(cur);
        if (v < best_val)
        {
            best_val = v;
            best = cur;
        }
        std::size_t d = 0;
        while (d < n && ++idx[d] == g)
            idx[d++] = 0;
        if (d == n)
            break;
    }

    constexpr double kGolden = 0.6180339887498949;
    for (int sweep = 0; sweep < 2000; ++sweep)
    {
        double moved = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            double lo = 0.0, hi = scenario.rrhs[i].p_peak;
            cur = best;
            auto fi = [&](double x) {
                cur[i] = x;
                return f(cur);
            };
            double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
            double f1 = fi(x1), f2 = fi(x2);
            while (hi - lo > 1e-14 * std::max(1.0, scenario.rrhs[i].p_peak))
            {
                if (f1 <= f2)
                {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - kGolden * (hi - lo);
                    f1 = fi(x1);
                }
                else
                {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + kGolden * (hi - lo);
                    f2 = fi(x2);
                }
            }
            // The minimizer may sit on a bound; compare the endpoints too.
            double xbest = 0.5 * (lo + hi);
            double vbest = fi(xbest);
            for (double edge : {0.0, scenario.rrhs[i].p_peak})
            {
                const double ve = fi(edge);
                if (ve < vbest)
                {
                    vbest = ve;
                    xbest = edge;
                }
            }
            if (vbest <= best_val)
            {
                moved = std::max(moved, std::abs(xbest - best[i]));
                best[i] = xbest;
                best_val = vbest;
            }
        }
        if (moved < 1e-13)
            break;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Orthogonal multiuser extension (no peak limits).

/// K users served on orthogonal channels by I transmitters with per-RRH
/// average-power budgets.
struct MultiuserScenario
{
    std::vector<double> p_avg;                  ///< per RRH, W
    std::vector<std::vector<double>> mean_cpnr; ///< [user][rrh]
    std::vector<double> theta;                  ///< per user QoS exponent
    double m = 1.0;
    double t_f = 1e-4;
    double bandwidth = 2e5;

    std::size_t users() const { return theta.size(); }
    std::size_t rrhs() const { return p_avg.size(); }
    double epsilon(std::size_t k) const { return theta[k] * t_f * bandwidth / std::numbers::ln2; }

    void validate() const
    {
        if (p_avg.empty() || theta.empty())
            throw ConfigError("multiuser scenario needs at least one RRH and one user");
        if (mean_cpnr.size() != theta.size())
            throw ConfigError("multiuser scenario: one mean-CPNR row per user required");
        for (const auto &row : mean_cpnr)
        {
            if (row.size() != p_avg.size())
                throw ConfigError("multiuser scenario: mean-CPNR row length must equal RRH count");
            for (double a : row)
                if (!(a > 0.0))
                    throw ConfigError("multiuser scenario: mean CPNR must be positive");
        }
        for (double p : p_avg)
            if (!(p > 0.0))
                throw ConfigError("multiuser scenario: average power must be positive");
        for (double t : theta)
            if (!(t > 0.0))
                throw ConfigError("multiuser scenario: every user needs theta > 0");
        if (!(m >= 0.5) || !(t_f > 0.0) || !(bandwidth > 0.0))
            throw ConfigError("multiuser scenario: invalid m, frame length or bandwidth");
    }
};

/// Serving transmitter and power for one user in one fading state.
struct UserAssignment
{
    std::size_t rrh = 0;
    double power = 0.0;
};

namespace detail
{

inline std::size_t cheapest_rrh(std::span<const double> lambda, std::span<const double> alpha_user)
{
    std::size_t best = 0;
    double best_ratio = price_ratio(lambda[0], alpha_user[0]);
    for (std::size_t i = 1; i < lambda.size(); ++i)
    {
        const double r = price_ratio(lambda[i], alpha_user[i]);
        if (r < best_ratio)
        {
            best_ratio = r;
            best = i;
        }
    }
    return best;
}

} // namespace detail

/// Each user is served by argmin_i lambda_i / alpha_{i,k} with
/// p = [(eps_k / (kappa_k lambda_i))^(1/(1+eps_k)) alpha^(-eps_k/(1+eps_k)) - 1/alpha]^+.
inline std::vector<UserAssignment> allocate_multiuser(std::span<const double> lambda, std::span<const double> kappa,
                                                      const std::vector<std::vector<double>> &alpha_all,
                                                      const MultiuserScenario &scenario)
{
    const std::size_t k_users = scenario.users();
    if (kappa.size() != k_users || alpha_all.size() != k_users || lambda.size() != scenario.rrhs())
        throw DomainError("allocate_multiuser: dimension mismatch");
    std::vector<UserAssignment> out(k_users);
    for (std::size_t k = 0; k < k_users; ++k)
    {
        if (!(kappa[k] > 0.0))
            throw DomainError("allocate_multiuser: kappa must be positive");
        const auto &a = alpha_all[k];
        const std::size_t i = detail::cheapest_rrh(lambda, a);
        out[k].rrh = i;
        if (!(a[i] > 0.0))
            continue;
        const double eps = scenario.epsilon(k);
        // Same expression as the single-user interior power with price kappa * lambda.
        const double level = detail::interior_level(kappa[k] * lambda[i] / (eps * a[i]), eps);
        out[k].power = std::max(0.0, (level - 1.0) / a[i]);
    }
    return out;
}

/// Ergodic-capacity counterpart: cheapest transmitter, water-filling power.
inline std::vector<UserAssignment> allocate_multiuser_ergodic(std::span<const double> lambda,
                                                              const std::vector<std::vector<double>> &alpha_all,
                                                              const MultiuserScenario &scenario)
{
    std::vector<UserAssignment> out(scenario.users());
    for (std::size_t k = 0; k < out.size(); ++k)
    {
        const auto &a = alpha_all[k];
        const std::size_t i = detail::cheapest_rrh(lambda, a);
        out[k].rrh = i;
        if (a[i] > 0.0)
            out[k].power = std::max(0.0, 1.0 / (lambda[i] * std::numbers::ln2) - 1.0 / a[i]);
    }
    return out;
}

/// Per-state Lagrangian of one user served by `rrh` with `power`, for fixed kappa:
/// (1 + p alpha)^(-eps_k) / kappa_k + lambda_rrh p.
inline double multiuser_user_objective(double lambda_rrh, double kappa, double eps, double alpha, double power)
{
    return std::exp(-eps * std::log1p(power * alpha)) / kappa + lambda_rrh * power;
}

} // namespace cranec::allocator
