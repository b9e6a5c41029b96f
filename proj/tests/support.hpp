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

// Shared helpers for the test suites: random instances and an independent
// per-state minimizer (projected gradient with backtracking) that knows
// nothing about the active-set structure.

#include <cranec/scenario.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace testkit
{

struct Instance
{
    cranec::Scenario sc;
    std::vector<double> lambda;
    std::vector<double> alpha;
};

inline double log_uniform(std::mt19937_64 &rng, double lo, double hi)
{
    return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(rng));
}

/// I RRHs, m in {1,2,3}, theta in [0.01, 0.5]; prices scaled so that every
/// regime (silent, interior, at peak) shows up.
inline Instance random_instance(std::mt19937_64 &rng, std::size_t n_rrh)
{
    Instance in;
    in.sc.m = static_cast<double>(std::uniform_int_distribution<int>(1, 3)(rng));
    in.sc.theta = std::uniform_real_distribution<double>(0.01, 0.5)(rng);
    const double eps = in.sc.epsilon();
    for (std::size_t i = 0; i < n_rrh; ++i)
    {
        cranec::RrhSpec r;
        r.mean_cpnr = log_uniform(rng, 0.3, 60.0);
        r.p_avg = std::uniform_real_distribution<double>(0.2, 1.0)(rng);
        r.p_peak = r.p_avg * std::uniform_real_distribution<double>(1.0, 3.0)(rng);
        in.sc.rrhs.push_back(r);
        std::gamma_distribution<double> g(in.sc.m, r.mean_cpnr / in.sc.m);
        in.alpha.push_back(g(rng));
        in.lambda.push_back(eps * r.mean_cpnr * log_uniform(rng, 1e-3, 3.0) / std::pow(1.0 + r.mean_cpnr, eps + 1.0));
    }
    return in;
}

inline double objective(const std::vector<double> &lambda, const std::vector<double> &alpha, double eps,
                        const std::vector<double> &p)
{
    double snr = 0.0, lin = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
    {
        snr += p[i] * alpha[i];
        lin += lambda[i] * p[i];
    }
    return std::pow(1.0 + snr, -eps) + lin;
}

/// Projected gradient descent with Armijo backtracking on the box [0, peak].
inline std::vector<double> pgd_minimize(const Instance &in, int iters = 20000)
{
    const std::size_t n = in.alpha.size();
    const double eps = in.sc.epsilon();
    std::vector<double> p(n, 0.0), trial(n), grad(n);
    double f = objective(in.lambda, in.alpha, eps, p);
    double step = 1.0;
    for (int it = 0; it < iters; ++it)
    {
        double snr = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            snr += p[i] * in.alpha[i];
        const double g0 = -eps * std::pow(1.0 + snr, -eps - 1.0);
        for (std::size_t i = 0; i < n; ++i)
            grad[i] = g0 * in.alpha[i] + in.lambda[i];
        step *= 2.0;
        for (;;)
        {
            double decrease = 0.0;
            for (std::size_t i = 0; i < n; ++i)
            {
                trial[i] = std::clamp(p[i] - step * grad[i], 0.0, in.sc.rrhs[i].p_peak);
                decrease += grad[i] * (p[i] - trial[i]) - (p[i] - trial[i]) * (p[i] - trial[i]) / (2.0 * step);
            }
            const double ft = objective(in.lambda, in.alpha, eps, trial);
            if (ft <= f - decrease + 1e-16 || step < 1e-300)
            {
                const bool still = trial == p;
                p = trial;
                f = ft;
                if (still)
                    return p;
                break;
            }
            step *= 0.5;
        }
    }
    return p;
}

} // namespace testkit
