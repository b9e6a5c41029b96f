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

#include <cranec/error.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace cranec
{

/// One channel realization: instantaneous CPNR per transmitter.
using FadingState = std::vector<double>;
/// Per-transmitter transmit powers (watts) for one fading state.
using PowerVector = std::vector<double>;
/// Per-transmitter average-power prices.
using DualVariables = std::vector<double>;

/// One remote radio head: mean channel-power-to-noise ratio and power limits.
struct RrhSpec
{
    double mean_cpnr = 1.0; ///< linear, per watt of transmit power
    double p_avg = 1.0;     ///< W
    double p_peak = 1.0;    ///< W; may be +inf for "no peak limit"
};

/// Static single-user network description.
struct Scenario
{
    std::vector<RrhSpec> rrhs;
    double m = 1.0;           ///< Nakagami shape
    double t_f = 1e-4;        ///< frame length, s
    double bandwidth = 2e5;   ///< Hz
    double theta = 0.0;       ///< QoS exponent, 1/bit

    std::size_t size() const { return rrhs.size(); }

    /// epsilon(theta) = theta * T_f * B / ln 2, the exponent of the convex reformulation.
    double epsilon() const { return epsilon_for(theta); }
    double epsilon_for(double th) const { return th * t_f * bandwidth / std::numbers::ln2; }

    /// Bits per frame per unit of log2 rate (T_f * B).
    double frame_capacity() const { return t_f * bandwidth; }

    std::vector<double> mean_cpnr() const
    {
        std::vector<double> out;
        out.reserve(rrhs.size());
        for (const auto &r : rrhs)
            out.push_back(r.mean_cpnr);
        return out;
    }
    std::vector<double> p_avg() const
    {
        std::vector<double> out;
        out.reserve(rrhs.size());
        for (const auto &r : rrhs)
            out.push_back(r.p_avg);
        return out;
    }
    std::vector<double> p_peak() const
    {
        std::vector<double> out;
        out.reserve(rrhs.size());
        for (const auto &r : rrhs)
            out.push_back(r.p_peak);
        return out;
    }

    Scenario with_theta(double th) const
    {
        Scenario s = *this;
        s.theta = th;
        return s;
    }

    /// Throws ConfigError when any invariant is violated.
    void validate() const
    {
        if (rrhs.empty())
            throw ConfigError("scenario needs at least one RRH");
        if (!(m >= 0.5) || !std::isfinite(m))
            throw ConfigError("Nakagami shape m must be >= 0.5, got " + std::to_string(m));
        if (!(t_f > 0.0) || !(bandwidth > 0.0))
            throw ConfigError("frame length and bandwidth must be positive");
        if (!(theta >= 0.0) || !std::isfinite(theta))
            throw ConfigError("theta must be finite and >= 0, got " + std::to_string(theta));
        for (std::size_t i = 0; i < rrhs.size(); ++i)
        {
            const auto &r = rrhs[i];
            const std::string tag = "rrh " + std::to_string(i + 1) + ": ";
            if (!(r.mean_cpnr > 0.0) || !std::isfinite(r.mean_cpnr))
                throw ConfigError(tag + "mean CPNR must be positive and finite");
            if (!(r.p_avg > 0.0) || !std::isfinite(r.p_avg))
                throw ConfigError(tag + "average power must be positive and finite");
            if (!(r.p_peak >= r.p_avg))
                throw ConfigError(tag + "peak power must be >= average power");
        }
    }
};

} // namespace cranec
