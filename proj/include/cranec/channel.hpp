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

// Nakagami-m channel model: mean CPNR from geometry, the per-link density,
// and seeded samplers for independent block-fading states.

#include <cranec/error.hpp>
#include <cranec/scenario.hpp>
#include <cranec/specfun.hpp>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace cranec::channel
{

/// Path loss in dB for a link of `distance_km` kilometres.
inline double path_loss_db(double distance_km)
{
    if (!(distance_km > 0.0))
        throw DomainError("path_loss_db: distance must be positive");
    return 148.1 + 37.6 * std::log10(distance_km);
}

/// Noise power in dBW over `bandwidth` Hz for a density in dBm/Hz.
inline double noise_power_dbw(double noise_dbm_per_hz, double bandwidth)
{
    return noise_dbm_per_hz + 10.0 * std::log10(bandwidth) - 30.0;
}

/// Mean CPNR (per watt of transmit power) of a link with the given distance,
/// shadowing realization and receiver noise.
inline double mean_cpnr_from_geometry(double distance_km, double shadow_db, double noise_dbm_per_hz,
                                      double bandwidth)
{
    if (!(distance_km > 0.0))
        throw DomainError("mean_cpnr_from_geometry: distance must be positive, got " +
                          std::to_string(distance_km));
    if (!(bandwidth > 0.0))
        throw DomainError("mean_cpnr_from_geometry: bandwidth must be positive");
    const double gain_db = -path_loss_db(distance_km) + shadow_db;
    return std::pow(10.0, (gain_db - noise_power_dbw(noise_dbm_per_hz, bandwidth)) / 10.0);
}

/// Euclidean distance in km between two planar positions given in metres.
inline double distance_km(std::span<const double, 2> a, std::span<const double, 2> b)
{
    return std::hypot(a[0] - b[0], a[1] - b[1]) / 1000.0;
}

/// Nakagami-m density of the CPNR (gamma with shape m and mean `mean_cpnr`).
inline double pdf(double alpha, double m, double mean_cpnr)
{
    if (!(alpha >= 0.0) || !(m >= 0.5) || !(mean_cpnr > 0.0))
        throw DomainError("channel::pdf: need alpha >= 0, m >= 0.5, mean > 0");
    const double rate = m / mean_cpnr;
    if (alpha == 0.0)
    {
        if (m == 1.0)
            return rate;
        return m > 1.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return std::exp((m - 1.0) * std::log(alpha) + m * std::log(rate) - rate * alpha - specfun::ln_gamma(m));
}

/// P(alpha_i <= x).
inline double cdf(double x, double m, double mean_cpnr)
{
    if (x <= 0.0)
        return 0.0;
    return specfun::gamma_p(m, m * x / mean_cpnr);
}

/// P(alpha_i > x).
inline double survival(double x, double m, double mean_cpnr)
{
    if (x <= 0.0)
        return 1.0;
    return specfun::gamma_q(m, m * x / mean_cpnr);
}

/// Smallest x (found by doubling) with survival(x) below `mass`.
inline double tail_cutoff(double m, double mean_cpnr, double mass = 1e-12)
{
    double x = mean_cpnr * (1.0 + 10.0 / std::sqrt(m));
    while (survival(x, m, mean_cpnr) > mass)
        x *= 2.0;
    return x;
}

// ---------------------------------------------------------------------------
// Seeding. Every random stream is derived from one top-level seed plus a
// stream label so experiments are reproducible cell by cell.

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// FNV-1a over a label; stable across platforms.
inline std::uint64_t label_hash(std::string_view label)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : label)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed of the named substream `label`/`index` under `seed`.
inline std::uint64_t substream_seed(std::uint64_t seed, std::string_view label, std::uint64_t index = 0)
{
    return splitmix64(splitmix64(seed ^ label_hash(label)) + index);
}

/// Draws independent fading states for a fixed scenario.
class FadingSampler
{
public:
    FadingSampler(const Scenario &scenario, std::uint64_t seed)
        : FadingSampler(scenario.mean_cpnr(), scenario.m, seed)
    {
    }

    FadingSampler(std::vector<double> mean_cpnr, double m, std::uint64_t seed) : engine_(seed)
    {
        if (!(m >= 0.5))
            throw DomainError("FadingSampler: m must be >= 0.5");
        dists_.reserve(mean_cpnr.size());
        for (double mean : mean_cpnr)
        {
            if (!(mean > 0.0))
                throw DomainError("FadingSampler: mean CPNR must be positive");
            dists_.emplace_back(m, mean / m);
        }
    }

    std::size_t size() const { return dists_.size(); }

    void sample_into(std::span<double> out)
    {
        for (std::size_t i = 0; i < dists_.size(); ++i)
            out[i] = dists_[i](engine_);
    }

    FadingState sample()
    {
        FadingState s(dists_.size());
        sample_into(s);
        return s;
    }

private:
    std::mt19937_64 engine_;
    std::vector<std::gamma_distribution<double>> dists_;
};

/// One fading state for `scenario` drawn from `engine`.
template <class Engine>
FadingState sample_fading(const Scenario &scenario, Engine &engine)
{
    FadingState s(scenario.size());
    for (std::size_t i = 0; i < s.size(); ++i)
    {
        std::gamma_distribution<double> g(scenario.m, scenario.rrhs[i].mean_cpnr / scenario.m);
        s[i] = g(engine);
    }
    return s;
}

} // namespace cranec::channel
