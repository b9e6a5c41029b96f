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

// Link budget, Nakagami-m statistics and seeded sampling.

#include <cranec/channel.hpp>
#include <cranec/quadrature.hpp>

#include <boost/math/distributions/gamma.hpp>
#include <catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <set>

using namespace cranec;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("path loss and geometry-derived CPNR", "[channel]")
{
    CHECK_THAT(channel::path_loss_db(1.0), WithinAbs(148.1, 1e-12));
    CHECK_THAT(channel::path_loss_db(0.1), WithinAbs(148.1 - 37.6, 1e-12));
    CHECK_THAT(channel::noise_power_dbw(-174.0, 1e5), WithinAbs(-154.0, 1e-12));

    // Two-RRH layout with the user at the origin. Over a 100 kHz noise
    // bandwidth the link budget lands on mean CPNRs of 3.89 and 1.43.
    const std::array<double, 2> user{0.0, 0.0}, r1{-600.0, 800.0}, r2{900.0, 946.0};
    CHECK_THAT(channel::distance_km(r1, user), WithinRel(1.0, 1e-14));
    const double a1 = channel::mean_cpnr_from_geometry(channel::distance_km(r1, user), 0.0, -174.0, 1e5);
    const double a2 = channel::mean_cpnr_from_geometry(channel::distance_km(r2, user), 0.0, -174.0, 1e5);
    CHECK_THAT(a1, WithinRel(3.89, 0.005));
    CHECK_THAT(a2, WithinRel(1.43, 0.005));
    // Doubling the noise bandwidth halves the CPNR; +3 dB shadowing doubles it.
    CHECK_THAT(channel::mean_cpnr_from_geometry(1.0, 0.0, -174.0, 2e5), WithinRel(a1 / 2.0, 1e-12));
    CHECK_THAT(channel::mean_cpnr_from_geometry(1.0, 10.0 * std::log10(2.0), -174.0, 1e5), WithinRel(2.0 * a1, 1e-12));
    CHECK_THROWS_AS(channel::mean_cpnr_from_geometry(0.0, 0.0, -174.0, 1e5), DomainError);
    CHECK_THROWS_AS(channel::path_loss_db(-1.0), DomainError);
}

TEST_CASE("Nakagami-m CPNR density and distribution", "[channel]")
{
    for (double m : {0.5, 1.0, 2.0, 2.5, 4.0})
        for (double mean : {0.3, 1.43, 64.3})
        {
            INFO("m = " << m << ", mean = " << mean);
            const boost::math::gamma_distribution<double> ref(m, mean / m);
            for (double x : {0.01, 0.2, 1.0, 3.0, 50.0})
            {
                CHECK_THAT(channel::pdf(x * mean, m, mean), WithinRel(boost::math::pdf(ref, x * mean), 1e-11));
                CHECK_THAT(channel::cdf(x * mean, m, mean), WithinAbs(boost::math::cdf(ref, x * mean), 1e-13));
                CHECK_THAT(channel::cdf(x * mean, m, mean) + channel::survival(x * mean, m, mean), WithinAbs(1.0, 1e-14));
            }
            if (m >= 1.0)
            {
                const double mass = quadrature::integrate([&](double a) { return channel::pdf(a, m, mean); }, 0.0, INFINITY);
                CHECK_THAT(mass, WithinRel(1.0, 1e-9));
                const double first =
                    quadrature::integrate([&](double a) { return a * channel::pdf(a, m, mean); }, 0.0, INFINITY);
                CHECK_THAT(first, WithinRel(mean, 1e-9));
            }
            const double cut = channel::tail_cutoff(m, mean);
            CHECK(channel::survival(cut, m, mean) <= 1e-12);
        }
    CHECK(channel::pdf(0.0, 1.0, 2.0) == 0.5);
    CHECK(channel::pdf(0.0, 2.0, 2.0) == 0.0);
    CHECK(channel::cdf(-1.0, 2.0, 1.0) == 0.0);
    CHECK_THROWS_AS(channel::pdf(1.0, 0.3, 1.0), DomainError);
}

TEST_CASE("seeded sampler reproduces gamma moments", "[channel]")
{
    const std::vector<double> means{3.89, 1.43, 0.2};
    const double m = 2.0;
    channel::FadingSampler s(means, m, 12345);
    const std::size_t n = 200000;
    std::vector<double> sum(3, 0.0), sum2(3, 0.0);
    std::vector<double> first;
    for (std::size_t k = 0; k < n; ++k)
    {
        const auto a = s.sample();
        first.push_back(a[0]);
        for (int i = 0; i < 3; ++i)
        {
            sum[i] += a[i];
            sum2[i] += a[i] * a[i];
        }
    }
    for (int i = 0; i < 3; ++i)
    {
        const double mean = sum[i] / n, var = sum2[i] / n - mean * mean;
        const double sd_of_mean = means[i] / std::sqrt(m * n);
        CHECK(std::abs(mean - means[i]) < 5.0 * sd_of_mean);
        CHECK_THAT(var, WithinRel(means[i] * means[i] / m, 0.03));
    }
    // Kolmogorov-Smirnov distance of the first link.
    std::sort(first.begin(), first.end());
    double ks = 0.0;
    for (std::size_t k = 0; k < n; k += 97)
        ks = std::max(ks, std::abs(channel::cdf(first[k], m, means[0]) - (k + 0.5) / n));
    CHECK(ks < 1.63 / std::sqrt(static_cast<double>(n)) + 1e-4);
}

TEST_CASE("substreams are deterministic and distinct", "[channel]")
{
    CHECK(channel::substream_seed(7, "ec-chunk", 3) == channel::substream_seed(7, "ec-chunk", 3));
    std::set<std::uint64_t> seen;
    for (std::uint64_t seed : {1u, 2u})
        for (const char *label : {"ec-chunk", "batch-chunk", "solve-online"})
            for (std::uint64_t idx = 0; idx < 50; ++idx)
                seen.insert(channel::substream_seed(seed, label, idx));
    CHECK(seen.size() == 2 * 3 * 50);
    CHECK(channel::label_hash("") == 0xcbf29ce484222325ULL);
    CHECK(channel::label_hash("a") == 0xaf63dc4c8601ec8cULL); // FNV-1a reference value

    Scenario sc;
    sc.m = 1.0;
    sc.theta = 0.1;
    sc.rrhs = {{2.0, 0.5, 1.0}, {1.0, 0.5, 1.0}};
    channel::FadingSampler a(sc, 99), b(sc, 99);
    for (int k = 0; k < 100; ++k)
        CHECK(a.sample() == b.sample());
    CHECK_THROWS_AS(channel::FadingSampler(std::vector<double>{-1.0}, 1.0, 1), DomainError);
}
