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

// Per-state allocation: structure, optimality against an independent
// minimizer, limiting regimes and the multiuser rule.

#include "support.hpp"

#include <cranec/allocator.hpp>
#include <cranec/channel.hpp>

#include <catch_amalgamated.hpp>

#include <numeric>

using namespace cranec;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{

Scenario two_rrh(double theta, double peak = 1.0)
{
    Scenario sc;
    sc.m = 2.0;
    sc.theta = theta;
    sc.rrhs = {{3.89, 0.5, peak}, {1.43, 0.5, peak}};
    return sc;
}

} // namespace

TEST_CASE("price-ratio ordering is stable and puts dead links last", "[allocator]")
{
    const std::vector<double> lambda{1.0, 2.0, 1.0, 3.0}, alpha{1.0, 2.0, 0.0, 1.5};
    const auto order = allocator::sort_by_price_ratio(lambda, alpha);
    CHECK(order == std::vector<std::size_t>{0, 1, 3, 2});
    CHECK(allocator::price_ratio(1.0, 0.0) == INFINITY);
}

TEST_CASE("worked two-RRH states", "[allocator]")
{
    const auto sc = two_rrh(0.1);
    const double eps = sc.epsilon();

    // Both links weak relative to the prices: silence.
    auto p = allocator::allocate_state(std::vector<double>{10.0, 10.0}, std::vector<double>{0.5, 0.5}, sc);
    CHECK(p == PowerVector{0.0, 0.0});

    // One interior transmitter: the stationarity condition holds with equality.
    const std::vector<double> lambda{0.2, 0.1}, alpha{4.0, 2.5};
    p = allocator::allocate_state(lambda, alpha, sc);
    CHECK(p[0] == 0.0);
    REQUIRE(p[1] > 0.0);
    REQUIRE(p[1] < 1.0);
    CHECK_THAT(eps * alpha[1] * std::pow(1.0 + p[1] * alpha[1], -eps - 1.0), WithinRel(lambda[1], 1e-12));

    // Cheap prices: the first RRH saturates, the second picks up the rest.
    p = allocator::allocate_state(std::vector<double>{1e-3, 1e-3}, std::vector<double>{4.0, 2.5}, sc);
    CHECK(p[0] == 1.0);
    CHECK(p[1] > 0.0);
}

TEST_CASE("Theorem-1 allocation matches an independent projected-gradient minimizer", "[allocator][oracle]")
{
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 300; ++trial)
    {
        const auto in = testkit::random_instance(rng, 1 + trial % 4);
        const auto p = allocator::allocate_state(in.lambda, in.alpha, in.sc);
        const auto q = testkit::pgd_minimize(in);
        const double eps = in.sc.epsilon();
        const double fp = testkit::objective(in.lambda, in.alpha, eps, p);
        const double fq = testkit::objective(in.lambda, in.alpha, eps, q);
        INFO("trial " << trial);
        CHECK(fp <= fq + 1e-9 * std::abs(fq));
        CHECK(allocator::kkt_residual(in.lambda, in.alpha, in.sc, p) <= 1e-8);
    }
}

TEST_CASE("structural properties of the active set", "[allocator][property]")
{
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 10000; ++trial)
    {
        const auto in = testkit::random_instance(rng, 1 + trial % 5);
        const auto a = allocator::allocate_state_detailed(in.lambda, in.alpha, in.sc);
        std::size_t interior = 0;
        for (std::size_t x = 0; x < a.order.size(); ++x)
        {
            const std::size_t i = a.order[x];
            const double peak = in.sc.rrhs[i].p_peak;
            if (a.power[i] > 0.0 && a.power[i] < peak)
                ++interior;
            if (x >= a.active_count)
                CHECK(a.power[i] == 0.0); // silent beyond the active prefix
            else if (x + 1 < a.active_count)
                CHECK(a.power[i] == peak); // all but the last active RRH at peak
        }
        CHECK(interior <= 1);
        // Ratio ordering: a transmitting RRH never has a larger price ratio
        // than a silent one.
        double worst_on = 0.0, best_off = INFINITY;
        for (std::size_t i = 0; i < in.alpha.size(); ++i)
        {
            const double r = allocator::price_ratio(in.lambda[i], in.alpha[i]);
            if (a.power[i] > 0.0)
                worst_on = std::max(worst_on, r);
            else
                best_off = std::min(best_off, r);
        }
        CHECK(worst_on <= best_off);
    }
}

TEST_CASE("single-RRH closed form agrees with the general rule", "[allocator]")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 2000; ++trial)
    {
        const auto in = testkit::random_instance(rng, 1);
        CHECK_THAT(allocator::allocate_single(in.lambda[0], in.alpha[0], in.sc),
                   WithinAbs(allocator::allocate_state(in.lambda, in.alpha, in.sc)[0], 1e-12));
    }
    Scenario sc;
    sc.theta = 0.1;
    sc.rrhs = {{1.0, 0.5, 1.0}};
    const double eps = sc.epsilon();
    CHECK(allocator::allocate_single(eps * 2.0, 1.9, sc) == 0.0); // below the activation threshold
    CHECK(allocator::allocate_single(1e-9, 5.0, sc) == 1.0);      // clipped at peak
}

TEST_CASE("small-theta allocation approaches water-filling", "[allocator][limit]")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 1000; ++trial)
    {
        auto in = testkit::random_instance(rng, 1 + trial % 4);
        in.sc.theta = 1e-6;
        const double eps = in.sc.epsilon();
        // Prices of the delay-tolerant problem, mapped to the delay-aware scale.
        std::vector<double> lambda_erg(in.alpha.size());
        for (auto &l : lambda_erg)
            l = 1.0 / (std::numbers::ln2 * testkit::log_uniform(rng, 0.05, 5.0));
        std::vector<double> lambda(lambda_erg.size());
        for (std::size_t i = 0; i < lambda.size(); ++i)
            lambda[i] = lambda_erg[i] * eps * std::numbers::ln2;
        const auto p = allocator::allocate_state(lambda, in.alpha, in.sc);
        const auto q = allocator::allocate_ergodic(allocator::ergodic_prices(lambda, eps), in.alpha, in.sc);
        for (std::size_t i = 0; i < p.size(); ++i)
            CHECK_THAT(p[i], WithinAbs(q[i], 1e-3));
    }
    // Water-filling level 1/(lambda ln 2) - 1/alpha on a single link.
    Scenario sc;
    sc.rrhs = {{1.0, 1.0, 10.0}};
    const std::vector<double> l{0.5};
    CHECK_THAT(allocator::allocate_ergodic(l, std::vector<double>{4.0}, sc)[0],
               WithinRel(1.0 / (0.5 * std::numbers::ln2) - 0.25, 1e-14));
    CHECK(allocator::allocate_ergodic(l, std::vector<double>{0.3}, sc)[0] == 0.0); // alpha below lambda ln 2
    // theta = 0 routes to the ergodic rule.
    CHECK(allocator::allocate_state(l, std::vector<double>{4.0}, sc) ==
          allocator::allocate_ergodic(l, std::vector<double>{4.0}, sc));
}

TEST_CASE("channel inversion spends the budget at a constant rate", "[allocator][limit]")
{
    auto sc = two_rrh(0.5, INFINITY);
    const auto inv = allocator::channel_inversion_policy(sc);
    // E[1/alpha] = m / ((m - 1) mean) for gamma shape m > 1.
    for (std::size_t i = 0; i < 2; ++i)
        CHECK_THAT(inv.beta[i] * sc.m / ((sc.m - 1.0) * sc.rrhs[i].mean_cpnr), WithinRel(sc.rrhs[i].p_avg, 1e-14));
    const std::vector<double> a{0.7, 3.1};
    const auto p = inv.power(a);
    CHECK_THAT(allocator::received_snr(a, p), WithinRel(inv.beta[0] + inv.beta[1], 1e-14));
    CHECK_THAT(inv.ec_bits_per_frame, WithinRel(sc.frame_capacity() * std::log2(1.0 + inv.beta[0] + inv.beta[1]), 1e-14));

    sc.m = 1.0; // Rayleigh: E[1/alpha] diverges and the zero-outage rate is zero
    const auto ray = allocator::channel_inversion_policy(sc);
    CHECK(ray.ec_bits_per_frame == 0.0);
    CHECK(ray.power(a) == PowerVector{0.0, 0.0});
}

TEST_CASE("Hessian is the rank-one matrix s alpha alpha^T and PSD", "[allocator][property]")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 10000; ++trial)
    {
        const auto in = testkit::random_instance(rng, 1 + trial % 5);
        const std::size_t n = in.alpha.size();
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i)
            p[i] = std::uniform_real_distribution<double>(0.0, in.sc.rrhs[i].p_peak)(rng);
        const auto h = allocator::hessian(in.alpha, in.sc, p);
        std::vector<double> v(n);
        for (auto &x : v)
            x = nd(rng);
        double quad = 0.0, av = 0.0, mass = 0.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            av += in.alpha[i] * v[i];
            for (std::size_t j = 0; j < n; ++j)
            {
                quad += v[i] * h[i * n + j] * v[j];
                mass += std::abs(v[i] * h[i * n + j] * v[j]);
                CHECK(h[i * n + j] == h[j * n + i]);
            }
        }
        CHECK(quad >= -1e-12 * std::abs(quad));
        // Mixed signs in v cancel, so round-off scales with the absolute sum.
        CHECK_THAT(quad, WithinAbs(allocator::hessian_scale(in.alpha, in.sc, p) * av * av, 1e-13 * mass));
    }
    // Finite-difference check of one entry.
    const auto sc = two_rrh(0.2);
    const std::vector<double> a{2.0, 0.7}, p{0.3, 0.4}, zero{0.0, 0.0};
    const double hstep = 1e-4;
    auto f = [&](double d0, double d1) {
        return allocator::state_objective(zero, a, sc, std::vector<double>{p[0] + d0, p[1] + d1});
    };
    const double fd = (f(hstep, hstep) - f(hstep, -hstep) - f(-hstep, hstep) + f(-hstep, -hstep)) / (4 * hstep * hstep);
    CHECK_THAT(allocator::hessian(a, sc, p)[1], WithinRel(fd, 1e-6));
}

TEST_CASE("brute-force oracle agrees on small instances", "[allocator][oracle]")
{
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial)
    {
        const auto in = testkit::random_instance(rng, 1 + trial % 3);
        const auto p = allocator::allocate_state(in.lambda, in.alpha, in.sc);
        const auto q = allocator::brute_force_state(in.lambda, in.alpha, in.sc);
        const double fp = allocator::state_objective(in.lambda, in.alpha, in.sc, p);
        const double fq = allocator::state_objective(in.lambda, in.alpha, in.sc, q);
        CHECK(fp <= fq + 1e-9 * std::abs(fq));
    }
}

TEST_CASE("allocator input validation", "[allocator]")
{
    const auto sc = two_rrh(0.1);
    CHECK_THROWS_AS(allocator::allocate_state(std::vector<double>{1.0}, std::vector<double>{1.0, 1.0}, sc), DomainError);
    CHECK_THROWS_AS(allocator::allocate_state_detailed(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 1.0},
                                                       sc.with_theta(0.0)),
                    DomainError);
    CHECK_THROWS_AS(allocator::allocate_single(0.1, 1.0, sc), DomainError);
    Scenario big = sc;
    big.rrhs.resize(6, sc.rrhs[0]);
    const std::vector<double> six(6, 1.0);
    CHECK_THROWS_AS(allocator::brute_force_state(six, six, big), DomainError);
}

TEST_CASE("multiuser rule", "[allocator][multiuser]")
{
    allocator::MultiuserScenario mu;
    mu.m = 2.0;
    mu.p_avg = {0.5, 0.5};
    mu.theta = {0.3};
    mu.mean_cpnr = {{2.0, 1.0}};

    SECTION("one user reduces to the single-user rule on its cheapest RRH")
    {
        std::mt19937_64 rng(8);
        for (int trial = 0; trial < 1000; ++trial)
        {
            const std::vector<double> lambda{testkit::log_uniform(rng, 1e-3, 1.0), testkit::log_uniform(rng, 1e-3, 1.0)};
            const std::vector<std::vector<double>> alpha{{testkit::log_uniform(rng, 0.05, 20.0), testkit::log_uniform(rng, 0.05, 20.0)}};
            const auto asg = allocator::allocate_multiuser(lambda, std::vector<double>{1.0}, alpha, mu);
            const std::size_t best = lambda[0] / alpha[0][0] <= lambda[1] / alpha[0][1] ? 0 : 1;
            Scenario single;
            single.m = mu.m;
            single.theta = mu.theta[0];
            single.rrhs = {{mu.mean_cpnr[0][best], mu.p_avg[best], INFINITY}};
            CHECK(asg[0].rrh == best);
            CHECK(asg[0].power == allocator::allocate_state(std::vector<double>{lambda[best]},
                                                            std::vector<double>{alpha[0][best]}, single)[0]);
        }
    }
    SECTION("symmetric users and transmitters get mirrored assignments")
    {
        mu.theta = {0.3, 0.3};
        mu.mean_cpnr = {{2.0, 1.0}, {1.0, 2.0}};
        const std::vector<double> lambda{0.05, 0.05}, kappa{0.7, 0.7};
        const std::vector<std::vector<double>> alpha{{3.0, 1.0}, {1.0, 3.0}};
        const auto asg = allocator::allocate_multiuser(lambda, kappa, alpha, mu);
        CHECK(asg[0].rrh == 0);
        CHECK(asg[1].rrh == 1);
        CHECK(asg[0].power == asg[1].power);
    }
    SECTION("stationarity of the chosen power")
    {
        const std::vector<double> lambda{0.01, 0.02}, kappa{0.4};
        const std::vector<std::vector<double>> alpha{{3.0, 1.0}};
        const auto asg = allocator::allocate_multiuser(lambda, kappa, alpha, mu);
        const double eps = mu.epsilon(0), a = alpha[0][asg[0].rrh], p = asg[0].power;
        REQUIRE(p > 0.0);
        // d/dp [(1 + p a)^-eps / kappa + lambda p] = 0
        CHECK_THAT(eps * a * std::pow(1.0 + p * a, -eps - 1.0), WithinRel(kappa[0] * lambda[asg[0].rrh], 1e-12));
    }
    SECTION("validation")
    {
        CHECK_THROWS_AS(allocator::allocate_multiuser(std::vector<double>{0.1, 0.1}, std::vector<double>{0.0},
                                                      {{1.0, 1.0}}, mu),
                        DomainError);
        mu.mean_cpnr = {{1.0}};
        CHECK_THROWS_AS(mu.validate(), ConfigError);
    }
}
