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

// Dual loop: update rules, convergence on the two-RRH reference network,
// cross-mode agreement and the multiuser fixed point.

#include <cranec/dual_solver.hpp>

#include <catch_amalgamated.hpp>

#include <numeric>
#include <random>

using namespace cranec;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{

Scenario reference(double theta)
{
    Scenario sc;
    sc.m = 2.0;
    sc.theta = theta;
    sc.rrhs = {{3.89, 0.5, 1.0}, {1.43, 0.5, 1.0}};
    return sc;
}

} // namespace

TEST_CASE("subgradient step and projection", "[dual]")
{
    const auto sc = reference(0.05);
    const auto d = dual::subgradient(std::vector<double>{0.7, 0.2}, sc);
    CHECK_THAT(d[0], WithinAbs(0.2, 1e-15));
    CHECK_THAT(d[1], WithinAbs(-0.3, 1e-15));

    dual::DualState st;
    st.lambda = {0.1, 0.1};
    st.k = 4;
    st.step_a = 2.0;
    const auto next = dual::update_duals(st, d);
    CHECK_THAT(next[0], WithinAbs(0.1 + 0.5 * 0.2, 1e-15));
    CHECK(next[1] == 0.0); // 0.1 - 0.15 projected onto the nonnegative orthant

    st.step_scale = {0.5, 1e-3};
    const auto scaled = dual::update_duals(st, d);
    CHECK_THAT(scaled[0], WithinAbs(0.1 + 0.5 * 0.5 * 0.2, 1e-15));
    CHECK_THAT(scaled[1], WithinAbs(0.1 - 0.5 * 1e-3 * 0.3, 1e-15));

    st.k = 0;
    CHECK_THROWS_AS(dual::update_duals(st, d), DomainError);
    CHECK_THROWS_AS(dual::subgradient(std::vector<double>{1.0}, sc), DomainError);
}

TEST_CASE("online tracking is the running mean", "[dual]")
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    dual::DualState st;
    std::vector<double> xs;
    for (std::size_t k = 1; k <= 500; ++k)
    {
        st.k = k;
        xs.push_back(u(rng));
        st.avg_power = dual::online_track(st, std::vector<double>{xs.back()});
    }
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    CHECK_THAT(st.avg_power[0], WithinRel(mean, 1e-12));
}

TEST_CASE("analytic solve on the two-RRH network", "[dual]")
{
    const auto sc = reference(0.05);
    dual::SolveConfig cfg;
    cfg.mode = dual::AvgPowerMode::analytic;
    const auto rep = dual::solve(sc, cfg);
    REQUIRE(rep.converged);
    CHECK(rep.iterations <= 2000);
    CHECK(dual::constraint_violation(rep.lambda, rep.avg_power, sc) <= 0.02);
    CHECK(rep.trace.size() == rep.iterations);
    for (const auto &row : rep.trace)
        for (double l : row.lambda)
            CHECK(l >= 0.0);
    CHECK(rep.lambda[0] > rep.lambda[1]); // the stronger link is the scarcer budget

    SECTION("batch Monte Carlo lands on the same prices")
    {
        auto c = cfg;
        c.mode = dual::AvgPowerMode::batch_mc;
        c.batch_samples = 50000;
        const auto mc = dual::solve(sc, c);
        REQUIRE(mc.converged);
        for (std::size_t i = 0; i < 2; ++i)
            CHECK_THAT(mc.lambda[i], WithinRel(rep.lambda[i], 0.05));
    }
    SECTION("online tracking lands on the same prices")
    {
        auto c = cfg;
        c.mode = dual::AvgPowerMode::online;
        c.max_iter = 400000;
        c.tol = 1e-12; // run the full budget
        c.record_trace = false;
        const auto on = dual::solve(sc, c);
        for (std::size_t i = 0; i < 2; ++i)
            CHECK_THAT(on.lambda[i], WithinRel(rep.lambda[i], 0.05));
    }
}

TEST_CASE("slack budgets leave prices at zero", "[dual]")
{
    auto sc = reference(0.05);
    for (auto &r : sc.rrhs)
        r.p_avg = r.p_peak; // the peak limit already enforces the budget
    dual::SolveConfig cfg;
    cfg.mode = dual::AvgPowerMode::analytic;
    const auto rep = dual::solve(sc, cfg);
    CHECK(rep.converged);
    CHECK(rep.lambda == DualVariables{0.0, 0.0});
}

TEST_CASE("online solve is reproducible from its seed", "[dual]")
{
    const auto sc = reference(0.1);
    dual::SolveConfig cfg;
    cfg.max_iter = 3000;
    cfg.seed = 17;
    const auto a = dual::solve(sc, cfg), b = dual::solve(sc, cfg);
    CHECK(a.lambda == b.lambda);
    CHECK(a.iterations == b.iterations);
    cfg.seed = 18;
    CHECK(dual::solve(sc, cfg).lambda != a.lambda);
}

TEST_CASE("delay-tolerant solve meets the budgets", "[dual]")
{
    const auto sc = reference(0.05);
    dual::SolveConfig cfg;
    cfg.mode = dual::AvgPowerMode::analytic; // switched to batches internally
    cfg.batch_samples = 20000;
    const auto rep = dual::solve_ergodic(sc, cfg);
    REQUIRE(rep.converged);
    CHECK(dual::constraint_violation(rep.lambda, rep.avg_power, sc.with_theta(0.0)) <= 0.02);
}

TEST_CASE("solver configuration errors", "[dual]")
{
    auto sc = reference(0.05);
    dual::SolveConfig cfg;
    cfg.a = 0.0;
    CHECK_THROWS_AS(dual::solve(sc, cfg), ConfigError);
    cfg.a = 1.0;
    cfg.initial_lambda = DualVariables{1.0};
    CHECK_THROWS_AS(dual::solve(sc, cfg), ConfigError);
    cfg.initial_lambda.reset();
    cfg.mode = dual::AvgPowerMode::analytic;
    sc.rrhs.push_back(sc.rrhs[0]);
    CHECK_THROWS_WITH(dual::solve(sc, cfg), ContainsSubstring("challenge to obtain the expression"));
    CHECK_THROWS_AS(dual::parse_mode("fast"), ConfigError);
    CHECK(dual::parse_mode("batch-mc") == dual::AvgPowerMode::batch_mc);
    CHECK(dual::mode_name(dual::AvgPowerMode::online) == "online");
}

TEST_CASE("initial prices", "[dual]")
{
    auto sc = reference(0.05);
    CHECK(dual::initial_prices(sc) == DualVariables{0.0, 0.0});
    const auto marg = dual::initial_prices(sc, dual::InitRule::marginal);
    CHECK_THAT(marg[0], WithinRel(sc.epsilon() / (1.0 + 0.5 * 3.89), 1e-14));
    sc.rrhs[0].p_peak = INFINITY;
    CHECK(dual::initial_prices(sc) == marg); // unbounded peaks need a positive start
}

TEST_CASE("marginal slopes match a finite difference of the utility", "[dual]")
{
    for (double theta : {0.0, 0.01, 0.1, 0.4})
    {
        Scenario sc;
        sc.m = 2.0;
        sc.theta = theta;
        sc.rrhs = {{64.3, 0.5, 1.0}, {5.3, 0.3, 1.0}, {0.8, 0.7, 1.0}};
        const double eps = sc.epsilon();
        // Utility at mean gains as a function of the power vector.
        auto utility = [&](std::vector<double> p) {
            double x = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i)
                x += p[i] * sc.rrhs[i].mean_cpnr;
            return eps > 0.0 ? -std::pow(1.0 + x, -eps) : std::log2(1.0 + x);
        };
        const auto s = dual::marginal_slopes(sc);
        for (std::size_t i = 0; i < 3; ++i)
        {
            std::vector<double> up{0.5, 0.3, 0.7}, down = up;
            const double h = 1e-6;
            up[i] += h;
            down[i] -= h;
            INFO("theta = " << theta << ", rrh " << i);
            CHECK_THAT(s[i], WithinRel((utility(up) - utility(down)) / (2.0 * h), 1e-6));
        }
    }
}

TEST_CASE("scaled steps converge where one step size cannot", "[dual]")
{
    // Mean CPNRs two orders of magnitude apart put the optimal prices at
    // 1e-5 .. 1e-7; plain a / k steps never get below 2.5e-4 in 2000 rounds.
    Scenario sc;
    sc.m = 2.0;
    sc.theta = 0.1;
    for (double c : {64.3, 5.3, 63.1, 3.8, 5.1})
        sc.rrhs.push_back({c, 0.5, 1.0});
    dual::SolveConfig cfg;
    cfg.mode = dual::AvgPowerMode::batch_mc;
    cfg.batch_samples = 5000;
    cfg.record_trace = false;
    cfg.tol = 0.05;
    const auto plain = dual::solve(sc, cfg);
    cfg.scaled_steps = true;
    const auto scaled = dual::solve(sc, cfg);
    CHECK_FALSE(plain.converged);
    REQUIRE(scaled.converged);
    for (double p : scaled.avg_power)
        CHECK_THAT(p, WithinRel(0.5, 0.05));
}

TEST_CASE("multiuser fixed point", "[dual][multiuser]")
{
    allocator::MultiuserScenario mu;
    mu.m = 2.0;
    mu.p_avg = {0.5, 0.5};
    dual::SolveConfig cfg;
    cfg.mode = dual::AvgPowerMode::batch_mc;
    cfg.batch_samples = 20000;

    SECTION("one user matches the single-user solve with unbounded peaks")
    {
        mu.theta = {0.1};
        mu.mean_cpnr = {{3.89, 1.43}};
        const auto rep = dual::solve_multiuser(mu, cfg);
        REQUIRE(rep.converged);
        Scenario sc = reference(0.1);
        for (auto &r : sc.rrhs)
            r.p_peak = INFINITY;
        const auto su = dual::solve(sc, cfg);
        REQUIRE(su.converged);
        // The multiuser prices absorb the scale kappa.
        for (std::size_t i = 0; i < 2; ++i)
            CHECK_THAT(rep.kappa[0] * rep.lambda[i], WithinRel(su.lambda[i], 0.05));
    }
    SECTION("symmetric network gives symmetric prices")
    {
        mu.theta = {0.3, 0.3};
        mu.mean_cpnr = {{4.0, 1.0}, {1.0, 4.0}};
        cfg.a = 5.0; // multiuser prices sit near 1.6; a = 1 moves them too slowly
        const auto rep = dual::solve_multiuser(mu, cfg);
        REQUIRE(rep.converged);
        CHECK_THAT(rep.lambda[0], WithinRel(rep.lambda[1], 0.05));
        CHECK_THAT(rep.kappa[0], WithinRel(rep.kappa[1], 0.05));
        for (double p : rep.avg_power)
            CHECK_THAT(p, WithinRel(0.5, 0.021));
    }
    SECTION("ergodic variant meets the budgets")
    {
        mu.theta = {0.3, 0.3};
        mu.mean_cpnr = {{4.0, 1.0}, {2.0, 3.0}};
        const auto rep = dual::solve_multiuser(mu, cfg, true);
        REQUIRE(rep.converged);
        for (double p : rep.avg_power)
            CHECK_THAT(p, WithinRel(0.5, 0.021));
    }
    SECTION("analytic mode is rejected")
    {
        mu.theta = {0.3};
        mu.mean_cpnr = {{4.0, 1.0}};
        cfg.mode = dual::AvgPowerMode::analytic;
        CHECK_THROWS_AS(dual::solve_multiuser(mu, cfg), ConfigError);
    }
}
