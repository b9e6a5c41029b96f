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

// Closed-form and semi-analytic expected transmit power under the optimal
// per-state policy, for one and two transmitters.
//
// Everything hinges on the sign of h(x) = (1 + a x)^b - c x. With
// (a, b, c) = (P^peak, 1 + eps, eps / lambda), h < 0 exactly where the
// interior power formula exceeds the peak, so the roots of h split the
// fading axis into "interior" and "at peak" regions. For two transmitters
// the same test on other coefficient sets decides whether both can be on,
// and whether the second one can reach its own peak.

#include <cranec/allocator.hpp>
#include <cranec/channel.hpp>
#include <cranec/error.hpp>
#include <cranec/quadrature.hpp>
#include <cranec/scenario.hpp>
#include <cranec/specfun.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace cranec::analytics
{

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// h(x) = (1 + a x)^b - c x.
struct HCoefficients
{
    double a = 1.0;
    double b = 2.0;
    double c = 1.0;

    double value(double x) const { return std::exp(b * std::log1p(a * x)) - c * x; }
    /// Same sign as h on x > 0, without overflow.
    double log_sign(double x) const { return b * std::log1p(a * x) - std::log(c * x); }
};

struct HCaseClassification
{
    int case_label = 1; ///< 1: h' >= 0 at 0; 2: dips but stays >= 0; 3: two positive roots
    double lower = kNaN;
    double upper = kNaN;
    double minimizer = kNaN; ///< set for cases 2 and 3

    bool has_roots() const { return case_label == 3; }
};

namespace detail
{

// Bisection on a sign change of phi over [lo, hi]; phi(lo) and phi(hi) have
// opposite signs. Runs until the bracket stops shrinking in floating point.
template <class Phi>
double bisect(Phi &&phi, double lo, double hi)
{
    const bool lo_positive = phi(lo) > 0.0;
    for (int it = 0; it < 2000; ++it)
    {
        // Geometric steps while the bracket spans decades (the upper root
        // can sit near 1e300 when b is close to 1), arithmetic after.
        const double mid = lo > 0.0 && hi > 4.0 * lo ? std::sqrt(lo) * std::sqrt(hi) : 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        if ((phi(mid) > 0.0) == lo_positive)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

/// Which of the three shapes h takes, with both roots in case 3.
inline HCaseClassification classify_h(const HCoefficients &k)
{
    if (!(k.a > 0.0) || !(k.b > 1.0) || !(k.c > 0.0) || !std::isfinite(k.a) || !std::isfinite(k.b) ||
        !std::isfinite(k.c))
        throw DomainError("classify_h: need finite a > 0, b > 1, c > 0");
    HCaseClassification out;
    const double ab = k.a * k.b;
    if (ab - k.c >= 0.0)
        return out;
    // 1 + a x* = q at the unique stationary point; h(x*) = (c / (a b)) * t.
    const double log_q = std::log(k.c / ab) / (k.b - 1.0);
    auto phi = [&](double x) { return k.log_sign(x); };
    if (log_q > 700.0)
    {
        // b barely above 1: the minimizer and the upper root lie beyond the
        // double range, h is negative on a finite stretch past the lower root.
        out.case_label = 3;
        out.minimizer = out.upper = std::numeric_limits<double>::infinity();
        double hi = 1.0 / k.a;
        while (phi(hi) >= 0.0 && hi < 1e300)
            hi *= 2.0;
        double lo = hi;
        while (phi(lo) <= 0.0)
            lo *= 0.5;
        out.lower = detail::bisect(phi, lo, hi);
        return out;
    }
    const double q = std::exp(log_q);
    const double t = q * (1.0 - k.b) + k.b;
    out.minimizer = (q - 1.0) / k.a;
    if (t >= 0.0)
    {
        out.case_label = 2;
        return out;
    }
    out.case_label = 3;
    const double xs = out.minimizer;
    double lo = xs;
    while (phi(lo) <= 0.0)
        lo *= 0.5;
    double hi = xs;
    while (phi(hi) <= 0.0)
        hi = 2.0 * hi + 1.0 / k.a;
    out.lower = detail::bisect(phi, lo, xs);
    out.upper = detail::bisect(phi, xs, hi);
    return out;
}

// ---------------------------------------------------------------------------
// One transmitter.

namespace detail
{

// Interior power (eps / lambda)^V alpha^(V-1) - 1 / alpha, V = 1 / (1 + eps).
inline double interior_power(double alpha, double lambda, double eps)
{
    const double v = 1.0 / (1.0 + eps);
    return std::exp(v * std::log(eps / lambda) + (v - 1.0) * std::log(alpha)) - 1.0 / alpha;
}

// int_x^inf interior_power(alpha) f(alpha) d alpha for Nakagami-m with the given mean.
// `offset` replaces the 1 in 1 / alpha when other transmitters already
// contribute offset - 1 to the received SNR.
inline double interior_tail(double x, double lambda, double eps, double m, double mean, double offset = 1.0)
{
    const double v = 1.0 / (1.0 + eps);
    const double rate = m / mean;
    const double y = rate * x;
    const double lg = specfun::ln_gamma(m);
    const double first = std::exp(v * std::log(eps / lambda) + (1.0 - v) * std::log(rate) - lg) *
                         specfun::upper_inc_gamma_ext(m + v - 1.0, y);
    const double second = rate * std::exp(-lg) * specfun::upper_inc_gamma_ext(m - 1.0, y);
    return first - offset * second;
}

// E[min(P, max(0, ((eps alpha / lambda)^V - offset) / alpha))]: one priced
// transmitter on top of a fixed SNR contribution offset - 1.
inline double offset_power(double lambda, double eps, double m, double mean, double peak, double offset)
{
    const double threshold = lambda / eps * std::exp((1.0 + eps) * std::log(offset));
    const double full = interior_tail(threshold, lambda, eps, m, mean, offset);
    if (std::isinf(peak))
        return full;
    // Peak binds where (1 + (P / s) alpha)^(1 + eps) <= eps alpha / (lambda s^(1 + eps)).
    const auto cls = classify_h({peak / offset, 1.0 + eps, eps / (lambda * std::exp((1.0 + eps) * std::log(offset)))});
    if (!cls.has_roots())
        return full;
    const double rate = m / mean;
    const double at_peak = peak * (specfun::gamma_p(m, rate * cls.upper) - specfun::gamma_p(m, rate * cls.lower));
    return std::clamp(full - interior_tail(cls.lower, lambda, eps, m, mean, offset) + at_peak +
                          interior_tail(cls.upper, lambda, eps, m, mean, offset),
                      0.0, peak);
}

inline double clamp_price(double lambda) { return std::max(lambda, 1e-12); }

} // namespace detail

struct SingleRrhResult
{
    double avg_power = 0.0;
    int case_label = 1; ///< 1: peak never binds; 3: peak binds between the two roots
    double lower = kNaN;
    double upper = kNaN;
};

/// Expected power of the single-transmitter policy, with the region where
/// the peak binds (if any) reported.
inline SingleRrhResult avg_power_single_detail(double lambda1, const Scenario &scenario)
{
    if (scenario.size() != 1)
        throw DomainError("avg_power_single: scenario must have exactly one RRH");
    const double eps = scenario.epsilon();
    if (!(eps > 0.0))
        throw DomainError("avg_power_single: requires theta > 0");
    if (std::isnan(lambda1) || lambda1 < 0.0)
        throw DomainError("avg_power_single: lambda must be >= 0");
    const auto &r = scenario.rrhs[0];
    SingleRrhResult out;
    if (lambda1 == 0.0)
    {
        // Free power: every state with alpha > 0 transmits at peak.
        out.avg_power = r.p_peak;
        out.case_label = std::isinf(r.p_peak) ? 1 : 3;
        return out;
    }
    if (std::isinf(lambda1))
        return out;

    const double threshold = lambda1 / eps;
    const double m = scenario.m;
    const double mean = r.mean_cpnr;
    const double full_tail = detail::interior_tail(threshold, lambda1, eps, m, mean);

    if (std::isinf(r.p_peak))
    {
        out.avg_power = full_tail;
        return out;
    }
    const auto cls = classify_h({r.p_peak, 1.0 + eps, eps / lambda1});
    if (!cls.has_roots())
    {
        out.avg_power = full_tail;
        return out;
    }
    out.case_label = 3;
    out.lower = cls.lower;
    out.upper = cls.upper;
    const double rate = m / mean;
    const double at_peak =
        r.p_peak * (specfun::gamma_p(m, rate * cls.upper) - specfun::gamma_p(m, rate * cls.lower));
    out.avg_power = full_tail - detail::interior_tail(cls.lower, lambda1, eps, m, mean) + at_peak +
                    detail::interior_tail(cls.upper, lambda1, eps, m, mean);
    out.avg_power = std::clamp(out.avg_power, 0.0, r.p_peak);
    return out;
}

inline double avg_power_single(double lambda1, const Scenario &scenario)
{
    return avg_power_single_detail(lambda1, scenario).avg_power;
}

// ---------------------------------------------------------------------------
// Two transmitters.
//
// A branch fixes which transmitter has the lower price ratio ("first") and
// integrates over the fading states where that ordering holds. The other
// ordering is the same computation with indices swapped; the two branch
// results add up.

/// Region predicates for one branch.
struct ConditionFlags
{
    int branch = 0; ///< 0: RRH 1 first; 1: RRH 2 first
    bool c1 = false, c2 = false, c3 = false, c4 = false, c5 = false, c6 = false, c7 = false;
    /// Both transmitters can be on at once (the combined-gain test on the
    /// first RRH's peak alone).
    bool cx = false;
    HCaseClassification first;    ///< first RRH alone: where it hits its peak
    HCaseClassification both_peak; ///< second-RRH gain range where both can sit at peak
    HCaseClassification both_on;   ///< second-RRH gain range where both can be on
    bool threshold_below_root = true; ///< lambda_f / eps < first.lower whenever c1
    bool roots_interleave = true;     ///< both_on.lower < both_peak.lower < both_peak.upper < both_on.upper
};

inline ConditionFlags condition_flags(std::span<const double> lambda, const Scenario &scenario, int branch)
{
    if (scenario.size() != 2 || lambda.size() != 2)
        throw DomainError("condition_flags: exactly two RRHs required");
    if (branch != 0 && branch != 1)
        throw DomainError("condition_flags: branch must be 0 or 1");
    const double eps = scenario.epsilon();
    if (!(eps > 0.0))
        throw DomainError("condition_flags: requires theta > 0");
    const std::size_t f = branch == 0 ? 0 : 1, s = 1 - f;
    const double lf = detail::clamp_price(lambda[f]), ls = detail::clamp_price(lambda[s]);
    const double pf = scenario.rrhs[f].p_peak, ps = scenario.rrhs[s].p_peak;
    if (!std::isfinite(pf) || !std::isfinite(ps))
        throw DomainError("condition_flags: peak powers must be finite");

    ConditionFlags out;
    out.branch = branch;
    out.first = classify_h({pf, 1.0 + eps, eps / lf});
    out.both_peak = classify_h({ps + (lf / ls) * pf, 1.0 + eps, eps / ls});
    out.both_on = classify_h({(lf / ls) * pf, 1.0 + eps, eps / ls});
    out.c1 = out.c3 = out.first.has_roots();
    out.c2 = !out.c1;
    out.cx = out.both_on.has_roots();
    out.c4 = out.both_peak.has_roots();
    out.c5 = out.cx && !out.c4;
    out.c6 = out.c7 = out.cx && out.c4;
    if (out.c1)
        out.threshold_below_root = lf / eps < out.first.lower;
    if (out.c6)
        out.roots_interleave = out.both_on.lower < out.both_peak.lower && out.both_peak.lower < out.both_peak.upper &&
                               out.both_peak.upper < out.both_on.upper;
    return out;
}

/// Closed-form pieces of the "first RRH interior, second silent" integral
/// for integer m >= 2. Arguments: U = lambda_f / eps, V = 1 / (1 + eps),
/// W = m lambda_s / (mean_s lambda_f), Z = (m / mean_f)^m / (m - 1)!,
/// Y = W + m / mean_f. `lower` is the lower integration limit (U by default).
struct JTerms
{
    double j1 = 0.0, j2 = 0.0, j3 = 0.0, j4 = 0.0;
    double total() const { return j1 + j2 - j3 - j4; }
};

inline JTerms j_terms(double U, double V, double W, double Z, double Y, int m, double lower = kNaN)
{
    if (!(U > 0.0) || !(V > 0.0) || !(V < 1.0) || !(W > 0.0) || !(Z > 0.0) || !(Y > W))
        throw DomainError("j_terms: need U, W, Z > 0, 0 < V < 1 and Y > W");
    if (m < 2)
        throw DomainError("j_terms: integer m >= 2 required (m = 1 has its own exponential-integral form)");
    const double x = std::isnan(lower) ? U : lower;
    if (!(x > 0.0))
        throw DomainError("j_terms: lower limit must be positive");
    const double rate1 = Y - W; // m / mean_f
    const double mm = m;
    const double lfact = specfun::ln_gamma(mm); // ln (m-1)!
    const double lnY = std::log(Y), lnW = std::log(W);
    JTerms out;
    out.j1 = std::exp((1.0 - V) * std::log(rate1) - V * std::log(U) - lfact) *
             specfun::upper_inc_gamma(V + mm - 1.0, rate1 * x);
    out.j4 = rate1 * std::exp(-lfact) * specfun::upper_inc_gamma(mm - 1.0, rate1 * x);
    for (int l = 0; l < m; ++l)
    {
        const double lw = l * lnW - specfun::ln_gamma(l + 1.0);
        const double s2 = l + mm - 1.0;
        const double s3 = l + V + mm - 1.0;
        out.j2 += std::exp(lw - s2 * lnY) * specfun::upper_inc_gamma(s2, Y * x);
        out.j3 += std::exp(lw - s3 * lnY) * specfun::upper_inc_gamma(s3, Y * x);
    }
    out.j2 *= Z;
    out.j3 *= Z * std::exp(-V * std::log(U));
    return out;
}

/// Rayleigh (m = 1) form of the same integral from `lower` to infinity,
/// through the exponential integral.
inline double interior_integral_rayleigh(double lambda_f, double eps, double mean_f, double W, double lower)
{
    const double v = 1.0 / (1.0 + eps);
    const double rate = 1.0 / mean_f;
    const double Y = W + rate;
    const double scale = std::exp(v * std::log(eps / lambda_f));
    const double power_part = scale * (std::exp(v * std::log(mean_f)) * specfun::upper_inc_gamma(v, rate * lower) -
                                       std::exp(-v * std::log(Y)) * specfun::upper_inc_gamma(v, Y * lower));
    const double log_part = specfun::exp_integral_ei(-rate * lower) - specfun::exp_integral_ei(-Y * lower);
    return rate * (power_part + log_part);
}

/// Per-branch T-term values. Entries prefixed t1 are the first RRH's
/// power, t2 the second's.
struct BranchTerms
{
    double t_c1 = 0.0, t_c2 = 0.0, t_c3 = 0.0;
    double t1_c4 = 0.0, t2_c4 = 0.0;
    double t1_c5 = 0.0, t2_c5 = 0.0;
    double t1_c6 = 0.0, t2_c6 = 0.0;
    double t1_c7 = 0.0, t2_c7 = 0.0;

    double first_total() const { return t_c1 + t_c2 + t_c3 + t1_c4 + t1_c5 + t1_c6 + t1_c7; }
    double second_total() const { return t2_c4 + t2_c5 + t2_c6 + t2_c7; }
};

struct AvgPowerPair
{
    double p_rrh1 = 0.0;
    double p_rrh2 = 0.0;
};

struct TwoRrhDiagnostics
{
    std::array<ConditionFlags, 2> flags;
    std::array<BranchTerms, 2> terms;
    AvgPowerPair power;
};

/// Evaluates the T-terms of one branch.
class BranchEvaluator
{
  public:
    BranchEvaluator(std::span<const double> lambda, const Scenario &scenario, int branch, double abs_tol = 1e-9)
        : flags_(condition_flags(lambda, scenario, branch)), tol_(abs_tol)
    {
        const std::size_t f = branch == 0 ? 0 : 1, s = 1 - f;
        eps_ = scenario.epsilon();
        m_ = scenario.m;
        lf_ = detail::clamp_price(lambda[f]);
        ls_ = detail::clamp_price(lambda[s]);
        pf_ = scenario.rrhs[f].p_peak;
        ps_ = scenario.rrhs[s].p_peak;
        meanf_ = scenario.rrhs[f].mean_cpnr;
        means_ = scenario.rrhs[s].mean_cpnr;
        v_ = 1.0 / (1.0 + eps_);
        cut_f_ = channel::tail_cutoff(m_, meanf_);
        cut_s_ = channel::tail_cutoff(m_, means_);
    }

    const ConditionFlags &flags() const { return flags_; }

    /// int_x^inf interior_power_f(a) CDF_s((lambda_s / lambda_f) a) f_f(a) da.
    double interior_integral(double x) const
    {
        if (!(x < cut_f_))
            return 0.0;
        const double W = m_ * ls_ / (means_ * lf_);
        if (m_ == std::floor(m_) && m_ >= 2.0 && m_ <= 60.0)
        {
            const double Z = std::exp(m_ * std::log(m_ / meanf_) - specfun::ln_gamma(m_));
            return j_terms(lf_ / eps_, v_, W, Z, W + m_ / meanf_, static_cast<int>(m_), x).total();
        }
        if (m_ == 1.0)
            return interior_integral_rayleigh(lf_, eps_, meanf_, W, x);
        return interior_integral_quadrature(x);
    }

    /// Same integral by adaptive quadrature (any m).
    double interior_integral_quadrature(double x) const
    {
        auto integrand = [&](double a) {
            return detail::interior_power(a, lf_, eps_) * channel::cdf(ls_ / lf_ * a, m_, means_) *
                   channel::pdf(a, m_, meanf_);
        };
        return split(integrand, x, cut_f_, meanf_);
    }

    BranchTerms evaluate() const
    {
        BranchTerms t;
        const auto &fl = flags_;
        const double U = lf_ / eps_;
        guarded("T^C2", [&] {
            if (fl.c2)
                t.t_c2 = interior_integral(U);
        });
        guarded("T^C3", [&] {
            if (fl.c3)
                t.t_c3 = interior_integral(U) - interior_integral(fl.first.lower) + interior_integral(fl.first.upper);
        });
        guarded("T^C1", [&] {
            if (fl.c1)
                t.t_c1 = peak_second_silent();
        });
        guarded("T^C4", [&] {
            if (fl.c4)
            {
                const double mass = both_at_peak_mass();
                t.t1_c4 = pf_ * mass;
                t.t2_c4 = ps_ * mass;
            }
        });
        guarded("T^C5", [&] {
            if (fl.c5)
                second_interior(fl.both_on.lower, fl.both_on.upper, false, t.t1_c5, t.t2_c5);
        });
        guarded("T^C6", [&] {
            if (fl.c6)
            {
                double a1 = 0.0, a2 = 0.0, b1 = 0.0, b2 = 0.0;
                second_interior(fl.both_on.lower, fl.both_peak.lower, false, a1, a2);
                second_interior(fl.both_peak.upper, fl.both_on.upper, false, b1, b2);
                t.t1_c6 = a1 + b1;
                t.t2_c6 = a2 + b2;
            }
        });
        guarded("T^C7", [&] {
            if (fl.c7)
                second_interior(fl.both_peak.lower, fl.both_peak.upper, true, t.t1_c7, t.t2_c7);
        });
        return t;
    }

  private:
    template <class Fn>
    void guarded(const char *name, Fn &&fn) const
    {
        try
        {
            fn();
        }
        catch (const std::exception &e)
        {
            throw NumericError(std::string(name) + " (branch " + std::to_string(flags_.branch) + "): " + e.what());
        }
    }

    template <class F>
    double split(F &&f, double lo, double hi, double mean) const
    {
        return quadrature::integrate_split(f, lo, hi, tol_,
                                           {0.25 * mean, 0.5 * mean, mean, 2.0 * mean, 4.0 * mean, 8.0 * mean});
    }

    // First RRH at peak, second silent: alpha_f between the first-RRH roots,
    // alpha_s below its activation threshold.
    double peak_second_silent() const
    {
        const double hi = std::min(flags_.first.upper, cut_f_);
        auto integrand = [&](double a) {
            const double activation = ls_ / eps_ * std::exp((1.0 + eps_) * std::log1p(pf_ * a));
            const double bound = std::min(activation, ls_ / lf_ * a);
            return channel::cdf(bound, m_, means_) * channel::pdf(a, m_, meanf_);
        };
        return pf_ * split(integrand, flags_.first.lower, hi, meanf_);
    }

    // Upper alpha_f limit for the second RRH to reach its peak.
    double both_peak_edge(double as) const
    {
        return (std::exp(v_ * std::log(eps_ * as / ls_)) - ps_ * as - 1.0) / pf_;
    }
    // Upper alpha_f limit for the second RRH to be on at all.
    double both_on_edge(double as) const { return (std::exp(v_ * std::log(eps_ * as / ls_)) - 1.0) / pf_; }

    // Probability that both sit at peak within this branch.
    double both_at_peak_mass() const
    {
        const double hi = std::min(flags_.both_peak.upper, cut_s_);
        auto integrand = [&](double as) {
            const double lo = lf_ / ls_ * as;
            const double up = both_peak_edge(as);
            if (!(up > lo))
                return 0.0;
            return (channel::cdf(up, m_, meanf_) - channel::cdf(lo, m_, meanf_)) * channel::pdf(as, m_, means_);
        };
        return split(integrand, flags_.both_peak.lower, hi, means_);
    }

    // First RRH at peak, second interior, for alpha_s in (lo_s, hi_s).
    // The alpha_f range is (max(branch edge, second-peak edge), on edge);
    // `above_peak_edge` selects the second-peak edge as the lower limit.
    void second_interior(double lo_s, double hi_s, bool above_peak_edge, double &first, double &second) const
    {
        hi_s = std::min(hi_s, cut_s_);
        const double mean_next = meanf_; // alpha f(alpha) = mean * density of shape m + 1
        auto mass = [&](double as) {
            const double lo = above_peak_edge ? both_peak_edge(as) : lf_ / ls_ * as;
            const double up = both_on_edge(as);
            if (!(up > lo))
                return 0.0;
            return (channel::cdf(up, m_, meanf_) - channel::cdf(lo, m_, meanf_)) * channel::pdf(as, m_, means_);
        };
        auto power = [&](double as) {
            const double lo = above_peak_edge ? both_peak_edge(as) : lf_ / ls_ * as;
            const double up = both_on_edge(as);
            if (!(up > lo))
                return 0.0;
            const double c = (std::exp(v_ * std::log(eps_ * as / ls_)) - 1.0) / as;
            const double rate = m_ / meanf_;
            const double prob = channel::cdf(up, m_, meanf_) - channel::cdf(lo, m_, meanf_);
            const double first_moment =
                mean_next * (specfun::gamma_p(m_ + 1.0, rate * up) - specfun::gamma_p(m_ + 1.0, rate * lo));
            return (c * prob - pf_ / as * first_moment) * channel::pdf(as, m_, means_);
        };
        if (!(hi_s > lo_s))
            return;
        first += pf_ * split(mass, lo_s, hi_s, means_);
        second += split(power, lo_s, hi_s, means_);
    }

    ConditionFlags flags_;
    double tol_;
    double eps_ = 0.0, m_ = 1.0, lf_ = 0.0, ls_ = 0.0, pf_ = 0.0, ps_ = 0.0, meanf_ = 1.0, means_ = 1.0, v_ = 0.5;
    double cut_f_ = 0.0, cut_s_ = 0.0;
};

/// Expected powers of both transmitters with all intermediate quantities.
inline TwoRrhDiagnostics avg_power_two_detail(std::span<const double> lambda, const Scenario &scenario)
{
    if (scenario.size() != 2 || lambda.size() != 2)
        throw DomainError("avg_power_two: exactly two RRHs required");
    for (double l : lambda)
        if (std::isnan(l) || l < 0.0)
            throw DomainError("avg_power_two: lambda must be >= 0");
    TwoRrhDiagnostics d;
    if (lambda[0] == 0.0 || lambda[1] == 0.0)
    {
        // A free transmitter sits at peak in every state; the other one then
        // sees a fixed SNR offset and follows the one-transmitter rule.
        const std::size_t z = lambda[0] == 0.0 ? 0 : 1, o = 1 - z;
        double p[2];
        p[z] = scenario.rrhs[z].p_peak;
        if (lambda[o] == 0.0)
            p[o] = scenario.rrhs[o].p_peak;
        else
        {
            const double eps = scenario.epsilon(), m = scenario.m;
            const auto &rz = scenario.rrhs[z];
            const auto &ro = scenario.rrhs[o];
            auto integrand = [&](double a) {
                return channel::pdf(a, m, rz.mean_cpnr) *
                       detail::offset_power(lambda[o], eps, m, ro.mean_cpnr, ro.p_peak, 1.0 + rz.p_peak * a);
            };
            const double mean = rz.mean_cpnr;
            p[o] = quadrature::integrate_split(integrand, 0.0, channel::tail_cutoff(m, mean), 1e-9,
                                               {0.25 * mean, 0.5 * mean, mean, 2.0 * mean, 4.0 * mean});
        }
        d.power = {std::clamp(p[0], 0.0, scenario.rrhs[0].p_peak), std::clamp(p[1], 0.0, scenario.rrhs[1].p_peak)};
        return d;
    }
    double p[2] = {0.0, 0.0};
    for (int branch = 0; branch < 2; ++branch)
    {
        BranchEvaluator ev(lambda, scenario, branch);
        d.flags[branch] = ev.flags();
        d.terms[branch] = ev.evaluate();
        const std::size_t f = branch == 0 ? 0 : 1;
        p[f] += d.terms[branch].first_total();
        p[1 - f] += d.terms[branch].second_total();
    }
    d.power.p_rrh1 = std::clamp(p[0], 0.0, scenario.rrhs[0].p_peak);
    d.power.p_rrh2 = std::clamp(p[1], 0.0, scenario.rrhs[1].p_peak);
    return d;
}

inline AvgPowerPair avg_power_two(std::span<const double> lambda, const Scenario &scenario)
{
    return avg_power_two_detail(lambda, scenario).power;
}

/// Expected power vector for I in {1, 2}; larger networks have no closed form.
inline PowerVector avg_power(std::span<const double> lambda, const Scenario &scenario)
{
    if (scenario.size() == 1)
        return {avg_power_single(lambda[0], scenario)};
    if (scenario.size() == 2)
    {
        const auto pair = avg_power_two(lambda, scenario);
        return {pair.p_rrh1, pair.p_rrh2};
    }
    throw DomainError("analytic average power is available for 1 or 2 RRHs only; with " +
                      std::to_string(scenario.size()) +
                      " RRHs it is a challenge to obtain the expression in closed form, use online or batch-mc");
}

// ---------------------------------------------------------------------------
// Audit output.

inline std::string diagnostics_csv_header()
{
    return "branch,c1,c2,c3,c4,c5,c6,c7,cx,first_lo,first_hi,both_peak_lo,both_peak_hi,both_on_lo,both_on_hi,"
           "t_c1,t_c2,t_c3,t1_c4,t2_c4,t1_c5,t2_c5,t1_c6,t2_c6,t1_c7,t2_c7";
}

inline std::string diagnostics_csv_row(const ConditionFlags &f, const BranchTerms &t)
{
    std::ostringstream os;
    os.precision(12);
    os << f.branch << ',' << f.c1 << ',' << f.c2 << ',' << f.c3 << ',' << f.c4 << ',' << f.c5 << ',' << f.c6 << ','
       << f.c7 << ',' << f.cx << ',' << f.first.lower << ',' << f.first.upper << ',' << f.both_peak.lower << ','
       << f.both_peak.upper << ',' << f.both_on.lower << ',' << f.both_on.upper << ',' << t.t_c1 << ',' << t.t_c2
       << ',' << t.t_c3 << ',' << t.t1_c4 << ',' << t.t2_c4 << ',' << t.t1_c5 << ',' << t.t2_c5 << ',' << t.t1_c6
       << ',' << t.t2_c6 << ',' << t.t1_c7 << ',' << t.t2_c7;
    return os.str();
}

} // namespace cranec::analytics
