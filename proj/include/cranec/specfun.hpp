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

// Special functions used by the closed-form average-power expressions:
// log-gamma, incomplete gamma (lower/upper, plain and regularized) and the
// exponential integral Ei. All routines are pure and reentrant; domain
// violations throw DomainError rather than returning NaN.

#include <cranec/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace cranec::specfun
{

namespace detail
{

inline constexpr double kEps = 1e-17;
inline constexpr double kCfTol = 4.0 * std::numeric_limits<double>::epsilon(); // Lentz ratio never settles closer to 1
inline constexpr double kTiny = 1e-300;
inline constexpr int kMaxIter = 100000;

// zeta(k) - 1 for k = 2..40
inline constexpr std::array<double, 39> kZetaMinusOne = {
    6.44934066848226406e-01, 2.02056903159594292e-01, 8.23232337111381857e-02, 3.69277551433699266e-02,
    1.73430619844491402e-02, 8.34927738192282713e-03, 4.07735619794433960e-03, 2.00839282608221426e-03,
    9.94575127818085256e-04, 4.94188604119464529e-04, 2.46086553308048320e-04, 1.22713347578489145e-04,
    6.12481350587048277e-05, 3.05882363070204933e-05, 1.52822594086518710e-05, 7.63719763789976257e-06,
    3.81729326499984022e-06, 1.90821271655393897e-06, 9.53962033872796212e-07, 4.76932986787806447e-07,
    2.38450502727733004e-07, 1.19219925965311064e-07, 5.96081890512594801e-08, 2.98035035146522793e-08,
    1.49015548283650427e-08, 7.45071178983543006e-09, 3.72533402478845728e-09, 1.86265972351304914e-09,
    9.31327432419668166e-10, 4.65662906503378366e-10, 2.32831183367650534e-10, 1.16415501727005193e-10,
    5.82077208790270145e-11, 2.91038504449710001e-11, 1.45519218910419849e-11, 7.27595983505748180e-12,
    3.63797954737865086e-12, 1.81898965030706607e-12, 9.09494784026388841e-13};

// ln Gamma(2 + z) for |z| <= 0.5 by the Taylor series about 2.
inline double ln_gamma_near_two(double z)
{
    double sum = (1.0 - std::numbers::egamma) * z;
    double zk = z;
    for (std::size_t i = 0; i < kZetaMinusOne.size(); ++i)
    {
        const int k = static_cast<int>(i) + 2;
        zk *= -z;
        sum -= kZetaMinusOne[i] * zk / k; // zk = (-1)^(k-1) z^k
        if (std::abs(zk) * kZetaMinusOne[i] < 1e-18 * std::abs(sum))
            break;
    }
    return sum;
}

inline double ln_gamma_stirling(double x)
{
    const double ix = 1.0 / x;
    const double ix2 = ix * ix;
    const double corr =
        ix * (1.0 / 12.0 -
              ix2 * (1.0 / 360.0 -
                     ix2 * (1.0 / 1260.0 -
                            ix2 * (1.0 / 1680.0 -
                                   ix2 * (1.0 / 1188.0 - ix2 * (691.0 / 360360.0 - ix2 / 156.0))))));
    return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + corr;
}

// Series part of gamma(s, x): sum_{n>=0} x^n / (s (s+1) ... (s+n)).
inline double lower_series_sum(double s, double x)
{
    double term = 1.0 / s;
    double sum = term;
    for (int n = 1; n < kMaxIter; ++n)
    {
        term *= x / (s + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps)
            return sum;
    }
    throw NumericError("incomplete gamma series did not converge for s=" + std::to_string(s) +
                       ", x=" + std::to_string(x));
}

// Continued fraction for Gamma(s, x) * e^x * x^-s (modified Lentz).
inline double upper_cf(double s, double x)
{
    double b = x + 1.0 - s;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i)
    {
        const double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny)
            d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny)
            c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) <= kCfTol)
            return h;
    }
    throw NumericError("incomplete gamma continued fraction did not converge for s=" + std::to_string(s) +
                       ", x=" + std::to_string(x));
}

inline void check_gamma_args(double s, double x, const char *fn)
{
    if (!(s > 0.0) || !std::isfinite(s))
        throw DomainError(std::string(fn) + ": shape must be positive and finite, got " + std::to_string(s));
    if (!(x >= 0.0) || std::isnan(x))
        throw DomainError(std::string(fn) + ": argument must be nonnegative, got " + std::to_string(x));
}

// E1(y) for y > 0.
inline double expint_e1(double y)
{
    if (y <= 1.0)
    {
        double sum = 0.0;
        double term = 1.0;
        for (int k = 1; k < kMaxIter; ++k)
        {
            term *= -y / k;
            const double add = -term / k;
            sum += add;
            if (std::abs(add) < std::abs(sum) * kEps)
                break;
        }
        return -std::numbers::egamma - std::log(y) + sum;
    }
    double b = y + 1.0;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxIter; ++i)
    {
        const double an = -static_cast<double>(i) * i;
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        const double del = c * d;
        h *= del;
        if (std::abs(del - 1.0) <= kCfTol)
            return h * std::exp(-y);
    }
    throw NumericError("E1 continued fraction did not converge for y=" + std::to_string(y));
}

} // namespace detail

/// Natural log of the gamma function for s > 0.
inline double ln_gamma(double s)
{
    if (!(s > 0.0) || !std::isfinite(s))
        throw DomainError("ln_gamma: argument must be positive and finite, got " + std::to_string(s));
    if (s < 0.5)
        return ln_gamma(s + 1.0) - std::log(s);
    if (s < 1.5)
    {
        const double w = s - 1.0;
        return detail::ln_gamma_near_two(w) - std::log1p(w);
    }
    if (s <= 2.5)
        return detail::ln_gamma_near_two(s - 2.0);
    if (s < 20.0)
    {
        // Walk down to [1.5, 2.5]; every log term is positive.
        double acc = 0.0;
        double t = s;
        while (t > 2.5)
        {
            t -= 1.0;
            acc += std::log(t);
        }
        return acc + detail::ln_gamma_near_two(t - 2.0);
    }
    return detail::ln_gamma_stirling(s);
}

/// Gamma function for s > 0 (overflows to +inf beyond s ~ 171.6).
inline double gamma_fn(double s) { return std::exp(ln_gamma(s)); }

/// Regularized lower incomplete gamma P(s, x) = gamma(s, x) / Gamma(s).
inline double gamma_p(double s, double x)
{
    detail::check_gamma_args(s, x, "gamma_p");
    if (x == 0.0)
        return 0.0;
    if (std::isinf(x))
        return 1.0;
    const double log_pre = s * std::log(x) - x - ln_gamma(s);
    if (x < s + 1.0)
        return std::min(1.0, std::exp(log_pre) * detail::lower_series_sum(s, x));
    return std::max(0.0, 1.0 - std::exp(log_pre) * detail::upper_cf(s, x));
}

/// Regularized upper incomplete gamma Q(s, x) = Gamma(s, x) / Gamma(s).
inline double gamma_q(double s, double x)
{
    detail::check_gamma_args(s, x, "gamma_q");
    if (x == 0.0)
        return 1.0;
    if (std::isinf(x))
        return 0.0;
    const double log_pre = s * std::log(x) - x - ln_gamma(s);
    if (x < s + 1.0)
        return std::max(0.0, 1.0 - std::exp(log_pre) * detail::lower_series_sum(s, x));
    return std::min(1.0, std::exp(log_pre) * detail::upper_cf(s, x));
}

/// Lower incomplete gamma gamma(s, x) = int_0^x t^(s-1) e^-t dt.
inline double lower_inc_gamma(double s, double x)
{
    detail::check_gamma_args(s, x, "lower_inc_gamma");
    if (x == 0.0)
        return 0.0;
    if (std::isinf(x))
        return gamma_fn(s);
    if (x < s + 1.0)
        return std::exp(s * std::log(x) - x) * detail::lower_series_sum(s, x);
    return gamma_fn(s) - std::exp(s * std::log(x) - x) * detail::upper_cf(s, x);
}

/// Upper incomplete gamma Gamma(s, x) = int_x^inf t^(s-1) e^-t dt.
inline double upper_inc_gamma(double s, double x)
{
    detail::check_gamma_args(s, x, "upper_inc_gamma");
    if (x == 0.0)
        return gamma_fn(s);
    if (std::isinf(x))
        return 0.0;
    if (x < s + 1.0)
        return gamma_fn(s) - std::exp(s * std::log(x) - x) * detail::lower_series_sum(s, x);
    return std::exp(s * std::log(x) - x) * detail::upper_cf(s, x);
}

/// Exponential integral Ei(x) = -int_{-x}^inf e^-t / t dt, x != 0.
///
/// Negative arguments go through E1 (series below 1, continued fraction
/// above) since the alternating power series cancels catastrophically there.
/// Positive arguments use the power series up to 40 and the asymptotic
/// expansion beyond.
inline double exp_integral_ei(double x)
{
    if (std::isnan(x) || std::abs(x) < 1e-300)
        throw DomainError("exp_integral_ei: logarithmic singularity at x=0");
    if (x < 0.0)
        return -detail::expint_e1(-x);
    if (std::isinf(x))
        return x;
    if (x <= 40.0)
    {
        double sum = 0.0;
        double fact = 1.0;
        for (int k = 1; k < detail::kMaxIter; ++k)
        {
            fact *= x / k;
            const double add = fact / k;
            sum += add;
            if (add < sum * detail::kEps)
                break;
        }
        return std::numbers::egamma + std::log(x) + sum;
    }
    double sum = 1.0;
    double term = 1.0;
    for (int k = 1; k < 200; ++k)
    {
        const double next = term * k / x;
        if (next > term || next < detail::kEps * sum)
            break;
        term = next;
        sum += term;
    }
    return std::exp(x) / x * sum;
}

/// Gamma(s, x) for any real s and x > 0, including s <= 0 where the
/// integral still converges. Nonpositive shapes climb to s + n > 0 through
/// Gamma(s, x) = (Gamma(s + 1, x) - x^s e^-x) / s; s = 0 is E1(x).
inline double upper_inc_gamma_ext(double s, double x)
{
    if (s > 0.0)
        return upper_inc_gamma(s, x);
    if (!(x > 0.0) || !std::isfinite(s))
        throw DomainError("upper_inc_gamma_ext: needs x > 0 for shape " + std::to_string(s));
    if (std::isinf(x))
        return 0.0;
    const double n = std::ceil(-s);
    const double frac = s + n; // in [0, 1)
    double acc = frac > 0.0 ? upper_inc_gamma(frac, x) : detail::expint_e1(x);
    // Walk down from frac to s.
    for (double t = frac - 1.0; t >= s - 0.5; t -= 1.0)
        acc = (acc - std::exp(t * std::log(x) - x)) / t;
    return acc;
}

} // namespace cranec::specfun
