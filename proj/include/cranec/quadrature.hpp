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

// Adaptive quadrature used by the analytic average-power expressions.

#include <cranec/error.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <limits>
#include <string>
#include <vector>

namespace cranec::quadrature
{

/// Adaptive 15-point Gauss-Kronrod on [lo, hi]; `hi` may be +inf, in which
/// case Boost maps the half line onto a finite interval. Throws NumericError
/// when the error estimate stays above abs_tol (and above 1e-8 of the L1
/// norm, so that large integrals are judged relatively). The relative
/// refinement target of 1e-10 sits above the round-off floor of the
/// integrands used here; asking for less makes the recursion chase noise.
template <class F>
double integrate(F &&f, double lo, double hi, double abs_tol = 1e-8)
{
    if (std::isnan(lo) || std::isnan(hi) || !(abs_tol > 0.0))
        throw DomainError("integrate: invalid limits or tolerance");
    if (hi == lo)
        return 0.0;
    if (hi < lo)
        return -integrate(f, hi, lo, abs_tol);
    auto guarded = [&](double x) {
        const double y = f(x);
        if (!std::isfinite(y))
            throw NumericError("integrate: non-finite integrand at x=" + std::to_string(x));
        return y;
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    double err = 0.0, l1 = 0.0;
    // Boost only knows a relative target. A coarse first pass sizes the
    // integral so that abs_tol can be translated; without it, integrands
    // that are tiny everywhere send the recursion after round-off.
    const double coarse = GK::integrate(guarded, lo, hi, 0, 1e-10, &err, &l1);
    // Negligible contributions (often pure cancellation noise) stop here;
    // refining them relatively would never terminate.
    if (l1 <= 0.1 * abs_tol && err <= 0.1 * abs_tol)
        return coarse;
    const double rel = std::clamp(abs_tol / std::max(l1, 1e-300), 1e-10, 1e-2);
    const double value = GK::integrate(guarded, lo, hi, 15, rel, &err, &l1);
    // Boost stops on its own estimate, which can land a hair over the
    // target; a factor of two absorbs that without hiding real failures.
    if (err > 2.0 * abs_tol && err > 1e-8 * l1)
    {
        char msg[160];
        std::snprintf(msg, sizeof msg, "integrate: error estimate %.3g (L1 %.3g) exceeds tolerance %.3g on [%.6g, %.6g]",
                      err, l1, abs_tol, lo, hi);
        throw NumericError(msg);
    }
    return value;
}

/// integrate() over [lo, hi] split at every break point strictly inside.
/// Keeps narrow bulges from being missed when the interval is much wider
/// than the region that carries the mass.
template <class F>
double integrate_split(F &&f, double lo, double hi, double abs_tol, std::initializer_list<double> breaks)
{
    if (!(hi > lo))
        return 0.0;
    std::vector<double> pts{lo};
    for (double b : breaks)
        if (b > lo && b < hi)
            pts.push_back(b);
    std::sort(pts.begin() + 1, pts.end());
    pts.push_back(hi);
    const double per_piece = abs_tol / static_cast<double>(pts.size() - 1);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        total += integrate(f, pts[i], pts[i + 1], per_piece);
    return total;
}

} // namespace cranec::quadrature
