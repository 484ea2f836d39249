// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#include "convsearch/stats.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "convsearch/error.hpp"

namespace convsearch {

WinTieLoss win_tie_loss(std::span<const double> system, std::span<const double> baseline, double epsilon)
{
    if (system.size() != baseline.size()) {
        throw ValidationError("win/tie/loss inputs must have the same number of queries");
    }
    WinTieLoss out;
    for (std::size_t i = 0; i < system.size(); ++i) {
        const double delta = system[i] - baseline[i];
        if (delta == 0.0 || std::abs(delta) < epsilon) {
            ++out.tie;
        } else if (delta > 0) {
            ++out.win;
        } else {
            ++out.loss;
        }
    }
    return out;
}

double student_t_two_sided_p(double t, double df)
{
    if (std::isnan(t)) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (std::isinf(t)) {
        return 0.0;
    }
    boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw ValidationError("paired t-test inputs must have the same length");
    }
    const std::size_t n = a.size();
    if (n < 2) {
        throw ValidationError("paired t-test needs at least two pairs");
    }
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean += a[i] - b[i];
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (a[i] - b[i]) - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    TTestResult r;
    r.n = n;
    if (sd == 0.0) {
        if (mean == 0.0) {
            r.t = 0.0;
            r.p_value = 1.0;
        } else {
            r.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
            r.p_value = 0.0;
        }
        return r;
    }
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    r.p_value = student_t_two_sided_p(r.t, static_cast<double>(n - 1));
    return r;
}

}  // namespace convsearch
