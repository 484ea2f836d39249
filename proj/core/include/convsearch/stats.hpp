// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The convsearch Authors

#pragma once

#include <cstddef>
#include <span>

namespace convsearch {

struct WinTieLoss {
    std::size_t win = 0;
    std::size_t tie = 0;
    std::size_t loss = 0;

    friend bool operator==(const WinTieLoss&, const WinTieLoss&) = default;
};

constexpr double kDefaultTieEpsilon = 1e-4;

/// Compares per-query values of a system against a baseline; differences
/// with |delta| < epsilon are ties. Inputs must be aligned by query.
[[nodiscard]] WinTieLoss win_tie_loss(std::span<const double> system, std::span<const double> baseline,
                                      double epsilon = kDefaultTieEpsilon);

struct TTestResult {
    double t = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

/// Two-sided paired t-test on a - b (needs n >= 2). Identical inputs give
/// t = 0, p = 1. A constant non-zero difference gives t = +/-inf, p = 0.
[[nodiscard]] TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
[[nodiscard]] double student_t_two_sided_p(double t, double df);

}  // namespace convsearch
