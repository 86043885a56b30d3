#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "stockcast/series.hpp"

namespace stockcast::stats {

/// Augmented Dickey-Fuller test result. The null hypothesis is that the
/// series has a unit root; reject (stationary) when the statistic falls below
/// a critical value.
struct AdfReport {
    double test_statistic = 0;
    double p_value = 1;
    std::size_t lags_used = 0;
    std::size_t n_obs = 0;  // series length - lags_used - 1
    double crit_1pct = 0;
    double crit_5pct = 0;
    double crit_10pct = 0;
};

/// d successive first differences; output length = input length - order.
/// Errors: SeriesTooShort.
std::vector<double> difference(std::span<const double> values, std::size_t order);

/// Series overload; drops the first `order` dates when an index is present.
Series difference(const Series& series, std::size_t order);

/// ADF test with constant (no trend) regression:
///   dy_t = a + g*y_{t-1} + sum_{i=1..k} b_i*dy_{t-i} + e_t
/// Lag k is chosen by minimum AIC over 0..max_lag; the default max_lag is
/// floor(12*(N/100)^(1/4)) capped at N/2 - 2. The statistic is the t-ratio of
/// g; p-value and critical values come from the MacKinnon response surfaces.
/// Errors: SeriesTooShort (N < 20), SingularRegression.
AdfReport adf_test(std::span<const double> values,
                   std::optional<std::size_t> max_lag = std::nullopt);

/// Biased sample autocorrelations for lags 0..n_lags, entry 0 == 1.
/// Errors: SeriesTooShort, ZeroVariance.
std::vector<double> acf(std::span<const double> values, std::size_t n_lags);

/// Partial autocorrelations for lags 0..n_lags via the Durbin-Levinson
/// recursion on the sample ACF, entry 0 == 1.
/// Errors: SeriesTooShort (requires n_lags < N/2), ZeroVariance.
std::vector<double> pacf(std::span<const double> values, std::size_t n_lags);

}  // namespace stockcast::stats
