#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "stockcast/series.hpp"

namespace stockcast::arima {

/// Model orders. MA estimation is not implemented, so q must stay 0.
struct ArimaSpec {
    int p = 2;
    int d = 1;
    int q = 0;
};

/// Fitted AR(p) model on the d-times differenced series.
struct ArModel {
    ArimaSpec spec;
    double intercept = 0;                   // a_0
    std::vector<double> coefficients;       // a_1..a_p
    double residual_variance = 0;           // mean squared residual on the fit span
    std::vector<double> training_anchor;    // last p+d raw values of the fit span
};

/// Conditional least squares: differences the series d times, then regresses
/// x_t on [1, x_{t-1}, ..., x_{t-p}].
/// Errors: BadParams (q != 0 or negative orders), SeriesTooShort,
/// SingularDesignMatrix.
ArModel fit(const Series& series, const ArimaSpec& spec);

/// One-step-ahead in-sample predictions on the original price scale, aligned
/// to the input index. The first p+d positions are warm-up padding with
/// fitted == actual and residual == 0, so fitted + residual == actual at
/// every index.
std::pair<Series, Series> fitted_and_residuals(const ArModel& model, const Series& series);

/// Iterates the AR recurrence with the noise at its zero expectation,
/// re-integrating d times. Forecasted levels feed back into the recurrence
/// for horizons beyond one step.
/// Errors: SeriesTooShort (history shorter than p+d).
Series forecast(const ArModel& model, const Series& history, std::size_t horizon);

}  // namespace stockcast::arima
