#include "stockcast/arima.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "stockcast/errors.hpp"
#include "stockcast/stats.hpp"

namespace stockcast::arima {

namespace {

void check_spec(const ArimaSpec& spec) {
    if (spec.q != 0) raise(ErrorKind::BadParams, "MA order must be 0");
    if (spec.p < 0 || spec.d < 0) raise(ErrorKind::BadParams, "negative model order");
}

double binom(int n, int k) {
    double r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Undo d-fold differencing for one step: given the predicted difference and
// the d most recent levels, return the predicted level.
double reintegrate(double predicted_diff, std::span<const double> levels, int d) {
    double level = predicted_diff;
    const std::size_t n = levels.size();
    for (int k = 1; k <= d; ++k) {
        const double sign = (k % 2 == 1) ? 1.0 : -1.0;
        level += sign * binom(d, k) * levels[n - k];
    }
    return level;
}

// AR prediction on the difference scale. lags[0] is the most recent value.
double ar_predict(const ArModel& m, std::span<const double> lags) {
    double v = m.intercept;
    for (std::size_t i = 0; i < m.coefficients.size(); ++i) {
        v += m.coefficients[i] * lags[i];
    }
    return v;
}

}  // namespace

ArModel fit(const Series& series, const ArimaSpec& spec) {
    check_spec(spec);
    const std::size_t p = static_cast<std::size_t>(spec.p);
    const std::size_t d = static_cast<std::size_t>(spec.d);
    if (series.size() <= p + d + 10) {
        raise(ErrorKind::SeriesTooShort, "series too short to fit AR model");
    }

    const std::vector<double> x =
        d > 0 ? stats::difference(series.span(), d)
              : std::vector<double>(series.values());

    ArModel model;
    model.spec = spec;
    model.coefficients.assign(p, 0.0);
    model.training_anchor.assign(series.values().end() - (p + d), series.values().end());

    // Degenerate but well-defined case: the differenced series is exactly
    // constant, e.g. a constant input under d=1. The AR part carries nothing.
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*lo == *hi) {
        model.intercept = *lo;
        model.residual_variance = 0.0;
        return model;
    }

    const std::size_t rows = x.size() - p;
    Eigen::MatrixXd X(rows, p + 1);
    Eigen::VectorXd y(rows);
    for (std::size_t t = p; t < x.size(); ++t) {
        const std::size_t r = t - p;
        y(r) = x[t];
        X(r, 0) = 1.0;
        for (std::size_t i = 1; i <= p; ++i) X(r, i) = x[t - i];
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < X.cols()) {
        raise(ErrorKind::SingularDesignMatrix, "collinear AR design matrix");
    }
    const Eigen::VectorXd beta = qr.solve(y);
    model.intercept = beta(0);
    for (std::size_t i = 0; i < p; ++i) model.coefficients[i] = beta(i + 1);
    model.residual_variance = (y - X * beta).squaredNorm() / static_cast<double>(rows);
    return model;
}

std::pair<Series, Series> fitted_and_residuals(const ArModel& model, const Series& series) {
    const std::size_t p = model.coefficients.size();
    const std::size_t d = static_cast<std::size_t>(model.spec.d);
    const std::size_t warmup = p + d;
    if (series.size() <= warmup) {
        raise(ErrorKind::SeriesTooShort, "series shorter than warm-up span");
    }

    const auto& s = series.values();
    const std::vector<double> x =
        d > 0 ? stats::difference(s, d) : std::vector<double>(s);

    std::vector<double> fitted(s.size());
    std::vector<double> residuals(s.size(), 0.0);
    for (std::size_t t = 0; t < warmup; ++t) fitted[t] = s[t];
    std::vector<double> lags(p);
    for (std::size_t t = warmup; t < s.size(); ++t) {
        // x index of calendar time tau is tau - d; lag i is time t - i.
        for (std::size_t i = 1; i <= p; ++i) lags[i - 1] = x[t - i - d];
        const double xhat = ar_predict(model, lags);
        fitted[t] = reintegrate(xhat, std::span<const double>(s.data(), t),
                                static_cast<int>(d));
        residuals[t] = s[t] - fitted[t];
    }

    if (series.has_dates()) {
        return {Series(std::move(fitted), series.dates()),
                Series(std::move(residuals), series.dates())};
    }
    return {Series(std::move(fitted)), Series(std::move(residuals))};
}

Series forecast(const ArModel& model, const Series& history, std::size_t horizon) {
    if (horizon == 0) raise(ErrorKind::BadParams, "horizon must be positive");
    const std::size_t p = model.coefficients.size();
    const std::size_t d = static_cast<std::size_t>(model.spec.d);
    if (history.size() < p + d) {
        raise(ErrorKind::SeriesTooShort, "history shorter than p + d");
    }

    std::vector<double> levels(history.values());
    std::vector<double> out;
    out.reserve(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        // Differences of the last p+d levels give the p most recent lags.
        std::vector<double> lags(p);
        if (p > 0) {
            std::vector<double> tail(levels.end() - (p + d), levels.end());
            std::vector<double> diffs =
                d > 0 ? stats::difference(tail, d) : std::move(tail);
            for (std::size_t i = 0; i < p; ++i) lags[i] = diffs[diffs.size() - 1 - i];
        }
        const double xhat = ar_predict(model, lags);
        const double level = reintegrate(xhat, levels, static_cast<int>(d));
        levels.push_back(level);
        out.push_back(level);
    }
    return Series(std::move(out));
}

}  // namespace stockcast::arima
