#include "stockcast/stats.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "stockcast/errors.hpp"

namespace stockcast::stats {

namespace {

// MacKinnon (2010) response-surface coefficients, constant-only regression.
// crit = b0 + b1/N + b2/N^2 + b3/N^3 at the 1/5/10% levels.
constexpr double kCritSurface[3][4] = {
    {-3.43035, -6.5393, -16.786, -79.433},
    {-2.86154, -2.8903, -4.234, -40.040},
    {-2.56677, -1.5384, -2.809, 0.0},
};

// MacKinnon (1994) p-value response surface, constant-only regression.
// p = Phi(poly(tau)) with a small-tau and a large-tau polynomial.
constexpr double kTauStar = -1.61;
constexpr double kTauMin = -18.83;
constexpr double kTauMax = 2.74;
constexpr double kSmallP[3] = {2.1659, 1.4412, 0.038269};
constexpr double kLargeP[4] = {1.7339, 0.93202, -0.12745, -0.010368};

double norm_cdf(double z) { return 0.5 * std::erfc(-z / 1.4142135623730951); }

double mackinnon_pvalue(double tau) {
    if (tau > kTauMax) return 1.0;
    if (tau < kTauMin) return 0.0;
    double z;
    if (tau <= kTauStar) {
        z = kSmallP[0] + tau * (kSmallP[1] + tau * kSmallP[2]);
    } else {
        z = kLargeP[0] + tau * (kLargeP[1] + tau * (kLargeP[2] + tau * kLargeP[3]));
    }
    return norm_cdf(z);
}

double mackinnon_crit(int level_row, double n) {
    const double* b = kCritSurface[level_row];
    return b[0] + b[1] / n + b[2] / (n * n) + b[3] / (n * n * n);
}

struct OlsFit {
    Eigen::VectorXd beta;
    double ssr = 0;
    Eigen::MatrixXd xtx_inv;  // unpivoted (X'X)^-1
};

OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < X.cols()) {
        raise(ErrorKind::SingularRegression, "collinear regressors in ADF regression");
    }
    OlsFit fit;
    fit.beta = qr.solve(y);
    fit.ssr = (y - X * fit.beta).squaredNorm();
    const auto k = X.cols();
    Eigen::MatrixXd R = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    Eigen::MatrixXd r_inv =
        R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd inv_pivoted = r_inv * r_inv.transpose();
    const auto perm = qr.colsPermutation();
    fit.xtx_inv = perm * inv_pivoted * perm.transpose();
    return fit;
}

double aic(double ssr, std::size_t n, std::size_t k) {
    if (ssr <= 0) return -std::numeric_limits<double>::infinity();
    return static_cast<double>(n) * std::log(ssr / static_cast<double>(n)) +
           2.0 * static_cast<double>(k);
}

// Design matrix [const, level, dy lags 1..k] for rows i in [start, m) of the
// first-difference sequence dy (dy[i] pairs with level y[i]).
Eigen::MatrixXd adf_design(std::span<const double> y, const std::vector<double>& dy,
                           std::size_t start, std::size_t k) {
    const std::size_t m = dy.size();
    const std::size_t nobs = m - start;
    Eigen::MatrixXd X(nobs, k + 2);
    for (std::size_t i = start; i < m; ++i) {
        const std::size_t r = i - start;
        X(r, 0) = 1.0;
        X(r, 1) = y[i];
        for (std::size_t j = 1; j <= k; ++j) X(r, 1 + j) = dy[i - j];
    }
    return X;
}

Eigen::VectorXd adf_endog(const std::vector<double>& dy, std::size_t start) {
    const std::size_t nobs = dy.size() - start;
    Eigen::VectorXd v(nobs);
    for (std::size_t i = 0; i < nobs; ++i) v(i) = dy[start + i];
    return v;
}

}  // namespace

std::vector<double> difference(std::span<const double> values, std::size_t order) {
    if (values.size() <= order) {
        raise(ErrorKind::SeriesTooShort, "series too short for differencing order");
    }
    std::vector<double> out(values.begin(), values.end());
    for (std::size_t d = 0; d < order; ++d) {
        for (std::size_t i = 0; i + 1 < out.size(); ++i) out[i] = out[i + 1] - out[i];
        out.pop_back();
    }
    return out;
}

Series difference(const Series& series, std::size_t order) {
    auto values = difference(series.span(), order);
    if (series.has_dates()) {
        std::vector<Date> dates(series.dates().begin() + order, series.dates().end());
        return Series(std::move(values), std::move(dates));
    }
    return Series(std::move(values));
}

AdfReport adf_test(std::span<const double> values, std::optional<std::size_t> max_lag) {
    const std::size_t n = values.size();
    if (n < 20) raise(ErrorKind::SeriesTooShort, "ADF test needs at least 20 observations");

    // Schwert rule, capped so every candidate regression keeps enough rows.
    std::size_t maxlag =
        max_lag.value_or(static_cast<std::size_t>(
            std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25))));
    const std::size_t cap = n / 2 - 2;
    if (maxlag > cap) maxlag = cap;

    const std::vector<double> dy = difference(values, 1);
    const std::size_t m = dy.size();
    if (m <= maxlag + 3) raise(ErrorKind::SeriesTooShort, "not enough rows after lag trimming");

    // Lag selection: all candidates share the maxlag-trimmed window so their
    // AIC values are comparable.
    const Eigen::VectorXd endog_auto = adf_endog(dy, maxlag);
    const Eigen::MatrixXd design_full = adf_design(values, dy, maxlag, maxlag);
    std::size_t best_lag = 0;
    double best_aic = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= maxlag; ++k) {
        const Eigen::MatrixXd X = design_full.leftCols(k + 2);
        const OlsFit fit = ols(X, endog_auto);
        const double a = aic(fit.ssr, endog_auto.size(), k + 2);
        if (a < best_aic) {
            best_aic = a;
            best_lag = k;
        }
    }

    // Refit at the chosen lag on the longest usable window.
    const Eigen::VectorXd endog = adf_endog(dy, best_lag);
    const Eigen::MatrixXd X = adf_design(values, dy, best_lag, best_lag);
    const OlsFit fit = ols(X, endog);

    const std::size_t nobs = endog.size();
    const std::size_t k_params = X.cols();
    const double sigma2 = fit.ssr / static_cast<double>(nobs - k_params);
    const double se = std::sqrt(sigma2 * fit.xtx_inv(1, 1));
    if (!(se > 0)) raise(ErrorKind::SingularRegression, "zero standard error on level term");

    AdfReport report;
    report.test_statistic = fit.beta(1) / se;
    report.p_value = mackinnon_pvalue(report.test_statistic);
    report.lags_used = best_lag;
    report.n_obs = nobs;
    report.crit_1pct = mackinnon_crit(0, static_cast<double>(nobs));
    report.crit_5pct = mackinnon_crit(1, static_cast<double>(nobs));
    report.crit_10pct = mackinnon_crit(2, static_cast<double>(nobs));
    return report;
}

std::vector<double> acf(std::span<const double> values, std::size_t n_lags) {
    const std::size_t n = values.size();
    if (n_lags >= n) raise(ErrorKind::SeriesTooShort, "n_lags must be below series length");
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double denom = 0;
    for (double v : values) denom += (v - mean) * (v - mean);
    if (denom <= 0) raise(ErrorKind::ZeroVariance, "constant series has no autocorrelation");

    std::vector<double> out(n_lags + 1);
    for (std::size_t k = 0; k <= n_lags; ++k) {
        double s = 0;
        for (std::size_t t = 0; t + k < n; ++t) {
            s += (values[t] - mean) * (values[t + k] - mean);
        }
        out[k] = s / denom;
    }
    out[0] = 1.0;
    return out;
}

std::vector<double> pacf(std::span<const double> values, std::size_t n_lags) {
    if (n_lags >= values.size() / 2) {
        raise(ErrorKind::SeriesTooShort, "pacf requires n_lags < N/2");
    }
    const std::vector<double> rho = acf(values, n_lags);

    // Durbin-Levinson recursion on the sample autocorrelations.
    std::vector<double> out(n_lags + 1, 1.0);
    std::vector<double> phi_prev(n_lags + 1, 0.0);
    std::vector<double> phi_cur(n_lags + 1, 0.0);
    for (std::size_t k = 1; k <= n_lags; ++k) {
        double num = rho[k];
        double den = 1.0;
        for (std::size_t j = 1; j < k; ++j) {
            num -= phi_prev[j] * rho[k - j];
            den -= phi_prev[j] * rho[j];
        }
        if (std::abs(den) < 1e-14) {
            raise(ErrorKind::ZeroVariance, "degenerate Durbin-Levinson step");
        }
        const double phi_kk = num / den;
        for (std::size_t j = 1; j < k; ++j) {
            phi_cur[j] = phi_prev[j] - phi_kk * phi_prev[k - j];
        }
        phi_cur[k] = phi_kk;
        out[k] = phi_kk;
        phi_prev = phi_cur;
    }
    return out;
}

}  // namespace stockcast::stats
