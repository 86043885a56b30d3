#include <doctest.h>

#include <cmath>

#include "stockcast/arima.hpp"
#include "stockcast/errors.hpp"
#include "stockcast/io.hpp"
#include "stockcast/rng.hpp"
#include "stockcast/stats.hpp"

using namespace stockcast;
using namespace stockcast::arima;

TEST_CASE("fit recovers AR(2) coefficients from a simulated ARIMA(2,1,0) path") {
    io::SyntheticParams p;
    p.a1 = 0.5;
    p.a2 = -0.3;
    p.sigma = 0.1;
    const auto frame = io::gen_synthetic(io::SyntheticKind::ar2, 5000, 123, p);
    const auto model = fit(frame.close_series(), {2, 1, 0});
    REQUIRE(model.coefficients.size() == 2);
    CHECK(std::abs(model.coefficients[0] - 0.5) < 0.05);
    CHECK(std::abs(model.coefficients[1] + 0.3) < 0.05);
    CHECK(model.residual_variance == doctest::Approx(0.01).epsilon(0.2));
    CHECK(model.training_anchor.size() == 3);
}

TEST_CASE("fit on a constant series with d=1 gives the zero model") {
    Series s(std::vector<double>(100, 42.0));
    const auto model = fit(s, {2, 1, 0});
    CHECK(model.intercept == 0.0);
    CHECK(model.coefficients[0] == 0.0);
    CHECK(model.coefficients[1] == 0.0);
    CHECK(model.residual_variance == 0.0);
}

TEST_CASE("fit on an exact AR(1) recurrence is exact") {
    std::vector<double> x(60);
    x[0] = 8;
    for (std::size_t t = 1; t < x.size(); ++t) x[t] = 0.5 * x[t - 1];
    const auto model = fit(Series(x), {1, 0, 0});
    CHECK(model.intercept == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(model.coefficients[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(model.residual_variance < 1e-12);
}

TEST_CASE("fit input validation") {
    CHECK_THROWS_AS(fit(Series(std::vector<double>(5, 1.0)), {2, 1, 0}), Error);
    CHECK_THROWS_AS(fit(Series(std::vector<double>(100, 1.0)), {2, 1, 1}), Error);
}

TEST_CASE("zero-coefficient model with d=1 fits the random walk") {
    ArModel model;
    model.spec = {2, 1, 0};
    model.coefficients = {0, 0};
    Rng rng(9);
    std::vector<double> v(50);
    v[0] = 10;
    for (std::size_t t = 1; t < v.size(); ++t) v[t] = v[t - 1] + rng.uniform(-0.5, 0.5);
    const Series s(v);
    auto [fitted, resid] = fitted_and_residuals(model, s);
    for (std::size_t t = 3; t < s.size(); ++t) {
        CHECK(fitted[t] == doctest::Approx(v[t - 1]).epsilon(1e-12));
        CHECK(resid[t] == doctest::Approx(v[t] - v[t - 1]).epsilon(1e-12));
    }
    // warm-up padding
    CHECK(fitted[0] == v[0]);
    CHECK(resid[0] == 0.0);
}

TEST_CASE("fitted plus residual reproduces the series exactly") {
    io::SyntheticParams p;
    const auto frame = io::gen_synthetic(io::SyntheticKind::ar2, 400, 5, p);
    const Series close = frame.close_series();
    const auto model = fit(close, {2, 1, 0});
    auto [fitted, resid] = fitted_and_residuals(model, close);
    for (std::size_t t = 0; t < close.size(); ++t) {
        CHECK(fitted[t] + resid[t] == doctest::Approx(close[t]).epsilon(0).scale(1e-12));
        CHECK(fitted[t] + resid[t] == close[t]);
    }
}

TEST_CASE("residuals of a well-specified fit are stationary") {
    io::SyntheticParams p;
    p.sigma = 0.2;
    const auto frame = io::gen_synthetic(io::SyntheticKind::ar2, 3000, 77, p);
    const Series close = frame.close_series();
    const auto model = fit(close, {2, 1, 0});
    auto [fitted, resid] = fitted_and_residuals(model, close);
    const auto rep = stats::adf_test(resid.span());
    CHECK(rep.p_value < 0.01);
}

TEST_CASE("forecast: random-walk model repeats the last value") {
    ArModel model;
    model.spec = {0, 1, 0};
    const Series h(std::vector<double>{3.0, 5.0, 7.5});
    const Series fc = forecast(model, h, 3);
    CHECK(fc[0] == 7.5);
    CHECK(fc[1] == 7.5);
    CHECK(fc[2] == 7.5);
}

TEST_CASE("forecast: pure AR(1) decays geometrically") {
    ArModel model;
    model.spec = {1, 0, 0};
    model.coefficients = {0.5};
    const Series h(std::vector<double>{8.0});
    const Series fc = forecast(model, h, 3);
    CHECK(fc[0] == doctest::Approx(4.0));
    CHECK(fc[1] == doctest::Approx(2.0));
    CHECK(fc[2] == doctest::Approx(1.0));
}

TEST_CASE("forecast consistency: horizon h then 1 equals horizon h+1") {
    io::SyntheticParams p;
    const auto frame = io::gen_synthetic(io::SyntheticKind::ar2, 300, 15, p);
    const Series close = frame.close_series();
    const auto model = fit(close, {2, 1, 0});
    for (std::size_t h : {1u, 3u, 7u}) {
        const Series fh = forecast(model, close, h);
        const Series fh1 = forecast(model, close, h + 1);
        std::vector<double> ext(close.values());
        ext.insert(ext.end(), fh.values().begin(), fh.values().end());
        const Series one = forecast(model, Series(ext), 1);
        CHECK(one[0] == doctest::Approx(fh1[h]).epsilon(1e-12));
    }
}

TEST_CASE("fit is translation-consistent under d=1") {
    io::SyntheticParams p;
    const auto frame = io::gen_synthetic(io::SyntheticKind::ar2, 500, 99, p);
    const Series close = frame.close_series();
    std::vector<double> shifted(close.values());
    for (auto& v : shifted) v += 1234.5;
    const auto a = fit(close, {2, 1, 0});
    const auto b = fit(Series(shifted), {2, 1, 0});
    CHECK(a.coefficients[0] == b.coefficients[0]);
    CHECK(a.coefficients[1] == b.coefficients[1]);
}

TEST_CASE("forecast input validation") {
    ArModel model;
    model.spec = {2, 1, 0};
    model.coefficients = {0.1, 0.1};
    CHECK_THROWS_AS(forecast(model, Series(std::vector<double>{1.0, 2.0}), 0), Error);
    try {
        forecast(model, Series(std::vector<double>{1.0, 2.0}), 1);
        FAIL("expected SeriesTooShort");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SeriesTooShort);
    }
}
