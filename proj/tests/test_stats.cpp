#include <doctest.h>

#include <cmath>

#include "stockcast/errors.hpp"
#include "stockcast/rng.hpp"
#include "stockcast/stats.hpp"

using namespace stockcast;
using namespace stockcast::stats;

namespace {

std::vector<double> random_walk(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    std::vector<double> y(n);
    y[0] = 100;
    for (std::size_t t = 1; t < n; ++t) y[t] = y[t - 1] + rng.normal();
    return y;
}

std::vector<double> ar1(std::uint64_t seed, std::size_t n, double phi) {
    Rng rng(seed);
    std::vector<double> y(n);
    y[0] = rng.normal();
    for (std::size_t t = 1; t < n; ++t) y[t] = phi * y[t - 1] + rng.normal();
    return y;
}

}  // namespace

TEST_CASE("difference: basic examples") {
    CHECK(difference(std::vector<double>{1, 2, 4, 7}, 1) == std::vector<double>{1, 2, 3});
    CHECK(difference(std::vector<double>{5, 5, 5, 5}, 1) == std::vector<double>{0, 0, 0});
    CHECK(difference(std::vector<double>{1, 2, 4, 7}, 2) == std::vector<double>{1, 1});
    CHECK(difference(std::vector<double>{1, 2, 4, 7}, 0) ==
          std::vector<double>{1, 2, 4, 7});
}

TEST_CASE("difference: order too large errors, twice-once identity") {
    CHECK_THROWS_AS(difference(std::vector<double>{1, 2}, 2), Error);
    Rng rng(11);
    std::vector<double> x(50);
    for (auto& v : x) v = rng.normal();
    const auto once_twice = difference(difference(x, 1), 1);
    const auto twice = difference(x, 2);
    REQUIRE(once_twice.size() == twice.size());
    for (std::size_t i = 0; i < twice.size(); ++i) {
        CHECK(once_twice[i] == doctest::Approx(twice[i]).epsilon(1e-12));
    }
}

TEST_CASE("difference keeps trailing dates") {
    Series s({1, 2, 4},
             {Date::from_yyyymmdd(20200101), Date::from_yyyymmdd(20200102),
              Date::from_yyyymmdd(20200103)});
    const Series d = difference(s, 1);
    REQUIRE(d.size() == 2);
    CHECK(d.dates()[0].yyyymmdd() == 20200102);
}

TEST_CASE("acf: lag zero is one, white noise stays small, AR(1) decays geometrically") {
    Rng rng(21);
    std::vector<double> noise(5000);
    for (auto& v : noise) v = rng.normal();
    const auto r = acf(noise, 5);
    CHECK(r[0] == 1.0);
    for (std::size_t k = 1; k <= 5; ++k) CHECK(std::abs(r[k]) < 0.05);

    const auto y = ar1(22, 10000, 0.6);
    const auto ry = acf(y, 6);
    for (std::size_t k = 1; k <= 6; ++k) {
        CHECK(std::abs(ry[k] - std::pow(0.6, static_cast<double>(k))) < 0.03);
    }
}

TEST_CASE("acf: values stay within [-1, 1]") {
    Rng rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> x(200);
        for (auto& v : x) v = rng.uniform(-3, 3);
        for (double r : acf(x, 20)) {
            CHECK(r <= 1.0 + 1e-12);
            CHECK(r >= -1.0 - 1e-12);
        }
    }
}

TEST_CASE("acf/pacf errors: constant series, too many lags") {
    std::vector<double> c(100, 3.14);
    try {
        acf(c, 5);
        FAIL("expected ZeroVariance");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ZeroVariance);
    }
    std::vector<double> x{1, 2, 3};
    CHECK_THROWS_AS(acf(x, 3), Error);
    CHECK_THROWS_AS(pacf(x, 2), Error);
}

TEST_CASE("pacf: AR(1) truncates after lag 1, AR(2) after lag 2, lag 0 is 1") {
    const auto y1 = ar1(31, 10000, 0.6);
    const auto p1 = pacf(y1, 6);
    CHECK(p1[0] == 1.0);
    CHECK(std::abs(p1[1] - 0.6) < 0.03);
    for (std::size_t k = 2; k <= 6; ++k) CHECK(std::abs(p1[k]) < 0.03);

    Rng rng(32);
    std::vector<double> y2(10000);
    y2[0] = rng.normal();
    y2[1] = rng.normal();
    for (std::size_t t = 2; t < y2.size(); ++t) {
        y2[t] = 0.5 * y2[t - 1] - 0.3 * y2[t - 2] + rng.normal();
    }
    const auto p2 = pacf(y2, 6);
    for (std::size_t k = 3; k <= 6; ++k) CHECK(std::abs(p2[k]) < 0.03);
    for (double v : p2) {
        CHECK(v <= 1.0 + 1e-12);
        CHECK(v >= -1.0 - 1e-12);
    }
}

TEST_CASE("adf: random walk keeps the unit root, stationary AR(1) rejects it") {
    const auto rw = random_walk(41, 2000);
    const auto rep_rw = adf_test(rw);
    CHECK(rep_rw.p_value > 0.05);
    CHECK(rep_rw.n_obs == rw.size() - rep_rw.lags_used - 1);

    const auto st = ar1(42, 2000, 0.5);
    const auto rep_st = adf_test(st);
    CHECK(rep_st.p_value < 0.01);
    CHECK(rep_st.test_statistic < rep_st.crit_1pct);
}

TEST_CASE("adf: critical values ordered and near the large-N surface") {
    const auto y = random_walk(43, 3501);
    const auto rep = adf_test(y);
    CHECK(rep.crit_1pct < rep.crit_5pct);
    CHECK(rep.crit_5pct < rep.crit_10pct);
    // Surface values for ~3484 observations.
    CHECK(rep.crit_1pct == doctest::Approx(-3.4322).epsilon(1e-3));
    CHECK(rep.crit_5pct == doctest::Approx(-2.8624).epsilon(1e-3));
    CHECK(rep.crit_10pct == doctest::Approx(-2.5672).epsilon(1e-3));
}

TEST_CASE("adf: scale invariance of the t-ratio") {
    const auto y = random_walk(44, 500);
    std::vector<double> y2(y);
    for (auto& v : y2) v *= 37.5;
    const auto a = adf_test(y);
    const auto b = adf_test(y2);
    CHECK(a.test_statistic == doctest::Approx(b.test_statistic).epsilon(1e-9));
    CHECK(a.lags_used == b.lags_used);
}

TEST_CASE("adf: p-value falls as the AR coefficient leaves the unit root") {
    const double phis[] = {0.999, 0.99, 0.9, 0.7, 0.5};
    double prev = 2.0;
    for (double phi : phis) {
        const auto y = ar1(45, 2000, phi);  // same seed, same innovations
        const auto rep = adf_test(y);
        CHECK(rep.p_value < prev);
        prev = rep.p_value;
    }
}

TEST_CASE("adf: errors on short and constant input") {
    std::vector<double> shorty(10, 1.0);
    try {
        adf_test(shorty);
        FAIL("expected SeriesTooShort");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SeriesTooShort);
    }
    std::vector<double> c(100, 2.0);
    try {
        adf_test(c);
        FAIL("expected SingularRegression");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SingularRegression);
    }
}
