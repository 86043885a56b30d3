#include <doctest.h>

#include "stockcast/dataset.hpp"
#include "stockcast/errors.hpp"
#include "stockcast/ohlcv.hpp"
#include "stockcast/rng.hpp"
#include "stockcast/series.hpp"

using namespace stockcast;

namespace {

OhlcvBar bar(int ymd, double close) {
    OhlcvBar b;
    b.date = Date::from_yyyymmdd(ymd);
    b.open = close * 0.99;
    b.high = close * 1.01;
    b.low = close * 0.98;
    b.close = close;
    b.volume = 1000;
    b.amount = 1000 * close;
    return b;
}

}  // namespace

TEST_CASE("align_and_validate sorts out-of-order bars") {
    std::vector<OhlcvBar> bars = {bar(20200103, 3), bar(20200101, 1), bar(20200102, 2)};
    const auto frame = OhlcvFrame::align_and_validate(bars);
    REQUIRE(frame.size() == 3);
    CHECK(frame[0].date.yyyymmdd() == 20200101);
    CHECK(frame[1].date.yyyymmdd() == 20200102);
    CHECK(frame[2].date.yyyymmdd() == 20200103);
    CHECK(frame[0].close == 1);
}

TEST_CASE("align_and_validate rejects duplicate dates") {
    std::vector<OhlcvBar> bars = {bar(20200101, 1), bar(20200101, 2)};
    CHECK_THROWS_WITH_AS(OhlcvFrame::align_and_validate(bars),
                         doctest::Contains("20200101"), Error);
    try {
        OhlcvFrame::align_and_validate(bars);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DuplicateDate);
    }
}

TEST_CASE("align_and_validate rejects low above high") {
    auto b = bar(20200101, 10);
    b.low = 11;
    b.high = 10.5;
    try {
        OhlcvFrame::align_and_validate({b});
        FAIL("expected InvalidBar");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidBar);
    }
}

TEST_CASE("align_and_validate rejects empty input") {
    try {
        OhlcvFrame::align_and_validate({});
        FAIL("expected EmptyInput");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyInput);
    }
}

TEST_CASE("bar invariants: non-positive and non-finite prices rejected") {
    auto b = bar(20200101, 10);
    b.close = -1;
    b.low = -2;
    CHECK(validate_bar(b).has_value());
    auto c = bar(20200102, 10);
    c.open = std::numeric_limits<double>::quiet_NaN();
    CHECK(validate_bar(c).has_value());
    CHECK_FALSE(validate_bar(bar(20200103, 5)).has_value());
}

TEST_CASE("close series round trip keeps values and dates") {
    std::vector<OhlcvBar> bars;
    Rng rng(7);
    int ymd = 20200101;
    for (int i = 0; i < 25; ++i) {
        bars.push_back(bar(ymd + i, 10 + rng.uniform()));
    }
    const auto frame = OhlcvFrame::align_and_validate(bars);
    const Series close = frame.close_series();
    REQUIRE(close.size() == frame.size());
    REQUIRE(close.has_dates());
    // Re-attaching the extracted values and dates loses nothing.
    const Series again(close.values(), close.dates());
    for (std::size_t i = 0; i < frame.size(); ++i) {
        CHECK(again[i] == frame[i].close);
        CHECK(again.dates()[i] == frame[i].date);
    }
}

TEST_CASE("series rejects non-finite values and unsorted dates") {
    CHECK_THROWS_AS(Series({1.0, std::numeric_limits<double>::infinity()}), Error);
    CHECK_THROWS_AS(Series(std::vector<double>{}), Error);
    CHECK_THROWS_AS(Series({1.0, 2.0}, {Date::from_yyyymmdd(20200102),
                                        Date::from_yyyymmdd(20200101)}),
                    Error);
}

TEST_CASE("windowed dataset has N - L samples for many N, L") {
    Rng rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t lookback = 1 + rng.below(12);
        const std::size_t n = lookback + 1 + rng.below(40);
        std::vector<double> col(n);
        for (auto& v : col) v = rng.uniform();
        const auto m = FeatureMatrix::from_columns({"x"}, {col});
        const auto ds = make_windows(m, col, lookback);
        REQUIRE(ds.size() == n - lookback);
        // target is the value right after the window
        for (std::size_t i = 0; i < ds.size(); ++i) {
            CHECK(ds.targets[i] == col[ds.target_rows[i]]);
            CHECK(ds.target_rows[i] == lookback + i);
            CHECK(ds.inputs[i].back() == col[ds.target_rows[i] - 1]);
        }
    }
}

TEST_CASE("feature matrix rejects duplicate names and ragged columns") {
    CHECK_THROWS_AS(FeatureMatrix::from_columns({"a", "a"}, {{1.0}, {2.0}}), Error);
    CHECK_THROWS_AS(FeatureMatrix::from_columns({"a", "b"}, {{1.0}, {2.0, 3.0}}), Error);
    const auto m = FeatureMatrix::from_columns({"a", "b"}, {{1.0, 2.0}, {3.0, 4.0}});
    CHECK(m.col_index("b") == 1);
    CHECK_THROWS_AS(m.col_index("c"), Error);
    CHECK(m.at(1, 0) == 2.0);
}
