#include "stockcast/series.hpp"

#include <cmath>

#include "stockcast/errors.hpp"

namespace stockcast {

namespace {

bool is_leap(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int days_in_month(int year, int month) {
    static constexpr int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2 && is_leap(year)) return 29;
    return kDays[month - 1];
}

}  // namespace

Date Date::from_yyyymmdd(int v) {
    Date d{v / 10000, (v / 100) % 100, v % 100};
    if (d.year < 1000 || d.year > 9999 || d.month < 1 || d.month > 12 || d.day < 1 ||
        d.day > days_in_month(d.year, d.month)) {
        raise(ErrorKind::ParseError, "invalid date: " + std::to_string(v));
    }
    return d;
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d%02d%02d", year, month, day);
    return buf;
}

Series::Series(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) raise(ErrorKind::EmptyInput, "series must be non-empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            raise(ErrorKind::NonFiniteValue,
                  "series value at index " + std::to_string(i) + " is not finite");
        }
    }
}

Series::Series(std::vector<double> values, std::vector<Date> dates)
    : Series(std::move(values)) {
    if (dates.size() != values_.size()) {
        raise(ErrorKind::LengthMismatch, "date index length does not match values");
    }
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (!(dates[i - 1] < dates[i])) {
            raise(ErrorKind::BadParams, "date index must be strictly increasing");
        }
    }
    dates_ = std::move(dates);
}

}  // namespace stockcast
