#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stockcast {

/// Calendar date. Stored as validated year/month/day; the wire format used by
/// CSV files is the integer form YYYYMMDD.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    static Date from_yyyymmdd(int v);
    int yyyymmdd() const { return year * 10000 + month * 100 + day; }
    std::string to_string() const;  // "YYYYMMDD"

    auto operator<=>(const Date&) const = default;
};

/// Immutable ordered list of finite real values, optionally indexed by
/// strictly increasing dates.
class Series {
public:
    explicit Series(std::vector<double> values);
    Series(std::vector<double> values, std::vector<Date> dates);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double front() const { return values_.front(); }
    double back() const { return values_.back(); }

    const std::vector<double>& values() const { return values_; }
    std::span<const double> span() const { return values_; }

    bool has_dates() const { return !dates_.empty(); }
    const std::vector<Date>& dates() const { return dates_; }

private:
    std::vector<double> values_;
    std::vector<Date> dates_;  // empty or values_.size()
};

}  // namespace stockcast
