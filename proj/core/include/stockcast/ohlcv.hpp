#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "stockcast/series.hpp"

namespace stockcast {

/// One daily bar. Prices are in currency units, volume in shares, amount in
/// currency.
struct OhlcvBar {
    Date date;
    double open = 0;
    double high = 0;
    double low = 0;
    double close = 0;
    double volume = 0;
    double amount = 0;
};

/// Reason string if the bar violates an invariant, nullopt if it is valid.
std::optional<std::string> validate_bar(const OhlcvBar& bar);

/// Immutable collection of bars, sorted ascending by date, unique dates.
/// Construct through align_and_validate.
class OhlcvFrame {
public:
    /// Sorts by date, rejects duplicates, enforces per-bar invariants.
    /// Errors: EmptyInput, DuplicateDate, InvalidBar.
    static OhlcvFrame align_and_validate(std::vector<OhlcvBar> bars);

    std::size_t size() const { return bars_.size(); }
    const OhlcvBar& operator[](std::size_t i) const { return bars_[i]; }
    const std::vector<OhlcvBar>& bars() const { return bars_; }
    const OhlcvBar& front() const { return bars_.front(); }
    const OhlcvBar& back() const { return bars_.back(); }

    /// Date-indexed close series.
    Series close_series() const;

    /// Date-indexed series for one of: open, high, low, close, volume, amount.
    /// Errors: MissingColumn for any other name.
    Series column(const std::string& name) const;

    /// Frame restricted to rows [first, first+count).
    OhlcvFrame slice(std::size_t first, std::size_t count) const;

private:
    explicit OhlcvFrame(std::vector<OhlcvBar> bars) : bars_(std::move(bars)) {}
    std::vector<OhlcvBar> bars_;
};

}  // namespace stockcast
