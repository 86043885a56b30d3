#include "stockcast/ohlcv.hpp"

#include <algorithm>
#include <cmath>

#include "stockcast/errors.hpp"

namespace stockcast {

std::optional<std::string> validate_bar(const OhlcvBar& bar) {
    const double prices[4] = {bar.open, bar.high, bar.low, bar.close};
    for (double p : prices) {
        if (!std::isfinite(p)) return "non-finite price";
        if (p <= 0) return "price must be > 0";
    }
    if (!std::isfinite(bar.volume) || !std::isfinite(bar.amount)) return "non-finite volume/amount";
    if (bar.low > std::min(bar.open, bar.close)) return "low above min(open, close)";
    if (bar.high < std::max(bar.open, bar.close)) return "high below max(open, close)";
    if (bar.volume < 0) return "negative volume";
    if (bar.amount < 0) return "negative amount";
    return std::nullopt;
}

OhlcvFrame OhlcvFrame::align_and_validate(std::vector<OhlcvBar> bars) {
    if (bars.empty()) raise(ErrorKind::EmptyInput, "no bars");
    std::stable_sort(bars.begin(), bars.end(),
                     [](const OhlcvBar& a, const OhlcvBar& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < bars.size(); ++i) {
        if (bars[i].date == bars[i - 1].date) {
            raise(ErrorKind::DuplicateDate, "duplicate date " + bars[i].date.to_string());
        }
    }
    for (std::size_t i = 0; i < bars.size(); ++i) {
        if (auto reason = validate_bar(bars[i])) {
            raise(ErrorKind::InvalidBar,
                  "bar " + std::to_string(i) + " (" + bars[i].date.to_string() +
                      "): " + *reason);
        }
    }
    return OhlcvFrame(std::move(bars));
}

Series OhlcvFrame::close_series() const { return column("close"); }

Series OhlcvFrame::column(const std::string& name) const {
    double OhlcvBar::* field = nullptr;
    if (name == "open") field = &OhlcvBar::open;
    else if (name == "high") field = &OhlcvBar::high;
    else if (name == "low") field = &OhlcvBar::low;
    else if (name == "close") field = &OhlcvBar::close;
    else if (name == "volume") field = &OhlcvBar::volume;
    else if (name == "amount") field = &OhlcvBar::amount;
    else raise(ErrorKind::MissingColumn, "unknown column: " + name);

    std::vector<double> values;
    std::vector<Date> dates;
    values.reserve(bars_.size());
    dates.reserve(bars_.size());
    for (const auto& b : bars_) {
        values.push_back(b.*field);
        dates.push_back(b.date);
    }
    return Series(std::move(values), std::move(dates));
}

OhlcvFrame OhlcvFrame::slice(std::size_t first, std::size_t count) const {
    if (first + count > bars_.size()) {
        raise(ErrorKind::SplitOutOfRange, "slice beyond frame end");
    }
    if (count == 0) raise(ErrorKind::EmptyInput, "empty slice");
    return OhlcvFrame(std::vector<OhlcvBar>(bars_.begin() + first,
                                            bars_.begin() + first + count));
}

}  // namespace stockcast
