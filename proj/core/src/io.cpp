#include "stockcast/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stockcast/errors.hpp"
#include "stockcast/rng.hpp"

namespace stockcast::io {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            out.push_back(field);
            field.clear();
        } else {
            field += ch;
        }
    }
    out.push_back(field);
    for (auto& f : out) {
        while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
        while (!f.empty() && f.front() == ' ') f.erase(f.begin());
    }
    return out;
}

double parse_number(const std::string& s, std::size_t line_no, const std::string& col) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        raise(ErrorKind::ParseError, "line " + std::to_string(line_no) + ", column " + col +
                                         ": cannot parse '" + s + "'");
    }
}

// Days-from-civil (proleptic Gregorian); 1970-01-01 == day 0.
long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 +
                         static_cast<unsigned>(d) - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

Date civil_from_days(long z) {
    z += 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long y = static_cast<long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : static_cast<unsigned>(-9));
    return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

// Next weekday after `day` (skips Saturday/Sunday).
long next_trading_day(long day) {
    do {
        ++day;
    } while ((day + 4) % 7 == 6 || (day + 4) % 7 == 0);  // day 0 was a Thursday
    return day;
}

}  // namespace

OhlcvFrame load_ohlcv_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::ParseError, "cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) raise(ErrorKind::EmptyInput, "empty file " + path);

    const auto header = split_csv_line(line);
    const char* required[] = {"trade_date", "open", "high", "low", "close", "vol", "amount"};
    std::size_t col[7];
    for (std::size_t i = 0; i < 7; ++i) {
        auto it = std::find(header.begin(), header.end(), required[i]);
        if (it == header.end()) {
            raise(ErrorKind::MissingColumn, std::string("missing column ") + required[i]);
        }
        col[i] = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<OhlcvBar> bars;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() < header.size()) {
            raise(ErrorKind::ParseError,
                  "line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
        }
        OhlcvBar bar;
        const double rawdate = parse_number(fields[col[0]], line_no, "trade_date");
        bar.date = Date::from_yyyymmdd(static_cast<int>(rawdate));
        bar.open = parse_number(fields[col[1]], line_no, "open");
        bar.high = parse_number(fields[col[2]], line_no, "high");
        bar.low = parse_number(fields[col[3]], line_no, "low");
        bar.close = parse_number(fields[col[4]], line_no, "close");
        bar.volume = parse_number(fields[col[5]], line_no, "vol");
        bar.amount = parse_number(fields[col[6]], line_no, "amount");
        bars.push_back(bar);
    }
    return OhlcvFrame::align_and_validate(std::move(bars));
}

void save_ohlcv_csv(const OhlcvFrame& frame, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorKind::ParseError, "cannot write " + path);
    out << "trade_date,open,high,low,close,vol,amount\n";
    char buf[512];
    for (const auto& b : frame.bars()) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      b.date.to_string().c_str(), b.open, b.high, b.low, b.close, b.volume,
                      b.amount);
        out << buf;
    }
}

SyntheticKind synthetic_kind_from_string(const std::string& s) {
    if (s == "random_walk") return SyntheticKind::random_walk;
    if (s == "ar2") return SyntheticKind::ar2;
    if (s == "sine_plus_noise") return SyntheticKind::sine_plus_noise;
    raise(ErrorKind::BadParams, "unknown synthetic kind: " + s);
}

std::string to_string(SyntheticKind kind) {
    switch (kind) {
        case SyntheticKind::random_walk: return "random_walk";
        case SyntheticKind::ar2: return "ar2";
        case SyntheticKind::sine_plus_noise: return "sine_plus_noise";
    }
    return "?";
}

OhlcvFrame gen_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed,
                         const SyntheticParams& p) {
    if (n < 50) raise(ErrorKind::BadParams, "need n >= 50");
    if (p.sigma < 0 || p.start <= 0) raise(ErrorKind::BadParams, "invalid start/sigma");
    if (kind == SyntheticKind::sine_plus_noise &&
        (p.period1 <= 1 || p.period2 <= 1 || std::abs(p.ar_phi) >= 1)) {
        raise(ErrorKind::BadParams, "invalid sine parameters");
    }

    Rng rng(seed);
    std::vector<double> close(n);
    switch (kind) {
        case SyntheticKind::random_walk: {
            close[0] = p.start;
            for (std::size_t t = 1; t < n; ++t) {
                close[t] = close[t - 1] + rng.normal(0, p.sigma);
            }
            break;
        }
        case SyntheticKind::ar2: {
            double x1 = 0, x2 = 0;
            close[0] = p.start;
            for (std::size_t t = 1; t < n; ++t) {
                const double x = p.a1 * x1 + p.a2 * x2 + rng.normal(0, p.sigma);
                close[t] = close[t - 1] + x;
                x2 = x1;
                x1 = x;
            }
            break;
        }
        case SyntheticKind::sine_plus_noise: {
            constexpr double two_pi = 6.283185307179586;
            double u = 0;
            for (std::size_t t = 0; t < n; ++t) {
                u = p.ar_phi * u + rng.normal(0, p.sigma);
                close[t] = p.start + p.amp1 * std::sin(two_pi * static_cast<double>(t) / p.period1) +
                           p.amp2 * std::sin(two_pi * static_cast<double>(t) / p.period2) + u;
            }
            break;
        }
    }

    // Keep prices safely positive; a constant shift preserves differences.
    const double lo = *std::min_element(close.begin(), close.end());
    if (lo < 1.0) {
        for (double& v : close) v += 1.0 - lo;
    }

    std::vector<OhlcvBar> bars(n);
    long day = days_from_civil(2010, 1, 4);
    for (std::size_t t = 0; t < n; ++t) {
        OhlcvBar& b = bars[t];
        b.date = civil_from_days(day);
        day = next_trading_day(day);
        b.close = close[t];
        const double prev = t > 0 ? close[t - 1] : close[0];
        b.open = prev * (1.0 + 0.002 * (rng.uniform() - 0.5));
        b.high = std::max(b.open, b.close) * (1.0 + 0.003 * rng.uniform());
        b.low = std::min(b.open, b.close) * (1.0 - 0.003 * rng.uniform());
        b.volume = 1e5 * (0.5 + rng.uniform());
        b.amount = b.volume * b.close * (1.0 + 0.01 * (rng.uniform() - 0.5));
    }
    return OhlcvFrame::align_and_validate(std::move(bars));
}

std::string file_fingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::ParseError, "cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

}  // namespace stockcast::io
