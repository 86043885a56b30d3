#pragma once

#include <cstdint>
#include <string>

#include "stockcast/ohlcv.hpp"

namespace stockcast::io {

/// Loads a daily-bar CSV with required columns trade_date, open, high, low,
/// close, vol, amount (extra columns ignored; any file order). Dates are
/// YYYYMMDD. Rows come back sorted ascending by date.
/// Errors: MissingColumn, ParseError, plus frame validation errors.
OhlcvFrame load_ohlcv_csv(const std::string& path);

/// Writes the same layout with round-trip-exact numeric formatting.
void save_ohlcv_csv(const OhlcvFrame& frame, const std::string& path);

enum class SyntheticKind { random_walk, ar2, sine_plus_noise };

SyntheticKind synthetic_kind_from_string(const std::string& s);
std::string to_string(SyntheticKind kind);

struct SyntheticParams {
    double start = 100.0;  // base price level
    double sigma = 0.5;    // innovation scale
    // ar2: coefficients of the AR(2) recurrence on first differences
    double a1 = 0.5;
    double a2 = -0.3;
    // sine_plus_noise: two superposed sines plus AR(1) noise
    double period1 = 40.0;
    double amp1 = 8.0;
    double period2 = 13.0;
    double amp2 = 3.0;
    double ar_phi = 0.6;
};

/// Deterministic synthetic OHLCV frame: the close path comes first from the
/// seed, then per-bar jitter derives open/high/low/volume/amount respecting
/// the bar invariants. Weekday dates starting 2010-01-04.
/// Errors: BadParams (n < 50 or invalid params).
OhlcvFrame gen_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed,
                         const SyntheticParams& params = {});

/// FNV-1a 64-bit hash of the file bytes, hex-encoded.
std::string file_fingerprint(const std::string& path);

}  // namespace stockcast::io
